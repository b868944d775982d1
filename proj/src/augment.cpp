#include "lanesig/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "lanesig/rng.hpp"

namespace lanesig::augment {

namespace {

double max_abs(const Drive& d) {
    if (d.samples.empty()) throw std::invalid_argument("empty drive");
    double m = 0.0;
    for (double v : d.samples) m = std::max(m, std::abs(v));
    return m;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

void AugmentPlan::validate() const {
    if (n_scale < 0 || n_jitter < 0 || n_warp < 0)
        throw std::invalid_argument("variant counts must be >= 0");
    if (!(scale_sigma_max_frac > 0) || scale_sigma_max_frac > 0.7)
        throw std::invalid_argument("scale sigma cap must be in (0, 0.7]");
    if (!(jitter_sigma_max_frac > 0) || jitter_sigma_max_frac > 0.1)
        throw std::invalid_argument("jitter sigma cap must be in (0, 0.1]");
    if (!(warp_speed_frac > 0) || warp_speed_frac > 0.2)
        throw std::invalid_argument("warp rate fraction must be in (0, 0.2]");
    if (warp_sections_min < 1 || warp_sections_max < warp_sections_min)
        throw std::invalid_argument("warp section range must satisfy 1 <= min <= max");
}

Drive scale(const Drive& d, std::uint64_t seed, double sigma_frac) {
    if (sigma_frac < 0 || sigma_frac > 0.7)
        throw std::invalid_argument("scale sigma_frac must be in [0, 0.7]");
    const double m = max_abs(d);
    Rng rng(seed);
    const double c = std::abs(rng.normal(1.0, sigma_frac * m));
    Drive out = d;
    out.seed = seed;
    for (auto& v : out.samples) v *= c;
    out.provenance = d.provenance + " -> scaled(c=" + fmt(c) +
                     ", sigma_frac=" + fmt(sigma_frac) + ")";
    return out;
}

Drive jitter(const Drive& d, std::uint64_t seed, double sigma_frac) {
    if (sigma_frac < 0 || sigma_frac > 0.1)
        throw std::invalid_argument("jitter sigma_frac must be in [0, 0.1]");
    const double sigma = sigma_frac * max_abs(d);
    Drive out = d;
    out.seed = seed;
    if (sigma > 0) {
        Rng rng(seed);
        for (auto& v : out.samples) v += rng.normal(0.0, sigma);
    }
    out.provenance = d.provenance + " -> jittered(sigma_frac=" + fmt(sigma_frac) + ")";
    return out;
}

Drive warp_with_plan(const Drive& d, const std::vector<WarpSection>& sections) {
    if (d.samples.empty()) throw std::invalid_argument("empty drive");
    std::size_t total = 0;
    for (const auto& s : sections) total += s.len;
    if (total != d.samples.size())
        throw std::invalid_argument("warp sections must cover the drive exactly");

    Drive out = d;
    out.samples.clear();
    out.segments.clear();

    std::string ratios;
    std::size_t in_off = 0;
    // (input offset, output offset, effective ratio) per section, for the
    // switch-index remap below.
    std::vector<std::array<std::size_t, 2>> offsets;
    std::vector<double> eff_ratio;
    for (const auto& sec : sections) {
        offsets.push_back({in_off, out.samples.size()});
        if (sec.len < 2) {
            // Too short to interpolate: copied unchanged.
            for (std::size_t j = 0; j < sec.len; ++j)
                out.samples.push_back(d.samples[in_off + j]);
            eff_ratio.push_back(1.0);
        } else {
            const double r = sec.ratio;
            const auto out_len = static_cast<std::size_t>(
                std::llround(static_cast<double>(sec.len) / r));
            const double last = static_cast<double>(sec.len - 1);
            for (std::size_t j = 0; j < out_len; ++j) {
                const double u = std::min(static_cast<double>(j) * r, last);
                const auto i0 = std::min(sec.len - 2, static_cast<std::size_t>(u));
                const double w = u - static_cast<double>(i0);
                out.samples.push_back(d.samples[in_off + i0] * (1.0 - w) +
                                      d.samples[in_off + i0 + 1] * w);
            }
            eff_ratio.push_back(r);
        }
        if (!ratios.empty()) ratios += ",";
        ratios += fmt(eff_ratio.back());
        in_off += sec.len;
    }

    // Remap lane-switch indices through the same per-section mapping,
    // preserving segment order and dropping segments that collapse.
    for (const auto& seg : d.segments) {
        std::size_t k = sections.size() - 1;
        for (std::size_t i = 0; i + 1 < sections.size(); ++i)
            if (seg.start >= offsets[i][0] && seg.start < offsets[i + 1][0]) {
                k = i;
                break;
            }
        const double rel = static_cast<double>(seg.start - offsets[k][0]);
        const auto mapped = offsets[k][1] +
                            static_cast<std::size_t>(std::llround(rel / eff_ratio[k]));
        const auto start = std::min<std::uint64_t>(mapped, out.samples.empty()
                                                               ? 0
                                                               : out.samples.size() - 1);
        if (!out.segments.empty() && start <= out.segments.back().start) {
            // Collapsed: the later lane wins the contested start index.
            out.segments.back().lane = seg.lane;
            continue;
        }
        out.segments.push_back({start, seg.lane});
    }
    if (out.segments.empty() || out.segments.front().start != 0)
        out.segments.insert(out.segments.begin(), {0, d.segments.front().lane});

    out.provenance = d.provenance + " -> warped(sections=" +
                     std::to_string(sections.size()) + ", ratios=[" + ratios + "])";
    out.validate();
    return out;
}

Drive time_warp(const Drive& d, std::uint64_t seed, int n_sections, double speed_frac) {
    if (n_sections < 1) throw std::invalid_argument("need at least one warp section");
    if (speed_frac < 0 || speed_frac > 0.2)
        throw std::invalid_argument("warp speed_frac must be in [0, 0.2]");
    if (d.samples.empty()) throw std::invalid_argument("empty drive");

    const std::size_t n = d.samples.size();
    Rng rng(seed);
    std::vector<std::size_t> cuts;
    if (n >= 2)
        for (int i = 0; i + 1 < n_sections; ++i)
            cuts.push_back(static_cast<std::size_t>(
                rng.uniform_int(1, static_cast<std::int64_t>(n) - 1)));
    std::sort(cuts.begin(), cuts.end());
    cuts.push_back(n);

    std::vector<WarpSection> sections;
    std::size_t prev = 0;
    for (std::size_t cut : cuts) {
        WarpSection sec;
        sec.len = cut - prev;
        sec.ratio = rng.uniform(1.0 - speed_frac, 1.0 + speed_frac);
        sections.push_back(sec);
        prev = cut;
    }
    Drive out = warp_with_plan(d, sections);
    out.seed = seed;
    return out;
}

void augment_dataset_each(const std::vector<Drive>& drives, const AugmentPlan& plan,
                          const std::function<void(std::size_t, Drive&&)>& sink) {
    if (drives.empty()) throw std::invalid_argument("no drives to augment");
    plan.validate();

    for (std::size_t oi = 0; oi < drives.size(); ++oi) {
        const Drive& original = drives[oi];
        // Stage 1: original plus scaled variants.
        std::vector<Drive> stage1;
        stage1.push_back(original);
        for (int si = 1; si <= plan.n_scale; ++si) {
            const auto op_seed = derive_seed(plan.seed, oi, 1, static_cast<std::uint64_t>(si));
            const double sf =
                Rng(derive_seed(op_seed, 0xA)).uniform01p() * plan.scale_sigma_max_frac;
            stage1.push_back(scale(original, op_seed, sf));
        }
        // Stage 2: jittered variants of everything so far.
        std::vector<Drive> stage2 = stage1;
        for (std::size_t b = 0; b < stage1.size(); ++b)
            for (int ji = 1; ji <= plan.n_jitter; ++ji) {
                const auto op_seed =
                    derive_seed(plan.seed, oi, 2, b, static_cast<std::uint64_t>(ji));
                const double sf =
                    Rng(derive_seed(op_seed, 0xA)).uniform01p() * plan.jitter_sigma_max_frac;
                stage2.push_back(jitter(stage1[b], op_seed, sf));
            }
        // Stage 3: warped variants of everything so far.
        for (std::size_t b = 0; b < stage2.size(); ++b) {
            sink(oi, Drive(stage2[b]));
            for (int wi = 1; wi <= plan.n_warp; ++wi) {
                const auto op_seed =
                    derive_seed(plan.seed, oi, 3, b, static_cast<std::uint64_t>(wi));
                const int n_sections = static_cast<int>(
                    Rng(derive_seed(op_seed, 0xB))
                        .uniform_int(plan.warp_sections_min, plan.warp_sections_max));
                sink(oi, time_warp(stage2[b], op_seed, n_sections, plan.warp_speed_frac));
            }
        }
    }
}

std::vector<Drive> augment_dataset(const std::vector<Drive>& drives, const AugmentPlan& plan) {
    std::vector<Drive> out;
    out.reserve(drives.size() * static_cast<std::size_t>((1 + plan.n_scale) *
                                                         (1 + plan.n_jitter) *
                                                         (1 + plan.n_warp)));
    augment_dataset_each(drives, plan,
                         [&](std::size_t, Drive&& d) { out.push_back(std::move(d)); });
    return out;
}

}  // namespace lanesig::augment
