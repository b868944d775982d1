#include "lanesig/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lanesig/rng.hpp"

namespace lanesig::pipeline {

void SegmentationConfig::validate() const {
    if (d == 0 || d % 2 != 0)
        throw std::invalid_argument("segmentation: d must be even and positive");
    if (m != d / 2)
        throw std::invalid_argument("segmentation: m must equal d/2 exactly");
    if (ell < d)
        throw std::invalid_argument("segmentation: ell must be >= d");
    if (s < 1) throw std::invalid_argument("segmentation: s must be >= 1");
    if ((ell - d) % m != 0)
        throw std::invalid_argument(
            "segmentation: (ell - d) must be divisible by m");
}

SegmentationConfig SegmentationConfig::bench_scale() {
    return SegmentationConfig{16000, 2000, 2000, 1000};
}

SegmentationConfig SegmentationConfig::field_scale() {
    return SegmentationConfig{800000, 100000, 50000, 25000};
}

std::string to_string(LabelPolicy p) {
    return p == LabelPolicy::MF ? "mf" : "lo";
}

LabelPolicy label_policy_from_string(const std::string& s) {
    if (s == "mf" || s == "MF") return LabelPolicy::MF;
    if (s == "lo" || s == "LO") return LabelPolicy::LO;
    throw std::invalid_argument("unknown label policy: " + s);
}

namespace {

double median_of(std::vector<double>& buf) {
    const std::size_t n = buf.size();
    const std::size_t mid = n / 2;
    std::nth_element(buf.begin(), buf.begin() + mid, buf.end());
    double hi = buf[mid];
    if (n % 2 == 1) return hi;
    double lo = *std::max_element(buf.begin(), buf.begin() + mid);
    return 0.5 * (lo + hi);
}

}  // namespace

Drive preprocess(const Drive& drive, std::size_t hampel_window,
                 double hampel_k) {
    drive.validate();
    if (hampel_window < 3 || hampel_window % 2 == 0)
        throw std::invalid_argument("hampel window must be odd and >= 3");

    const std::size_t n = drive.samples.size();
    Drive out = drive;

    double mean = 0.0;
    for (double v : drive.samples) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : drive.samples) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);

    if (sd == 0.0) {
        std::fill(out.samples.begin(), out.samples.end(), 0.0);
        out.degenerate_constant = true;
        return out;
    }

    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (drive.samples[i] - mean) / sd;

    const std::size_t half = hampel_window / 2;
    std::vector<double> win, dev;
    win.reserve(hampel_window);
    dev.reserve(hampel_window);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        win.assign(z.begin() + static_cast<std::ptrdiff_t>(lo),
                   z.begin() + static_cast<std::ptrdiff_t>(hi));
        const double med = median_of(win);
        dev.clear();
        for (std::size_t j = lo; j < hi; ++j) dev.push_back(std::abs(z[j] - med));
        const double mad = median_of(dev);
        const double threshold = hampel_k * 1.4826 * mad;
        out.samples[i] = std::abs(z[i] - med) > threshold ? med : z[i];
    }
    return out;
}

std::vector<SubDrive> make_subdrives(const Drive& drive, std::uint64_t ell,
                                     std::uint64_t s, std::size_t drive_id) {
    drive.validate();
    if (ell < 1 || s < 1)
        throw std::invalid_argument("sub-drive length and stride must be >= 1");

    const std::uint64_t n = drive.samples.size();
    std::uint64_t last_start = 0;
    if (n > ell) last_start = s * ((n - ell + s - 1) / s);

    std::vector<SubDrive> out;
    out.reserve(static_cast<std::size_t>(last_start / s + 1));
    for (std::uint64_t start = 0;; start += s) {
        SubDrive sd;
        sd.source_drive_id = drive_id;
        sd.start_offset = start;
        sd.samples.assign(static_cast<std::size_t>(ell), 0.0);
        const std::uint64_t avail = start < n ? n - start : 0;
        const std::uint64_t copy = std::min<std::uint64_t>(ell, avail);
        for (std::uint64_t j = 0; j < copy; ++j)
            sd.samples[static_cast<std::size_t>(j)] =
                drive.samples[static_cast<std::size_t>(start + j)];
        sd.pad_len = ell - copy;
        out.push_back(std::move(sd));
        if (start >= last_start) break;
    }
    return out;
}

std::vector<std::span<const double>> make_subsegments(const SubDrive& sd,
                                                      std::uint64_t d) {
    SegmentationConfig cfg;
    cfg.ell = sd.samples.size();
    cfg.s = 1;
    cfg.d = d;
    cfg.m = d / 2;
    cfg.validate();
    const std::uint64_t n = cfg.n_cells();
    std::vector<std::span<const double>> views;
    views.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i)
        views.emplace_back(sd.samples.data() + i * cfg.m,
                           static_cast<std::size_t>(d));
    return views;
}

Drive stitch_lane_changes(const std::vector<Drive>& lane_drives,
                          std::uint64_t alpha, std::size_t start_lane) {
    if (lane_drives.size() < 2)
        throw std::invalid_argument("stitching needs at least two lane drives");
    if (alpha < 1) throw std::invalid_argument("alpha must be >= 1");
    if (start_lane >= lane_drives.size())
        throw std::invalid_argument("start_lane out of range");

    std::uint64_t len = UINT64_MAX;
    for (const auto& d : lane_drives) {
        d.validate();
        if (!d.single_lane())
            throw std::invalid_argument("stitch inputs must be single-lane");
        if (d.fs_hz != lane_drives[0].fs_hz)
            throw std::invalid_argument("stitch inputs have mismatched sample rates");
        len = std::min<std::uint64_t>(len, d.samples.size());
    }

    Drive out;
    out.fs_hz = lane_drives[0].fs_hz;
    out.provenance = "stitched";
    out.samples.resize(static_cast<std::size_t>(len));
    out.segments.clear();

    std::uint64_t h = lane_drives[0].seed;
    for (const auto& d : lane_drives) h = derive_seed(h, d.seed);
    out.seed = derive_seed(h, alpha, static_cast<std::uint64_t>(start_lane));

    std::size_t active = start_lane;
    for (std::uint64_t seg_start = 0; seg_start < len; seg_start += alpha) {
        out.segments.push_back(
            {seg_start, lane_drives[active].segments[0].lane});
        const std::uint64_t seg_end = std::min<std::uint64_t>(len, seg_start + alpha);
        for (std::uint64_t j = seg_start; j < seg_end; ++j)
            out.samples[static_cast<std::size_t>(j)] =
                lane_drives[active].samples[static_cast<std::size_t>(j)];
        active = (active + 1) % lane_drives.size();
    }
    out.validate();
    return out;
}

namespace {

int lane_in_segments(const std::vector<LaneSegment>& segments,
                     std::uint64_t index) {
    int lane = segments.front().lane;
    for (const auto& seg : segments) {
        if (seg.start > index) break;
        lane = seg.lane;
    }
    return lane;
}

}  // namespace

std::vector<int> label_cells(const std::vector<LaneSegment>& segments,
                             std::uint64_t drive_len,
                             const SegmentationConfig& config,
                             std::uint64_t offset, LabelPolicy policy) {
    config.validate();
    if (segments.empty() || segments.front().start != 0)
        throw std::invalid_argument("label_cells: segments must start at 0");
    if (drive_len == 0) throw std::invalid_argument("label_cells: empty drive");
    if (offset >= drive_len)
        throw std::invalid_argument("label_cells: window starts past the drive");

    const std::uint64_t n = config.n_cells();
    const int tail_lane = lane_in_segments(segments, drive_len - 1);

    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t a = offset + i * config.m;
        const std::uint64_t b = a + config.d;
        const std::uint64_t b_real = std::min(b, drive_len);
        if (a >= drive_len) {  // cell entirely inside the zero padding
            out.push_back(tail_lane);
            continue;
        }
        if (policy == LabelPolicy::LO) {
            out.push_back(lane_in_segments(segments, b_real - 1));
            continue;
        }
        // MF: count real samples per lane over [a, b_real); ties go to the
        // lane whose stretch ends latest inside the span.
        std::map<int, std::uint64_t> count;
        std::map<int, std::uint64_t> last_seen;
        for (std::size_t si = 0; si < segments.size(); ++si) {
            const std::uint64_t seg_a = segments[si].start;
            const std::uint64_t seg_b =
                si + 1 < segments.size() ? segments[si + 1].start : drive_len;
            const std::uint64_t lo = std::max(a, seg_a);
            const std::uint64_t hi = std::min(b_real, seg_b);
            if (lo >= hi) continue;
            count[segments[si].lane] += hi - lo;
            last_seen[segments[si].lane] = hi;
        }
        int best = tail_lane;
        std::uint64_t best_count = 0, best_seen = 0;
        for (const auto& [lane, c] : count) {
            const std::uint64_t seen = last_seen[lane];
            if (c > best_count || (c == best_count && seen > best_seen)) {
                best = lane;
                best_count = c;
                best_seen = seen;
            }
        }
        out.push_back(best);
    }
    return out;
}

std::vector<SubDrive> make_labeled_subdrives(const Drive& drive,
                                             const SegmentationConfig& config,
                                             LabelPolicy policy,
                                             std::size_t drive_id) {
    config.validate();
    auto subs = make_subdrives(drive, config.ell, config.s, drive_id);
    for (auto& sd : subs)
        sd.cell_targets = label_cells(drive.segments, drive.samples.size(),
                                      config, sd.start_offset, policy);
    return subs;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count,
                                                   std::size_t batch_size,
                                                   std::uint64_t seed) {
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<std::size_t> perm(count);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = count; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(perm[i - 1], perm[j]);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t at = 0; at < count; at += batch_size) {
        const std::size_t end = std::min(count, at + batch_size);
        batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(at),
                             perm.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

SubDrive random_subdrive_sample(const Drive& drive,
                                const SegmentationConfig& config,
                                std::uint64_t seed, LabelPolicy policy) {
    config.validate();
    drive.validate();
    const std::uint64_t n = drive.samples.size();
    if (n < config.ell)
        throw std::invalid_argument("drive shorter than the sub-drive length");
    Rng rng(seed);
    const std::uint64_t offset = rng.uniform_index(n - config.ell + 1);

    SubDrive sd;
    sd.source_drive_id = 0;
    sd.start_offset = offset;
    sd.pad_len = 0;
    sd.samples.assign(
        drive.samples.begin() + static_cast<std::ptrdiff_t>(offset),
        drive.samples.begin() + static_cast<std::ptrdiff_t>(offset + config.ell));
    sd.cell_targets = label_cells(drive.segments, n, config, offset, policy);
    return sd;
}

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries) {
    nlohmann::json j;
    j["format"] = "lanesig-manifest";
    j["version"] = 1;
    auto& arr = j["drives"] = nlohmann::json::array();
    for (const auto& e : entries) {
        arr.push_back({{"path", e.path},
                       {"lane", e.lane},
                       {"original_id", e.original_id},
                       {"split", e.split},
                       {"provenance", e.provenance},
                       {"seed", e.seed},
                       {"preprocessed", e.preprocessed}});
    }
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << j.dump(2) << '\n';
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("manifest " + path + ": " + e.what());
    }
    if (j.value("format", "") != "lanesig-manifest")
        throw std::runtime_error("manifest " + path + ": unrecognized format field");
    std::vector<ManifestEntry> out;
    for (const auto& item : j.at("drives")) {
        ManifestEntry e;
        e.path = item.at("path").get<std::string>();
        e.lane = item.at("lane").get<int>();
        e.original_id = item.at("original_id").get<std::string>();
        e.split = item.at("split").get<std::string>();
        e.provenance = item.value("provenance", "");
        e.seed = item.value("seed", std::uint64_t{0});
        e.preprocessed = item.value("preprocessed", false);
        if (e.split != "train" && e.split != "test")
            throw std::runtime_error("manifest " + path + ": bad split tag '" +
                                     e.split + "' for " + e.path);
        out.push_back(std::move(e));
    }
    return out;
}

void validate_manifest_split(const std::vector<ManifestEntry>& entries) {
    std::map<std::string, std::string> seen;
    for (const auto& e : entries) {
        auto [it, fresh] = seen.emplace(e.original_id, e.split);
        if (!fresh && it->second != e.split)
            throw std::invalid_argument(
                "split leak: original '" + e.original_id +
                "' appears in both train and test");
    }
}

}  // namespace lanesig::pipeline
