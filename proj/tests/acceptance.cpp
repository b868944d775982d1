// Release acceptance gate. Thirteen criteria cover the full toolkit:
// segmentation arithmetic, pooling, loss weights, gradient fidelity,
// truncation equivalence, lane-change window enumeration, cell labeling,
// augmentation statistics, and desk-scale training outcomes (two-lane
// accuracy profile, loss-mode learning speed, label-policy timeliness on
// stitched drives, four-lane capacity, checkpoint round-trip).
//
// Every criterion prints exactly one line:
//   criterion NN PASS <label> — <measurements> [<seconds>]
// The desk-scale criteria synthesize their datasets and train real models,
// so this binary takes several minutes end to end.

#include <doctest.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lanesig/augment.hpp"
#include "lanesig/drive.hpp"
#include "lanesig/eval.hpp"
#include "lanesig/nnet.hpp"
#include "lanesig/pipeline.hpp"
#include "lanesig/roadsim.hpp"
#include "lanesig/rng.hpp"
#include "statutil.hpp"

using namespace lanesig;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool note(int id, bool ok, const std::string& label,
          const std::string& detail, double secs) {
    std::printf("criterion %2d %s %s — %s [%.1fs]\n", id,
                ok ? "PASS" : "FAIL", label.c_str(), detail.c_str(), secs);
    std::fflush(stdout);
    return ok;
}

double median3(std::array<double, 3> v) {
    std::sort(v.begin(), v.end());
    return v[1];
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Desk-scale benchmark: synthetic 500 m two-lane (or four-lane) road, ten
// drives per lane, last two originals per lane held out un-augmented as the
// test set, the rest expanded 48x by the augmentation plan.
// ---------------------------------------------------------------------------

struct DeskBench {
    pipeline::SegmentationConfig cfg;
    nnet::ModelSpec spec;
    std::vector<nnet::Sample<float>> train;
    std::vector<nnet::Sample<float>> test;
    double build_seconds = 0.0;
};

void append_samples(std::vector<nnet::Sample<float>>& out, const Drive& d,
                    const pipeline::SegmentationConfig& cfg,
                    const nnet::ModelSpec& spec,
                    pipeline::LabelPolicy policy) {
    for (const auto& sd : pipeline::make_labeled_subdrives(d, cfg, policy)) {
        nnet::Sample<float> s;
        s.cells = nnet::pool_cells<float>(spec, sd.samples);
        s.targets = sd.cell_targets;  // lane ids are already class indices
        out.push_back(std::move(s));
    }
}

DeskBench build_desk_bench(std::size_t n_lanes) {
    const auto t0 = Clock::now();
    DeskBench b;
    b.cfg = {16000, 2000, 2000, 1000};
    b.spec.pool_kernel = 200;
    b.spec.pool_stride = 100;
    b.spec.input_dim = 19;
    b.spec.hidden_dim = 32;
    b.spec.n_lanes = n_lanes;
    b.spec.n_cells = 15;
    b.spec.loss_mode = nnet::LossMode::weighted;
    b.spec.shared_head = true;

    // Wide anomalies give each lane a signature that survives average
    // pooling down to the 19-value cell resolution.
    roadsim::SimConfig sim;
    sim.width_min_m = 0.3;
    sim.width_max_m = 1.5;

    constexpr int kDrivesPerLane = 10;
    constexpr int kTestPerLane = 2;
    constexpr std::uint64_t kSeed0 = 1234;

    std::vector<Drive> train_sources;
    for (std::size_t lane = 0; lane < n_lanes; ++lane) {
        auto surface = roadsim::gen_surface(1000 + lane, 500.0, 0.01,
                                            roadsim::Roughness::Red, sim);
        surface.lane_id = static_cast<int>(lane);
        for (int k = 0; k < kDrivesPerLane; ++k) {
            const auto speed = roadsim::gen_speed_profile(
                kSeed0 + lane * 100 + static_cast<std::uint64_t>(k), 80.0,
                10.0, 0.02, 5);
            roadsim::VehicleParams veh;
            veh.noise_std = 0.02;
            veh.seed = kSeed0 + 7777 + lane * 100 + static_cast<std::uint64_t>(k);
            Drive d = roadsim::simulate_drive(surface, speed, veh, 1000.0);
            d = pipeline::preprocess(d);
            if (k < kDrivesPerLane - kTestPerLane)
                train_sources.push_back(std::move(d));
            else
                append_samples(b.test, d, b.cfg, b.spec,
                               pipeline::LabelPolicy::MF);
        }
    }

    augment::AugmentPlan plan;
    plan.n_scale = 3;
    plan.scale_sigma_max_frac = 0.05;
    plan.n_jitter = 3;
    plan.jitter_sigma_max_frac = 0.02;
    plan.n_warp = 2;
    plan.warp_speed_frac = 0.05;
    plan.seed = 42;
    augment::augment_dataset_each(
        train_sources, plan, [&](std::size_t, Drive&& variant) {
            append_samples(b.train, variant, b.cfg, b.spec,
                           pipeline::LabelPolicy::MF);
        });

    b.build_seconds = seconds_since(t0);
    return b;
}

const DeskBench& desk_bench2() {
    static const DeskBench b = build_desk_bench(2);
    return b;
}

// Three weighted-loss training runs on the two-lane bench, one per seed.
// Shared by the accuracy-profile, loss-speed, truncation, and checkpoint
// criteria; the recorded seconds include the dataset build.
struct DeskRuns {
    std::array<nnet::Model<float>, 3> models{};
    std::array<nnet::TrainHistory, 3> histories{};
    double seconds = 0.0;
};

nnet::TrainHistory train_desk(nnet::Model<float>& m,
                              const std::vector<nnet::Sample<float>>& train,
                              std::size_t epochs, std::uint64_t seed) {
    nnet::TrainConfig tc;
    tc.learning_rate = 0.005;
    tc.batch_size = 128;
    tc.max_epochs = epochs;
    tc.seed = seed;
    return nnet::train(m, train, {}, tc);
}

const DeskRuns& desk_weighted_runs() {
    static const DeskRuns runs = [] {
        const auto& b = desk_bench2();
        const auto t0 = Clock::now();
        DeskRuns r;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            auto m = nnet::make_model<float>(b.spec, derive_seed(seed, 10));
            r.histories[seed] = train_desk(m, b.train, 6, seed);
            r.models[seed] = std::move(m);
        }
        r.seconds = b.build_seconds + seconds_since(t0);
        return r;
    }();
    return runs;
}

// Per-cell test accuracy against the sub-drive's lane (the final target).
std::vector<double> per_cell_accuracy(
    const nnet::Model<float>& m, const std::vector<nnet::Sample<float>>& test) {
    std::vector<double> acc(m.spec.n_cells, 0.0);
    for (const auto& s : test) {
        const auto out = nnet::forward(m, s.cells);
        for (std::size_t i = 0; i < acc.size(); ++i)
            if (out.predictions[i] == s.targets.back()) acc[i] += 1.0;
    }
    for (auto& a : acc) a /= static_cast<double>(test.size());
    return acc;
}

std::size_t epochs_to_accuracy(const nnet::TrainHistory& h, double thr) {
    for (std::size_t e = 0; e < h.epochs.size(); ++e)
        if (h.epochs[e].train_accuracy >= thr) return e + 1;
    return h.epochs.size() + 1;
}

// ---------------------------------------------------------------------------
// Stitched lane-change benchmark: two-lane drives alternating every alpha
// samples, labeled per cell under either policy, trained with the uniform
// per-cell loss.
// ---------------------------------------------------------------------------

std::vector<Drive> stitched_set(std::uint64_t seed0, int count,
                                std::uint64_t alpha) {
    roadsim::SimConfig sim;
    sim.width_min_m = 0.3;
    sim.width_max_m = 1.5;
    std::array<roadsim::SurfaceProfile, 2> surfs = {
        roadsim::gen_surface(1000, 500.0, 0.01, roadsim::Roughness::Red, sim),
        roadsim::gen_surface(1001, 500.0, 0.01, roadsim::Roughness::Red, sim),
    };
    surfs[1].lane_id = 1;

    std::vector<Drive> out;
    for (int k = 0; k < count; ++k) {
        const auto speed = roadsim::gen_speed_profile(
            seed0 + static_cast<std::uint64_t>(k), 80.0, 10.0, 0.02, 5);
        std::vector<Drive> pair;
        for (std::uint64_t lane = 0; lane < 2; ++lane) {
            roadsim::VehicleParams veh;
            veh.noise_std = 0.02;
            veh.seed = seed0 + 555 + static_cast<std::uint64_t>(k) * 2 + lane;
            pair.push_back(pipeline::preprocess(
                roadsim::simulate_drive(surfs[lane], speed, veh, 1000.0)));
        }
        const auto start_lane =
            Rng(derive_seed(seed0, 77, static_cast<std::uint64_t>(k)))
                .uniform_index(2);
        out.push_back(pipeline::stitch_lane_changes(pair, alpha, start_lane));
    }
    return out;
}

// First- and third-window accuracy of one policy/seed combination.
struct WindowScores {
    double w1 = 0.0;
    double w3 = 0.0;
};

WindowScores window_scores(const nnet::Model<float>& m,
                           const std::vector<Drive>& test_drives,
                           const pipeline::SegmentationConfig& cfg) {
    std::vector<eval::StitchedItem<float>> items;
    for (const auto& d : test_drives) {
        auto drive_items = eval::make_stitched_items<float>(d, cfg, m.spec);
        items.insert(items.end(),
                     std::make_move_iterator(drive_items.begin()),
                     std::make_move_iterator(drive_items.end()));
    }
    const auto rep = eval::window_accuracy(m, items);
    WindowScores s;
    s.w1 = rep.by_ordinal.at(1).accuracy();
    s.w3 = rep.by_ordinal.at(3).accuracy();
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("01 sub-drive and cell counts") {
    const auto t0 = Clock::now();

    Drive d;
    d.samples.assign(800, 0.5);
    d.segments = {{0, 0}};
    const auto subs = pipeline::make_subdrives(d, 100, 50);

    const pipeline::SegmentationConfig long_cfg{100000, 50000, 20000, 10000};
    const auto n_cells = long_cfg.n_cells();

    const double secs = seconds_since(t0);
    const bool ok = subs.size() == 15 && n_cells == 9 && secs < 1.0;
    CHECK(note(1, ok, "sub-drive and cell counts",
               std::to_string(subs.size()) + " sub-drives, " +
                   std::to_string(n_cells) + " cells",
               secs));
}

TEST_CASE("02 pooled output length") {
    const auto t0 = Clock::now();
    const std::vector<double> x(6000, 1.0);
    const auto pooled = nnet::avg_pool(x, 500, 50);
    const bool ok = pooled.size() == 111;
    CHECK(note(2, ok, "pooled output length",
               std::to_string(pooled.size()) + " outputs from 6000 samples",
               seconds_since(t0)));
}

TEST_CASE("03 ordered loss weights sum to one") {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::size_t n = 1; n <= 64; ++n) {
        const auto w = nnet::cell_loss_weights(n, nnet::LossMode::weighted);
        double sum = 0.0;
        for (double v : w) sum += v;
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    const bool ok = worst < 1e-12;
    char detail[64];
    std::snprintf(detail, sizeof(detail), "max |sum-1| = %.2e over n=1..64",
                  worst);
    CHECK(note(3, ok, "ordered loss weights sum to one", detail,
               seconds_since(t0)));
}

TEST_CASE("04 gradient fidelity on a tiny model") {
    const auto t0 = Clock::now();
    nnet::ModelSpec spec;
    spec.pool_kernel = 2;
    spec.pool_stride = 2;
    spec.input_dim = 5;
    spec.hidden_dim = 4;
    spec.n_lanes = 3;
    spec.n_cells = 3;
    spec.loss_mode = nnet::LossMode::weighted;

    const auto model = nnet::make_model<double>(spec, 71);
    Rng rng(derive_seed(71, 1));
    nnet::Sample<double> sample;
    sample.cells.assign(spec.n_cells, std::vector<double>(spec.input_dim));
    for (auto& cell : sample.cells)
        for (auto& v : cell) v = rng.uniform(-1.0, 1.0);
    sample.targets.resize(spec.n_cells);
    for (auto& t : sample.targets)
        t = static_cast<int>(rng.uniform_index(spec.n_lanes));

    const double worst = nnet::grad_check(model, sample, 1e-5);
    const double secs = seconds_since(t0);
    const bool ok = worst < 1e-5 && secs < 60.0;
    char detail[64];
    std::snprintf(detail, sizeof(detail), "max relative error %.2e", worst);
    CHECK(note(4, ok, "gradient fidelity on a tiny model", detail, secs));
}

TEST_CASE("05 truncated-model prefix equivalence") {
    const auto& runs = desk_weighted_runs();
    const auto& b = desk_bench2();
    const auto t0 = Clock::now();

    const auto model64 = nnet::widen(runs.models[0]);
    bool ok = true;
    std::size_t compared = 0;
    for (std::size_t si = 0; si < 3 && si < b.test.size(); ++si) {
        nnet::CellInputs<double> cells(b.test[si].cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            cells[c].assign(b.test[si].cells[c].begin(),
                            b.test[si].cells[c].end());
        const auto full = nnet::forward(model64, cells);
        for (std::size_t i = 1; i <= model64.spec.n_cells; ++i) {
            const auto shorter = nnet::truncate(model64, i);
            const nnet::CellInputs<double> prefix(cells.begin(),
                                                  cells.begin() +
                                                      static_cast<long>(i));
            const auto out = nnet::forward(shorter, prefix);
            ok = ok && out.logits[i - 1] == full.logits[i - 1];
            ++compared;
        }
    }
    CHECK(note(5, ok, "truncated-model prefix equivalence",
               std::to_string(compared) +
                   " prefix outputs bitwise-identical at 64-bit",
               seconds_since(t0)));
}

TEST_CASE("06 window enumeration") {
    const auto t0 = Clock::now();
    bool ok = true;

    // A lane change at 50K in a 100K drive with d=25K, m=12.5K: the opening
    // segment owns cells 1-3 at distances 25K/37.5K/50K; the straddling cell
    // 4 already ends past the switch, giving the new segment 4 windows at
    // 12.5K/25K/37.5K/50K.
    {
        const std::vector<LaneSegment> segs = {{0, 1}, {50000, 2}};
        const auto win = eval::enumerate_windows(segs, 25000, 12500, 100000);
        ok = ok && win.size() == 2;
        if (ok) {
            const std::vector<std::size_t> d0 = {25000, 37500, 50000};
            const std::vector<std::size_t> d1 = {12500, 25000, 37500, 50000};
            ok = ok && win[0].windows.size() == 3 &&
                 win[1].windows.size() == 4;
            for (std::size_t w = 0; ok && w < d0.size(); ++w)
                ok = win[0].windows[w].distance == d0[w];
            for (std::size_t w = 0; ok && w < d1.size(); ++w)
                ok = win[1].windows[w].distance == d1[w];
            ok = ok && win[1].windows[0].cell == 4;
        }
    }

    // Brute-force oracle over random geometries: every complete cell span
    // judged independently by a linear scan for its governing segment.
    int matched = 0;
    Rng rng(20260816);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 4 + rng.uniform_index(397);
        const std::size_t m = 1 + rng.uniform_index(d);
        const std::size_t total = d + rng.uniform_index(2000);
        std::vector<LaneSegment> segs{
            {0, static_cast<int>(rng.uniform_index(4))}};
        std::size_t start = 0;
        while (true) {
            start += 1 + rng.uniform_index(total / 2);
            if (start >= total) break;
            segs.push_back({start, static_cast<int>(rng.uniform_index(4))});
        }

        const auto got = eval::enumerate_windows(segs, d, m, total);
        std::vector<eval::SegmentWindows> want(segs.size());
        for (std::size_t j = 0; j < segs.size(); ++j) {
            want[j].segment = j;
            want[j].lane = segs[j].lane;
            want[j].segment_start = segs[j].start;
        }
        for (std::size_t i = 1; (i - 1) * m + d <= total; ++i) {
            const std::size_t last = (i - 1) * m + d - 1;
            std::size_t j = 0;
            for (std::size_t k = 0; k < segs.size(); ++k)
                if (segs[k].start <= last) j = k;
            want[j].windows.push_back({i, (i - 1) * m + d - segs[j].start});
        }

        bool same = got.size() == want.size();
        for (std::size_t j = 0; same && j < got.size(); ++j) {
            same = got[j].segment == want[j].segment &&
                   got[j].lane == want[j].lane &&
                   got[j].segment_start == want[j].segment_start &&
                   got[j].windows.size() == want[j].windows.size();
            for (std::size_t w = 0; same && w < got[j].windows.size(); ++w)
                same = got[j].windows[w].cell == want[j].windows[w].cell &&
                       got[j].windows[w].distance ==
                           want[j].windows[w].distance;
        }
        matched += same;
    }
    ok = ok && matched == 100;
    CHECK(note(6, ok, "window enumeration",
               "worked example exact, " + std::to_string(matched) +
                   "/100 random instances match brute force",
               seconds_since(t0)));
}

TEST_CASE("07 cell labeling policies") {
    const auto t0 = Clock::now();
    const pipeline::SegmentationConfig cfg{25000, 25000, 25000, 12500};
    using pipeline::label_cells;
    using pipeline::LabelPolicy;

    // A cell spanning 20K of lane 1 then 5K of lane 2: majority picks lane
    // 1, the final sample picks lane 2.
    const std::vector<LaneSegment> split = {{0, 1}, {20000, 2}};
    const bool split_ok =
        label_cells(split, 25000, cfg, 0, LabelPolicy::MF) ==
            std::vector<int>{1} &&
        label_cells(split, 25000, cfg, 0, LabelPolicy::LO) ==
            std::vector<int>{2};

    // An exact half/half tie resolves toward the lane entered most
    // recently.
    const std::vector<LaneSegment> tie = {{0, 1}, {12500, 2}};
    const bool tie_ok =
        label_cells(tie, 25000, cfg, 0, LabelPolicy::MF) ==
            std::vector<int>{2} &&
        label_cells(tie, 25000, cfg, 0, LabelPolicy::LO) ==
            std::vector<int>{2};

    // A span inside a single segment is that segment's lane either way.
    const std::vector<LaneSegment> solo = {{0, 3}};
    const bool solo_ok =
        label_cells(solo, 25000, cfg, 0, LabelPolicy::MF) ==
            std::vector<int>{3} &&
        label_cells(solo, 25000, cfg, 0, LabelPolicy::LO) ==
            std::vector<int>{3};

    const bool ok = split_ok && tie_ok && solo_ok;
    CHECK(note(7, ok, "cell labeling policies",
               std::string("majority/final-sample ") +
                   (split_ok ? "ok" : "BAD") + ", tie " +
                   (tie_ok ? "ok" : "BAD") + ", single-segment " +
                   (solo_ok ? "ok" : "BAD"),
               seconds_since(t0)));
}

TEST_CASE("08 augmentation statistics") {
    const auto t0 = Clock::now();
    const std::size_t n = 20000;
    Drive base;
    base.segments = {{0, 0}};
    base.samples.resize(n);
    Rng rng(9001);
    for (auto& v : base.samples) v = rng.normal();

    // Scaling multiplies every sample by one constant.
    const auto scaled = augment::scale(base, 123, 0.05);
    double rmin = 1e300, rmax = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(base.samples[i]) < 1e-9) continue;
        const double r = scaled.samples[i] / base.samples[i];
        rmin = std::min(rmin, r);
        rmax = std::max(rmax, r);
    }
    const bool scale_ok = rmax - rmin < 1e-9;

    // Jitter deltas are N(0, 0.02 * max|sample|) by contract, so the KS test
    // against that fully-specified normal needs no parameter fitting.
    const auto jittered = augment::jitter(base, 456, 0.02);
    double peak = 0.0;
    for (double v : base.samples) peak = std::max(peak, std::abs(v));
    const double sigma = 0.02 * peak;
    std::vector<double> deltas(n);
    for (std::size_t i = 0; i < n; ++i)
        deltas[i] = (jittered.samples[i] - base.samples[i]) / sigma;
    const double ks = statutil::ks_statistic(deltas, statutil::normal_cdf);
    const bool jitter_ok = ks < statutil::ks_crit_001(n);

    // Warping a ramp exposes the source-index mapping directly: it must
    // never run backwards, and per-sample steps equal the section rates.
    Drive ramp;
    ramp.segments = {{0, 0}};
    ramp.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        ramp.samples[i] = static_cast<double>(i);
    bool warp_ok = true;
    for (std::uint64_t seed = 0; seed < 30 && warp_ok; ++seed) {
        const auto warped = augment::time_warp(ramp, seed, 6, 0.2);
        std::size_t in_rate = 0, total = 0;
        for (std::size_t i = 1; i < warped.samples.size(); ++i) {
            const double step = warped.samples[i] - warped.samples[i - 1];
            warp_ok = warp_ok && step >= -1e-9;
            ++total;
            if (step >= 0.8 - 1e-9 && step <= 1.2 + 1e-9) ++in_rate;
        }
        // Steps sit at the section rate except a handful at section joins
        // and the clamped final samples of compressed sections.
        warp_ok = warp_ok && in_rate * 100 >= total * 99;
    }

    const double secs = seconds_since(t0);
    const bool ok = scale_ok && jitter_ok && warp_ok && secs < 30.0;
    char detail[96];
    std::snprintf(detail, sizeof(detail),
                  "ratio spread %.1e, jitter KS %.4f, warp rates in band",
                  rmax - rmin, ks);
    CHECK(note(8, ok, "augmentation statistics", detail, secs));
}

TEST_CASE("09 two-lane benchmark accuracy profile") {
    const auto& runs = desk_weighted_runs();
    const auto& b = desk_bench2();
    const auto t0 = Clock::now();

    std::array<double, 3> first{}, last{}, rho{};
    for (std::size_t s = 0; s < 3; ++s) {
        const auto acc = per_cell_accuracy(runs.models[s], b.test);
        first[s] = acc.front();
        last[s] = acc.back();
        std::vector<double> idx(acc.size());
        for (std::size_t i = 0; i < idx.size(); ++i)
            idx[i] = static_cast<double>(i + 1);
        rho[s] = eval::spearman(idx, acc);
    }
    const double med_first = median3(first);
    const double med_last = median3(last);
    const double med_rho = median3(rho);
    const double secs = runs.seconds + seconds_since(t0);

    const bool ok = med_last >= 0.90 && med_last >= med_first &&
                    med_rho > 0.5 && secs <= 900.0;
    CHECK(note(9, ok, "two-lane benchmark accuracy profile",
               "median final-cell " + fmt(med_last) + ", first-cell " +
                   fmt(med_first) + ", spearman " + fmt(med_rho) +
                   " over 3 seeds",
               secs));
}

TEST_CASE("10 weighted loss reaches high train accuracy as fast as final-cell loss") {
    const auto& runs = desk_weighted_runs();
    const auto& b = desk_bench2();
    const auto t0 = Clock::now();

    auto spec_last = b.spec;
    spec_last.loss_mode = nnet::LossMode::last_cell;
    std::array<double, 3> weighted{}, last_cell{};
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        weighted[seed] = static_cast<double>(
            epochs_to_accuracy(runs.histories[seed], 0.95));
        auto m = nnet::make_model<float>(spec_last, derive_seed(seed, 10));
        const auto h = train_desk(m, b.train, 6, seed);
        last_cell[seed] =
            static_cast<double>(epochs_to_accuracy(h, 0.95));
    }
    const double med_w = median3(weighted);
    const double med_l = median3(last_cell);
    const bool ok = med_w <= med_l;
    CHECK(note(10, ok,
               "weighted loss reaches 95% train accuracy at least as fast "
               "as final-cell loss",
               "median epochs " + fmt(med_w) + " vs " + fmt(med_l) +
                   " over 3 paired seeds",
               seconds_since(t0)));
}

TEST_CASE("11 label-policy timeliness on lane-change drives") {
    const auto t0 = Clock::now();
    const pipeline::SegmentationConfig cfg{16000, 2000, 2000, 1000};
    nnet::ModelSpec spec;
    spec.pool_kernel = 200;
    spec.pool_stride = 100;
    spec.input_dim = 19;
    spec.hidden_dim = 32;
    spec.n_lanes = 2;
    spec.n_cells = 15;
    spec.loss_mode = nnet::LossMode::uniform;

    const auto train_drives = stitched_set(3000, 40, 4700);
    const auto test_drives = stitched_set(9000, 6, 4700);

    auto samples_for = [&](pipeline::LabelPolicy policy) {
        std::vector<nnet::Sample<float>> out;
        for (const auto& d : train_drives)
            append_samples(out, d, cfg, spec, policy);
        return out;
    };
    const auto train_mf = samples_for(pipeline::LabelPolicy::MF);
    const auto train_lo = samples_for(pipeline::LabelPolicy::LO);

    std::array<double, 3> mf1{}, mf3{}, lo1{}, lo3{};
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto mf = nnet::make_model<float>(spec, derive_seed(seed, 20));
        train_desk(mf, train_mf, 10, seed);
        const auto smf = window_scores(mf, test_drives, cfg);
        mf1[seed] = smf.w1;
        mf3[seed] = smf.w3;

        auto lo = nnet::make_model<float>(spec, derive_seed(seed, 20));
        train_desk(lo, train_lo, 10, seed);
        const auto slo = window_scores(lo, test_drives, cfg);
        lo1[seed] = slo.w1;
        lo3[seed] = slo.w3;
    }
    const double med_mf1 = median3(mf1), med_mf3 = median3(mf3);
    const double med_lo1 = median3(lo1), med_lo3 = median3(lo3);

    const bool ok = med_lo1 >= med_mf1 && med_mf3 >= med_mf1 &&
                    med_lo3 >= med_lo1;
    CHECK(note(11, ok, "label-policy timeliness on lane-change drives",
               "first window: final-sample " + fmt(med_lo1) +
                   " >= majority " + fmt(med_mf1) + "; third >= first: " +
                   fmt(med_mf3) + "/" + fmt(med_mf1) + " and " +
                   fmt(med_lo3) + "/" + fmt(med_lo1),
               seconds_since(t0)));
}

TEST_CASE("12 four-lane capacity") {
    const auto t0 = Clock::now();
    const auto bench = build_desk_bench(4);

    auto m = nnet::make_model<float>(bench.spec, derive_seed(0, 10));
    train_desk(m, bench.train, 6, 0);
    const auto rep = eval::roc_f1(m, bench.test);

    bool auc_ok = true;
    double min_auc = 1.0;
    for (const auto& cls : rep.per_class) {
        auc_ok = auc_ok && cls.auc.has_value() && *cls.auc >= 0.95;
        if (cls.auc.has_value()) min_auc = std::min(min_auc, *cls.auc);
    }
    const double secs = seconds_since(t0);
    const bool ok = rep.weighted_f1 >= 0.90 && auc_ok && secs <= 1800.0;
    CHECK(note(12, ok, "four-lane capacity",
               "weighted F1 " + fmt(rep.weighted_f1) + ", min one-vs-rest " +
                   "AUC " + fmt(min_auc),
               secs));
}

TEST_CASE("13 checkpoint round-trip") {
    const auto& runs = desk_weighted_runs();
    const auto& b = desk_bench2();
    const auto t0 = Clock::now();

    const auto path = (std::filesystem::temp_directory_path() /
                       "lanesig_acceptance_roundtrip.lnet")
                          .string();
    const auto bytes = nnet::save_checkpoint(runs.models[0], path);
    const auto loaded = nnet::load_checkpoint(path);
    std::filesystem::remove(path);

    bool ok = loaded.spec == runs.models[0].spec && bytes > 0 &&
              bytes < 10 * 1024 * 1024;
    std::size_t compared = 0;
    for (std::size_t si = 0; si < 5 && si < b.test.size(); ++si) {
        const auto a = nnet::forward(runs.models[0], b.test[si].cells);
        const auto c = nnet::forward(loaded, b.test[si].cells);
        for (std::size_t i = 0; i < a.logits.size(); ++i) {
            ok = ok && a.logits[i] == c.logits[i];
            ++compared;
        }
    }
    CHECK(note(13, ok, "checkpoint round-trip",
               std::to_string(bytes) + " bytes, " +
                   std::to_string(compared) +
                   " cell outputs bitwise-identical after reload",
               seconds_since(t0)));
}
