// lanesig: command-line front end for the lane-signature toolkit.
//
// Subcommands: gen, augment, stitch, train, eval, truncate, gradcheck,
// ingest. Every run writes its effective configuration as JSON next to its
// outputs so any artifact can be regenerated from the recorded values and
// the input files alone. Exit codes: 0 success, 2 validation error,
// 3 runtime divergence. Diagnostics go to stderr; data goes to files (the
// only stdout users are --version and gradcheck's verdict line).

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lanesig/augment.hpp"
#include "lanesig/drive.hpp"
#include "lanesig/eval.hpp"
#include "lanesig/nnet.hpp"
#include "lanesig/pipeline.hpp"
#include "lanesig/roadsim.hpp"
#include "lanesig/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace lanesig;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kFormats =
    "drive-csv v1, drive-bin LSDRV1, checkpoint LNET1, manifest v1";

// A validation failure in flags, files, or module invariants.
constexpr int kExitValidation = 2;
// A diverged computation: non-finite training loss or a failed grad check.
constexpr int kExitDivergence = 3;

// --------------------------------------------------------------------------
// Flag plumbing
// --------------------------------------------------------------------------

// Sample counts accept the paper-style K/M suffixes: 50K = 50000,
// 12.5K = 12500, 1M = 1000000. The validator rewrites the token into a
// plain integer before CLI11 converts it.
CLI::Validator sample_count() {
    return CLI::Validator(
        [](std::string& s) -> std::string {
            if (s.empty()) return std::string("empty sample count");
            double mult = 1.0;
            std::string digits = s;
            const char suffix = digits.back();
            if (suffix == 'K' || suffix == 'k') {
                mult = 1e3;
                digits.pop_back();
            } else if (suffix == 'M' || suffix == 'm') {
                mult = 1e6;
                digits.pop_back();
            }
            try {
                std::size_t used = 0;
                const double v = std::stod(digits, &used);
                if (used != digits.size() || v < 0)
                    return "invalid sample count '" + s + "'";
                const double scaled = v * mult;
                if (scaled != std::floor(scaled))
                    return "sample count '" + s + "' is not a whole number";
                s = std::to_string(static_cast<std::uint64_t>(scaled));
            } catch (const std::exception&) {
                return "invalid sample count '" + s + "'";
            }
            return {};
        },
        "COUNT[K|M]");
}

CLI::Option* take_last(CLI::Option* o) {
    return o->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

// Config file support: `--config file.json` holds a flat object whose keys
// are long option names. The values are injected as synthetic tokens right
// after the subcommand name, so explicit flags (parsed later, TakeLast)
// still win: flags > config file > built-in defaults.
std::vector<std::string> inject_config(const std::vector<std::string>& args) {
    std::string cfg_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            cfg_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            cfg_path = args[i].substr(9);
    }
    if (cfg_path.empty()) return args;

    std::ifstream in(cfg_path);
    if (!in) throw std::invalid_argument("cannot open config " + cfg_path);
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config " + cfg_path + ": " + e.what());
    }
    if (!cfg.is_object())
        throw std::invalid_argument("config " + cfg_path +
                                    ": expected a JSON object");

    std::vector<std::string> injected;
    for (const auto& [key, value] : cfg.items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) injected.push_back("--" + key);
            continue;
        }
        injected.push_back("--" + key);
        if (value.is_string())
            injected.push_back(value.get<std::string>());
        else
            injected.push_back(value.dump());
    }

    // args[0] must be the subcommand; splice the config tokens after it.
    if (args.empty()) return injected;
    std::vector<std::string> out;
    out.push_back(args[0]);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), args.begin() + 1, args.end());
    return out;
}

void write_json_file(const fs::path& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

void write_run_config(const fs::path& dir, const ordered_json& j) {
    fs::create_directories(dir);
    write_json_file(dir / "run_config.json", j);
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// Read a drive, resolving `path` against `base` when it is relative.
Drive read_drive_at(const fs::path& base, const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) p = base / p;
    return read_drive(p);
}

std::vector<fs::path> list_drive_files(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw std::invalid_argument(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext == ".bin" || ext == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw std::invalid_argument("no .bin or .csv drives in " +
                                    dir.string());
    return files;
}

// --------------------------------------------------------------------------
// gen: synthesize lane surfaces and drives over them
// --------------------------------------------------------------------------

struct GenArgs {
    std::string out;
    int lanes = 2;
    double length_m = 500.0;
    double resolution_m = 0.01;
    std::string cls = "red";
    int drives_per_lane = 10;
    double fs = 1000.0;
    double v_mean = 10.0;
    double v_frac_std = 0.02;
    int knots = 5;
    double speed_duration_s = 0.0;  // 0 = auto
    double noise_std = 0.02;
    double suspension_gain = 1.0;
    double width_min_m = -1.0;  // < 0 = library default
    double width_max_m = -1.0;
    double amp_min_m = -1.0;
    double amp_max_m = -1.0;
    double rate_per_m = 0.0;  // 0 = class default
    std::uint64_t seed = 0;
};

void write_surface_csv(const fs::path& path,
                       const roadsim::SurfaceProfile& s) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write " + path.string());
    out << "# lanesig-surface v1, lane=" << s.lane_id
        << ", length_m=" << fmt6(s.length_m)
        << ", resolution_m=" << fmt6(s.resolution_m)
        << ", class=" << roadsim::to_string(s.roughness_class)
        << ", seed=" << s.seed << ", anomalies=" << s.anomaly_count
        << ", rate_per_m=" << fmt6(s.anomaly_rate_per_m) << '\n';
    for (double e : s.elevation) out << fmt6(e) << '\n';
}

int cmd_gen(const GenArgs& a) {
    const auto cls = roadsim::roughness_from_string(a.cls);
    roadsim::SimConfig sim;
    if (a.width_min_m >= 0) sim.width_min_m = a.width_min_m;
    if (a.width_max_m >= 0) sim.width_max_m = a.width_max_m;
    if (a.amp_min_m >= 0) sim.amp_min_m = a.amp_min_m;
    if (a.amp_max_m >= 0) sim.amp_max_m = a.amp_max_m;
    if (a.rate_per_m > 0) {
        sim.rate_green = a.rate_per_m;
        sim.rate_yellow = a.rate_per_m;
        sim.rate_red = a.rate_per_m;
    }
    const double duration = a.speed_duration_s > 0
                                ? a.speed_duration_s
                                : 1.6 * a.length_m / a.v_mean;

    const fs::path out(a.out);
    fs::create_directories(out / "surfaces");
    for (int lane = 0; lane < a.lanes; ++lane) {
        const auto surface =
            roadsim::gen_surface(derive_seed(a.seed, 1, lane), a.length_m,
                                 a.resolution_m, cls, sim);
        auto named = surface;
        named.lane_id = lane;
        write_surface_csv(out / "surfaces" /
                              ("lane" + std::to_string(lane) + ".csv"),
                          named);

        for (int j = 0; j < a.drives_per_lane; ++j) {
            const auto speed = roadsim::gen_speed_profile(
                derive_seed(a.seed, 2, lane, j), duration, a.v_mean,
                a.v_frac_std, a.knots);
            roadsim::VehicleParams veh;
            veh.suspension_gain = a.suspension_gain;
            veh.noise_std = a.noise_std;
            veh.seed = derive_seed(a.seed, 3, lane, j);
            Drive d = roadsim::simulate_drive(named, speed, veh, a.fs);
            d.segments = {{0, lane}};
            d.seed = derive_seed(a.seed, 4, lane, j);
            d.provenance = "original";
            write_drive(d, out / ("lane" + std::to_string(lane) + "_drive" +
                                  std::to_string(j) + ".bin"));
        }
        std::cerr << "gen: lane " << lane << ": " << a.drives_per_lane
                  << " drives over " << fmt6(a.length_m) << " m\n";
    }

    ordered_json rc;
    rc["command"] = "gen";
    rc["version"] = kToolVersion;
    rc["out"] = a.out;
    rc["lanes"] = a.lanes;
    rc["length-m"] = a.length_m;
    rc["resolution-m"] = a.resolution_m;
    rc["class"] = a.cls;
    rc["drives-per-lane"] = a.drives_per_lane;
    rc["fs"] = a.fs;
    rc["v-mean"] = a.v_mean;
    rc["v-frac-std"] = a.v_frac_std;
    rc["knots"] = a.knots;
    rc["speed-duration-s"] = duration;
    rc["noise-std"] = a.noise_std;
    rc["suspension-gain"] = a.suspension_gain;
    rc["width-min-m"] = sim.width_min_m;
    rc["width-max-m"] = sim.width_max_m;
    rc["amp-min-m"] = sim.amp_min_m;
    rc["amp-max-m"] = sim.amp_max_m;
    rc["rate-per-m"] = sim.rate_for(cls);
    rc["seed"] = a.seed;
    write_run_config(out, rc);
    return 0;
}

// --------------------------------------------------------------------------
// augment: expand a directory of drives into scaled/jittered/warped variants
// --------------------------------------------------------------------------

struct AugmentArgs {
    std::string in;
    std::string out;
    augment::AugmentPlan plan;
    int test_per_lane = 0;
};

int cmd_augment(const AugmentArgs& a) {
    const fs::path out(a.out);
    fs::create_directories(out);
    const auto files = list_drive_files(a.in);

    std::vector<Drive> sources;
    std::vector<std::string> stems;
    for (const auto& f : files) {
        sources.push_back(read_drive(f));
        stems.push_back(f.stem().string());
    }

    // Hold out the last test_per_lane originals of each lane, untouched by
    // augmentation so the test split stays honest.
    std::map<int, std::vector<std::size_t>> by_lane;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (!sources[i].single_lane())
            throw std::invalid_argument(files[i].string() +
                                        ": augmentation expects single-lane "
                                        "drives");
        by_lane[sources[i].last_lane()].push_back(i);
    }
    std::vector<bool> is_test(sources.size(), false);
    for (auto& [lane, idx] : by_lane) {
        if (static_cast<std::size_t>(a.test_per_lane) >= idx.size())
            throw std::invalid_argument(
                "test-per-lane leaves no training drives for lane " +
                std::to_string(lane));
        for (int k = 0; k < a.test_per_lane; ++k)
            is_test[idx[idx.size() - 1 - static_cast<std::size_t>(k)]] = true;
    }

    std::vector<pipeline::ManifestEntry> entries;
    std::vector<Drive> train_sources;
    std::vector<std::size_t> train_index;
    for (std::size_t i = 0; i < sources.size(); ++i) {
        if (is_test[i]) {
            const std::string name = stems[i] + ".bin";
            write_drive(sources[i], out / name);
            entries.push_back({name, sources[i].last_lane(), stems[i], "test",
                               sources[i].provenance, sources[i].seed, false});
        } else {
            train_sources.push_back(sources[i]);
            train_index.push_back(i);
        }
    }

    std::vector<std::size_t> variant_count(sources.size(), 0);
    augment::augment_dataset_each(
        train_sources, a.plan, [&](std::size_t src, Drive&& variant) {
            const std::size_t i = train_index[src];
            const std::string name =
                stems[i] + "_aug" + std::to_string(variant_count[i]++) +
                ".bin";
            write_drive(variant, out / name);
            entries.push_back({name, variant.last_lane(), stems[i], "train",
                               variant.provenance, variant.seed, false});
        });

    pipeline::validate_manifest_split(entries);
    pipeline::write_manifest((out / "manifest.json").string(), entries);
    std::cerr << "augment: " << train_sources.size() << " sources -> "
              << entries.size() << " manifest entries\n";

    ordered_json rc;
    rc["command"] = "augment";
    rc["version"] = kToolVersion;
    rc["in"] = a.in;
    rc["out"] = a.out;
    rc["n-scale"] = a.plan.n_scale;
    rc["scale-max"] = a.plan.scale_sigma_max_frac;
    rc["n-jitter"] = a.plan.n_jitter;
    rc["jitter-max"] = a.plan.jitter_sigma_max_frac;
    rc["n-warp"] = a.plan.n_warp;
    rc["warp-sections-min"] = a.plan.warp_sections_min;
    rc["warp-sections-max"] = a.plan.warp_sections_max;
    rc["warp-speed-frac"] = a.plan.warp_speed_frac;
    rc["test-per-lane"] = a.test_per_lane;
    rc["seed"] = a.plan.seed;
    write_run_config(out, rc);
    return 0;
}

// --------------------------------------------------------------------------
// stitch: interleave one drive per lane into a lane-changing drive
// --------------------------------------------------------------------------

struct StitchArgs {
    std::vector<std::string> inputs;
    std::string out = "stitched.bin";
    std::uint64_t alpha = 50000;
    std::size_t start_lane = 0;
};

int cmd_stitch(const StitchArgs& a) {
    std::vector<Drive> lanes;
    for (const auto& p : a.inputs) lanes.push_back(read_drive(p));
    const Drive st = pipeline::stitch_lane_changes(lanes, a.alpha,
                                                   a.start_lane);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    write_drive(st, out);
    std::cerr << "stitch: " << st.size() << " samples, "
              << st.segments.size() << " segments\n";

    ordered_json rc;
    rc["command"] = "stitch";
    rc["version"] = kToolVersion;
    rc["inputs"] = a.inputs;
    rc["out"] = a.out;
    rc["alpha"] = a.alpha;
    rc["start-lane"] = a.start_lane;
    rc["segments"] = st.segments.size();
    write_json_file(out.parent_path() /
                        (out.stem().string() + ".run_config.json"),
                    rc);
    return 0;
}

// --------------------------------------------------------------------------
// Shared dataset assembly for train/eval
// --------------------------------------------------------------------------

struct DataArgs {
    std::string manifest;
    std::vector<std::string> files;  // used when no manifest is given
    std::uint64_t ell = 16000;
    std::uint64_t stride = 2000;
    std::uint64_t d = 2000;
    std::string label_policy = "mf";
};

pipeline::SegmentationConfig seg_config(const DataArgs& a) {
    pipeline::SegmentationConfig cfg;
    cfg.ell = a.ell;
    cfg.s = a.stride;
    cfg.d = a.d;
    cfg.m = a.d / 2;
    cfg.validate();
    return cfg;
}

struct LoadedDrive {
    Drive drive;
    std::string id;  // original id (manifest) or file stem
};

// Load one split ("train"/"test") from the manifest, or the positional
// files when no manifest was given (they count as the test split).
std::vector<LoadedDrive> load_split(const DataArgs& a,
                                    const std::string& split) {
    std::vector<LoadedDrive> out;
    if (!a.manifest.empty()) {
        const fs::path base = fs::path(a.manifest).parent_path();
        for (const auto& e : pipeline::read_manifest(a.manifest)) {
            if (e.split != split) continue;
            Drive d = read_drive_at(base, e.path);
            if (!e.preprocessed) d = pipeline::preprocess(d);
            out.push_back({std::move(d), e.original_id});
        }
        if (out.empty())
            throw std::invalid_argument("manifest has no '" + split +
                                        "' entries");
        return out;
    }
    if (a.files.empty())
        throw std::invalid_argument(
            "need --manifest or positional drive files");
    if (split == "train")
        throw std::invalid_argument(
            "training requires a manifest with a train split");
    for (const auto& f : a.files) {
        Drive d = pipeline::preprocess(read_drive(f));
        out.push_back({std::move(d), fs::path(f).stem().string()});
    }
    return out;
}

// Every lane id mentioned by the manifest's drives (or the given files).
nnet::LaneIndexMap collect_lanes(const DataArgs& a) {
    std::vector<int> ids;
    auto add_from = [&](const Drive& d) {
        for (const auto& s : d.segments) ids.push_back(s.lane);
    };
    if (!a.manifest.empty()) {
        const fs::path base = fs::path(a.manifest).parent_path();
        for (const auto& e : pipeline::read_manifest(a.manifest))
            add_from(read_drive_at(base, e.path));
    } else {
        for (const auto& f : a.files) add_from(read_drive(f));
    }
    return nnet::LaneIndexMap(ids);
}

template <typename T>
std::vector<nnet::Sample<T>> make_samples(
    const std::vector<LoadedDrive>& drives,
    const pipeline::SegmentationConfig& cfg, pipeline::LabelPolicy policy,
    const nnet::ModelSpec& spec, const nnet::LaneIndexMap& lanes) {
    std::vector<nnet::Sample<T>> out;
    for (std::size_t i = 0; i < drives.size(); ++i) {
        for (const auto& sd :
             pipeline::make_labeled_subdrives(drives[i].drive, cfg, policy,
                                              i)) {
            nnet::Sample<T> s;
            s.cells = nnet::pool_cells<T>(spec, sd.samples);
            s.targets.reserve(sd.cell_targets.size());
            for (int lane : sd.cell_targets)
                s.targets.push_back(
                    static_cast<int>(lanes.index_of(lane)));
            out.push_back(std::move(s));
        }
    }
    return out;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

struct TrainArgs {
    DataArgs data;
    std::string out;
    std::uint64_t pool_kernel = 200;
    std::uint64_t pool_stride = 100;
    std::size_t hidden = 32;
    std::string loss = "weighted";
    bool per_cell_heads = false;
    double lr = 0.005;
    std::size_t batch = 128;
    std::size_t epochs = 6;
    std::string precision = "float";
    std::string val_split = "none";
    std::uint64_t seed = 0;
};

nnet::ModelSpec model_spec_for(const TrainArgs& a,
                               const pipeline::SegmentationConfig& cfg,
                               std::size_t n_lanes) {
    nnet::ModelSpec spec;
    spec.pool_kernel = a.pool_kernel;
    spec.pool_stride = a.pool_stride;
    if (cfg.d < a.pool_kernel ||
        (cfg.d - a.pool_kernel) % a.pool_stride != 0)
        throw std::invalid_argument(
            "cell length d must be pool-kernel plus a multiple of "
            "pool-stride");
    spec.input_dim = (cfg.d - a.pool_kernel) / a.pool_stride + 1;
    spec.hidden_dim = a.hidden;
    spec.n_lanes = n_lanes;
    spec.n_cells = cfg.n_cells();
    spec.loss_mode = nnet::loss_mode_from_string(a.loss);
    spec.shared_head = !a.per_cell_heads;
    spec.validate();
    return spec;
}

template <typename T>
std::pair<nnet::Model<float>, nnet::TrainHistory> run_training(
    const TrainArgs& a, const pipeline::SegmentationConfig& cfg,
    const nnet::ModelSpec& spec, const nnet::LaneIndexMap& lanes) {
    const auto policy = pipeline::label_policy_from_string(a.data.label_policy);
    const auto train_drives = load_split(a.data, "train");
    auto train_set = make_samples<T>(train_drives, cfg, policy, spec, lanes);

    std::vector<nnet::Sample<T>> val_set;
    if (a.val_split == "test") {
        const auto val_drives = load_split(a.data, "test");
        val_set = make_samples<T>(val_drives, cfg, policy, spec, lanes);
    } else if (a.val_split != "none") {
        throw std::invalid_argument("val-split must be none or test");
    }
    std::cerr << "train: " << train_set.size() << " sub-drives, "
              << val_set.size() << " validation sub-drives, "
              << spec.param_count() << " parameters\n";

    nnet::TrainConfig tc;
    tc.learning_rate = a.lr;
    tc.batch_size = a.batch;
    tc.max_epochs = a.epochs;
    tc.seed = a.seed;

    auto model = nnet::make_model<T>(spec, derive_seed(a.seed, 10));
    const auto history = nnet::train(model, train_set, val_set, tc);
    for (std::size_t e = 0; e < history.epochs.size(); ++e) {
        const auto& ep = history.epochs[e];
        std::cerr << "train: epoch " << (e + 1) << "/" << a.epochs
                  << " loss=" << fmt6(ep.train_loss)
                  << " acc=" << fmt6(ep.train_accuracy);
        if (!std::isnan(ep.val_accuracy))
            std::cerr << " val=" << fmt6(ep.val_accuracy);
        std::cerr << '\n';
    }

    if constexpr (std::is_same_v<T, float>)
        return {model, history};
    else
        return {nnet::narrow(model), history};
}

int cmd_train(const TrainArgs& a) {
    if (a.precision != "float" && a.precision != "double")
        throw std::invalid_argument("precision must be float or double");
    const auto cfg = seg_config(a.data);
    const auto lanes = collect_lanes(a.data);
    const auto spec = model_spec_for(a, cfg, lanes.size());

    std::pair<nnet::Model<float>, nnet::TrainHistory> result =
        a.precision == "double"
            ? run_training<double>(a, cfg, spec, lanes)
            : run_training<float>(a, cfg, spec, lanes);

    const fs::path out(a.out);
    fs::create_directories(out);
    const auto bytes =
        nnet::save_checkpoint(result.first, (out / "model.lnet").string());

    std::ofstream hist(out / "history.csv");
    hist << "epoch,train_loss,train_accuracy,val_accuracy,clip_events\n";
    for (std::size_t e = 0; e < result.second.epochs.size(); ++e) {
        const auto& ep = result.second.epochs[e];
        hist << (e + 1) << ',' << fmt6(ep.train_loss) << ','
             << fmt6(ep.train_accuracy) << ','
             << (std::isnan(ep.val_accuracy) ? std::string("")
                                             : fmt6(ep.val_accuracy))
             << ',' << ep.clip_events << '\n';
    }

    ordered_json lj;
    lj["lanes"] = lanes.ids();
    write_json_file(out / "lanes.json", lj);

    ordered_json rc;
    rc["command"] = "train";
    rc["version"] = kToolVersion;
    rc["manifest"] = a.data.manifest;
    rc["out"] = a.out;
    rc["ell"] = a.data.ell;
    rc["stride"] = a.data.stride;
    rc["d"] = a.data.d;
    rc["label-policy"] = a.data.label_policy;
    rc["pool-kernel"] = a.pool_kernel;
    rc["pool-stride"] = a.pool_stride;
    rc["hidden"] = a.hidden;
    rc["loss"] = a.loss;
    rc["per-cell-heads"] = a.per_cell_heads;
    rc["lr"] = a.lr;
    rc["batch"] = a.batch;
    rc["epochs"] = a.epochs;
    rc["precision"] = a.precision;
    rc["val-split"] = a.val_split;
    rc["seed"] = a.seed;
    rc["lanes"] = lanes.ids();
    rc["parameters"] = spec.param_count();
    rc["checkpoint-bytes"] = bytes;
    rc["best-epoch"] = result.second.best_epoch;
    write_run_config(out, rc);
    return 0;
}

// --------------------------------------------------------------------------
// eval
// --------------------------------------------------------------------------

struct EvalArgs {
    DataArgs data;
    std::string model;
    std::string lanes_file;  // default: lanes.json next to the model
    std::string out;
    std::string mode = "matrix";
    std::size_t batch = 128;
    std::uint64_t seed = 0;
    bool plot = false;
};

nnet::LaneIndexMap load_lane_map(const EvalArgs& a, std::size_t n_lanes) {
    fs::path p = a.lanes_file.empty()
                     ? fs::path(a.model).parent_path() / "lanes.json"
                     : fs::path(a.lanes_file);
    std::ifstream in(p);
    if (!in)
        throw std::invalid_argument(
            "cannot open lane map " + p.string() +
            " (written by train; pass --lanes-file to point elsewhere)");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument(p.string() + ": " + e.what());
    }
    if (!j.contains("lanes") || !j["lanes"].is_array())
        throw std::invalid_argument(p.string() + ": missing 'lanes' array");
    nnet::LaneIndexMap map(j["lanes"].get<std::vector<int>>());
    if (map.size() != n_lanes)
        throw std::invalid_argument(
            p.string() + ": lane count disagrees with the checkpoint");
    return map;
}

void write_matrix_reports(const EvalArgs& a, const fs::path& out,
                          const eval::AccuracyMatrixRow& row) {
    std::ofstream csv(out / "matrix.csv");
    csv << "trained_len,kind";
    for (auto len : row.accumulated_len) csv << ',' << len;
    csv << "\n" << row.trained_len << ",mean";
    for (const auto& c : row.cells) csv << ',' << fmt6(c.mean);
    csv << "\n" << row.trained_len << ",variance";
    for (const auto& c : row.cells) csv << ',' << fmt6(c.variance);
    csv << '\n';
    if (a.plot) {
        std::ofstream dat(out / "matrix.dat");
        dat << "# accumulated_len mean stddev\n";
        for (std::size_t i = 0; i < row.cells.size(); ++i)
            dat << row.accumulated_len[i] << ' ' << fmt6(row.cells[i].mean)
                << ' ' << fmt6(std::sqrt(row.cells[i].variance)) << '\n';
    }
}

void write_window_reports(const EvalArgs& a, const fs::path& out,
                          const eval::WindowReport& rep,
                          const nnet::LaneIndexMap& lanes) {
    ordered_json j;
    const auto ov = rep.overall();
    j["overall"] = {{"total", ov.total},
                    {"correct", ov.correct},
                    {"accuracy", ov.accuracy()}};
    auto& ord = j["by_ordinal"] = ordered_json::array();
    for (const auto& [k, st] : rep.by_ordinal)
        ord.push_back({{"ordinal", k},
                       {"total", st.total},
                       {"correct", st.correct},
                       {"accuracy", st.accuracy()}});
    auto& fd = j["by_first_distance"] = ordered_json::array();
    for (const auto& [dist, st] : rep.by_first_distance)
        fd.push_back({{"distance", dist},
                      {"total", st.total},
                      {"correct", st.correct},
                      {"accuracy", st.accuracy()}});
    auto& outcomes = j["outcomes"] = ordered_json::array();
    for (const auto& o : rep.outcomes)
        outcomes.push_back(
            {{"item", o.item},
             {"segment", o.segment},
             {"ordinal", o.ordinal},
             {"cell", o.cell},
             {"distance", o.distance},
             {"first_distance", o.first_distance},
             {"truth", lanes.id_of(static_cast<std::size_t>(o.truth))},
             {"predicted",
              lanes.id_of(static_cast<std::size_t>(o.predicted))},
             {"correct", o.correct}});
    write_json_file(out / "windows.json", j);
    if (a.plot) {
        std::ofstream od(out / "windows_ordinal.dat");
        od << "# ordinal accuracy total\n";
        for (const auto& [k, st] : rep.by_ordinal)
            od << k << ' ' << fmt6(st.accuracy()) << ' ' << st.total << '\n';
        std::ofstream fdd(out / "windows_first_distance.dat");
        fdd << "# first_window_distance accuracy total\n";
        for (const auto& [dist, st] : rep.by_first_distance)
            fdd << dist << ' ' << fmt6(st.accuracy()) << ' ' << st.total
                << '\n';
    }
}

void write_roc_reports(const EvalArgs& a, const fs::path& out,
                       const eval::RocF1Report& rep,
                       const nnet::LaneIndexMap& lanes) {
    ordered_json j;
    j["weighted_f1"] = rep.weighted_f1;
    auto& classes = j["classes"] = ordered_json::array();
    for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
        const auto& roc = rep.per_class[c];
        ordered_json cj;
        cj["lane"] = lanes.id_of(c);
        cj["support"] = rep.support[c];
        cj["f1"] = rep.f1[c];
        cj["positives"] = roc.positives;
        cj["negatives"] = roc.negatives;
        if (roc.auc.has_value())
            cj["auc"] = *roc.auc;
        else
            cj["auc"] = nullptr;
        auto& pts = cj["points"] = ordered_json::array();
        for (const auto& p : roc.points)
            pts.push_back({p.fpr, p.tpr});
        classes.push_back(std::move(cj));
    }
    write_json_file(out / "roc.json", j);
    if (a.plot) {
        for (std::size_t c = 0; c < rep.per_class.size(); ++c) {
            std::ofstream dat(out / ("roc_lane" +
                                     std::to_string(lanes.id_of(c)) +
                                     ".dat"));
            dat << "# fpr tpr\n";
            for (const auto& p : rep.per_class[c].points)
                dat << fmt6(p.fpr) << ' ' << fmt6(p.tpr) << '\n';
        }
    }
}

int cmd_eval(const EvalArgs& a) {
    const auto cfg = seg_config(a.data);
    auto model = nnet::load_checkpoint(a.model);
    const auto lanes = load_lane_map(a, model.spec.n_lanes);
    const auto policy = pipeline::label_policy_from_string(a.data.label_policy);
    const fs::path out(a.out);
    fs::create_directories(out);

    const auto drives = load_split(a.data, "test");
    std::cerr << "eval: mode " << a.mode << " over " << drives.size()
              << " drives\n";

    if (a.mode == "matrix") {
        const auto samples =
            make_samples<float>(drives, cfg, policy, model.spec, lanes);
        const auto row =
            eval::excavation_row<float>(cfg.ell, model, samples, a.batch);
        write_matrix_reports(a, out, row);
    } else if (a.mode == "windows") {
        std::vector<eval::StitchedItem<float>> items;
        for (const auto& ld : drives) {
            auto drive_items =
                eval::make_stitched_items<float>(ld.drive, cfg, model.spec);
            for (auto& it : drive_items) {
                for (auto& sg : it.segments)
                    sg.lane = static_cast<int>(lanes.index_of(sg.lane));
                items.push_back(std::move(it));
            }
        }
        write_window_reports(a, out, eval::window_accuracy(model, items),
                             lanes);
    } else if (a.mode == "roc") {
        const auto samples =
            make_samples<float>(drives, cfg, policy, model.spec, lanes);
        write_roc_reports(a, out, eval::roc_f1(model, samples), lanes);
    } else if (a.mode == "random-subdrive") {
        Rng rng(derive_seed(a.seed, 99));
        const std::size_t pick = static_cast<std::size_t>(
            rng.uniform_index(drives.size()));
        const auto sd = pipeline::random_subdrive_sample(
            drives[pick].drive, cfg, derive_seed(a.seed, 100), policy);
        const auto cells = nnet::pool_cells<float>(model.spec, sd.samples);
        const auto fw = nnet::forward(model, cells);
        ordered_json j;
        j["drive"] = drives[pick].id;
        j["offset"] = sd.start_offset;
        auto& t = j["targets"] = ordered_json::array();
        for (int lane : sd.cell_targets) t.push_back(lane);
        auto& p = j["predictions"] = ordered_json::array();
        for (int idx : fw.predictions)
            p.push_back(lanes.id_of(static_cast<std::size_t>(idx)));
        j["final_prediction"] =
            lanes.id_of(static_cast<std::size_t>(fw.predictions.back()));
        write_json_file(out / "random_subdrive.json", j);
    } else {
        throw std::invalid_argument(
            "mode must be matrix, windows, roc, or random-subdrive");
    }

    ordered_json rc;
    rc["command"] = "eval";
    rc["version"] = kToolVersion;
    rc["model"] = a.model;
    rc["manifest"] = a.data.manifest;
    rc["files"] = a.data.files;
    rc["out"] = a.out;
    rc["mode"] = a.mode;
    rc["ell"] = a.data.ell;
    rc["stride"] = a.data.stride;
    rc["d"] = a.data.d;
    rc["label-policy"] = a.data.label_policy;
    rc["batch"] = a.batch;
    rc["seed"] = a.seed;
    rc["plot"] = a.plot;
    write_run_config(out, rc);
    return 0;
}

// --------------------------------------------------------------------------
// truncate
// --------------------------------------------------------------------------

struct TruncateArgs {
    std::string model;
    std::size_t cells = 1;
    std::string out;
};

int cmd_truncate(const TruncateArgs& a) {
    const auto model = nnet::load_checkpoint(a.model);
    const auto shorter = nnet::truncate(model, a.cells);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    const auto bytes = nnet::save_checkpoint(shorter, out.string());
    std::cerr << "truncate: " << a.cells << " cells, " << bytes
              << " bytes\n";

    // Keep the lane map usable next to the derived checkpoint.
    const fs::path src_lanes = fs::path(a.model).parent_path() / "lanes.json";
    const fs::path dst_lanes = out.parent_path() / "lanes.json";
    if (fs::exists(src_lanes) && !fs::exists(dst_lanes))
        fs::copy_file(src_lanes, dst_lanes);

    ordered_json rc;
    rc["command"] = "truncate";
    rc["version"] = kToolVersion;
    rc["model"] = a.model;
    rc["cells"] = a.cells;
    rc["out"] = a.out;
    rc["checkpoint-bytes"] = bytes;
    write_json_file(out.parent_path() /
                        (out.stem().string() + ".run_config.json"),
                    rc);
    return 0;
}

// --------------------------------------------------------------------------
// gradcheck
// --------------------------------------------------------------------------

struct GradcheckArgs {
    std::size_t hidden = 4;
    std::size_t cells = 3;
    std::size_t input_dim = 5;
    std::size_t lanes = 3;
    std::string loss = "weighted";
    double eps = 1e-5;
    double threshold = 1e-5;
    std::uint64_t seed = 71;
};

int cmd_gradcheck(const GradcheckArgs& a) {
    nnet::ModelSpec spec;
    spec.pool_kernel = 2;
    spec.pool_stride = 2;
    spec.input_dim = a.input_dim;
    spec.hidden_dim = a.hidden;
    spec.n_lanes = a.lanes;
    spec.n_cells = a.cells;
    spec.loss_mode = nnet::loss_mode_from_string(a.loss);
    spec.validate();

    const auto model = nnet::make_model<double>(spec, a.seed);
    Rng rng(derive_seed(a.seed, 1));
    nnet::Sample<double> sample;
    sample.cells.assign(spec.n_cells, std::vector<double>(spec.input_dim));
    for (auto& cell : sample.cells)
        for (auto& v : cell) v = rng.uniform(-1.0, 1.0);
    sample.targets.resize(spec.n_cells);
    for (auto& t : sample.targets)
        t = static_cast<int>(rng.uniform_index(spec.n_lanes));

    const double worst = nnet::grad_check(model, sample, a.eps);
    const bool pass = worst < a.threshold;
    std::printf("gradcheck: max relative error %.6e (threshold %.0e): %s\n",
                worst, a.threshold, pass ? "PASS" : "FAIL");
    return pass ? 0 : kExitDivergence;
}

// --------------------------------------------------------------------------
// ingest
// --------------------------------------------------------------------------

struct IngestArgs {
    std::vector<std::string> inputs;
    std::string out;
    double fs = 1000.0;
    int lane = 0;
};

Drive parse_external_csv(const fs::path& path, double fs, int lane) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    Drive d;
    d.fs_hz = fs;
    d.segments = {{0, lane}};
    d.provenance = "ingested";

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // Strip surrounding whitespace and skip blanks/comments.
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        std::string body = line.substr(b, e - b + 1);
        if (body[0] == '#') continue;
        // Accept `value` or `time,value`; the value is the last field.
        const auto comma = body.rfind(',');
        if (comma != std::string::npos) body = body.substr(comma + 1);
        double v = 0.0;
        std::size_t used = 0;
        bool ok = true;
        try {
            v = std::stod(body, &used);
        } catch (const std::exception&) {
            ok = false;
        }
        if (!ok || used != body.size() || !std::isfinite(v))
            throw std::invalid_argument(
                path.string() + ":" + std::to_string(lineno) +
                ": invalid sample value '" + body + "'");
        d.samples.push_back(v);
    }
    if (d.samples.empty())
        throw std::invalid_argument(path.string() + ": no samples");
    d.validate();
    return d;
}

int cmd_ingest(const IngestArgs& a) {
    const fs::path out(a.out);
    fs::create_directories(out);
    for (const auto& p : a.inputs) {
        const Drive d = parse_external_csv(p, a.fs, a.lane);
        const auto name = fs::path(p).stem().string() + ".bin";
        write_drive(d, out / name);
        std::cerr << "ingest: " << p << " -> " << name << " (" << d.size()
                  << " samples)\n";
    }

    ordered_json rc;
    rc["command"] = "ingest";
    rc["version"] = kToolVersion;
    rc["inputs"] = a.inputs;
    rc["out"] = a.out;
    rc["fs"] = a.fs;
    rc["lane"] = a.lane;
    write_run_config(out, rc);
    return 0;
}

// --------------------------------------------------------------------------
// Wiring
// --------------------------------------------------------------------------

void add_data_flags(CLI::App* cmd, DataArgs& d, bool positional_files) {
    take_last(cmd->add_option("--manifest", d.manifest,
                              "Dataset manifest JSON"));
    if (positional_files)
        cmd->add_option("files", d.files,
                        "Drive files (test split) when no manifest is given");
    take_last(cmd->add_option("--ell", d.ell, "Sub-drive length, samples")
                  ->transform(sample_count()));
    take_last(
        cmd->add_option("--stride", d.stride, "Sub-drive stride, samples")
            ->transform(sample_count()));
    take_last(cmd->add_option("--d", d.d,
                              "Cell span, samples (cell stride is d/2)")
                  ->transform(sample_count()));
    take_last(cmd->add_option("--label-policy", d.label_policy,
                              "Cell labeling: mf or lo"));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lane-signature toolkit: synthesize road drives, augment "
                 "them, train the classifier, and evaluate lane "
                 "identification"};
    app.set_version_flag("--version",
                         std::string("lanesig ") + kToolVersion +
                             "\nformats: " + kFormats);
    app.require_subcommand(1);

    GenArgs ga;
    auto* gen = app.add_subcommand("gen", "Synthesize surfaces and drives");
    take_last(gen->add_option("--out", ga.out, "Output directory")
                  ->required());
    take_last(gen->add_option("--lanes", ga.lanes, "Number of lanes"));
    take_last(gen->add_option("--length-m", ga.length_m, "Road length, m"));
    take_last(gen->add_option("--resolution-m", ga.resolution_m,
                              "Surface sampling resolution, m"));
    take_last(gen->add_option("--class", ga.cls,
                              "Roughness class: green, yellow, red"));
    take_last(gen->add_option("--drives-per-lane", ga.drives_per_lane,
                              "Drives per lane"));
    take_last(gen->add_option("--fs", ga.fs, "Sample rate, Hz"));
    take_last(gen->add_option("--v-mean", ga.v_mean, "Mean speed, m/s"));
    take_last(gen->add_option("--v-frac-std", ga.v_frac_std,
                              "Speed variation fraction"));
    take_last(gen->add_option("--knots", ga.knots, "Speed profile knots"));
    take_last(gen->add_option("--speed-duration-s", ga.speed_duration_s,
                              "Speed profile duration (0 = auto)"));
    take_last(gen->add_option("--noise-std", ga.noise_std,
                              "Sensor noise standard deviation"));
    take_last(gen->add_option("--suspension-gain", ga.suspension_gain,
                              "Vehicle suspension gain"));
    take_last(gen->add_option("--width-min-m", ga.width_min_m,
                              "Anomaly width minimum, m"));
    take_last(gen->add_option("--width-max-m", ga.width_max_m,
                              "Anomaly width maximum, m"));
    take_last(gen->add_option("--amp-min-m", ga.amp_min_m,
                              "Anomaly amplitude minimum, m"));
    take_last(gen->add_option("--amp-max-m", ga.amp_max_m,
                              "Anomaly amplitude maximum, m"));
    take_last(gen->add_option("--rate-per-m", ga.rate_per_m,
                              "Anomaly rate override, 1/m (0 = class "
                              "default)"));
    take_last(gen->add_option("--seed", ga.seed, "Master seed"));
    gen->add_option("--config", "JSON config file (flags win)");

    AugmentArgs aa;
    auto* aug = app.add_subcommand("augment",
                                   "Expand drives into augmented variants");
    take_last(aug->add_option("--in", aa.in, "Input drive directory")
                  ->required());
    take_last(aug->add_option("--out", aa.out, "Output directory")
                  ->required());
    take_last(aug->add_option("--n-scale", aa.plan.n_scale,
                              "Scaled variants per drive"));
    take_last(aug->add_option("--scale-max", aa.plan.scale_sigma_max_frac,
                              "Scale sigma cap (of max amplitude)"));
    take_last(aug->add_option("--n-jitter", aa.plan.n_jitter,
                              "Jittered variants per drive"));
    take_last(aug->add_option("--jitter-max", aa.plan.jitter_sigma_max_frac,
                              "Jitter sigma cap (of max amplitude)"));
    take_last(aug->add_option("--n-warp", aa.plan.n_warp,
                              "Warped variants per drive"));
    take_last(aug->add_option("--warp-sections-min",
                              aa.plan.warp_sections_min,
                              "Minimum warp sections"));
    take_last(aug->add_option("--warp-sections-max",
                              aa.plan.warp_sections_max,
                              "Maximum warp sections"));
    take_last(aug->add_option("--warp-speed-frac", aa.plan.warp_speed_frac,
                              "Warp rate spread around 1"));
    take_last(aug->add_option("--test-per-lane", aa.test_per_lane,
                              "Originals per lane held out, un-augmented"));
    take_last(aug->add_option("--seed", aa.plan.seed, "Augmentation seed"));
    aug->add_option("--config", "JSON config file (flags win)");

    StitchArgs sa;
    auto* sti = app.add_subcommand("stitch",
                                   "Interleave lane drives with switches");
    sti->add_option("inputs", sa.inputs, "One single-lane drive per lane")
        ->required()
        ->expected(-2);
    take_last(sti->add_option("--out", sa.out, "Output drive file"));
    take_last(sti->add_option("--alpha", sa.alpha,
                              "Samples between lane switches")
                  ->transform(sample_count()));
    take_last(sti->add_option("--start-lane", sa.start_lane,
                              "Index of the first active input"));
    sti->add_option("--config", "JSON config file (flags win)");

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train a lane classifier");
    add_data_flags(tr, ta.data, /*positional_files=*/false);
    tr->get_option("--manifest")->required();
    take_last(tr->add_option("--out", ta.out, "Output directory")
                  ->required());
    take_last(tr->add_option("--pool-kernel", ta.pool_kernel,
                             "Average-pooling kernel, samples")
                  ->transform(sample_count()));
    take_last(tr->add_option("--pool-stride", ta.pool_stride,
                             "Average-pooling stride, samples")
                  ->transform(sample_count()));
    take_last(tr->add_option("--hidden", ta.hidden, "Hidden units per "
                                                    "layer"));
    take_last(tr->add_option("--loss", ta.loss,
                             "Loss mode: weighted, uniform, last_cell"));
    tr->add_flag("--per-cell-heads", ta.per_cell_heads,
                 "Give every cell its own dense head");
    take_last(tr->add_option("--lr", ta.lr, "Learning rate"));
    take_last(tr->add_option("--batch", ta.batch, "Batch size"));
    take_last(tr->add_option("--epochs", ta.epochs, "Training epochs"));
    take_last(tr->add_option("--precision", ta.precision,
                             "Training precision: float or double"));
    take_last(tr->add_option("--val-split", ta.val_split,
                             "Validation source: none or test"));
    take_last(tr->add_option("--seed", ta.seed, "Training seed"));
    tr->add_option("--config", "JSON config file (flags win)");

    EvalArgs ea;
    auto* ev = app.add_subcommand("eval", "Evaluate a trained model");
    add_data_flags(ev, ea.data, /*positional_files=*/true);
    take_last(ev->add_option("--model", ea.model, "Checkpoint file")
                  ->required());
    take_last(ev->add_option("--lanes-file", ea.lanes_file,
                             "Lane map JSON (default: next to the model)"));
    take_last(ev->add_option("--out", ea.out, "Output directory")
                  ->required());
    take_last(ev->add_option("--mode", ea.mode,
                             "matrix, windows, roc, or random-subdrive"));
    take_last(ev->add_option("--batch", ea.batch, "Evaluation batch size"));
    take_last(ev->add_option("--seed", ea.seed, "Sampling seed"));
    ev->add_flag("--plot", ea.plot, "Also write gnuplot-ready .dat files");
    ev->add_option("--config", "JSON config file (flags win)");

    TruncateArgs ua;
    auto* tc = app.add_subcommand("truncate",
                                  "Cut a checkpoint to its first cells");
    take_last(tc->add_option("--model", ua.model, "Checkpoint file")
                  ->required());
    take_last(tc->add_option("--cells", ua.cells, "Cells to keep (1-based)")
                  ->required());
    take_last(tc->add_option("--out", ua.out, "Output checkpoint file")
                  ->required());
    tc->add_option("--config", "JSON config file (flags win)");

    GradcheckArgs ca;
    auto* gc = app.add_subcommand(
        "gradcheck", "Compare analytic gradients with central differences");
    take_last(gc->add_option("--hidden", ca.hidden, "Hidden units"));
    take_last(gc->add_option("--cells", ca.cells, "Cell count"));
    take_last(gc->add_option("--input-dim", ca.input_dim,
                             "Features per cell"));
    take_last(gc->add_option("--lanes", ca.lanes, "Lane count"));
    take_last(gc->add_option("--loss", ca.loss,
                             "Loss mode: weighted, uniform, last_cell"));
    take_last(gc->add_option("--eps", ca.eps, "Finite-difference step"));
    take_last(gc->add_option("--threshold", ca.threshold,
                             "Pass/fail bound on the max relative error"));
    take_last(gc->add_option("--seed", ca.seed, "Model/sample seed"));
    gc->add_option("--config", "JSON config file (flags win)");

    IngestArgs ia;
    auto* in = app.add_subcommand("ingest",
                                  "Convert external CSV drives to the "
                                  "repository format");
    in->add_option("inputs", ia.inputs, "External CSV files")
        ->required()
        ->expected(-1);
    take_last(in->add_option("--out", ia.out, "Output directory")
                  ->required());
    take_last(in->add_option("--fs", ia.fs, "Sample rate, Hz"));
    take_last(in->add_option("--lane", ia.lane, "Lane id for all files"));
    in->add_option("--config", "JSON config file (flags win)");

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = inject_config(args);
        // CLI11 consumes the vector reversed.
        std::reverse(args.begin(), args.end());
        app.parse(args);

        if (gen->parsed()) return cmd_gen(ga);
        if (aug->parsed()) return cmd_augment(aa);
        if (sti->parsed()) return cmd_stitch(sa);
        if (tr->parsed()) return cmd_train(ta);
        if (ev->parsed()) return cmd_eval(ea);
        if (tc->parsed()) return cmd_truncate(ua);
        if (gc->parsed()) return cmd_gradcheck(ca);
        if (in->parsed()) return cmd_ingest(ia);
        return kExitValidation;  // unreachable: a subcommand is required
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return std::string(e.what()).find("diverged") != std::string::npos
                   ? kExitDivergence
                   : kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
}
