// Command-line front end: simulation, dataset generation, training, transfer
// fine-tuning, voxel fitting, phantom evaluation, and map export. JSON
// configs are validated strictly (unknown keys are rejected) and every run
// writes a resolved-config snapshot next to its outputs.
//
// Exit codes: 0 success, 2 usage/config error, 3 runtime failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "otom/bloch.hpp"
#include "otom/dataset.hpp"
#include "otom/fcnn.hpp"
#include "otom/fit.hpp"
#include "otom/lstm.hpp"
#include "otom/pgm.hpp"
#include "otom/phantom.hpp"
#include "otom/prng.hpp"
#include "otom/report.hpp"
#include "otom/schedule.hpp"
#include "otom/threads.hpp"
#include "otom/train.hpp"

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        json j;
        in >> j;
        if (!j.is_object()) throw ConfigError("config root must be a JSON object: " + path);
        return j;
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
}

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& ctx) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + ctx);
        }
    }
}

template <typename T>
T get_value(const json& j, const std::string& key, const T& fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + key + "' in " + ctx);
    }
}

template <typename T>
T get_required(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key)) throw ConfigError("missing required key '" + key + "' in " + ctx);
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + key + "' in " + ctx);
    }
}

otom::Range range_from_json(const json& j, const std::string& key, const otom::Range& fallback,
                            const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    const auto v = get_value<std::vector<double>>(j, key, {}, ctx);
    if (v.size() != 2) throw ConfigError("'" + key + "' in " + ctx + " must be [lo, hi]");
    return {v[0], v[1]};
}

otom::ScheduleRanges schedule_ranges_from_json(const json& j, const std::string& ctx) {
    otom::ScheduleRanges r;
    if (!j.is_object()) throw ConfigError(ctx + " must be an object");
    check_keys(j, {"b1_uT", "omega_ppm", "ts_s", "td_s", "nMin", "nMax"}, ctx);
    r.b1 = range_from_json(j, "b1_uT", r.b1, ctx);
    r.omega = range_from_json(j, "omega_ppm", r.omega, ctx);
    r.ts = range_from_json(j, "ts_s", r.ts, ctx);
    r.td = range_from_json(j, "td_s", r.td, ctx);
    r.n_min = get_value<int>(j, "nMin", r.n_min, ctx);
    r.n_max = get_value<int>(j, "nMax", r.n_max, ctx);
    return r;
}

otom::TissueRanges tissue_ranges_from_json(const json& j, const std::string& ctx) {
    otom::TissueRanges r;
    if (!j.is_object()) throw ConfigError(ctx + " must be an object");
    check_keys(j, {"kmw_Hz", "m0m", "t2m_s", "t1w_s"}, ctx);
    r.kmw = range_from_json(j, "kmw_Hz", r.kmw, ctx);
    r.m0m = range_from_json(j, "m0m", r.m0m, ctx);
    r.t2m = range_from_json(j, "t2m_s", r.t2m, ctx);
    r.t1w = range_from_json(j, "t1w_s", r.t1w, ctx);
    return r;
}

ordered_json schedule_ranges_to_json(const otom::ScheduleRanges& r) {
    ordered_json j;
    j["b1_uT"] = {r.b1.lo, r.b1.hi};
    j["omega_ppm"] = {r.omega.lo, r.omega.hi};
    j["ts_s"] = {r.ts.lo, r.ts.hi};
    j["td_s"] = {r.td.lo, r.td.hi};
    j["nMin"] = r.n_min;
    j["nMax"] = r.n_max;
    return j;
}

ordered_json tissue_ranges_to_json(const otom::TissueRanges& r) {
    ordered_json j;
    j["kmw_Hz"] = {r.kmw.lo, r.kmw.hi};
    j["m0m"] = {r.m0m.lo, r.m0m.hi};
    j["t2m_s"] = {r.t2m.lo, r.t2m.hi};
    j["t1w_s"] = {r.t1w.lo, r.t1w.hi};
    return j;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_snapshot(const std::string& out_path, const ordered_json& resolved) {
    write_text_file(out_path + ".config.json", resolved.dump(2) + "\n");
}

std::string format_full(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string path_stem(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOpts {
    std::string schedule_path;
    std::vector<std::string> tissue_kv;
    std::string out_path;
};

void run_simulate(const SimulateOpts& o) {
    std::map<std::string, double> kv;
    for (const std::string& item : o.tissue_kv) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("tissue argument must be key=value, got '" + item + "'");
        }
        const std::string key = item.substr(0, eq);
        if (key != "kmw" && key != "m0m" && key != "t2m" && key != "t1w") {
            throw ConfigError("unknown tissue key '" + key + "'");
        }
        try {
            std::size_t pos = 0;
            const std::string text = item.substr(eq + 1);
            kv[key] = std::stod(text, &pos);
            if (pos != text.size()) throw std::invalid_argument(text);
        } catch (const std::exception&) {
            throw ConfigError("bad numeric value in tissue argument '" + item + "'");
        }
    }
    for (const char* key : {"kmw", "m0m", "t2m", "t1w"}) {
        if (!kv.count(key)) throw ConfigError(std::string("missing tissue key '") + key + "'");
    }
    otom::TissueParams tissue{kv["kmw"], kv["m0m"], kv["t2m"], kv["t1w"]};
    const otom::Schedule schedule = otom::load_schedule(o.schedule_path);
    const otom::Fingerprint fp = otom::simulate_fingerprint(tissue, otom::PoolConstants{}, schedule);

    std::ostringstream csv;
    csv << "index,b1_uT,omega_ppm,ts_s,td_s,signal\n";
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const otom::ScanPoint& p = schedule[i];
        csv << i << ',' << format_full(p.b1) << ',' << format_full(p.omega) << ','
            << format_full(p.ts) << ',' << format_full(p.td) << ',' << format_full(fp[i]) << '\n';
    }
    write_text_file(o.out_path, csv.str());

    ordered_json resolved;
    resolved["schedule"] = o.schedule_path;
    ordered_json t;
    t["kmw"] = tissue.kmw;
    t["m0m"] = tissue.m0m;
    t["t2m"] = tissue.t2m;
    t["t1w"] = tissue.t1w;
    resolved["tissue"] = t;
    resolved["out"] = o.out_path;
    write_snapshot(o.out_path, resolved);
    std::cout << "wrote " << o.out_path << " (" << schedule.size() << " scans)\n";
}

// Reads the simulate CSV back (schedule plus signal column).
void read_fingerprint_csv(const std::string& path, otom::Schedule* schedule,
                          otom::Fingerprint* fp) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fingerprint CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "index,b1_uT,omega_ppm,ts_s,td_s,signal") {
        throw ConfigError("bad fingerprint CSV header in " + path);
    }
    schedule->points.clear();
    schedule->name = path_stem(path);
    fp->values.clear();
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::array<double, 6> v{};
        std::stringstream ss(line);
        std::string cell;
        for (int c = 0; c < 6; ++c) {
            if (!std::getline(ss, cell, ',')) {
                throw ConfigError("short row at line " + std::to_string(line_no) + " in " + path);
            }
            try {
                v[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw ConfigError("bad number at line " + std::to_string(line_no) + " in " + path);
            }
        }
        schedule->points.push_back({v[1], v[2], v[3], v[4]});
        fp->values.push_back(v[5]);
    }
    if (schedule->size() == 0) throw ConfigError("fingerprint CSV has no data rows: " + path);
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

struct CommonOpts {
    std::string config_path;
    std::string out_override;
    std::int64_t seed_override = -1;
    int workers = 0;
    bool deterministic = false;
};

void run_gen_data(const CommonOpts& o) {
    const json j = load_json_file(o.config_path);
    const std::string ctx = "gen-data config";
    check_keys(j, {"nSamples", "seed", "out", "scheduleRanges", "tissueRanges", "noise", "workers"},
               ctx);
    otom::GenConfig cfg;
    cfg.n_samples = get_required<std::uint64_t>(j, "nSamples", ctx);
    cfg.seed = get_value<std::uint64_t>(j, "seed", 0, ctx);
    cfg.out_path = get_value<std::string>(j, "out", "", ctx);
    if (j.contains("scheduleRanges")) {
        cfg.schedule_ranges = schedule_ranges_from_json(j.at("scheduleRanges"), "scheduleRanges");
    }
    if (j.contains("tissueRanges")) {
        cfg.tissue_ranges = tissue_ranges_from_json(j.at("tissueRanges"), "tissueRanges");
    }
    if (j.contains("noise")) {
        check_keys(j.at("noise"), {"snrDb"}, "noise");
        cfg.noise.snr_db = get_value<double>(j.at("noise"), "snrDb", cfg.noise.snr_db, "noise");
    }
    cfg.workers = get_value<int>(j, "workers", 0, ctx);
    if (!o.out_override.empty()) cfg.out_path = o.out_override;
    if (o.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed_override);
    if (o.workers > 0) cfg.workers = o.workers;
    if (o.deterministic) cfg.workers = 1;
    if (cfg.out_path.empty()) throw ConfigError("no output path ('out' key or --out)");
    if (cfg.n_samples == 0) throw ConfigError("nSamples must be positive");

    otom::generate_dataset(cfg);

    ordered_json resolved;
    resolved["nSamples"] = cfg.n_samples;
    resolved["seed"] = cfg.seed;
    resolved["out"] = cfg.out_path;
    resolved["scheduleRanges"] = schedule_ranges_to_json(cfg.schedule_ranges);
    resolved["tissueRanges"] = tissue_ranges_to_json(cfg.tissue_ranges);
    resolved["noise"] = ordered_json{{"snrDb", cfg.noise.snr_db}};
    resolved["workers"] = cfg.workers;
    write_snapshot(cfg.out_path, resolved);

    char digest[32];
    std::snprintf(digest, sizeof digest, "0x%016llx",
                  static_cast<unsigned long long>(otom::fnv1a64(otom::manifest_json(cfg))));
    ordered_json summary;
    summary["dataset"] = cfg.out_path;
    summary["nSamples"] = cfg.n_samples;
    summary["configDigest"] = digest;
    write_text_file(cfg.out_path + ".summary.json", summary.dump(2) + "\n");
    std::cout << "wrote " << cfg.out_path << "\n";
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

otom::TrainConfig train_config_from_json(const json& j, const std::string& ctx,
                                         const otom::TrainConfig& defaults) {
    otom::TrainConfig cfg = defaults;
    if (!j.is_object()) throw ConfigError(ctx + " must be an object");
    check_keys(j,
               {"lrInit", "lrDecayFactor", "lrDecayEveryEpochs", "batchSize", "maxEpochs",
                "earlyStopPatience", "earlyStopMinDelta", "seed"},
               ctx);
    cfg.lr_init = get_value<double>(j, "lrInit", cfg.lr_init, ctx);
    cfg.lr_decay_factor = get_value<double>(j, "lrDecayFactor", cfg.lr_decay_factor, ctx);
    cfg.lr_decay_every_epochs =
        get_value<int>(j, "lrDecayEveryEpochs", cfg.lr_decay_every_epochs, ctx);
    cfg.batch_size = get_value<int>(j, "batchSize", cfg.batch_size, ctx);
    cfg.max_epochs = get_value<int>(j, "maxEpochs", cfg.max_epochs, ctx);
    cfg.early_stop_patience = get_value<int>(j, "earlyStopPatience", cfg.early_stop_patience, ctx);
    cfg.early_stop_min_delta =
        get_value<double>(j, "earlyStopMinDelta", cfg.early_stop_min_delta, ctx);
    cfg.seed = get_value<std::uint64_t>(j, "seed", cfg.seed, ctx);
    return cfg;
}

ordered_json train_config_to_json(const otom::TrainConfig& cfg) {
    ordered_json j;
    j["lrInit"] = cfg.lr_init;
    j["lrDecayFactor"] = cfg.lr_decay_factor;
    j["lrDecayEveryEpochs"] = cfg.lr_decay_every_epochs;
    j["batchSize"] = cfg.batch_size;
    j["maxEpochs"] = cfg.max_epochs;
    j["earlyStopPatience"] = cfg.early_stop_patience;
    j["earlyStopMinDelta"] = cfg.early_stop_min_delta;
    j["seed"] = cfg.seed;
    return j;
}

ordered_json history_summary(const std::string& out, const std::string& type,
                             const otom::TrainHistory& h) {
    ordered_json s;
    s["model"] = out;
    s["type"] = type;
    s["epochsRun"] = h.train_loss.size();
    s["bestEpoch"] = h.best_epoch;
    s["bestValLoss"] = h.best_val_loss;
    s["finalTrainLoss"] = h.train_loss.empty() ? 0.0 : h.train_loss.back();
    s["earlyStopped"] = h.early_stopped;
    return s;
}

void run_train(const CommonOpts& o) {
    const json j = load_json_file(o.config_path);
    const std::string ctx = "train config";
    check_keys(j, {"model", "data", "training", "out"}, ctx);
    std::string out = get_value<std::string>(j, "out", "", ctx);
    if (!o.out_override.empty()) out = o.out_override;
    if (out.empty()) throw ConfigError("no output path ('out' key or --out)");

    otom::TrainConfig tc = train_config_from_json(j.value("training", json::object()), "training",
                                                  otom::TrainConfig{});
    if (o.seed_override >= 0) tc.seed = static_cast<std::uint64_t>(o.seed_override);

    const json jm = j.value("model", json::object());
    const std::string type = get_value<std::string>(jm, "type", "bilstm", "model");

    if (type == "bilstm") {
        check_keys(jm, {"type", "hidden", "layers"}, "model");
        const int hidden = get_value<int>(jm, "hidden", 64, "model");
        const int layers = get_value<int>(jm, "layers", 2, "model");
        const json jd = j.value("data", json::object());
        check_keys(jd, {"dataset"}, "data");
        const std::string dataset = get_required<std::string>(jd, "dataset", "data");

        const otom::DatasetReader reader(dataset);
        otom::NormalizationSpec norm{reader.header().schedule_ranges,
                                     reader.header().tissue_ranges};
        const std::vector<otom::TrainItem> items = otom::load_training_items(dataset, norm);
        otom::BiLstmModel model(layers, hidden, norm, tc.seed);
        const otom::TrainHistory history = otom::train_bilstm(model, items, tc);
        model.save(out, otom::history_json(history, tc));

        ordered_json resolved;
        resolved["model"] =
            ordered_json{{"type", "bilstm"}, {"hidden", hidden}, {"layers", layers}};
        resolved["data"] = ordered_json{{"dataset", dataset}};
        resolved["training"] = train_config_to_json(tc);
        resolved["out"] = out;
        write_snapshot(out, resolved);
        write_text_file(out + ".summary.json", history_summary(out, "bilstm", history).dump(2) + "\n");
    } else if (type == "fcnn") {
        check_keys(jm, {"type", "hiddenLayers", "width", "schedule"}, "model");
        const int hidden_layers = get_value<int>(jm, "hiddenLayers", 4, "model");
        const int width = get_value<int>(jm, "width", 256, "model");
        const std::string schedule_path = get_required<std::string>(jm, "schedule", "model");
        const json jd = j.value("data", json::object());
        check_keys(jd, {"nSamples", "seed", "noise", "tissueRanges"}, "data");
        const auto n_samples = get_value<std::uint64_t>(jd, "nSamples", 100000, "data");
        const auto data_seed = get_value<std::uint64_t>(jd, "seed", 1, "data");
        otom::NoiseSpec noise;
        if (jd.contains("noise")) {
            check_keys(jd.at("noise"), {"snrDb"}, "data.noise");
            noise.snr_db = get_value<double>(jd.at("noise"), "snrDb", noise.snr_db, "data.noise");
        }
        otom::TissueRanges tissue;
        if (jd.contains("tissueRanges")) {
            tissue = tissue_ranges_from_json(jd.at("tissueRanges"), "data.tissueRanges");
        }
        const otom::Schedule schedule = otom::load_schedule(schedule_path);
        otom::NormalizationSpec norm;
        norm.tissue = tissue;
        const std::vector<otom::TrainItem> items = otom::make_schedule_items(
            schedule, n_samples, data_seed, tissue, noise, norm, otom::PoolConstants{});
        otom::FcnnModel model(schedule, hidden_layers, width, norm, tc.seed);
        const otom::TrainHistory history = otom::train_fcnn(model, items, tc);
        model.save(out, otom::history_json(history, tc));

        ordered_json resolved;
        resolved["model"] = ordered_json{{"type", "fcnn"},
                                         {"hiddenLayers", hidden_layers},
                                         {"width", width},
                                         {"schedule", schedule_path}};
        resolved["data"] = ordered_json{{"nSamples", n_samples},
                                        {"seed", data_seed},
                                        {"noise", ordered_json{{"snrDb", noise.snr_db}}},
                                        {"tissueRanges", tissue_ranges_to_json(tissue)}};
        resolved["training"] = train_config_to_json(tc);
        resolved["out"] = out;
        write_snapshot(out, resolved);
        write_text_file(out + ".summary.json", history_summary(out, "fcnn", history).dump(2) + "\n");
    } else {
        throw ConfigError("model.type must be 'bilstm' or 'fcnn', got '" + type + "'");
    }
    std::cout << "wrote " << out << "\n";
}

// ---------------------------------------------------------------------------
// transfer
// ---------------------------------------------------------------------------

void run_transfer(const CommonOpts& o) {
    const json j = load_json_file(o.config_path);
    const std::string ctx = "transfer config";
    check_keys(j, {"model", "schedule", "out", "nSamples", "seed", "noise", "tissueRanges",
                   "training"},
               ctx);
    const std::string model_path = get_required<std::string>(j, "model", ctx);
    const std::string schedule_path = get_required<std::string>(j, "schedule", ctx);
    std::string out = get_value<std::string>(j, "out", "", ctx);
    if (!o.out_override.empty()) out = o.out_override;
    if (out.empty()) throw ConfigError("no output path ('out' key or --out)");

    otom::TransferConfig cfg;
    cfg.n_samples = get_value<std::uint64_t>(j, "nSamples", cfg.n_samples, ctx);
    cfg.seed = get_value<std::uint64_t>(j, "seed", cfg.seed, ctx);
    if (j.contains("noise")) {
        check_keys(j.at("noise"), {"snrDb"}, "noise");
        cfg.noise.snr_db = get_value<double>(j.at("noise"), "snrDb", cfg.noise.snr_db, "noise");
    }
    if (j.contains("tissueRanges")) {
        cfg.tissue_ranges = tissue_ranges_from_json(j.at("tissueRanges"), "tissueRanges");
    }
    cfg.train = train_config_from_json(j.value("training", json::object()), "training", cfg.train);
    if (o.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed_override);

    otom::BiLstmModel model = otom::BiLstmModel::load(model_path);
    const otom::Schedule schedule = otom::load_schedule(schedule_path);
    const otom::TrainHistory history = otom::transfer_train(model, schedule, cfg);
    model.save(out, otom::history_json(history, cfg.train));

    ordered_json resolved;
    resolved["model"] = model_path;
    resolved["schedule"] = schedule_path;
    resolved["out"] = out;
    resolved["nSamples"] = cfg.n_samples;
    resolved["seed"] = cfg.seed;
    resolved["noise"] = ordered_json{{"snrDb", cfg.noise.snr_db}};
    resolved["tissueRanges"] = tissue_ranges_to_json(cfg.tissue_ranges);
    resolved["training"] = train_config_to_json(cfg.train);
    write_snapshot(out, resolved);
    write_text_file(out + ".summary.json",
                    history_summary(out, "bilstm-transfer", history).dump(2) + "\n");
    std::cout << "wrote " << out << "\n";
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitOpts {
    std::string in_path;
    std::string out_path;
    int starts = 10;
    int max_iterations = 200;
    std::uint64_t seed = 0;
};

void run_fit(const FitOpts& o) {
    otom::Schedule schedule;
    otom::Fingerprint fp;
    read_fingerprint_csv(o.in_path, &schedule, &fp);

    otom::FitConfig cfg;
    cfg.n_starts = o.starts;
    cfg.max_iterations = o.max_iterations;
    cfg.seed = o.seed;
    const otom::FitResult result = otom::fit_bloch(fp, schedule, cfg);

    ordered_json params;
    params["kmw_Hz"] = result.params.kmw;
    params["m0m"] = result.params.m0m;
    params["t2m_s"] = result.params.t2m;
    params["t1w_s"] = result.params.t1w;
    ordered_json out;
    out["in"] = o.in_path;
    out["params"] = params;
    out["residualRms"] = result.residual_rms;
    out["iterations"] = result.iterations;
    out["converged"] = result.converged;
    out["startIndex"] = result.start_index;
    write_text_file(o.out_path, out.dump(2) + "\n");

    ordered_json resolved;
    resolved["in"] = o.in_path;
    resolved["out"] = o.out_path;
    resolved["nStarts"] = cfg.n_starts;
    resolved["maxIterations"] = cfg.max_iterations;
    resolved["seed"] = cfg.seed;
    resolved["bounds"] = tissue_ranges_to_json(cfg.bounds);
    write_snapshot(o.out_path, resolved);

    std::cout << "kmw_Hz=" << format_full(result.params.kmw)
              << " m0m=" << format_full(result.params.m0m)
              << " t2m_s=" << format_full(result.params.t2m)
              << " t1w_s=" << format_full(result.params.t1w)
              << " rms=" << format_full(result.residual_rms)
              << " converged=" << (result.converged ? "yes" : "no") << "\n";
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalMethod {
    std::string type;
    std::string label;
    std::string model_path;
};

void run_eval(const CommonOpts& o, const std::string& out_dir_override) {
    const json j = load_json_file(o.config_path);
    const std::string ctx = "eval config";
    check_keys(j, {"outDir", "schedules", "methods", "phantomSeed", "noiseSeed", "noise",
                   "noiseless", "tissueRanges", "fit", "workers"},
               ctx);
    std::string out_dir = get_value<std::string>(j, "outDir", "", ctx);
    if (!out_dir_override.empty()) out_dir = out_dir_override;
    if (out_dir.empty()) throw ConfigError("no output directory ('outDir' key or --out-dir)");

    const auto schedule_paths = get_required<std::vector<std::string>>(j, "schedules", ctx);
    if (schedule_paths.empty()) throw ConfigError("'schedules' must not be empty");

    std::vector<EvalMethod> methods;
    if (!j.contains("methods") || !j.at("methods").is_array() || j.at("methods").empty()) {
        throw ConfigError("'methods' must be a non-empty array");
    }
    for (const auto& jm : j.at("methods")) {
        check_keys(jm, {"type", "label", "model"}, "methods entry");
        EvalMethod m;
        m.type = get_required<std::string>(jm, "type", "methods entry");
        if (m.type != "bilstm" && m.type != "fcnn" && m.type != "fit") {
            throw ConfigError("method type must be bilstm, fcnn, or fit; got '" + m.type + "'");
        }
        m.label = get_value<std::string>(jm, "label", m.type, "methods entry");
        m.model_path = get_value<std::string>(jm, "model", "", "methods entry");
        if (m.type != "fit" && m.model_path.empty()) {
            throw ConfigError("method '" + m.label + "' needs a 'model' path");
        }
        methods.push_back(m);
    }

    const auto phantom_seed = get_value<std::uint64_t>(j, "phantomSeed", 0, ctx);
    const auto noise_seed = get_value<std::uint64_t>(j, "noiseSeed", 0, ctx);
    otom::NoiseSpec noise;
    if (j.contains("noise")) {
        check_keys(j.at("noise"), {"snrDb"}, "noise");
        noise.snr_db = get_value<double>(j.at("noise"), "snrDb", noise.snr_db, "noise");
    }
    if (get_value<bool>(j, "noiseless", false, ctx)) {
        noise.snr_db = std::numeric_limits<double>::infinity();
    }
    otom::TissueRanges tissue;
    if (j.contains("tissueRanges")) {
        tissue = tissue_ranges_from_json(j.at("tissueRanges"), "tissueRanges");
    }
    otom::FitConfig fit_cfg;
    fit_cfg.bounds = tissue;
    fit_cfg.n_starts = 3;
    fit_cfg.max_iterations = 100;
    if (j.contains("fit")) {
        const json& jf = j.at("fit");
        check_keys(jf, {"nStarts", "maxIterations", "seed"}, "fit");
        fit_cfg.n_starts = get_value<int>(jf, "nStarts", fit_cfg.n_starts, "fit");
        fit_cfg.max_iterations = get_value<int>(jf, "maxIterations", fit_cfg.max_iterations, "fit");
        fit_cfg.seed = get_value<std::uint64_t>(jf, "seed", fit_cfg.seed, "fit");
    }
    int workers = get_value<int>(j, "workers", 0, ctx);
    if (o.workers > 0) workers = o.workers;
    if (o.deterministic) workers = 1;

    std::filesystem::create_directories(out_dir);

    // Load models up front so config problems surface before the long part.
    std::map<std::string, otom::BiLstmModel> bilstm_models;
    std::map<std::string, otom::FcnnModel> fcnn_models;
    for (const auto& m : methods) {
        if (m.type == "bilstm" && !bilstm_models.count(m.model_path)) {
            bilstm_models.emplace(m.model_path, otom::BiLstmModel::load(m.model_path));
        } else if (m.type == "fcnn" && !fcnn_models.count(m.model_path)) {
            fcnn_models.emplace(m.model_path, otom::FcnnModel::load(m.model_path));
        }
    }

    const std::vector<otom::Phantom> phantoms = otom::build_phantoms(phantom_seed, tissue);

    std::string csv = otom::mae_csv_header();
    std::vector<std::string> report_files;
    for (std::size_t si = 0; si < schedule_paths.size(); ++si) {
        otom::Schedule schedule = otom::load_schedule(schedule_paths[si]);
        schedule.name = path_stem(schedule_paths[si]);

        // Check fcnn bindings before simulating anything.
        for (const auto& m : methods) {
            if (m.type != "fcnn") continue;
            const otom::Schedule& bound = fcnn_models.at(m.model_path).bound_schedule();
            bool same = bound.size() == schedule.size();
            for (std::size_t i = 0; same && i < schedule.size(); ++i) {
                const auto& a = bound[i];
                const auto& b = schedule[i];
                same = a.b1 == b.b1 && a.omega == b.omega && a.ts == b.ts && a.td == b.td;
            }
            if (!same) {
                throw ConfigError("fcnn model '" + m.label + "' is bound to a different schedule than " +
                                  schedule_paths[si]);
            }
        }

        // One shared set of noisy images per (schedule, phantom).
        std::vector<std::vector<otom::Fingerprint>> images(phantoms.size());
        for (std::size_t pi = 0; pi < phantoms.size(); ++pi) {
            images[pi] = otom::simulate_phantom(
                phantoms[pi], schedule, noise,
                otom::derive_seed(noise_seed, si * phantoms.size() + pi), otom::PoolConstants{},
                workers);
        }

        for (const auto& m : methods) {
            for (std::size_t pi = 0; pi < phantoms.size(); ++pi) {
                const auto t0 = Clock::now();
                std::vector<otom::TissueParams> estimates(images[pi].size());
                if (m.type == "bilstm") {
                    estimates = bilstm_models.at(m.model_path).predict(images[pi], schedule);
                } else if (m.type == "fcnn") {
                    const otom::FcnnModel& model = fcnn_models.at(m.model_path);
                    for (std::size_t i = 0; i < images[pi].size(); ++i) {
                        estimates[i] = model.predict(images[pi][i], schedule);
                    }
                } else {
                    otom::parallel_chunks(
                        images[pi].size(), otom::effective_workers(workers),
                        [&](std::size_t begin, std::size_t end, int) {
                            for (std::size_t i = begin; i < end; ++i) {
                                estimates[i] =
                                    otom::fit_bloch(images[pi][i], schedule, fit_cfg).params;
                            }
                        });
                }
                otom::EvalReport report =
                    otom::evaluate_maps(m.label, schedule.name, phantoms[pi], estimates);
                report.runtime_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
                const std::string file = out_dir + "/report_" + schedule.name + "_" + m.label +
                                         "_" + phantoms[pi].name + ".json";
                write_text_file(file, otom::report_to_json(report, true));
                report_files.push_back(file);
                csv += otom::mae_csv_row(report);
                std::cout << schedule.name << " " << m.label << " " << phantoms[pi].name
                          << ": kmw " << report.params[0].mae << " Hz, m0m "
                          << report.params[1].mae << " %, t2m " << report.params[2].mae
                          << " us, t1w " << report.params[3].mae << " ms\n";
            }
        }
    }
    write_text_file(out_dir + "/mae.csv", csv);

    ordered_json resolved;
    resolved["outDir"] = out_dir;
    resolved["schedules"] = schedule_paths;
    ordered_json jmethods = ordered_json::array();
    for (const auto& m : methods) {
        ordered_json e;
        e["type"] = m.type;
        e["label"] = m.label;
        if (!m.model_path.empty()) e["model"] = m.model_path;
        jmethods.push_back(e);
    }
    resolved["methods"] = jmethods;
    resolved["phantomSeed"] = phantom_seed;
    resolved["noiseSeed"] = noise_seed;
    resolved["noise"] = ordered_json{{"snrDb", noise.snr_db}};
    resolved["tissueRanges"] = tissue_ranges_to_json(tissue);
    resolved["fit"] = ordered_json{{"nStarts", fit_cfg.n_starts},
                                   {"maxIterations", fit_cfg.max_iterations},
                                   {"seed", fit_cfg.seed}};
    resolved["workers"] = workers;
    write_text_file(out_dir + "/eval.config.json", resolved.dump(2) + "\n");

    ordered_json summary;
    summary["csv"] = out_dir + "/mae.csv";
    summary["reports"] = report_files;
    write_text_file(out_dir + "/summary.json", summary.dump(2) + "\n");
    std::cout << "wrote " << out_dir << "/mae.csv\n";
}

// ---------------------------------------------------------------------------
// export-map
// ---------------------------------------------------------------------------

struct ExportOpts {
    std::string in_path;
    std::string param;
    std::string kind = "difference";
    std::string out_path;
    std::vector<double> window;
};

void run_export_map(const ExportOpts& o) {
    int param_idx = -1;
    for (int p = 0; p < 4; ++p) {
        if (o.param == otom::kTissueParamNames[p]) param_idx = p;
    }
    if (param_idx < 0) throw ConfigError("unknown parameter '" + o.param + "'");
    if (o.kind != "truth" && o.kind != "estimate" && o.kind != "difference") {
        throw ConfigError("kind must be truth, estimate, or difference; got '" + o.kind + "'");
    }
    if (!o.window.empty() && o.window.size() != 2) {
        throw ConfigError("--window needs exactly two values: lo hi");
    }
    otom::EvalReport report;
    try {
        report = otom::report_from_json_file(o.in_path);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    const std::vector<double>& values = o.kind == "truth"      ? report.truth[param_idx]
                                        : o.kind == "estimate" ? report.estimate[param_idx]
                                                               : report.difference[param_idx];
    if (values.empty()) {
        throw ConfigError("report " + o.in_path + " has no embedded maps");
    }
    double lo, hi;
    if (o.window.size() == 2) {
        lo = o.window[0];
        hi = o.window[1];
        if (!(hi > lo)) throw ConfigError("--window needs lo < hi");
    } else {
        std::tie(lo, hi) = otom::auto_window(values);
    }
    otom::write_pgm(o.out_path, values, report.width, report.height, lo, hi);

    ordered_json sidecar;
    sidecar["source"] = o.in_path;
    sidecar["param"] = o.param;
    sidecar["kind"] = o.kind;
    sidecar["unit"] = otom::kDisplayUnit[param_idx];
    sidecar["window"] = {lo, hi};
    sidecar["method"] = report.method;
    sidecar["schedule"] = report.schedule_name;
    sidecar["phantom"] = report.phantom_name;
    write_text_file(o.out_path + ".json", sidecar.dump(2) + "\n");
    std::cout << "wrote " << o.out_path << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Schedule-agnostic MT fingerprint quantification toolkit"};
    app.require_subcommand(1);

    SimulateOpts sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "Simulate one fingerprint to CSV");
    c_sim->add_option("--schedule", sim.schedule_path, "Schedule CSV")->required();
    c_sim->add_option("--tissue", sim.tissue_kv,
                      "Tissue parameter key=value (kmw [Hz], m0m, t2m [s], t1w [s])");
    c_sim->add_option("--out", sim.out_path, "Output CSV path")->required();
    c_sim->callback([&] { run_simulate(sim); });

    CommonOpts gen;
    CLI::App* c_gen = app.add_subcommand("gen-data", "Generate a training dataset");
    c_gen->add_option("--config", gen.config_path, "JSON config")->required();
    c_gen->add_option("--out", gen.out_override, "Override output path");
    c_gen->add_option("--seed", gen.seed_override, "Override seed");
    c_gen->add_option("--workers", gen.workers, "Worker threads (0 = automatic)");
    c_gen->add_flag("--deterministic", gen.deterministic, "Single-worker deterministic mode");
    c_gen->callback([&] { run_gen_data(gen); });

    CommonOpts train;
    CLI::App* c_train = app.add_subcommand("train", "Train a regressor");
    c_train->add_option("--config", train.config_path, "JSON config")->required();
    c_train->add_option("--out", train.out_override, "Override output path");
    c_train->add_option("--seed", train.seed_override, "Override training seed");
    c_train->add_flag("--deterministic", train.deterministic,
                      "Deterministic mode (training is always single-threaded)");
    c_train->callback([&] { run_train(train); });

    CommonOpts transfer;
    CLI::App* c_transfer = app.add_subcommand("transfer", "Fine-tune a model on one schedule");
    c_transfer->add_option("--config", transfer.config_path, "JSON config")->required();
    c_transfer->add_option("--out", transfer.out_override, "Override output path");
    c_transfer->add_option("--seed", transfer.seed_override, "Override sample seed");
    c_transfer->add_flag("--deterministic", transfer.deterministic, "Deterministic mode");
    c_transfer->callback([&] { run_transfer(transfer); });

    FitOpts fit;
    CLI::App* c_fit = app.add_subcommand("fit", "Least-squares fit of one fingerprint CSV");
    c_fit->add_option("--in", fit.in_path, "Fingerprint CSV (simulate output format)")->required();
    c_fit->add_option("--out", fit.out_path, "Result JSON path")->required();
    c_fit->add_option("--starts", fit.starts, "Number of multi-start points");
    c_fit->add_option("--max-iter", fit.max_iterations, "Iteration cap per start");
    c_fit->add_option("--seed", fit.seed, "Start-point seed");
    c_fit->callback([&] { run_fit(fit); });

    CommonOpts eval;
    std::string eval_out_dir;
    CLI::App* c_eval = app.add_subcommand("eval", "Phantom evaluation of estimators");
    c_eval->add_option("--config", eval.config_path, "JSON config")->required();
    c_eval->add_option("--out-dir", eval_out_dir, "Override output directory");
    c_eval->add_option("--seed", eval.seed_override, "Unused; reports depend on config seeds");
    c_eval->add_option("--workers", eval.workers, "Worker threads (0 = automatic)");
    c_eval->add_flag("--deterministic", eval.deterministic, "Single-worker deterministic mode");
    c_eval->callback([&] { run_eval(eval, eval_out_dir); });

    ExportOpts exp;
    CLI::App* c_exp = app.add_subcommand("export-map", "Export a report map as a PGM image");
    c_exp->add_option("--in", exp.in_path, "Report JSON (with maps)")->required();
    c_exp->add_option("--param", exp.param, "Parameter: kmw, m0m, t2m, t1w")->required();
    c_exp->add_option("--kind", exp.kind, "Map kind: truth, estimate, difference");
    c_exp->add_option("--out", exp.out_path, "Output PGM path")->required();
    c_exp->add_option("--window", exp.window, "Display window: lo hi")->expected(2);
    c_exp->callback([&] { run_export_map(exp); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
