#include "emgsnn/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "emgsnn/errors.hpp"
#include "emgsnn/io.hpp"
#include "emgsnn/pipeline.hpp"
#include "emgsnn/rng.hpp"

namespace emgsnn {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliState {
    PipelineConfig cfg;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string loss = "ce";
};

// One flat dotted-key namespace shared by flags and config files. Every knob
// registered here also appears in dump_config below, in the same spelling.
void register_config(CLI::App& app, CliState& st) {
    app.add_option("--seed", st.seed, "Root seed; every stage derives its own stream from it");
    app.add_option("--threads", st.threads, "Worker cap; results are identical for any value")
        ->check(CLI::PositiveNumber);

    app.add_option("--filter.low_hz", st.cfg.filter.low_hz, "Band-pass low cutoff");
    app.add_option("--filter.high_hz", st.cfg.filter.high_hz, "Band-pass high cutoff");
    app.add_option("--filter.order", st.cfg.filter.order, "Total band-pass order (even)");

    app.add_option("--norm.alpha", st.cfg.alpha, "Adaptive normalization range factor");
    app.add_option("--norm.median_floor", st.cfg.median_floor.enabled,
                   "Substitute a floor for zero channel medians instead of erroring");
    app.add_option("--norm.median_floor_value", st.cfg.median_floor.value);

    app.add_option("--encode.theta_min", st.cfg.encoder.theta_min, "Base delta threshold");
    app.add_option("--encode.delta", st.cfg.encoder.delta, "Threshold spacing between trains");
    app.add_option("--encode.n_trains", st.cfg.encoder.n_trains, "Spike trains per channel");
    app.add_option("--encode.r_max", st.cfg.encoder.r_max, "Calibration target spike rate");
    app.add_option("--encode.per_channel_rate", st.cfg.encoder.per_channel_rate,
                   "Calibrate until every channel (not the pool) meets r_max");

    app.add_option("--tad.t_s", st.cfg.tad.t_s, "Activation spike-count threshold");
    app.add_option("--tad.omega", st.cfg.tad.omega, "Input weight");
    app.add_option("--tad.beta", st.cfg.tad.beta, "Membrane decay rate");
    app.add_option("--tad.u_max", st.cfg.tad.u_max, "Membrane ceiling");
    app.add_option("--tad.u_th", st.cfg.tad.u_th, "Action threshold");
    app.add_option("--tad.l_min", st.cfg.tad.l_min, "Minimum action length, steps");
    app.add_option("--tad.l_max", st.cfg.tad.l_max, "Maximum action length, steps");
    app.add_option("--tad.strict_activation", st.cfg.tad.strict_activation,
                   "Activate on X > t_s instead of X >= t_s");
    app.add_option("--tad.pre_roll", st.cfg.tad.pre_roll, "Columns kept from before the onset");

    app.add_option("--baseline.amp_threshold", st.cfg.baseline.amp_threshold);
    app.add_option("--baseline.amp_window_ms", st.cfg.baseline.amp_window_ms);
    app.add_option("--baseline.amp_overlap", st.cfg.baseline.amp_overlap);
    app.add_option("--baseline.spike_t_s", st.cfg.baseline.spike_t_s);
    app.add_option("--baseline.spike_count_threshold", st.cfg.baseline.spike_count_threshold);
    app.add_option("--baseline.spike_window_ms", st.cfg.baseline.spike_window_ms);

    app.add_option("--snn.hidden", st.cfg.hidden_dim, "Hidden LIF neurons");
    app.add_option("--snn.population", st.cfg.population, "Output neurons per class");
    app.add_option("--snn.beta", st.cfg.lif_beta, "LIF decay rate");
    app.add_option("--snn.u_th", st.cfg.lif_u_th, "LIF firing threshold");
    app.add_option("--snn.t_sim", st.cfg.t_sim, "Simulation steps per inference");
    app.add_option("--snn.t_fix", st.cfg.t_fix, "Fixed action length fed to the solvers");
    app.add_option("--snn.bin", st.cfg.bin, "Multi-step window length");

    app.add_option("--train.k_slope", st.cfg.train.k_slope, "Surrogate slope");
    app.add_option("--train.learning_rate", st.cfg.train.learning_rate);
    app.add_option("--train.epochs", st.cfg.train.epochs);
    app.add_option("--train.batch_size", st.cfg.train.batch_size);
    app.add_option("--train.loss", st.loss, "ce or mse")
        ->check(CLI::IsMember({"ce", "mse"}));
    app.add_option("--train.reset_detach", st.cfg.train.reset_detach,
                   "Treat the soft-reset term as constant in backprop");
    app.add_option("--train.momentum", st.cfg.train.momentum, "0 disables momentum");
    app.add_option("--train.split", st.cfg.train_split, "Training fraction per class");

    app.add_option("--synth.channels", st.cfg.synth.channels);
    app.add_option("--synth.rate_hz", st.cfg.synth.rate_hz);
    app.add_option("--synth.classes", st.cfg.synth.classes);
    app.add_option("--synth.actions_per_class", st.cfg.synth.actions_per_class);
    app.add_option("--synth.action_ms_lo", st.cfg.synth.action_duration_ms.lo);
    app.add_option("--synth.action_ms_hi", st.cfg.synth.action_duration_ms.hi);
    app.add_option("--synth.gap_ms_lo", st.cfg.synth.neutral_gap_ms.lo);
    app.add_option("--synth.gap_ms_hi", st.cfg.synth.neutral_gap_ms.hi);
    app.add_option("--synth.snr_db", st.cfg.synth.snr_db, "Baseline SNR; inf disables noise");
    app.add_option("--synth.duration_s", st.cfg.synth.duration_s,
                   "0 grows to fit; > 0 pins the stream length");
    app.add_option("--synth.distractors", st.cfg.synth.distractor_count);
    app.add_option("--synth.distractor_ms_lo", st.cfg.synth.distractor_duration_ms.lo);
    app.add_option("--synth.distractor_ms_hi", st.cfg.synth.distractor_duration_ms.hi);
    app.add_option("--synth.distractor_level", st.cfg.synth.distractor_level);

    app.add_option("--bench.actions_per_class", st.cfg.bench.actions_per_class);
    app.add_option("--bench.duration_s", st.cfg.bench.duration_s);
    app.add_option("--bench.distractors", st.cfg.bench.distractors);
    app.add_option("--bench.action_ms_lo", st.cfg.bench.action_duration_ms.lo);
    app.add_option("--bench.action_ms_hi", st.cfg.bench.action_duration_ms.hi);
    app.add_option("--bench.gap_ms_lo", st.cfg.bench.neutral_gap_ms.lo);
    app.add_option("--bench.gap_ms_hi", st.cfg.bench.neutral_gap_ms.hi);
    app.add_option("--bench.distractor_ms_lo", st.cfg.bench.distractor_duration_ms.lo);
    app.add_option("--bench.distractor_ms_hi", st.cfg.bench.distractor_duration_ms.hi);
}

std::map<std::string, std::string> dump_config(const CliState& st) {
    const PipelineConfig& c = st.cfg;
    std::map<std::string, std::string> m;
    auto d = [&](const char* k, double v) { m[k] = format_double(v); };
    auto i = [&](const char* k, auto v) { m[k] = std::to_string(v); };
    auto b = [&](const char* k, bool v) { m[k] = v ? "true" : "false"; };

    m["seed"] = std::to_string(st.seed);
    d("filter.low_hz", c.filter.low_hz);
    d("filter.high_hz", c.filter.high_hz);
    i("filter.order", c.filter.order);
    d("norm.alpha", c.alpha);
    b("norm.median_floor", c.median_floor.enabled);
    d("norm.median_floor_value", c.median_floor.value);
    d("encode.theta_min", c.encoder.theta_min);
    d("encode.delta", c.encoder.delta);
    i("encode.n_trains", c.encoder.n_trains);
    d("encode.r_max", c.encoder.r_max);
    b("encode.per_channel_rate", c.encoder.per_channel_rate);
    d("tad.t_s", c.tad.t_s);
    d("tad.omega", c.tad.omega);
    d("tad.beta", c.tad.beta);
    d("tad.u_max", c.tad.u_max);
    d("tad.u_th", c.tad.u_th);
    i("tad.l_min", c.tad.l_min);
    i("tad.l_max", c.tad.l_max);
    b("tad.strict_activation", c.tad.strict_activation);
    i("tad.pre_roll", c.tad.pre_roll);
    d("baseline.amp_threshold", c.baseline.amp_threshold);
    d("baseline.amp_window_ms", c.baseline.amp_window_ms);
    d("baseline.amp_overlap", c.baseline.amp_overlap);
    d("baseline.spike_t_s", c.baseline.spike_t_s);
    d("baseline.spike_count_threshold", c.baseline.spike_count_threshold);
    d("baseline.spike_window_ms", c.baseline.spike_window_ms);
    i("snn.hidden", c.hidden_dim);
    i("snn.population", c.population);
    d("snn.beta", c.lif_beta);
    d("snn.u_th", c.lif_u_th);
    i("snn.t_sim", c.t_sim);
    i("snn.t_fix", c.t_fix);
    i("snn.bin", c.bin);
    d("train.k_slope", c.train.k_slope);
    d("train.learning_rate", c.train.learning_rate);
    i("train.epochs", c.train.epochs);
    i("train.batch_size", c.train.batch_size);
    m["train.loss"] = st.loss;
    b("train.reset_detach", c.train.reset_detach);
    d("train.momentum", c.train.momentum);
    d("train.split", c.train_split);
    i("synth.channels", c.synth.channels);
    d("synth.rate_hz", c.synth.rate_hz);
    i("synth.classes", c.synth.classes);
    i("synth.actions_per_class", c.synth.actions_per_class);
    d("synth.action_ms_lo", c.synth.action_duration_ms.lo);
    d("synth.action_ms_hi", c.synth.action_duration_ms.hi);
    d("synth.gap_ms_lo", c.synth.neutral_gap_ms.lo);
    d("synth.gap_ms_hi", c.synth.neutral_gap_ms.hi);
    d("synth.snr_db", c.synth.snr_db);
    d("synth.duration_s", c.synth.duration_s);
    i("synth.distractors", c.synth.distractor_count);
    d("synth.distractor_ms_lo", c.synth.distractor_duration_ms.lo);
    d("synth.distractor_ms_hi", c.synth.distractor_duration_ms.hi);
    d("synth.distractor_level", c.synth.distractor_level);
    i("bench.actions_per_class", c.bench.actions_per_class);
    d("bench.duration_s", c.bench.duration_s);
    i("bench.distractors", c.bench.distractors);
    d("bench.action_ms_lo", c.bench.action_duration_ms.lo);
    d("bench.action_ms_hi", c.bench.action_duration_ms.hi);
    d("bench.gap_ms_lo", c.bench.neutral_gap_ms.lo);
    d("bench.gap_ms_hi", c.bench.neutral_gap_ms.hi);
    d("bench.distractor_ms_lo", c.bench.distractor_duration_ms.lo);
    d("bench.distractor_ms_hi", c.bench.distractor_duration_ms.hi);
    return m;
}

// run.json next to the outputs: resolved config, input/output hashes, no
// timestamps, so reruns with one seed are byte-identical.
void write_manifest(const fs::path& dir, const std::string& command, const CliState& st,
                    const std::map<std::string, std::string>& extra,
                    const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    json j;
    j["version"] = 1;
    j["command"] = command;
    j["config"] = dump_config(st);
    json args = json::object();
    for (const auto& [k, v] : extra) args[k] = v;
    j["args"] = args;
    json in = json::object();
    for (const fs::path& p : inputs) in[p.generic_string()] = file_hash_hex(p);
    j["inputs"] = in;
    json out = json::object();
    for (const fs::path& p : outputs) out[p.filename().generic_string()] = file_hash_hex(p);
    j["outputs"] = out;
    write_text(dir / "run.json", j.dump(2) + "\n");
}

void apply_enums(CliState& st) {
    st.cfg.train.loss_kind = st.loss == "mse" ? LossKind::mse : LossKind::cross_entropy;
}

json interval_json(const Interval& v) {
    return json{{"begin", v.begin}, {"end", v.end}};
}

json metrics_json(const DetectionReport& rep) {
    return json::parse(detection_report_json(rep));
}

// --profile takes precedence; --calibrate-from computes one on the fly.
CalibrationProfile load_profile(const std::string& profile_path,
                                const std::vector<std::string>& calibrate_from,
                                const PipelineConfig& cfg) {
    if (!profile_path.empty()) return read_profile(profile_path);
    if (calibrate_from.size() == 2) {
        return calibrate_pipeline(read_signal(calibrate_from[0]), read_signal(calibrate_from[1]),
                                  cfg);
    }
    throw ConfigError("need --profile or --calibrate-from NEUTRAL REFERENCE");
}

struct DetectOutcome {
    std::vector<Interval> intervals;
    TadOpCounts ops;
    bool has_ops = false;
};

DetectOutcome run_detector(const std::string& method, const SignalBuffer& raw,
                           const std::string& profile_path,
                           const std::vector<std::string>& calibrate_from, const CliState& st) {
    DetectOutcome out;
    if (method == "amp-threshold") {
        out.intervals = amp_threshold_detect(preprocess(raw, st.cfg.filter),
                                             st.cfg.baseline.amp_threshold,
                                             st.cfg.baseline.amp_window_ms,
                                             st.cfg.baseline.amp_overlap);
        return out;
    }
    CalibrationProfile profile = load_profile(profile_path, calibrate_from, st.cfg);
    SpikeTensor tensor = encode_stream(raw, profile, st.cfg, Ablation::none, st.seed);
    if (method == "spike-threshold") {
        out.intervals = spike_threshold_detect(tensor, st.cfg.baseline.spike_t_s,
                                               st.cfg.baseline.spike_count_threshold,
                                               st.cfg.baseline.spike_window_ms, raw.rate_hz);
        return out;
    }
    TadState state(tensor.channels, tensor.trains);
    std::vector<ActionSegment> segments = tad_detect_chunk(state, tensor, st.cfg.tad);
    TadStepResult tail = tad_flush(state, st.cfg.tad);
    if (tail.segment) segments.push_back(std::move(*tail.segment));
    out.intervals = segment_intervals(segments);
    out.ops = state.ops;
    out.has_ops = true;
    return out;
}

void cmd_synth(const CliState& st, const std::string& out_dir) {
    SynthConfig scfg = st.cfg.synth;
    scfg.seed = st.seed;
    const double ms_per_step = 1000.0 / scfg.rate_hz;
    const double l_min_ms = static_cast<double>(st.cfg.tad.l_min) * ms_per_step;
    const double l_max_ms = static_cast<double>(st.cfg.tad.l_max) * ms_per_step;
    if (scfg.action_duration_ms.lo < l_min_ms || scfg.action_duration_ms.hi > l_max_ms) {
        std::cerr << "warning: action durations " << format_double(scfg.action_duration_ms.lo)
                  << ".." << format_double(scfg.action_duration_ms.hi)
                  << " ms fall outside the detector's accepted band " << format_double(l_min_ms)
                  << ".." << format_double(l_max_ms) << " ms\n";
    }
    LabeledStream stream = generate_stream(scfg, scfg.seed);
    const fs::path dir(out_dir);
    std::vector<fs::path> outputs;
    write_signal(dir / "signal.csv", stream.signal);
    outputs.push_back(dir / "signal.csv");
    write_labels(dir / "labels.csv", stream.labels);
    outputs.push_back(dir / "labels.csv");
    if (!stream.distractors.empty()) {
        std::vector<LabeledInterval> rows;
        rows.reserve(stream.distractors.size());
        for (const Interval& v : stream.distractors) rows.push_back({v.begin, v.end, -1});
        write_labels(dir / "distractors.csv", rows);
        outputs.push_back(dir / "distractors.csv");
    }
    write_manifest(dir, "synth", st, {}, {}, outputs);
}

void cmd_calibrate(const CliState& st, const std::string& neutral, const std::string& reference,
                   const std::string& out_file) {
    CalibrationProfile profile =
        calibrate_pipeline(read_signal(neutral), read_signal(reference), st.cfg);
    if (profile.theta_min && *profile.theta_min > 1.0) {
        std::cerr << "warning: calibration is degenerate (theta "
                  << format_double(*profile.theta_min)
                  << " > 1); the reference cannot meet r_max\n";
    }
    const fs::path out(out_file);
    write_profile(out, profile);
    write_manifest(out.parent_path(), "calibrate", st, {},
                   {fs::path(neutral), fs::path(reference)}, {out});
}

void cmd_encode(const CliState& st, const std::string& in_file, const std::string& profile_path,
                const std::vector<std::string>& calibrate_from, const std::string& ablate,
                const std::string& out_file) {
    Ablation a = parse_ablation(ablate);
    SignalBuffer raw = read_signal(in_file);
    CalibrationProfile profile = load_profile(profile_path, calibrate_from, st.cfg);
    SpikeTensor spikes = encode_stream(raw, profile, st.cfg, a, st.seed);
    const fs::path out(out_file);
    write_spikes(out, spikes);
    std::vector<fs::path> inputs{fs::path(in_file)};
    if (!profile_path.empty()) inputs.push_back(fs::path(profile_path));
    write_manifest(out.parent_path(), "encode", st, {{"ablate", ablate}}, inputs, {out});
}

void cmd_detect(const CliState& st, const std::string& in_file, const std::string& method,
                const std::string& profile_path, const std::vector<std::string>& calibrate_from,
                const std::string& labels_path, const std::string& out_file) {
    SignalBuffer raw = read_signal(in_file);
    DetectOutcome det = run_detector(method, raw, profile_path, calibrate_from, st);

    json j;
    j["version"] = 1;
    j["method"] = method;
    json segs = json::array();
    for (const Interval& v : det.intervals) segs.push_back(interval_json(v));
    j["segments"] = segs;
    if (!labels_path.empty()) {
        DetectionReport rep = evaluate_detection(det.intervals, read_labels(labels_path));
        if (det.has_ops) rep.op_counts = det.ops;
        j["metrics"] = metrics_json(rep);
    } else if (det.has_ops) {
        j["op_counts"] = {{"multiplies", det.ops.multiplies},
                          {"additions", det.ops.additions},
                          {"active_steps", det.ops.active_steps}};
    }
    const fs::path out(out_file);
    write_text(out, j.dump(2) + "\n");
    std::vector<fs::path> inputs{fs::path(in_file)};
    if (!profile_path.empty()) inputs.push_back(fs::path(profile_path));
    if (!labels_path.empty()) inputs.push_back(fs::path(labels_path));
    write_manifest(out.parent_path(), "detect", st, {{"method", method}}, inputs, {out});
}

void cmd_train(const CliState& st, const std::string& ablate, const std::string& out_dir) {
    Ablation a = parse_ablation(ablate);
    TrainOutcome outcome = train_pipeline(st.cfg, st.seed, a);
    const fs::path dir(out_dir);
    write_model(dir / "model.json", outcome.model);
    write_profile(dir / "profile.json", outcome.profile);
    std::string log = "epoch,mean_loss,train_acc,test_acc\n";
    for (const TrainLogRow& row : outcome.fit.log) {
        log += std::to_string(row.epoch) + "," + format_double(row.mean_loss) + "," +
               format_double(row.train_acc) + "," + format_double(row.test_acc) + "\n";
    }
    write_text(dir / "train_log.csv", log);
    write_manifest(dir, "train", st, {{"ablate", ablate}}, {},
                   {dir / "model.json", dir / "profile.json", dir / "train_log.csv"});
    std::cout << "final test accuracy " << format_double(outcome.fit.final_test_accuracy) << "\n";
}

void cmd_infer(const CliState& st, const std::string& in_file, const std::string& profile_path,
               const std::string& model_path, const std::string& ablate,
               const std::string& out_file) {
    Ablation a = parse_ablation(ablate);
    SignalBuffer raw = read_signal(in_file);
    CalibrationProfile profile = load_profile(profile_path, {}, st.cfg);
    SnnModel model = read_model(model_path);
    StreamInference inf = infer_stream(raw, profile, model, st.cfg, a, st.seed);

    json j;
    j["version"] = 1;
    j["ablation"] = ablate;
    json preds = json::array();
    for (std::size_t i = 0; i < inf.segments.size(); ++i) {
        preds.push_back({{"onset_sample", inf.segments[i].onset_sample},
                         {"length", inf.segments[i].length},
                         {"class_id", inf.predictions[i]}});
    }
    j["predictions"] = preds;
    j["energy"] = json::parse(energy_report_json(inf.energy));
    const fs::path out(out_file);
    write_text(out, j.dump(2) + "\n");
    write_manifest(out.parent_path(), "infer", st, {{"ablate", ablate}},
                   {fs::path(in_file), fs::path(profile_path), fs::path(model_path)}, {out});
}

void cmd_bench(const CliState& st, const std::string& ablate, const std::string& out_file) {
    Ablation a = parse_ablation(ablate);
    DetectionBench det = run_detection_bench(st.cfg, st.seed);
    ClassificationBench cls = run_classification_bench(st.cfg, st.seed, a);

    auto method = [](const DetectionReport& rep, std::size_t segments) {
        json j = json::parse(detection_report_json(rep));
        j["segments"] = segments;
        return j;
    };
    json j;
    j["version"] = 1;
    j["ablation"] = ablate;
    j["detection"] = {
        {"tad_lif", method(det.tad, det.tad_segments)},
        {"spike_threshold", method(det.spike_threshold, det.spike_segments)},
        {"amp_threshold", method(det.amp_threshold, det.amp_segments)},
    };
    j["detection"]["tad_lif"]["distractor_emissions"] = det.tad_distractor_emissions;
    json log = json::array();
    for (const TrainLogRow& row : cls.fit.log) {
        log.push_back({{"epoch", row.epoch},
                       {"mean_loss", row.mean_loss},
                       {"train_acc", row.train_acc},
                       {"test_acc", row.test_acc}});
    }
    j["classification"] = {{"test_accuracy", cls.test_accuracy}, {"train_log", log}};
    json energy = json::parse(energy_report_json(cls.summed_energy));
    energy["inferences"] = cls.inferences;
    energy["mean_total_pj"] =
        cls.inferences == 0 ? 0.0 : cls.summed_energy.total_pj() / static_cast<double>(cls.inferences);
    j["energy"] = energy;

    const fs::path out(out_file);
    write_text(out, j.dump(2) + "\n");
    write_manifest(out.parent_path(), "bench", st, {{"ablate", ablate}}, {}, {out});
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CliState st;
    CLI::App app{"Event-driven micro-gesture engine for surface-EMG streams"};
    app.option_defaults()->always_capture_default();  // --help shows the real struct values
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file with the same dotted keys as the flags");
    // Keys keep their dots: the flat namespace has no sections to split on.
    app.get_config_formatter_base()->parentSeparator(':');
    app.allow_config_extras(false);
    register_config(app, st);

    std::string synth_out, calib_neutral, calib_reference, calib_out;
    std::string enc_in, enc_profile, enc_ablate = "none", enc_out;
    std::vector<std::string> enc_calfrom;
    std::string det_in, det_method = "tad-lif", det_profile, det_labels, det_out;
    std::vector<std::string> det_calfrom;
    std::string train_ablate = "none", train_out;
    std::string inf_in, inf_profile, inf_model, inf_ablate = "none", inf_out;
    std::string bench_ablate = "none", bench_out;

    CLI::App* synth = app.add_subcommand("synth", "Generate a labeled synthetic recording");
    synth->fallthrough();
    synth->add_option("--out", synth_out, "Output directory")->required();

    CLI::App* calibrate =
        app.add_subcommand("calibrate", "Fit normalization medians and the delta threshold");
    calibrate->fallthrough();
    calibrate->add_option("--neutral", calib_neutral, "Rest recording (signal CSV)")->required();
    calibrate->add_option("--reference", calib_reference, "Action-dense recording")->required();
    calibrate->add_option("--out", calib_out, "Profile path")->required();

    CLI::App* encode = app.add_subcommand("encode", "Spike-encode a recording");
    encode->fallthrough();
    encode->add_option("--in", enc_in, "Signal CSV")->required();
    encode->add_option("--profile", enc_profile, "Calibration profile");
    encode->add_option("--calibrate-from", enc_calfrom, "Neutral and reference recordings")
        ->expected(2);
    encode->add_option("--ablate", enc_ablate, "none|normal-delta|rate-coding");
    encode->add_option("--out", enc_out, "Spike file")->required();

    CLI::App* detect = app.add_subcommand("detect", "Segment actions out of a recording");
    detect->fallthrough();
    detect->add_option("--in", det_in, "Signal CSV")->required();
    detect->add_option("--method", det_method, "tad-lif|spike-threshold|amp-threshold")
        ->check(CLI::IsMember({"tad-lif", "spike-threshold", "amp-threshold"}));
    detect->add_option("--profile", det_profile, "Calibration profile");
    detect->add_option("--calibrate-from", det_calfrom, "Neutral and reference recordings")
        ->expected(2);
    detect->add_option("--labels", det_labels, "Ground-truth labels for metrics");
    detect->add_option("--out", det_out, "Report path")->required();

    CLI::App* train = app.add_subcommand("train", "Train a classifier on synthetic data");
    train->fallthrough();
    train->add_option("--ablate", train_ablate,
                      "none|normal-delta|rate-coding|no-population|no-solvers");
    train->add_option("--out", train_out, "Output directory")->required();

    CLI::App* infer = app.add_subcommand("infer", "Detect and classify actions in a recording");
    infer->fallthrough();
    infer->add_option("--in", inf_in, "Signal CSV")->required();
    infer->add_option("--profile", inf_profile, "Calibration profile")->required();
    infer->add_option("--model", inf_model, "Trained model")->required();
    infer->add_option("--ablate", inf_ablate, "Must match the model's training ablation");
    infer->add_option("--out", inf_out, "Report path")->required();

    CLI::App* bench = app.add_subcommand("bench", "Detection, accuracy and energy benchmark");
    bench->fallthrough();
    bench->add_option("--ablate", bench_ablate,
                      "none|normal-delta|rate-coding|no-population|no-solvers");
    bench->add_option("--out", bench_out, "Report path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    try {
        apply_enums(st);
        if (*synth) cmd_synth(st, synth_out);
        if (*calibrate) cmd_calibrate(st, calib_neutral, calib_reference, calib_out);
        if (*encode) cmd_encode(st, enc_in, enc_profile, enc_calfrom, enc_ablate, enc_out);
        if (*detect) cmd_detect(st, det_in, det_method, det_profile, det_calfrom, det_labels, det_out);
        if (*train) cmd_train(st, train_ablate, train_out);
        if (*infer) cmd_infer(st, inf_in, inf_profile, inf_model, inf_ablate, inf_out);
        if (*bench) cmd_bench(st, bench_ablate, bench_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const StateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace emgsnn
