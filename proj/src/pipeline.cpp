#include "emgsnn/pipeline.hpp"

#include <cmath>

#include <cstring>

#include "emgsnn/errors.hpp"
#include "emgsnn/rng.hpp"

namespace emgsnn {

namespace {

// Seed streams, so every stage draws from an independent generator.
constexpr std::uint64_t kStreamData = 1;
constexpr std::uint64_t kStreamModel = 2;
constexpr std::uint64_t kStreamShuffle = 3;
constexpr std::uint64_t kStreamTrainEnc = 4;
constexpr std::uint64_t kStreamTestEnc = 5;
constexpr std::uint64_t kStreamBenchStream = 10;
constexpr std::uint64_t kStreamCalibNeutral = 11;
constexpr std::uint64_t kStreamCalibReference = 12;
constexpr std::uint64_t kStreamRate = 20;

void add_stage(StageOps& into, const StageOps& from) {
    into.ac += from.ac;
    into.mac += from.mac;
}

void add_report(EnergyReport& into, const EnergyReport& from) {
    add_stage(into.encode, from.encode);
    add_stage(into.detect, from.detect);
    add_stage(into.fc_in, from.fc_in);
    add_stage(into.lif_hidden, from.lif_hidden);
    add_stage(into.fc_out, from.fc_out);
    add_stage(into.lif_out, from.lif_out);
}

}  // namespace

const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::none: return "none";
        case Ablation::normal_delta: return "normal-delta";
        case Ablation::rate_coding: return "rate-coding";
        case Ablation::no_population: return "no-population";
        case Ablation::no_solvers: return "no-solvers";
    }
    return "none";
}

Ablation parse_ablation(const std::string& name) {
    if (name == "none") return Ablation::none;
    if (name == "normal-delta") return Ablation::normal_delta;
    if (name == "rate-coding") return Ablation::rate_coding;
    if (name == "no-population") return Ablation::no_population;
    if (name == "no-solvers") return Ablation::no_solvers;
    throw ConfigError("unknown ablation '" + name +
                      "' (expected none, normal-delta, rate-coding, no-population, no-solvers)");
}

int effective_trains(const PipelineConfig& cfg, Ablation a) {
    return a == Ablation::normal_delta ? 1 : cfg.encoder.n_trains;
}

Eigen::Index effective_population(const PipelineConfig& cfg, Ablation a) {
    return a == Ablation::no_population ? 1 : cfg.population;
}

Eigen::Index feature_dim(const PipelineConfig& cfg, Ablation a) {
    if (a == Ablation::no_solvers) {
        return cfg.synth.channels * effective_trains(cfg, a) * cfg.t_fix;
    }
    if (cfg.bin <= 0 || cfg.t_fix % cfg.bin != 0) {
        throw ConfigError("bin must divide t_fix");
    }
    return cfg.synth.channels * (cfg.t_fix / cfg.bin);
}

SignalBuffer preprocess(const SignalBuffer& raw, const FilterConfig& filter) {
    return rectify(bandpass_filter(raw, filter));
}

CalibrationProfile calibrate_pipeline(const SignalBuffer& neutral_raw,
                                      const SignalBuffer& reference_raw,
                                      const PipelineConfig& cfg) {
    if (neutral_raw.channels() != reference_raw.channels()) {
        throw ConfigError("neutral and reference recordings have different channel counts");
    }
    CalibrationProfile profile = compute_calibration(preprocess(neutral_raw, cfg.filter), cfg.alpha);
    SignalBuffer normalized =
        adaptive_normalize(preprocess(reference_raw, cfg.filter), profile, cfg.median_floor);
    profile.theta_min = calibrate_theta(normalized, cfg.encoder).theta;
    return profile;
}

SynthConfig calibration_neutral_config(const PipelineConfig& cfg, std::uint64_t seed) {
    SynthConfig c = cfg.synth;
    c.actions_per_class = 0;
    c.distractor_count = 0;
    c.duration_s = 5.0;
    c.seed = CounterRng::derive(seed, kStreamCalibNeutral);
    return c;
}

SynthConfig calibration_reference_config(const PipelineConfig& cfg, std::uint64_t seed) {
    SynthConfig c = cfg.synth;
    c.actions_per_class = 6;
    c.distractor_count = 0;
    c.duration_s = 0.0;
    c.neutral_gap_ms = {30.0, 60.0};
    c.seed = CounterRng::derive(seed, kStreamCalibReference);
    return c;
}

CalibrationProfile calibrate_synthetic(const PipelineConfig& cfg, std::uint64_t seed) {
    SynthConfig ncfg = calibration_neutral_config(cfg, seed);
    SynthConfig rcfg = calibration_reference_config(cfg, seed);
    LabeledStream neutral = generate_stream(ncfg, ncfg.seed);
    LabeledStream reference = generate_stream(rcfg, rcfg.seed);
    return calibrate_pipeline(neutral.signal, reference.signal, cfg);
}

SpikeTensor encode_stream(const SignalBuffer& raw, const CalibrationProfile& profile,
                          const PipelineConfig& cfg, Ablation a, std::uint64_t seed) {
    SignalBuffer normalized =
        adaptive_normalize(preprocess(raw, cfg.filter), profile, cfg.median_floor);
    EncoderConfig ec = cfg.encoder;
    switch (a) {
        case Ablation::normal_delta:
            ec.n_trains = 1;
            return multi_delta_encode(normalized, profile, ec);
        case Ablation::rate_coding:
            return rate_encode(normalized, ec.n_trains, CounterRng::derive(seed, kStreamRate));
        default:
            return multi_delta_encode(normalized, profile, ec);
    }
}

Vector segment_features(const SpikeTensor& segment, const PipelineConfig& cfg, Ablation a) {
    return build_features(segment, cfg.bin, cfg.t_fix, a != Ablation::no_solvers);
}

Dataset features_dataset(const SegmentDataset& segments, const CalibrationProfile& profile,
                         const PipelineConfig& cfg, Ablation a, std::uint64_t seed) {
    Dataset out;
    const Eigen::Index n = static_cast<Eigen::Index>(segments.items.size());
    out.features.resize(feature_dim(cfg, a), n);
    out.labels.reserve(segments.items.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const SegmentSample& item = segments.items[static_cast<std::size_t>(i)];
        SpikeTensor spikes =
            encode_stream(item.signal, profile, cfg, a, CounterRng::derive(seed, 0, i));
        out.features.col(i) = segment_features(spikes, cfg, a);
        out.labels.push_back(item.label);
    }
    return out;
}

namespace {

struct PreparedData {
    CalibrationProfile profile;
    SegmentDataset train_segments;
    SegmentDataset test_segments;
    Dataset train_set;
    Dataset test_set;
};

PreparedData prepare_data(const PipelineConfig& cfg, std::uint64_t seed, Ablation a) {
    PreparedData d;
    d.profile = calibrate_synthetic(cfg, seed);
    auto [train_segs, test_segs] =
        generate_dataset(cfg.synth, CounterRng::derive(seed, kStreamData), cfg.train_split);
    d.train_segments = std::move(train_segs);
    d.test_segments = std::move(test_segs);
    d.train_set = features_dataset(d.train_segments, d.profile, cfg, a,
                                   CounterRng::derive(seed, kStreamTrainEnc));
    d.test_set = features_dataset(d.test_segments, d.profile, cfg, a,
                                  CounterRng::derive(seed, kStreamTestEnc));
    return d;
}

// RMS feature entry over the training set. Training runs in a unit-RMS
// feature basis so one SGD rate conditions both layers (raw bin counts make
// the weights_in gradient, which is proportional to the feature magnitude,
// orders of magnitude stiffer than the weights_out gradient); the scale is
// folded back into weights_in afterwards, so saved models consume raw counts.
double feature_scale(const Dataset& train_set) {
    const double rms = std::sqrt(train_set.features.array().square().mean());
    return std::max(rms, 1e-12);
}

Dataset scaled_dataset(const Dataset& raw, double scale) {
    return Dataset{raw.features / scale, raw.labels};
}

SnnModel prepared_model(const PipelineConfig& cfg, std::uint64_t seed, Ablation a) {
    SnnModel model = make_snn_model(feature_dim(cfg, a), cfg.hidden_dim, cfg.synth.classes,
                                    effective_population(cfg, a),
                                    CounterRng::derive(seed, kStreamModel));
    model.lif_beta = cfg.lif_beta;
    model.lif_u_th = cfg.lif_u_th;
    model.t_sim = cfg.t_sim;
    model.t_fix = cfg.t_fix;
    model.bin = cfg.bin;
    return model;
}

}  // namespace

TrainOutcome train_pipeline(const PipelineConfig& cfg, std::uint64_t seed, Ablation a) {
    PreparedData data = prepare_data(cfg, seed, a);
    SnnModel model = prepared_model(cfg, seed, a);
    TrainConfig tc = cfg.train;
    tc.seed = CounterRng::derive(seed, kStreamShuffle);
    const double scale = feature_scale(data.train_set);
    FitReport report = fit(model, scaled_dataset(data.train_set, scale),
                           scaled_dataset(data.test_set, scale), tc);
    model.weights_in /= scale;
    return TrainOutcome{std::move(data.profile), std::move(model), std::move(report)};
}

StreamInference infer_stream(const SignalBuffer& raw, const CalibrationProfile& profile,
                             const SnnModel& model, const PipelineConfig& cfg, Ablation a,
                             std::uint64_t seed) {
    StreamInference out;
    SpikeTensor tensor = encode_stream(raw, profile, cfg, a, seed);
    TadState state(tensor.channels, tensor.trains);
    out.segments = tad_detect_chunk(state, tensor, cfg.tad);
    TadStepResult tail = tad_flush(state, cfg.tad);
    if (tail.segment) out.segments.push_back(std::move(*tail.segment));
    out.detector_ops = state.ops;

    out.energy.encode = encode_ops(tensor.channels, tensor.steps(), effective_trains(cfg, a));
    out.energy.detect = detect_ops(state.ops.active_steps);
    out.predictions.reserve(out.segments.size());
    for (const ActionSegment& seg : out.segments) {
        Vector f = segment_features(seg.spikes, cfg, a);
        ForwardRecord rec = forward(model, f);
        out.predictions.push_back(decode_population(rec.class_sums));
        add_report(out.energy, count_ops(model, f, rec));
    }
    return out;
}

DetectionBench run_detection_bench(const PipelineConfig& cfg, std::uint64_t seed) {
    DetectionBench bench;
    SynthConfig scfg = cfg.synth;
    scfg.actions_per_class = cfg.bench.actions_per_class;
    scfg.duration_s = cfg.bench.duration_s;
    scfg.distractor_count = cfg.bench.distractors;
    scfg.action_duration_ms = cfg.bench.action_duration_ms;
    scfg.neutral_gap_ms = cfg.bench.neutral_gap_ms;
    scfg.distractor_duration_ms = cfg.bench.distractor_duration_ms;
    scfg.seed = CounterRng::derive(seed, kStreamBenchStream);
    bench.stream = generate_stream(scfg, scfg.seed);

    CalibrationProfile profile = calibrate_synthetic(cfg, seed);
    SpikeTensor tensor = encode_stream(bench.stream.signal, profile, cfg, Ablation::none, seed);

    TadState state(tensor.channels, tensor.trains);
    std::vector<ActionSegment> segments = tad_detect_chunk(state, tensor, cfg.tad);
    TadStepResult tail = tad_flush(state, cfg.tad);
    if (tail.segment) segments.push_back(std::move(*tail.segment));

    std::vector<Interval> tad_iv = segment_intervals(segments);
    bench.tad = evaluate_detection(tad_iv, bench.stream.labels);
    bench.tad.op_counts = state.ops;
    bench.tad_segments = tad_iv.size();

    std::vector<Interval> spike_iv =
        spike_threshold_detect(tensor, cfg.baseline.spike_t_s, cfg.baseline.spike_count_threshold,
                               cfg.baseline.spike_window_ms, bench.stream.signal.rate_hz);
    bench.spike_threshold = evaluate_detection(spike_iv, bench.stream.labels);
    bench.spike_segments = spike_iv.size();

    std::vector<Interval> amp_iv =
        amp_threshold_detect(preprocess(bench.stream.signal, cfg.filter), cfg.baseline.amp_threshold,
                             cfg.baseline.amp_window_ms, cfg.baseline.amp_overlap);
    bench.amp_threshold = evaluate_detection(amp_iv, bench.stream.labels);
    bench.amp_segments = amp_iv.size();

    for (const Interval& seg : tad_iv) {
        for (const Interval& d : bench.stream.distractors) {
            if (seg.begin < d.end && d.begin < seg.end) {
                ++bench.tad_distractor_emissions;
                break;
            }
        }
    }
    return bench;
}

ClassificationBench run_classification_bench(const PipelineConfig& cfg, std::uint64_t seed,
                                             Ablation a) {
    ClassificationBench bench;
    PreparedData data = prepare_data(cfg, seed, a);
    SnnModel model = prepared_model(cfg, seed, a);
    TrainConfig tc = cfg.train;
    tc.seed = CounterRng::derive(seed, kStreamShuffle);
    const double scale = feature_scale(data.train_set);
    bench.fit = fit(model, scaled_dataset(data.train_set, scale),
                    scaled_dataset(data.test_set, scale), tc);
    model.weights_in /= scale;
    bench.test_accuracy = bench.fit.final_test_accuracy;

    const int n_trains = effective_trains(cfg, a);
    for (Eigen::Index i = 0; i < data.test_set.size(); ++i) {
        Vector f = data.test_set.features.col(i);
        ForwardRecord rec = forward(model, f);
        EnergyReport er = count_ops(model, f, rec);
        const SignalBuffer& sig = data.test_segments.items[static_cast<std::size_t>(i)].signal;
        er.encode = encode_ops(sig.channels(), sig.samples.cols(), n_trains);
        add_report(bench.summed_energy, er);
        ++bench.inferences;
    }
    return bench;
}

}  // namespace emgsnn
