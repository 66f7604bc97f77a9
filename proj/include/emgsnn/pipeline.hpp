#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emgsnn/detect.hpp"
#include "emgsnn/encode.hpp"
#include "emgsnn/signal.hpp"
#include "emgsnn/snn.hpp"
#include "emgsnn/synth.hpp"
#include "emgsnn/train.hpp"

namespace emgsnn {

enum class Ablation {
    none,          // multi-delta N trains, solvers, population readout
    normal_delta,  // single-threshold delta coding (N = 1)
    rate_coding,   // Bernoulli rate encoding, N trains
    no_population, // p = 1
    no_solvers,    // raw channels*trains*t_fix bits flattened
};

const char* ablation_name(Ablation a);
Ablation parse_ablation(const std::string& name);

struct BaselineConfig {
    double amp_threshold = 1.5;
    double amp_window_ms = 300.0;
    double amp_overlap = 0.5;
    double spike_t_s = 5.0;
    double spike_count_threshold = 150.0;
    double spike_window_ms = 300.0;
};

// The seeded detection benchmark stream: actions plus steady-state distractors
// in a pinned-length recording.
struct BenchStreamConfig {
    int actions_per_class = 25;
    double duration_s = 100.0;
    int distractors = 50;
    RangeMs action_duration_ms{200.0, 350.0};
    RangeMs neutral_gap_ms{80.0, 120.0};
    RangeMs distractor_duration_ms{1050.0, 1150.0};
};

struct PipelineConfig {
    FilterConfig filter;
    double alpha = 4.0;
    MedianFloor median_floor;
    EncoderConfig encoder;
    TadConfig tad;
    BaselineConfig baseline;
    Eigen::Index hidden_dim = 128;
    Eigen::Index population = 100;
    double lif_beta = 0.9;
    double lif_u_th = 1.0;
    int t_sim = 30;
    Eigen::Index t_fix = 2000;
    Eigen::Index bin = 20;
    TrainConfig train;
    SynthConfig synth;
    BenchStreamConfig bench;
    double train_split = 2.0 / 3.0;  // fraction of each class kept for training
};

int effective_trains(const PipelineConfig& cfg, Ablation a);
Eigen::Index effective_population(const PipelineConfig& cfg, Ablation a);
Eigen::Index feature_dim(const PipelineConfig& cfg, Ablation a);

// Band-pass then rectify.
SignalBuffer preprocess(const SignalBuffer& raw, const FilterConfig& filter);

// Medians come from the neutral recording; theta_min is calibrated on the
// reference recording (it should contain actions, otherwise the grid walk
// tops out against rest noise).
CalibrationProfile calibrate_pipeline(const SignalBuffer& neutral_raw,
                                      const SignalBuffer& reference_raw,
                                      const PipelineConfig& cfg);

// Derived synthetic calibration recordings (neutral-only and action-dense).
SynthConfig calibration_neutral_config(const PipelineConfig& cfg, std::uint64_t seed);
SynthConfig calibration_reference_config(const PipelineConfig& cfg, std::uint64_t seed);
CalibrationProfile calibrate_synthetic(const PipelineConfig& cfg, std::uint64_t seed);

// Filter, rectify, normalize, encode under the ablation's encoder.
SpikeTensor encode_stream(const SignalBuffer& raw, const CalibrationProfile& profile,
                          const PipelineConfig& cfg, Ablation a = Ablation::none,
                          std::uint64_t seed = 0);

Vector segment_features(const SpikeTensor& segment, const PipelineConfig& cfg, Ablation a);

Dataset features_dataset(const SegmentDataset& segments, const CalibrationProfile& profile,
                         const PipelineConfig& cfg, Ablation a, std::uint64_t seed);

struct TrainOutcome {
    CalibrationProfile profile;
    SnnModel model;
    FitReport fit;
};

// Synthetic dataset, synthetic calibration, model init and fit; every random
// choice derives from the one seed.
TrainOutcome train_pipeline(const PipelineConfig& cfg, std::uint64_t seed,
                            Ablation a = Ablation::none);

struct StreamInference {
    std::vector<ActionSegment> segments;
    std::vector<int> predictions;
    EnergyReport energy;  // stream-level encode/detect plus summed SNN stages
    TadOpCounts detector_ops;
};

StreamInference infer_stream(const SignalBuffer& raw, const CalibrationProfile& profile,
                             const SnnModel& model, const PipelineConfig& cfg,
                             Ablation a = Ablation::none, std::uint64_t seed = 0);

struct DetectionBench {
    LabeledStream stream;
    DetectionReport tad;
    DetectionReport spike_threshold;
    DetectionReport amp_threshold;
    std::size_t tad_segments = 0;
    std::size_t spike_segments = 0;
    std::size_t amp_segments = 0;
    std::size_t tad_distractor_emissions = 0;
};

DetectionBench run_detection_bench(const PipelineConfig& cfg, std::uint64_t seed);

struct ClassificationBench {
    FitReport fit;
    double test_accuracy = 0.0;
    EnergyReport summed_energy;  // over all test inferences, encode included
    std::uint64_t inferences = 0;
};

ClassificationBench run_classification_bench(const PipelineConfig& cfg, std::uint64_t seed,
                                             Ablation a = Ablation::none);

}  // namespace emgsnn
