#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "emgsnn/types.hpp"

namespace emgsnn {

struct EnvelopeBump {
    double center;     // relative position within the action, in [0,1]
    double width;      // relative half-width
    double amplitude;
};

// Per-class activation shape: channel gains (cycled when the stream has more
// channels than entries) times a sum of raised-cosine bumps. Every template
// keeps a full-span base bump so the envelope has no interior zeros.
struct ClassTemplate {
    std::vector<double> channel_gains;
    std::vector<EnvelopeBump> bumps;
};

// Six documented classes; the first `classes` entries are used.
std::vector<ClassTemplate> default_template_bank();

struct RangeMs {
    double lo = 0.0;
    double hi = 0.0;
};

struct SynthConfig {
    Eigen::Index channels = 4;
    double rate_hz = 2000.0;
    int classes = 4;
    int actions_per_class = 25;
    RangeMs action_duration_ms{150.0, 600.0};
    RangeMs neutral_gap_ms{200.0, 500.0};
    double snr_db = 10.0;  // +inf means zero baseline noise
    // 0 grows the stream to fit the schedule; > 0 pins the length and spreads
    // the slack across the gaps (error when the schedule does not fit).
    double duration_s = 0.0;
    int distractor_count = 0;  // steady-state contractions, excluded from labels
    RangeMs distractor_duration_ms{1050.0, 1200.0};
    double distractor_level = 1.0;  // plateau amplitude relative to action RMS
    std::vector<ClassTemplate> templates;  // empty = default bank
    std::uint64_t seed = 0;
};

struct LabeledStream {
    SignalBuffer signal;
    std::vector<LabeledInterval> labels;   // sorted, non-overlapping actions
    std::vector<Interval> distractors;     // sorted, disjoint from the labels
};

// Pure function of (cfg, seed): amplitude-modulated band-limited noise with
// neutral-action-neutral morphology. Each action's envelope is normalized to
// unit RMS pooled over its channels; baseline noise RMS is 10^(-snr_db/20).
LabeledStream generate_stream(const SynthConfig& cfg, std::uint64_t seed);

struct SegmentSample {
    SignalBuffer signal;
    int label = 0;
};

struct SegmentDataset {
    std::vector<SegmentSample> items;
};

// Segments cut at the true label boundaries, stratified-split per class with
// round(actions_per_class * split) going to the train side.
std::pair<SegmentDataset, SegmentDataset> generate_dataset(const SynthConfig& cfg,
                                                           std::uint64_t seed, double split);

}  // namespace emgsnn
