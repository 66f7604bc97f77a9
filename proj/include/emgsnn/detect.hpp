#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "emgsnn/types.hpp"

namespace emgsnn {

struct TadConfig {
    double t_s = 5.0;    // activation spike-count threshold
    double omega = 1.0;  // input weight
    double beta = 0.95;  // decay rate
    double u_max = 5.0;  // membrane ceiling
    double u_th = 1.0;   // action threshold
    Eigen::Index l_min = 200;
    Eigen::Index l_max = 2000;
    bool strict_activation = false;  // activate on X > t_s instead of X >= t_s
    // When set (size = channels), the drive is sum_c w_c * X_c^2 over per-channel
    // counts X_c instead of omega * X^2 over the pooled count.
    std::optional<Vector> channel_weights;
    Eigen::Index pre_roll = 0;  // columns kept from just before the upward crossing
};

// Arithmetic actually executed on the membrane path. `multiplies` covers every
// floating-point multiply (decay and drive); `additions` covers the membrane
// sum plus the lazy-decay bookkeeping increment on skipped steps.
struct TadOpCounts {
    std::uint64_t multiplies = 0;
    std::uint64_t additions = 0;
    std::uint64_t active_steps = 0;  // steps whose spike count reached t_s
};

struct ActionSegment {
    Eigen::Index onset_sample = 0;
    SpikeTensor spikes;  // channels x trains x length slice
    Eigen::Index length = 0;
    Interval interval() const { return {onset_sample, onset_sample + length}; }
};

struct TadState {
    TadState() = default;
    TadState(Eigen::Index channels, Eigen::Index trains);

    Eigen::Index channels = 0;
    Eigen::Index trains = 0;
    // Stored membrane value. Stale by pending_decay_steps factors of beta while
    // decay is deferred; catch-up happens before the next drive so emissions
    // match the per-step reference bit for bit.
    double u_mem = 0.0;
    std::uint64_t pending_decay_steps = 0;
    bool in_action = false;
    Eigen::Index counter = 0;  // always equals buffer.size()
    Eigen::Index onset = 0;
    std::vector<BitVector> buffer;
    std::deque<BitVector> pre_roll_ring;
    Eigen::Index t = 0;  // index of the next step to consume
    TadOpCounts ops;
};

struct TadStepResult {
    std::optional<ActionSegment> segment;
    bool discarded = false;  // action ended outside [l_min, l_max]
};

// One detector step. `column` is the flattened channels*trains bit-plane at
// time t (layout matches SpikeTensor rows).
TadStepResult tad_step(TadState& state, const Eigen::Ref<const BitVector>& column,
                       const TadConfig& cfg);

// End of stream: resolve a still-open action through the same length test.
TadStepResult tad_flush(TadState& state, const TadConfig& cfg);

// Fold tad_step over a whole tensor: fresh state, flush at the end.
std::vector<ActionSegment> tad_detect_stream(const SpikeTensor& spikes, const TadConfig& cfg);

// Chunked variant: carries state across calls and never flushes, so feeding a
// stream in arbitrary split points matches the one-shot result.
std::vector<ActionSegment> tad_detect_chunk(TadState& state, const SpikeTensor& chunk,
                                            const TadConfig& cfg);

// Baseline: sliding window on the rectified signal, detection when any channel
// has max - median > threshold over the window; adjacent windows merge.
std::vector<Interval> amp_threshold_detect(const SignalBuffer& rectified, double threshold,
                                           double window_ms = 300.0, double overlap = 0.5);

// Baseline: onset at the first t with X(t) > t_s; the following window is a
// detection iff its total spike count exceeds count_threshold. On success the
// scan resumes past the window, otherwise at t + 1.
std::vector<Interval> spike_threshold_detect(const SpikeTensor& spikes, double t_s,
                                             double count_threshold, double window_ms = 300.0,
                                             double rate_hz = 2000.0);

struct DetectionReport {
    double recall = 0.0;
    double precision = 0.0;
    std::size_t matches = 0;
    bool zero_detections = false;  // precision is the vacuous 1.0
    std::vector<Eigen::Index> onset_offsets;  // detected.begin - truth.begin per match
    TadOpCounts op_counts;  // filled by the caller where applicable
};

// Greedy one-to-one matching in time order; a detection matches a truth
// interval iff their overlap >= min_overlap * truth length.
DetectionReport evaluate_detection(const std::vector<Interval>& detected,
                                   const std::vector<LabeledInterval>& truth,
                                   double min_overlap = 0.5);

std::vector<Interval> segment_intervals(const std::vector<ActionSegment>& segments);

}  // namespace emgsnn
