#include "emgsnn/detect.hpp"

#include <algorithm>
#include <cmath>

#include "emgsnn/errors.hpp"
#include "emgsnn/signal.hpp"

namespace emgsnn {

namespace {

void validate(const TadConfig& cfg) {
    if (cfg.t_s < 1.0) throw ConfigError("detect: t_s must be at least 1");
    if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw ConfigError("detect: beta must be in (0,1)");
    if (!(cfg.u_th > 0.0 && cfg.u_th < cfg.u_max))
        throw ConfigError("detect: need 0 < u_th < u_max");
    if (!(cfg.l_min > 0 && cfg.l_min < cfg.l_max))
        throw ConfigError("detect: need 0 < l_min < l_max");
    if (cfg.pre_roll < 0) throw ConfigError("detect: pre_roll must be non-negative");
}

ActionSegment take_segment(TadState& state) {
    ActionSegment seg;
    seg.onset_sample = state.onset;
    seg.length = state.counter;
    seg.spikes = SpikeTensor::zeros(state.channels, state.trains, state.counter);
    for (Eigen::Index i = 0; i < state.counter; ++i)
        seg.spikes.bits.col(i) = state.buffer[static_cast<std::size_t>(i)];
    return seg;
}

}  // namespace

TadState::TadState(Eigen::Index channels_n, Eigen::Index trains_n) {
    if (channels_n <= 0 || trains_n <= 0)
        throw ConfigError("detect: state layout must have positive channels and trains");
    channels = channels_n;
    trains = trains_n;
}

TadStepResult tad_step(TadState& state, const Eigen::Ref<const BitVector>& column,
                       const TadConfig& cfg) {
    validate(cfg);
    if (state.channels <= 0 || state.trains <= 0)
        throw StateError("detect: TadState layout not initialized");
    if (column.size() != state.channels * state.trains)
        throw StateError("detect: column size does not match the state layout");

    std::uint64_t total = 0;
    for (Eigen::Index i = 0; i < column.size(); ++i) total += column(i);
    const double x = static_cast<double>(total);

    const bool active = cfg.strict_activation ? x > cfg.t_s : x >= cfg.t_s;
    if (active) {
        ++state.ops.active_steps;
        if (state.pending_decay_steps > 0) {
            if (state.u_mem != 0.0) {
                for (std::uint64_t k = 0; k < state.pending_decay_steps; ++k) {
                    state.u_mem = cfg.beta * state.u_mem;
                    ++state.ops.multiplies;
                }
            }
            state.pending_decay_steps = 0;
        }
        double drive;
        if (cfg.channel_weights) {
            if (cfg.channel_weights->size() != state.channels)
                throw ConfigError("detect: channel_weights size does not match channels");
            drive = 0.0;
            for (Eigen::Index c = 0; c < state.channels; ++c) {
                std::uint64_t xc = 0;
                for (Eigen::Index n = 0; n < state.trains; ++n)
                    xc += column(c * state.trains + n);
                const double xcd = static_cast<double>(xc);
                drive += (*cfg.channel_weights)(c) * xcd * xcd;
                state.ops.multiplies += 2;
                ++state.ops.additions;
            }
        } else {
            drive = cfg.omega * x * x;
            state.ops.multiplies += 2;
        }
        state.u_mem = std::min(cfg.beta * state.u_mem + drive, cfg.u_max);
        ++state.ops.multiplies;
        ++state.ops.additions;
    } else if (state.in_action) {
        // Decay immediately so the downward crossing lands on the exact step.
        state.u_mem = cfg.beta * state.u_mem;
        ++state.ops.multiplies;
    } else {
        // Below threshold and no drive: decay cannot change the verdict, defer it.
        ++state.pending_decay_steps;
        ++state.ops.additions;
    }

    TadStepResult result;
    const bool now = state.u_mem > cfg.u_th;
    if (now) {
        if (!state.in_action) {
            state.onset = state.t - static_cast<Eigen::Index>(state.pre_roll_ring.size());
            state.buffer.assign(state.pre_roll_ring.begin(), state.pre_roll_ring.end());
            state.counter = static_cast<Eigen::Index>(state.buffer.size());
            state.pre_roll_ring.clear();
            state.in_action = true;
        }
        state.buffer.emplace_back(column);
        ++state.counter;
    } else {
        if (state.in_action) {
            if (state.counter >= cfg.l_min && state.counter <= cfg.l_max)
                result.segment = take_segment(state);
            else
                result.discarded = true;
            state.buffer.clear();
            state.counter = 0;
            state.in_action = false;
        }
        if (cfg.pre_roll > 0) {
            state.pre_roll_ring.emplace_back(column);
            while (static_cast<Eigen::Index>(state.pre_roll_ring.size()) > cfg.pre_roll)
                state.pre_roll_ring.pop_front();
        }
    }
    ++state.t;
    return result;
}

TadStepResult tad_flush(TadState& state, const TadConfig& cfg) {
    validate(cfg);
    TadStepResult result;
    if (!state.in_action) return result;
    if (state.counter >= cfg.l_min && state.counter <= cfg.l_max)
        result.segment = take_segment(state);
    else
        result.discarded = true;
    state.buffer.clear();
    state.counter = 0;
    state.in_action = false;
    return result;
}

std::vector<ActionSegment> tad_detect_stream(const SpikeTensor& spikes, const TadConfig& cfg) {
    TadState state(spikes.channels, spikes.trains);
    std::vector<ActionSegment> segments = tad_detect_chunk(state, spikes, cfg);
    TadStepResult tail = tad_flush(state, cfg);
    if (tail.segment) segments.push_back(std::move(*tail.segment));
    return segments;
}

std::vector<ActionSegment> tad_detect_chunk(TadState& state, const SpikeTensor& chunk,
                                            const TadConfig& cfg) {
    if (chunk.channels != state.channels || chunk.trains != state.trains)
        throw StateError("detect: chunk layout does not match the carried state");
    std::vector<ActionSegment> segments;
    for (Eigen::Index t = 0; t < chunk.steps(); ++t) {
        TadStepResult r = tad_step(state, chunk.bits.col(t), cfg);
        if (r.segment) segments.push_back(std::move(*r.segment));
    }
    return segments;
}

std::vector<Interval> amp_threshold_detect(const SignalBuffer& rectified, double threshold,
                                           double window_ms, double overlap) {
    if (!(window_ms > 0.0)) throw ConfigError("detect: window_ms must be positive");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("detect: overlap must be in [0,1)");
    const auto window =
        static_cast<Eigen::Index>(std::lround(window_ms * rectified.rate_hz / 1000.0));
    if (window < 2) throw ConfigError("detect: window shorter than 2 samples");
    auto hop = static_cast<Eigen::Index>(std::lround(window * (1.0 - overlap)));
    if (hop < 1) hop = 1;

    std::vector<Interval> merged;
    for (Eigen::Index begin = 0; begin + window <= rectified.size(); begin += hop) {
        bool fired = false;
        for (Eigen::Index c = 0; c < rectified.channels() && !fired; ++c) {
            Vector w = rectified.samples.block(c, begin, 1, window).transpose();
            const double peak = w.maxCoeff();
            fired = peak - median(std::move(w)) > threshold;
        }
        if (!fired) continue;
        const Interval win{begin, begin + window};
        if (!merged.empty() && win.begin <= merged.back().end)
            merged.back().end = std::max(merged.back().end, win.end);
        else
            merged.push_back(win);
    }
    return merged;
}

std::vector<Interval> spike_threshold_detect(const SpikeTensor& spikes, double t_s,
                                             double count_threshold, double window_ms,
                                             double rate_hz) {
    if (!(window_ms > 0.0 && rate_hz > 0.0))
        throw ConfigError("detect: window_ms and rate_hz must be positive");
    const auto window = static_cast<Eigen::Index>(std::lround(window_ms * rate_hz / 1000.0));
    if (window < 1) throw ConfigError("detect: window shorter than 1 sample");

    Vector counts(spikes.steps());
    for (Eigen::Index t = 0; t < spikes.steps(); ++t)
        counts(t) = spikes.bits.col(t).cast<double>().sum();

    std::vector<Interval> out;
    Eigen::Index t = 0;
    while (t < spikes.steps()) {
        if (counts(t) > t_s) {
            const Eigen::Index end = std::min(t + window, spikes.steps());
            if (counts.segment(t, end - t).sum() > count_threshold) {
                out.push_back({t, end});
                t = end;
                continue;
            }
        }
        ++t;
    }
    return out;
}

DetectionReport evaluate_detection(const std::vector<Interval>& detected,
                                   const std::vector<LabeledInterval>& truth,
                                   double min_overlap) {
    if (!(min_overlap > 0.0 && min_overlap <= 1.0))
        throw ConfigError("detect: min_overlap must be in (0,1]");
    DetectionReport report;
    std::vector<bool> truth_used(truth.size(), false);
    for (const Interval& d : detected) {
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth_used[i]) continue;
            const LabeledInterval& g = truth[i];
            const Eigen::Index lo = std::max(d.begin, g.begin);
            const Eigen::Index hi = std::min(d.end, g.end);
            const double overlap = static_cast<double>(std::max<Eigen::Index>(hi - lo, 0));
            if (overlap >= min_overlap * static_cast<double>(g.length())) {
                truth_used[i] = true;
                ++report.matches;
                report.onset_offsets.push_back(d.begin - g.begin);
                break;
            }
        }
    }
    report.recall = truth.empty()
                        ? 1.0
                        : static_cast<double>(report.matches) / static_cast<double>(truth.size());
    if (detected.empty()) {
        report.precision = 1.0;
        report.zero_detections = true;
    } else {
        report.precision =
            static_cast<double>(report.matches) / static_cast<double>(detected.size());
    }
    return report;
}

std::vector<Interval> segment_intervals(const std::vector<ActionSegment>& segments) {
    std::vector<Interval> out;
    out.reserve(segments.size());
    for (const ActionSegment& s : segments) out.push_back(s.interval());
    return out;
}

}  // namespace emgsnn
