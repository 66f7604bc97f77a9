#pragma once

#include "emgsnn/types.hpp"

namespace emgsnn {

struct EncoderConfig {
    double theta_min = 0.05;
    double delta = 0.025;
    int n_trains = 10;
    double r_max = 0.3;
    bool per_channel_rate = false;  // when true, every channel's rate must meet r_max
};

// Single-threshold delta modulation: emit 1 where |x(t) - x(t-1)| >= theta.
// The t=0 column is always 0: the difference has no predecessor there.
BitMatrix delta_encode(const SignalBuffer& normalized, double theta);

// Fraction of ones, pooled over the whole matrix.
double spike_rate(const BitMatrix& spikes);

struct ThetaCalibration {
    double theta = 0.0;
    bool degenerate = false;  // theta climbed past 1.0: signal can't meet r_max
};

// Walk theta upward from cfg.theta_min in steps of cfg.delta until the spike
// rate of delta_encode(x, theta) drops to cfg.r_max or below. Pooled rate by
// default; per-channel when cfg.per_channel_rate is set.
ThetaCalibration calibrate_theta(const SignalBuffer& normalized, const EncoderConfig& cfg);

// Multi-threshold encoding on a calibrated profile: train i uses
// theta = profile.theta_min + i * cfg.delta, i in [0, n_trains).
SpikeTensor multi_delta_encode(const SignalBuffer& normalized, const CalibrationProfile& profile,
                               const EncoderConfig& cfg);

// Rate-coding ablation: spikes drawn Bernoulli(x(t)) per train, deterministic
// in the seed. Requires values in [0, 1].
SpikeTensor rate_encode(const SignalBuffer& normalized, int n_trains, std::uint64_t seed);

}  // namespace emgsnn
