#include "emgsnn/encode.hpp"

#include <cmath>

#include "emgsnn/errors.hpp"
#include "emgsnn/rng.hpp"

namespace emgsnn {

BitMatrix delta_encode(const SignalBuffer& normalized, double theta) {
    if (!(theta > 0.0)) throw ConfigError("encode: theta must be positive");
    const Eigen::Index c_n = normalized.channels();
    const Eigen::Index t_n = normalized.size();
    BitMatrix spikes = BitMatrix::Zero(c_n, t_n);
    // diff(t) has no predecessor at t = 0, so the first column stays 0.
    for (Eigen::Index c = 0; c < c_n; ++c)
        for (Eigen::Index t = 1; t < t_n; ++t) {
            const double diff = normalized.samples(c, t) - normalized.samples(c, t - 1);
            spikes(c, t) = std::abs(diff) >= theta ? 1 : 0;
        }
    return spikes;
}

double spike_rate(const BitMatrix& spikes) {
    if (spikes.size() == 0) throw ConfigError("encode: spike rate of an empty matrix");
    return spikes.cast<double>().sum() / static_cast<double>(spikes.size());
}

ThetaCalibration calibrate_theta(const SignalBuffer& normalized, const EncoderConfig& cfg) {
    if (!(cfg.theta_min > 0.0)) throw ConfigError("encode: theta_min must be positive");
    if (!(cfg.delta > 0.0)) throw ConfigError("encode: delta must be positive");
    if (!(cfg.r_max > 0.0)) throw ConfigError("encode: r_max must be positive");
    if (normalized.channels() == 0 || normalized.size() == 0)
        throw ConfigError("encode: calibration input is empty");

    auto meets_target = [&](double theta) {
        if (!cfg.per_channel_rate) return spike_rate(delta_encode(normalized, theta)) <= cfg.r_max;
        const BitMatrix spikes = delta_encode(normalized, theta);
        for (Eigen::Index c = 0; c < spikes.rows(); ++c) {
            const double rate =
                spikes.row(c).cast<double>().sum() / static_cast<double>(spikes.cols());
            if (rate > cfg.r_max) return false;
        }
        return true;
    };

    ThetaCalibration result;
    result.theta = cfg.theta_min;
    while (result.theta <= 1.0 && !meets_target(result.theta)) result.theta += cfg.delta;
    if (result.theta > 1.0) {
        // Normalized signals cannot produce |diff| > 1, so the walk cannot
        // succeed past this point; 1 + delta yields all-zero trains.
        result.theta = 1.0 + cfg.delta;
        result.degenerate = true;
    }
    return result;
}

SpikeTensor multi_delta_encode(const SignalBuffer& normalized, const CalibrationProfile& profile,
                               const EncoderConfig& cfg) {
    if (cfg.n_trains < 1) throw ConfigError("encode: n_trains must be at least 1");
    if (!(cfg.delta > 0.0)) throw ConfigError("encode: delta must be positive");
    if (!profile.theta_min)
        throw StateError("encode: profile carries no calibrated theta_min; run calibration first");
    SpikeTensor out = SpikeTensor::zeros(normalized.channels(), cfg.n_trains, normalized.size());
    for (int i = 0; i < cfg.n_trains; ++i) {
        const double theta = *profile.theta_min + i * cfg.delta;
        const BitMatrix train = delta_encode(normalized, theta);
        for (Eigen::Index c = 0; c < normalized.channels(); ++c)
            out.bits.row(c * cfg.n_trains + i) = train.row(c);
    }
    return out;
}

SpikeTensor rate_encode(const SignalBuffer& normalized, int n_trains, std::uint64_t seed) {
    if (n_trains < 1) throw ConfigError("encode: n_trains must be at least 1");
    if (normalized.size() > 0 &&
        (normalized.samples.minCoeff() < 0.0 || normalized.samples.maxCoeff() > 1.0))
        throw ConfigError("encode: rate coding takes probabilities, values must be in [0,1]");
    SpikeTensor out = SpikeTensor::zeros(normalized.channels(), n_trains, normalized.size());
    for (Eigen::Index c = 0; c < normalized.channels(); ++c) {
        for (int i = 0; i < n_trains; ++i) {
            CounterRng rng(CounterRng::derive(seed, static_cast<std::uint64_t>(c),
                                              static_cast<std::uint64_t>(i)));
            for (Eigen::Index t = 0; t < normalized.size(); ++t) {
                const double p = normalized.samples(c, t);
                out.bits(c * n_trains + i, t) = rng.uniform() < p ? 1 : 0;
            }
        }
    }
    return out;
}

}  // namespace emgsnn
