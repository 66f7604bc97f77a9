#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>

namespace emgsnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Binary spike storage. Entries are 0 or 1; kept in a dense byte matrix so a
// time step is one contiguous column.
using BitMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;
using BitVector = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>;

// Multichannel sampled sEMG. One row per channel, one column per sample;
// amplitudes are in arbitrary units. All channels share the same length.
struct SignalBuffer {
    double rate_hz = 2000.0;
    Matrix samples;  // channels x samples

    Eigen::Index channels() const { return samples.rows(); }
    Eigen::Index size() const { return samples.cols(); }
};

struct FilterConfig {
    double low_hz = 20.0;
    double high_hz = 500.0;
    // Total band-pass order; order/2 cascaded biquad sections. Must be even.
    int order = 4;
};

// Per-subject calibration statistics. theta_min stays unset until the
// encoder calibration has run.
struct CalibrationProfile {
    Vector median_per_channel;
    double alpha = 4.0;
    std::optional<double> theta_min;
};

// Spike trains indexed (channel, train, step). Row c*trains + n holds train n
// of channel c; columns are time steps, so bits.col(t) is the full bit-plane
// at step t.
struct SpikeTensor {
    Eigen::Index channels = 0;
    Eigen::Index trains = 0;
    BitMatrix bits;

    Eigen::Index steps() const { return bits.cols(); }

    std::uint8_t at(Eigen::Index c, Eigen::Index n, Eigen::Index t) const {
        return bits(c * trains + n, t);
    }

    static SpikeTensor zeros(Eigen::Index channels, Eigen::Index trains, Eigen::Index steps) {
        SpikeTensor s;
        s.channels = channels;
        s.trains = trains;
        s.bits = BitMatrix::Zero(channels * trains, steps);
        return s;
    }
};

// Half-open sample interval [begin, end).
struct Interval {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;

    Eigen::Index length() const { return end - begin; }
};

struct LabeledInterval {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    int class_id = 0;

    Eigen::Index length() const { return end - begin; }
};

}  // namespace emgsnn
