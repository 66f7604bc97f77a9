#pragma once

#include <complex>
#include <vector>

#include "emgsnn/types.hpp"

namespace emgsnn {

// One second-order IIR section, normalized so a0 = 1.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;
};

// Butterworth band-pass of cfg.order total poles as cascaded second-order
// sections, designed by bilinear transform with frequency prewarping.
std::vector<Biquad> design_bandpass(const FilterConfig& cfg, double rate_hz);

// Frequency response of a section cascade at freq_hz.
std::complex<double> sos_response(const std::vector<Biquad>& sections, double freq_hz,
                                  double rate_hz);

// Causal streaming band-pass filter. Carries per-channel state across
// process() calls; one instance per stream, movable but not shared.
class BandpassFilter {
public:
    BandpassFilter(const FilterConfig& cfg, double rate_hz, Eigen::Index channels);

    // Filters a chunk in place order, continuing from the carried state.
    SignalBuffer process(const SignalBuffer& chunk);

    void reset();

    const std::vector<Biquad>& sections() const { return sections_; }

private:
    std::vector<Biquad> sections_;
    double rate_hz_;
    Eigen::Index channels_;
    Matrix z1_, z2_;  // channels x sections delay registers (DF2 transposed)
};

// Whole-buffer convenience: filters raw with a fresh zero-state filter.
SignalBuffer bandpass_filter(const SignalBuffer& raw, const FilterConfig& cfg);

// Elementwise absolute value.
SignalBuffer rectify(const SignalBuffer& x);

// Exact median; even counts average the two central order statistics.
double median(Vector values);

// Per-channel neutral-state medians. theta_min is left unset; the encoder
// fills it in later.
CalibrationProfile compute_calibration(const SignalBuffer& neutral_rectified, double alpha);

// Substitute for a zero channel median instead of raising an error. Off by
// default: a silent floor would mask a dead electrode.
struct MedianFloor {
    bool enabled = false;
    double value = 1e-6;
};

// out = min(1, max(0, (x - M) / (alpha * M))) per channel.
SignalBuffer adaptive_normalize(const SignalBuffer& rect, const CalibrationProfile& profile,
                                const MedianFloor& floor = {});

}  // namespace emgsnn
