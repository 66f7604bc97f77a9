#include "emgsnn/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emgsnn/errors.hpp"

namespace emgsnn {

namespace {

void validate_filter(const FilterConfig& cfg, double rate_hz) {
    if (rate_hz <= 0.0) throw ConfigError("filter: rate_hz must be positive");
    if (cfg.order < 2 || cfg.order % 2 != 0)
        throw ConfigError("filter: order must be an even integer >= 2");
    if (!(cfg.low_hz > 0.0) || !(cfg.low_hz < cfg.high_hz))
        throw ConfigError("filter: need 0 < low_hz < high_hz");
    if (!(cfg.high_hz < rate_hz / 2.0))
        throw ConfigError("filter: high_hz must be below the Nyquist frequency");
}

}  // namespace

std::vector<Biquad> design_bandpass(const FilterConfig& cfg, double rate_hz) {
    using cd = std::complex<double>;
    constexpr double pi = std::numbers::pi;

    validate_filter(cfg, rate_hz);

    const int n = cfg.order / 2;  // analog low-pass prototype order
    const double fs2 = 2.0 * rate_hz;

    // Prewarped band edges, rad/s.
    const double wl = fs2 * std::tan(pi * cfg.low_hz / rate_hz);
    const double wh = fs2 * std::tan(pi * cfg.high_hz / rate_hz);
    const double bw = wh - wl;
    const double w0sq = wl * wh;

    // Butterworth prototype poles, then low-pass -> band-pass: each prototype
    // pole p maps to the two roots of s^2 - p*bw*s + w0^2.
    std::vector<cd> spoles;
    spoles.reserve(2 * n);
    for (int k = 0; k < n; ++k) {
        const double theta = pi * (2.0 * k + n + 1.0) / (2.0 * n);
        const cd p(std::cos(theta), std::sin(theta));
        const cd half = p * (bw / 2.0);
        const cd d = std::sqrt(half * half - w0sq);
        spoles.push_back(half + d);
        spoles.push_back(half - d);
    }

    // Bilinear transform. The n analog zeros at s=0 land on z=+1, the n at
    // infinity on z=-1, so every section gets the numerator (z-1)(z+1).
    std::vector<cd> zpoles;
    zpoles.reserve(spoles.size());
    for (const cd& s : spoles) zpoles.push_back((cd(fs2) + s) / (cd(fs2) - s));

    std::vector<cd> upper;  // one representative per conjugate pair
    std::vector<double> reals;
    for (const cd& z : zpoles) {
        if (std::abs(z.imag()) < 1e-12)
            reals.push_back(z.real());
        else if (z.imag() > 0.0)
            upper.push_back(z);
    }
    std::sort(reals.begin(), reals.end());

    std::vector<Biquad> sections;
    for (const cd& z : upper) {
        Biquad s;
        s.b0 = 1.0;
        s.b1 = 0.0;
        s.b2 = -1.0;
        s.a1 = -2.0 * z.real();
        s.a2 = std::norm(z);
        sections.push_back(s);
    }
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2) {
        Biquad s;
        s.b0 = 1.0;
        s.b1 = 0.0;
        s.b2 = -1.0;
        s.a1 = -(reals[i] + reals[i + 1]);
        s.a2 = reals[i] * reals[i + 1];
        sections.push_back(s);
    }

    // Normalize to unit gain at the (geometric) center of the passband.
    const double w0 = std::sqrt(w0sq);
    const double f_center = rate_hz / pi * std::atan(w0 / fs2);
    const double mag = std::abs(sos_response(sections, f_center, rate_hz));
    if (!(mag > 0.0)) throw ConfigError("filter: degenerate design, zero center-band gain");
    const double g = 1.0 / mag;
    sections.front().b0 *= g;
    sections.front().b1 *= g;
    sections.front().b2 *= g;
    return sections;
}

std::complex<double> sos_response(const std::vector<Biquad>& sections, double freq_hz,
                                  double rate_hz) {
    using cd = std::complex<double>;
    const double w = 2.0 * std::numbers::pi * freq_hz / rate_hz;
    const cd z1 = std::polar(1.0, -w);   // z^-1
    const cd z2 = std::polar(1.0, -2 * w);
    cd h(1.0, 0.0);
    for (const Biquad& s : sections)
        h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return h;
}

BandpassFilter::BandpassFilter(const FilterConfig& cfg, double rate_hz, Eigen::Index channels)
    : sections_(design_bandpass(cfg, rate_hz)), rate_hz_(rate_hz), channels_(channels) {
    if (channels <= 0) throw ConfigError("filter: channel count must be positive");
    reset();
}

void BandpassFilter::reset() {
    z1_ = Matrix::Zero(channels_, static_cast<Eigen::Index>(sections_.size()));
    z2_ = Matrix::Zero(channels_, static_cast<Eigen::Index>(sections_.size()));
}

SignalBuffer BandpassFilter::process(const SignalBuffer& chunk) {
    if (chunk.channels() != channels_)
        throw ConfigError("filter: channel count does not match this filter instance");
    SignalBuffer out;
    out.rate_hz = chunk.rate_hz;
    out.samples = chunk.samples;
    const auto n_sections = static_cast<Eigen::Index>(sections_.size());
    for (Eigen::Index c = 0; c < channels_; ++c) {
        for (Eigen::Index t = 0; t < out.size(); ++t) {
            double x = out.samples(c, t);
            for (Eigen::Index k = 0; k < n_sections; ++k) {
                const Biquad& s = sections_[static_cast<std::size_t>(k)];
                const double y = s.b0 * x + z1_(c, k);
                z1_(c, k) = s.b1 * x - s.a1 * y + z2_(c, k);
                z2_(c, k) = s.b2 * x - s.a2 * y;
                x = y;
            }
            out.samples(c, t) = x;
        }
    }
    return out;
}

SignalBuffer bandpass_filter(const SignalBuffer& raw, const FilterConfig& cfg) {
    if (raw.channels() == 0 || raw.size() == 0)
        throw ConfigError("filter: input buffer is empty");
    BandpassFilter f(cfg, raw.rate_hz, raw.channels());
    return f.process(raw);
}

SignalBuffer rectify(const SignalBuffer& x) {
    SignalBuffer out;
    out.rate_hz = x.rate_hz;
    out.samples = x.samples.cwiseAbs();
    return out;
}

double median(Vector values) {
    if (values.size() == 0) throw ConfigError("median of an empty sequence");
    std::sort(values.data(), values.data() + values.size());
    const Eigen::Index n = values.size();
    if (n % 2 == 1) return values(n / 2);
    return 0.5 * (values(n / 2 - 1) + values(n / 2));
}

CalibrationProfile compute_calibration(const SignalBuffer& neutral_rectified, double alpha) {
    if (!(alpha > 0.0)) throw ConfigError("calibration: alpha must be positive");
    if (neutral_rectified.channels() == 0 || neutral_rectified.size() == 0)
        throw ConfigError("calibration: neutral segment is empty");
    CalibrationProfile profile;
    profile.alpha = alpha;
    profile.median_per_channel = Vector(neutral_rectified.channels());
    for (Eigen::Index c = 0; c < neutral_rectified.channels(); ++c)
        profile.median_per_channel(c) = median(neutral_rectified.samples.row(c).transpose());
    return profile;
}

SignalBuffer adaptive_normalize(const SignalBuffer& rect, const CalibrationProfile& profile,
                                const MedianFloor& floor) {
    if (profile.median_per_channel.size() != rect.channels())
        throw ConfigError("normalize: profile channel count does not match the signal");
    SignalBuffer out;
    out.rate_hz = rect.rate_hz;
    out.samples = Matrix(rect.channels(), rect.size());
    for (Eigen::Index c = 0; c < rect.channels(); ++c) {
        double m = profile.median_per_channel(c);
        if (m <= 0.0) {
            if (!floor.enabled)
                throw ConfigError("normalize: zero neutral median on channel " +
                                  std::to_string(c) + "; recalibrate or enable the median floor");
            m = floor.value;
        }
        const double scale = 1.0 / (profile.alpha * m);
        out.samples.row(c) =
            ((rect.samples.row(c).array() - m) * scale).cwiseMax(0.0).cwiseMin(1.0);
    }
    return out;
}

}  // namespace emgsnn
