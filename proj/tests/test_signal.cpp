#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "emgsnn/errors.hpp"
#include "emgsnn/rng.hpp"
#include "emgsnn/signal.hpp"

using namespace emgsnn;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent magnitude oracle: the bilinear transform preserves analog
// magnitudes under the prewarped frequency map, so the digital bandpass must
// satisfy |H(f)|^2 = 1 / (1 + Omega^(2n)) with Omega the normalized analog
// bandpass frequency and n the prototype order.
double butterworth_magnitude(const FilterConfig& cfg, double rate_hz, double freq_hz) {
    const int n = cfg.order / 2;
    const double fs2 = 2.0 * rate_hz;
    const double wl = fs2 * std::tan(kPi * cfg.low_hz / rate_hz);
    const double wh = fs2 * std::tan(kPi * cfg.high_hz / rate_hz);
    const double w = fs2 * std::tan(kPi * freq_hz / rate_hz);
    if (w == 0.0) return 0.0;
    const double omega = (w * w - wl * wh) / (w * (wh - wl));
    return 1.0 / std::sqrt(1.0 + std::pow(omega, 2 * n));
}

SignalBuffer sine_wave(double freq_hz, double rate_hz, Eigen::Index samples) {
    SignalBuffer s;
    s.rate_hz = rate_hz;
    s.samples = Matrix(1, samples);
    for (Eigen::Index t = 0; t < samples; ++t)
        s.samples(0, t) = std::sin(2.0 * kPi * freq_hz * static_cast<double>(t) / rate_hz);
    return s;
}

// Steady-state amplitude via quadrature projection over whole periods.
double steady_amplitude(const SignalBuffer& y, double freq_hz, Eigen::Index skip) {
    const double w = 2.0 * kPi * freq_hz / y.rate_hz;
    const auto period = static_cast<Eigen::Index>(std::lround(y.rate_hz / freq_hz));
    const Eigen::Index len = ((y.size() - skip) / period) * period;
    double c = 0.0, s = 0.0;
    for (Eigen::Index t = skip; t < skip + len; ++t) {
        c += y.samples(0, t) * std::cos(w * static_cast<double>(t));
        s += y.samples(0, t) * std::sin(w * static_cast<double>(t));
    }
    const double half = static_cast<double>(len) / 2.0;
    return std::sqrt(c * c + s * s) / half;
}

}  // namespace

TEST_CASE("design_bandpass matches the analog Butterworth magnitude") {
    const FilterConfig cfg;  // 20-500 Hz, order 4
    const double rate = 2000.0;
    auto sections = design_bandpass(cfg, rate);
    CHECK(sections.size() == 2);

    for (double f : {1.0, 5.0, 20.0, 50.0, 100.0, 250.0, 500.0, 700.0, 900.0}) {
        const double got = std::abs(sos_response(sections, f, rate));
        const double want = butterworth_magnitude(cfg, rate, f);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("design_bandpass honors other bands and orders") {
    for (const FilterConfig cfg : {FilterConfig{20.0, 150.0, 4}, FilterConfig{10.0, 450.0, 6},
                                   FilterConfig{50.0, 300.0, 2}}) {
        const double rate = 2000.0;
        auto sections = design_bandpass(cfg, rate);
        CHECK(sections.size() == static_cast<std::size_t>(cfg.order / 2));
        for (double f : {2.0, 30.0, 80.0, 200.0, 600.0}) {
            const double got = std::abs(sos_response(sections, f, rate));
            const double want = butterworth_magnitude(cfg, rate, f);
            CHECK(got == doctest::Approx(want).epsilon(1e-9));
        }
    }
}

TEST_CASE("band edges sit at half power") {
    const FilterConfig cfg;
    auto sections = design_bandpass(cfg, 2000.0);
    CHECK(std::abs(sos_response(sections, cfg.low_hz, 2000.0)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
    CHECK(std::abs(sos_response(sections, cfg.high_hz, 2000.0)) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("invalid filter configs are rejected") {
    CHECK_THROWS_AS(design_bandpass({500.0, 20.0, 4}, 2000.0), ConfigError);
    CHECK_THROWS_AS(design_bandpass({20.0, 1000.0, 4}, 2000.0), ConfigError);
    CHECK_THROWS_AS(design_bandpass({0.0, 500.0, 4}, 2000.0), ConfigError);
    CHECK_THROWS_AS(design_bandpass({20.0, 500.0, 3}, 2000.0), ConfigError);
    CHECK_THROWS_AS(design_bandpass({20.0, 500.0, 0}, 2000.0), ConfigError);
    CHECK_THROWS_AS(design_bandpass({20.0, 500.0, 4}, 0.0), ConfigError);
}

TEST_CASE("DC is rejected by at least 40 dB") {
    auto sections = design_bandpass({}, 2000.0);
    CHECK(std::abs(sos_response(sections, 0.0, 2000.0)) < 0.01);

    SignalBuffer constant;
    constant.rate_hz = 2000.0;
    constant.samples = Matrix::Constant(1, 4000, 5.0);
    SignalBuffer y = bandpass_filter(constant, {});
    CHECK(std::abs(y.samples(0, 3999)) < 0.05);
}

TEST_CASE("sinusoid steady-state amplitudes follow the transfer function") {
    const FilterConfig cfg;
    const double rate = 2000.0;

    SignalBuffer in100 = sine_wave(100.0, rate, 8000);
    const double a100 = steady_amplitude(bandpass_filter(in100, cfg), 100.0, 2000);
    CHECK(a100 > std::pow(10.0, -1.0 / 20.0));  // within 1 dB of unity
    CHECK(a100 < std::pow(10.0, 1.0 / 20.0));

    SignalBuffer in1 = sine_wave(1.0, rate, 20000);
    const double a1 = steady_amplitude(bandpass_filter(in1, cfg), 1.0, 8000);
    CHECK(a1 <= 0.1);
}

TEST_CASE("streaming chunks equal the whole-buffer filter exactly") {
    CounterRng rng(CounterRng::derive(11, 0));
    SignalBuffer x;
    x.rate_hz = 2000.0;
    x.samples = Matrix(3, 1000);
    for (Eigen::Index c = 0; c < 3; ++c)
        for (Eigen::Index t = 0; t < 1000; ++t) x.samples(c, t) = rng.normal();

    SignalBuffer whole = bandpass_filter(x, {});

    BandpassFilter f({}, 2000.0, 3);
    Matrix pieced(3, 1000);
    Eigen::Index done = 0;
    for (Eigen::Index len : {1, 7, 250, 742}) {
        SignalBuffer chunk;
        chunk.rate_hz = 2000.0;
        chunk.samples = x.samples.middleCols(done, len);
        pieced.middleCols(done, len) = f.process(chunk).samples;
        done += len;
    }
    REQUIRE(done == 1000);
    CHECK((pieced - whole.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter reset restores the initial state") {
    SignalBuffer x = sine_wave(100.0, 2000.0, 64);
    BandpassFilter f({}, 2000.0, 1);
    SignalBuffer first = f.process(x);
    f.reset();
    SignalBuffer second = f.process(x);
    CHECK((first.samples - second.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter is linear") {
    CounterRng rng(CounterRng::derive(12, 0));
    SignalBuffer x = sine_wave(60.0, 2000.0, 512);
    SignalBuffer y;
    y.rate_hz = 2000.0;
    y.samples = Matrix(1, 512);
    for (Eigen::Index t = 0; t < 512; ++t) y.samples(0, t) = rng.normal();

    const double a = 2.5, b = -0.75;
    SignalBuffer mix;
    mix.rate_hz = 2000.0;
    mix.samples = a * x.samples + b * y.samples;

    Matrix lhs = bandpass_filter(mix, {}).samples;
    Matrix rhs = a * bandpass_filter(x, {}).samples + b * bandpass_filter(y, {}).samples;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("filter rejects mismatched channel counts and empty input") {
    BandpassFilter f({}, 2000.0, 2);
    SignalBuffer x;
    x.rate_hz = 2000.0;
    x.samples = Matrix::Zero(3, 10);
    CHECK_THROWS_AS(f.process(x), ConfigError);

    SignalBuffer empty;
    empty.rate_hz = 2000.0;
    empty.samples = Matrix(0, 0);
    CHECK_THROWS_AS(bandpass_filter(empty, {}), ConfigError);
}

TEST_CASE("rectify") {
    SignalBuffer x;
    x.rate_hz = 2000.0;
    x.samples = Matrix(1, 3);
    x.samples << -1.0, 0.0, 2.0;
    SignalBuffer y = rectify(x);
    CHECK(y.samples(0, 0) == 1.0);
    CHECK(y.samples(0, 1) == 0.0);
    CHECK(y.samples(0, 2) == 2.0);
    CHECK((rectify(y).samples - y.samples).cwiseAbs().maxCoeff() == 0.0);

    SignalBuffer z;
    z.rate_hz = 2000.0;
    z.samples = Matrix::Zero(2, 5);
    CHECK(rectify(z).samples.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("median") {
    Vector odd(3);
    odd << 1.0, 2.0, 100.0;
    CHECK(median(odd) == 2.0);

    Vector even(2);
    even << 1.0, 3.0;
    CHECK(median(even) == 2.0);

    Vector same = Vector::Constant(7, 4.25);
    CHECK(median(same) == 4.25);

    Vector one(1);
    one << -9.0;
    CHECK(median(one) == -9.0);

    Vector shuffled(5);
    shuffled << 9.0, 1.0, 5.0, 3.0, 7.0;
    Vector sorted(5);
    sorted << 1.0, 3.0, 5.0, 7.0, 9.0;
    CHECK(median(shuffled) == median(sorted));

    CHECK_THROWS_AS(median(Vector(0)), ConfigError);
}

TEST_CASE("compute_calibration takes per-channel medians") {
    SignalBuffer neutral;
    neutral.rate_hz = 2000.0;
    neutral.samples = Matrix(2, 3);
    neutral.samples << 1.0, 2.0, 100.0, 5.0, 5.0, 5.0;
    CalibrationProfile p = compute_calibration(neutral, 4.0);
    CHECK(p.alpha == 4.0);
    CHECK(p.median_per_channel(0) == 2.0);
    CHECK(p.median_per_channel(1) == 5.0);
    CHECK_FALSE(p.theta_min.has_value());

    SignalBuffer empty;
    empty.rate_hz = 2000.0;
    empty.samples = Matrix(2, 0);
    CHECK_THROWS_AS(compute_calibration(empty, 4.0), ConfigError);
    CHECK_THROWS_AS(compute_calibration(neutral, 0.0), ConfigError);
}

TEST_CASE("adaptive_normalize implements the clamped median formula") {
    CalibrationProfile p;
    p.alpha = 4.0;
    p.median_per_channel = Vector::Constant(1, 2.0);

    SignalBuffer x;
    x.rate_hz = 2000.0;
    x.samples = Matrix(1, 4);
    x.samples << 2.0, 2.0 * 5.0, 1.0, 6.0;  // M, M(1+alpha), M/2, M(1+alpha/2)
    SignalBuffer y = adaptive_normalize(x, p);
    CHECK(y.samples(0, 0) == 0.0);
    CHECK(y.samples(0, 1) == 1.0);
    CHECK(y.samples(0, 2) == 0.0);
    CHECK(y.samples(0, 3) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("adaptive_normalize stays in [0,1] and is monotone") {
    CounterRng rng(CounterRng::derive(13, 0));
    CalibrationProfile p;
    p.alpha = 4.0;
    p.median_per_channel = Vector(2);
    p.median_per_channel << 0.5, 3.0;

    SignalBuffer x;
    x.rate_hz = 2000.0;
    x.samples = Matrix(2, 500);
    for (Eigen::Index c = 0; c < 2; ++c)
        for (Eigen::Index t = 0; t < 500; ++t) x.samples(c, t) = 10.0 * rng.uniform();
    SignalBuffer y = adaptive_normalize(x, p);
    CHECK(y.samples.minCoeff() >= 0.0);
    CHECK(y.samples.maxCoeff() <= 1.0);

    for (Eigen::Index t = 1; t < 500; ++t) {
        const Eigen::Index c = t % 2;
        const bool in_up = x.samples(c, t) >= x.samples(c, t - 1);
        const bool out_up = y.samples(c, t) >= y.samples(c, t - 1);
        if (in_up) CHECK(out_up);
    }
}

TEST_CASE("zero median errors unless the floor is enabled") {
    CalibrationProfile p;
    p.alpha = 4.0;
    p.median_per_channel = Vector::Zero(1);

    SignalBuffer x;
    x.rate_hz = 2000.0;
    x.samples = Matrix::Constant(1, 2, 1e-6);

    CHECK_THROWS_AS(adaptive_normalize(x, p), ConfigError);

    MedianFloor floor;
    floor.enabled = true;
    SignalBuffer y = adaptive_normalize(x, p, floor);
    // with m = 1e-6 the samples equal the floor median exactly
    CHECK(y.samples(0, 0) == 0.0);

    CalibrationProfile wrong;
    wrong.alpha = 4.0;
    wrong.median_per_channel = Vector::Ones(3);
    CHECK_THROWS_AS(adaptive_normalize(x, wrong), ConfigError);
}
