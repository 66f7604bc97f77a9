#include "emgsnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emgsnn/errors.hpp"
#include "emgsnn/rng.hpp"
#include "emgsnn/signal.hpp"

namespace emgsnn {

namespace {

double raised_cosine(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * x));
}

void validate(const SynthConfig& cfg) {
    if (cfg.channels < 1) throw ConfigError("synth: channels must be at least 1");
    if (!(cfg.rate_hz > 0.0)) throw ConfigError("synth: rate_hz must be positive");
    if (cfg.classes < 1) throw ConfigError("synth: classes must be at least 1");
    if (cfg.actions_per_class < 0) throw ConfigError("synth: actions_per_class must be >= 0");
    if (cfg.distractor_count < 0) throw ConfigError("synth: distractor_count must be >= 0");
    auto check_range = [](const RangeMs& r, const char* name) {
        if (!(r.lo > 0.0) || !(r.hi >= r.lo))
            throw ConfigError(std::string("synth: ") + name + " range needs 0 < lo <= hi");
    };
    check_range(cfg.action_duration_ms, "action_duration_ms");
    check_range(cfg.neutral_gap_ms, "neutral_gap_ms");
    if (cfg.distractor_count > 0) check_range(cfg.distractor_duration_ms, "distractor_duration_ms");
    if (std::isnan(cfg.snr_db) || (std::isinf(cfg.snr_db) && cfg.snr_db < 0.0))
        throw ConfigError("synth: snr_db must be finite or +inf");
    if (cfg.duration_s < 0.0) throw ConfigError("synth: duration_s must be >= 0");
    if (!(cfg.distractor_level > 0.0)) throw ConfigError("synth: distractor_level must be positive");
}

Eigen::Index to_samples(double ms, double rate_hz) {
    return static_cast<Eigen::Index>(std::lround(ms * rate_hz / 1000.0));
}

Eigen::Index draw_samples(CounterRng& rng, const RangeMs& range, double rate_hz) {
    const Eigen::Index lo = std::max<Eigen::Index>(to_samples(range.lo, rate_hz), 1);
    const Eigen::Index hi = std::max(to_samples(range.hi, rate_hz), lo);
    return lo + static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
}

// Action bursts carry broadband muscle content; the resting baseline is
// dominated by slower instrumentation and motion-artifact noise, so its
// sample-to-sample differences stay small relative to its amplitude.
constexpr FilterConfig kBurstBand{20.0, 500.0, 4};
constexpr FilterConfig kBaselineBand{20.0, 150.0, 4};

// Band-limited unit-RMS noise field, one independent generator per channel.
Matrix noise_field(Eigen::Index channels, Eigen::Index steps, double rate_hz, std::uint64_t seed,
                   std::uint64_t tag, const FilterConfig& band) {
    SignalBuffer white;
    white.rate_hz = rate_hz;
    white.samples = Matrix(channels, steps);
    for (Eigen::Index c = 0; c < channels; ++c) {
        CounterRng rng(CounterRng::derive(seed, tag, static_cast<std::uint64_t>(c)));
        for (Eigen::Index t = 0; t < steps; ++t) white.samples(c, t) = rng.normal();
    }
    Matrix shaped = bandpass_filter(white, band).samples;
    for (Eigen::Index c = 0; c < channels; ++c) {
        const double rms =
            std::sqrt(shaped.row(c).squaredNorm() / static_cast<double>(shaped.cols()));
        if (rms > 0.0) shaped.row(c) /= rms;
    }
    return shaped;
}

struct ScheduledEvent {
    bool distractor = false;
    int class_id = 0;
    Eigen::Index onset = 0;
    Eigen::Index length = 0;
};

std::vector<ScheduledEvent> schedule(const SynthConfig& cfg, std::uint64_t seed,
                                     Eigen::Index& total_steps) {
    CounterRng rng(CounterRng::derive(seed, 0xAu));
    std::vector<ScheduledEvent> events;
    for (int cls = 0; cls < cfg.classes; ++cls)
        for (int i = 0; i < cfg.actions_per_class; ++i)
            events.push_back({false, cls, 0, 0});
    for (int i = 0; i < cfg.distractor_count; ++i) events.push_back({true, 0, 0, 0});

    for (std::size_t i = events.size(); i > 1; --i)
        std::swap(events[i - 1], events[rng.uniform_index(i)]);

    for (ScheduledEvent& e : events)
        e.length = draw_samples(
            rng, e.distractor ? cfg.distractor_duration_ms : cfg.action_duration_ms, cfg.rate_hz);

    std::vector<Eigen::Index> gaps(events.size() + 1);
    for (Eigen::Index& g : gaps) g = draw_samples(rng, cfg.neutral_gap_ms, cfg.rate_hz);

    Eigen::Index content = 0;
    for (const ScheduledEvent& e : events) content += e.length;
    for (const Eigen::Index g : gaps) content += g;

    if (cfg.duration_s > 0.0) {
        const auto pinned = static_cast<Eigen::Index>(std::lround(cfg.duration_s * cfg.rate_hz));
        if (content > pinned)
            throw ConfigError("synth: scheduled events do not fit the pinned duration; "
                              "shorten the schedule or extend duration_s");
        for (Eigen::Index slack = pinned - content; slack > 0; --slack)
            ++gaps[rng.uniform_index(gaps.size())];
        content = pinned;
    }

    Eigen::Index cursor = 0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        cursor += gaps[i];
        events[i].onset = cursor;
        cursor += events[i].length;
    }
    total_steps = content;
    return events;
}

}  // namespace

std::vector<ClassTemplate> default_template_bank() {
    const EnvelopeBump base{0.5, 0.5, 1.0};
    return {
        {{1.0, 0.2, 0.2, 0.2}, {base}},
        {{0.2, 1.0, 0.2, 0.2}, {base, {0.3, 0.15, 0.6}}},
        {{0.2, 0.2, 1.0, 0.2}, {base, {0.7, 0.15, 0.6}}},
        {{0.2, 0.2, 0.2, 1.0}, {base, {0.3, 0.12, 0.5}, {0.7, 0.12, 0.5}}},
        {{0.9, 0.9, 0.15, 0.15}, {base}},
        {{0.15, 0.15, 0.9, 0.9}, {base}},
    };
}

LabeledStream generate_stream(const SynthConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    const std::vector<ClassTemplate> fallback =
        cfg.templates.empty() ? default_template_bank() : std::vector<ClassTemplate>{};
    const std::vector<ClassTemplate>& templates = cfg.templates.empty() ? fallback : cfg.templates;
    if (static_cast<int>(templates.size()) < cfg.classes)
        throw ConfigError("synth: template bank smaller than the class count");

    Eigen::Index steps = 0;
    std::vector<ScheduledEvent> events = schedule(cfg, seed, steps);

    LabeledStream out;
    out.signal.rate_hz = cfg.rate_hz;
    if (steps == 0) {
        out.signal.samples = Matrix(cfg.channels, 0);
        return out;
    }

    Matrix envelope = Matrix::Zero(cfg.channels, steps);
    const auto ramp = std::max<Eigen::Index>(to_samples(100.0, cfg.rate_hz), 2);
    for (const ScheduledEvent& e : events) {
        if (e.distractor) {
            for (Eigen::Index t = 0; t < e.length; ++t) {
                double v = cfg.distractor_level;
                if (t < ramp) v *= raised_cosine(1.0 - static_cast<double>(t) / ramp);
                else if (t >= e.length - ramp)
                    v *= raised_cosine(1.0 - static_cast<double>(e.length - 1 - t) / ramp);
                for (Eigen::Index c = 0; c < cfg.channels; ++c) envelope(c, e.onset + t) = v;
            }
            out.distractors.push_back({e.onset, e.onset + e.length});
            continue;
        }
        const ClassTemplate& tpl = templates[static_cast<std::size_t>(e.class_id)];
        if (tpl.channel_gains.empty() || tpl.bumps.empty())
            throw ConfigError("synth: class template needs gains and at least one bump");
        auto block = envelope.block(0, e.onset, cfg.channels, e.length);
        for (Eigen::Index c = 0; c < cfg.channels; ++c) {
            const double gain =
                tpl.channel_gains[static_cast<std::size_t>(c) % tpl.channel_gains.size()];
            for (Eigen::Index t = 0; t < e.length; ++t) {
                const double x =
                    e.length > 1 ? static_cast<double>(t) / static_cast<double>(e.length - 1) : 0.5;
                double v = 0.0;
                for (const EnvelopeBump& b : tpl.bumps)
                    v += b.amplitude * raised_cosine((x - b.center) / b.width);
                block(c, t) = gain * v;
            }
        }
        const double rms = std::sqrt(block.squaredNorm() / static_cast<double>(block.size()));
        if (rms > 0.0) block /= rms;
        out.labels.push_back({e.onset, e.onset + e.length, e.class_id});
    }

    const double sigma = std::isinf(cfg.snr_db) ? 0.0 : std::pow(10.0, -cfg.snr_db / 20.0);
    const Matrix burst = noise_field(cfg.channels, steps, cfg.rate_hz, seed, 2, kBurstBand);
    out.signal.samples = envelope.cwiseProduct(burst);
    if (sigma > 0.0)
        out.signal.samples +=
            sigma * noise_field(cfg.channels, steps, cfg.rate_hz, seed, 1, kBaselineBand);
    return out;
}

std::pair<SegmentDataset, SegmentDataset> generate_dataset(const SynthConfig& cfg,
                                                           std::uint64_t seed, double split) {
    if (!(split > 0.0 && split < 1.0)) throw ConfigError("synth: split must be in (0,1)");
    const int train_n = static_cast<int>(std::lround(cfg.actions_per_class * split));
    const int test_n = cfg.actions_per_class - train_n;
    if (train_n < 1 || test_n < 1)
        throw ConfigError("synth: split leaves fewer than one sample per class per side");

    const LabeledStream stream = generate_stream(cfg, seed);

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(cfg.classes));
    for (std::size_t i = 0; i < stream.labels.size(); ++i)
        by_class[static_cast<std::size_t>(stream.labels[i].class_id)].push_back(i);

    auto cut = [&](std::size_t label_idx) {
        const LabeledInterval& iv = stream.labels[label_idx];
        SegmentSample s;
        s.signal.rate_hz = stream.signal.rate_hz;
        s.signal.samples = stream.signal.samples.middleCols(iv.begin, iv.length());
        s.label = iv.class_id;
        return s;
    };

    SegmentDataset train, test;
    for (int cls = 0; cls < cfg.classes; ++cls) {
        std::vector<std::size_t>& idx = by_class[static_cast<std::size_t>(cls)];
        CounterRng rng(CounterRng::derive(seed, 3, static_cast<std::uint64_t>(cls)));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
        for (std::size_t i = 0; i < idx.size(); ++i)
            (static_cast<int>(i) < train_n ? train : test).items.push_back(cut(idx[i]));
    }
    return {std::move(train), std::move(test)};
}

}  // namespace emgsnn
