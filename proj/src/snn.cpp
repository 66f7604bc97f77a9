#include "emgsnn/snn.hpp"

#include <cmath>

#include "emgsnn/errors.hpp"
#include "emgsnn/rng.hpp"

namespace emgsnn {

namespace {

Matrix uniform_init(Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in, CounterRng rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r) w(r, c) = rng.uniform(-bound, bound);
    return w;
}

}  // namespace

SnnModel make_snn_model(Eigen::Index input_dim, Eigen::Index hidden_dim, Eigen::Index classes,
                        Eigen::Index population, std::uint64_t seed, double input_scale) {
    SnnModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.classes = classes;
    m.population = population;
    if (input_dim <= 0 || hidden_dim <= 0 || classes <= 0 || population <= 0)
        throw ConfigError("snn: all model dimensions must be positive");
    if (!(input_scale > 0.0)) throw ConfigError("snn: input_scale must be positive");
    m.weights_in = uniform_init(input_dim, hidden_dim, input_dim, CounterRng(CounterRng::derive(seed, 0)));
    m.weights_in /= input_scale;
    m.weights_out =
        uniform_init(hidden_dim, m.output_dim(), hidden_dim, CounterRng(CounterRng::derive(seed, 1)));
    validate_model(m);
    return m;
}

void validate_model(const SnnModel& m) {
    if (m.input_dim <= 0 || m.hidden_dim <= 0 || m.classes <= 0 || m.population <= 0)
        throw ConfigError("snn: all model dimensions must be positive");
    if (!(m.lif_beta > 0.0 && m.lif_beta < 1.0)) throw ConfigError("snn: lif_beta must be in (0,1)");
    if (!(m.lif_u_th > 0.0)) throw ConfigError("snn: lif_u_th must be positive");
    if (m.t_sim < 1) throw ConfigError("snn: t_sim must be at least 1");
    if (m.bin < 1 || m.t_fix < 1 || m.t_fix % m.bin != 0)
        throw ConfigError("snn: t_fix must be a positive multiple of bin");
    if (m.weights_in.rows() != m.input_dim || m.weights_in.cols() != m.hidden_dim)
        throw ConfigError("snn: weights_in shape does not match the model dims");
    if (m.weights_out.rows() != m.hidden_dim || m.weights_out.cols() != m.output_dim())
        throw ConfigError("snn: weights_out shape does not match the model dims");
}

Matrix multi_train_sum(const SpikeTensor& x) {
    Matrix out = Matrix::Zero(x.channels, x.steps());
    for (Eigen::Index c = 0; c < x.channels; ++c)
        for (Eigen::Index n = 0; n < x.trains; ++n)
            out.row(c) += x.bits.row(c * x.trains + n).cast<double>();
    return out;
}

Matrix multi_step_sum(const Matrix& counts, Eigen::Index bin, Eigen::Index t_fix) {
    if (bin < 1) throw ConfigError("snn: bin must be at least 1");
    if (t_fix < 1 || t_fix % bin != 0)
        throw ConfigError("snn: t_fix must be a positive multiple of bin");
    const Eigen::Index bins = t_fix / bin;
    Matrix out = Matrix::Zero(counts.rows(), bins);
    const Eigen::Index span = std::min(t_fix, counts.cols());
    for (Eigen::Index t = 0; t < span; ++t) out.col(t / bin) += counts.col(t);
    return out;
}

Vector flatten(const Matrix& binned) {
    Vector out(binned.size());
    Eigen::Index k = 0;
    for (Eigen::Index c = 0; c < binned.rows(); ++c)
        for (Eigen::Index j = 0; j < binned.cols(); ++j) out(k++) = binned(c, j);
    return out;
}

Vector build_features(const SpikeTensor& spikes, Eigen::Index bin, Eigen::Index t_fix,
                      bool use_solvers) {
    if (use_solvers) return flatten(multi_step_sum(multi_train_sum(spikes), bin, t_fix));
    return flatten(multi_step_sum(spikes.bits.cast<double>(), 1, t_fix));
}

LifStepResult lif_step(const Vector& u, const BitVector& s_prev, const Vector& i_in, double beta,
                       double u_th) {
    if (u.size() != s_prev.size() || u.size() != i_in.size())
        throw ConfigError("snn: lif_step vectors must share one length");
    LifStepResult r;
    r.u = beta * u + i_in - u_th * s_prev.cast<double>().matrix();
    r.s = BitVector(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) r.s(i) = r.u(i) > u_th ? 1 : 0;
    return r;
}

ForwardRecord forward(const SnnModel& m, const Vector& features) {
    validate_model(m);
    if (features.size() != m.input_dim)
        throw ConfigError("snn: feature length does not match the model input dim");

    const Vector i_static = m.weights_in.transpose() * features;
    const Eigen::Index out_n = m.output_dim();

    ForwardRecord rec;
    rec.hidden_u = Matrix(m.hidden_dim, m.t_sim);
    rec.hidden_s = BitMatrix(m.hidden_dim, m.t_sim);
    rec.output_u = Matrix(out_n, m.t_sim);
    rec.output_s = BitMatrix(out_n, m.t_sim);

    Vector u_h = Vector::Zero(m.hidden_dim);
    BitVector s_h = BitVector::Zero(m.hidden_dim);
    Vector u_o = Vector::Zero(out_n);
    BitVector s_o = BitVector::Zero(out_n);

    for (int t = 0; t < m.t_sim; ++t) {
        LifStepResult h = lif_step(u_h, s_h, i_static, m.lif_beta, m.lif_u_th);
        u_h = h.u;
        s_h = h.s;
        const Vector i_out = m.weights_out.transpose() * s_h.cast<double>().matrix();
        LifStepResult o = lif_step(u_o, s_o, i_out, m.lif_beta, m.lif_u_th);
        u_o = o.u;
        s_o = o.s;
        rec.hidden_u.col(t) = u_h;
        rec.hidden_s.col(t) = s_h;
        rec.output_u.col(t) = u_o;
        rec.output_s.col(t) = s_o;
    }

    rec.hidden_spike_events = rec.hidden_s.cast<std::uint64_t>().sum();
    rec.class_sums = Vector::Zero(m.classes);
    for (Eigen::Index cls = 0; cls < m.classes; ++cls)
        rec.class_sums(cls) = rec.output_s.middleRows(cls * m.population, m.population)
                                  .cast<double>()
                                  .sum();
    return rec;
}

int decode_population(const Vector& class_sums) {
    if (class_sums.size() < 1) throw ConfigError("snn: decode needs at least one class");
    int best = 0;
    for (Eigen::Index i = 1; i < class_sums.size(); ++i)
        if (class_sums(i) > class_sums(best)) best = static_cast<int>(i);
    return best;
}

std::uint64_t EnergyReport::ac_count() const {
    return encode.ac + detect.ac + fc_in.ac + lif_hidden.ac + fc_out.ac + lif_out.ac;
}

std::uint64_t EnergyReport::mac_count() const {
    return encode.mac + detect.mac + fc_in.mac + lif_hidden.mac + fc_out.mac + lif_out.mac;
}

double EnergyReport::total_pj(const EnergyModel& costs) const {
    return costs.ac_pj * static_cast<double>(ac_count()) +
           costs.mac_pj * static_cast<double>(mac_count());
}

EnergyReport count_ops(const SnnModel& m, const Vector& features, const ForwardRecord& record) {
    validate_model(m);
    if (features.size() != m.input_dim)
        throw ConfigError("snn: feature length does not match the model input dim");
    if (record.hidden_s.rows() != m.hidden_dim || record.hidden_s.cols() != m.t_sim)
        throw ConfigError("snn: spike record does not match the model");

    const auto steps = static_cast<std::uint64_t>(m.t_sim);
    const auto hidden = static_cast<std::uint64_t>(m.hidden_dim);
    const auto out_n = static_cast<std::uint64_t>(m.output_dim());

    EnergyReport rep;
    rep.fc_in.mac = static_cast<std::uint64_t>(m.input_dim) * hidden;
    rep.lif_hidden.mac = hidden * steps;
    rep.lif_hidden.ac = 2 * hidden * steps;
    rep.lif_out.mac = out_n * steps;
    rep.lif_out.ac = 2 * out_n * steps;
    rep.fc_out.ac = record.hidden_spike_events * out_n;
    return rep;
}

StageOps encode_ops(Eigen::Index channels, Eigen::Index steps, int n_trains) {
    StageOps ops;
    ops.ac = static_cast<std::uint64_t>(channels) * static_cast<std::uint64_t>(steps) *
             static_cast<std::uint64_t>(1 + n_trains);
    return ops;
}

StageOps detect_ops(std::uint64_t active_steps) {
    StageOps ops;
    ops.mac = active_steps;
    ops.ac = 2 * active_steps;
    return ops;
}

}  // namespace emgsnn
