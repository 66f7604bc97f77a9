#include "emgsnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "emgsnn/errors.hpp"
#include "emgsnn/rng.hpp"

namespace emgsnn {

namespace {

void validate(const TrainConfig& cfg) {
    if (!(cfg.k_slope > 0.0)) throw ConfigError("train: k_slope must be positive");
    if (!(cfg.learning_rate >= 0.0))
        throw ConfigError("train: learning_rate must be non-negative");
    if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
    if (cfg.epochs < 0) throw ConfigError("train: epochs must be non-negative");
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
        throw ConfigError("train: momentum must be in [0,1)");
}

Matrix gradient_factor_mat(const Matrix& u, double u_th, double k) {
    return ((k * (u.array() - u_th).abs() + 1.0).square().inverse()).matrix();
}

Matrix activation_mat(const Matrix& u, double u_th, double k, SurrogateMode mode) {
    if (mode == SurrogateMode::hard) return (u.array() > u_th).cast<double>().matrix();
    const auto x = u.array() - u_th;
    return (x / (1.0 + k * x.abs())).matrix();
}

struct BatchTrace {
    std::vector<Matrix> u_h, s_h, u_o, s_o;  // t_sim entries, units x batch each
    Matrix class_sums;                       // classes x batch
};

BatchTrace batch_forward(const SnnModel& m, const Matrix& f, SurrogateMode mode, double k_slope) {
    const Eigen::Index batch = f.cols();
    const Eigen::Index out_n = m.output_dim();
    const Matrix i_static = m.weights_in.transpose() * f;

    BatchTrace tr;
    tr.u_h.reserve(static_cast<std::size_t>(m.t_sim));
    tr.s_h.reserve(static_cast<std::size_t>(m.t_sim));
    tr.u_o.reserve(static_cast<std::size_t>(m.t_sim));
    tr.s_o.reserve(static_cast<std::size_t>(m.t_sim));

    Matrix u_h = Matrix::Zero(m.hidden_dim, batch);
    Matrix s_h = Matrix::Zero(m.hidden_dim, batch);
    Matrix u_o = Matrix::Zero(out_n, batch);
    Matrix s_o = Matrix::Zero(out_n, batch);
    for (int t = 0; t < m.t_sim; ++t) {
        u_h = m.lif_beta * u_h + i_static - m.lif_u_th * s_h;
        s_h = activation_mat(u_h, m.lif_u_th, k_slope, mode);
        u_o = m.lif_beta * u_o + m.weights_out.transpose() * s_h - m.lif_u_th * s_o;
        s_o = activation_mat(u_o, m.lif_u_th, k_slope, mode);
        tr.u_h.push_back(u_h);
        tr.s_h.push_back(s_h);
        tr.u_o.push_back(u_o);
        tr.s_o.push_back(s_o);
    }

    tr.class_sums = Matrix::Zero(m.classes, batch);
    for (Eigen::Index cls = 0; cls < m.classes; ++cls)
        for (int t = 0; t < m.t_sim; ++t)
            tr.class_sums.row(cls) +=
                tr.s_o[static_cast<std::size_t>(t)].middleRows(cls * m.population, m.population)
                    .colwise()
                    .sum();
    return tr;
}

// Hard-mode class sums without keeping traces, for evaluation.
Matrix batch_class_sums(const SnnModel& m, const Matrix& f) {
    const Eigen::Index batch = f.cols();
    const Eigen::Index out_n = m.output_dim();
    const Matrix i_static = m.weights_in.transpose() * f;
    Matrix u_h = Matrix::Zero(m.hidden_dim, batch);
    Matrix s_h = Matrix::Zero(m.hidden_dim, batch);
    Matrix u_o = Matrix::Zero(out_n, batch);
    Matrix s_o = Matrix::Zero(out_n, batch);
    Matrix sums = Matrix::Zero(m.classes, batch);
    for (int t = 0; t < m.t_sim; ++t) {
        u_h = m.lif_beta * u_h + i_static - m.lif_u_th * s_h;
        s_h = (u_h.array() > m.lif_u_th).cast<double>().matrix();
        u_o = m.lif_beta * u_o + m.weights_out.transpose() * s_h - m.lif_u_th * s_o;
        s_o = (u_o.array() > m.lif_u_th).cast<double>().matrix();
        for (Eigen::Index cls = 0; cls < m.classes; ++cls)
            sums.row(cls) += s_o.middleRows(cls * m.population, m.population).colwise().sum();
    }
    return sums;
}

struct BatchGrads {
    Matrix gw_in;
    Matrix gw_out;
    double mean_loss = 0.0;
};

BatchGrads batch_backward(const SnnModel& m, const Matrix& f, const std::vector<int>& labels,
                          const TrainConfig& cfg, const BatchTrace& tr) {
    const Eigen::Index batch = f.cols();
    const Eigen::Index out_n = m.output_dim();
    const double normalizer = static_cast<double>(m.population) * m.t_sim;

    Matrix g_sums(m.classes, batch);
    double loss_acc = 0.0;
    for (Eigen::Index b = 0; b < batch; ++b) {
        loss_acc += loss(tr.class_sums.col(b), labels[static_cast<std::size_t>(b)], cfg.loss_kind,
                         normalizer);
        g_sums.col(b) = loss_gradient(tr.class_sums.col(b), labels[static_cast<std::size_t>(b)],
                                      cfg.loss_kind, normalizer);
    }
    Matrix g_out(out_n, batch);
    for (Eigen::Index cls = 0; cls < m.classes; ++cls)
        g_out.middleRows(cls * m.population, m.population) =
            g_sums.row(cls).replicate(m.population, 1);

    Matrix du_o_next = Matrix::Zero(out_n, batch);
    Matrix du_h_next = Matrix::Zero(m.hidden_dim, batch);
    Matrix du_h_sum = Matrix::Zero(m.hidden_dim, batch);
    Matrix gw_out = Matrix::Zero(m.hidden_dim, out_n);
    for (int t = m.t_sim - 1; t >= 0; --t) {
        const auto ti = static_cast<std::size_t>(t);
        Matrix ds_o = g_out;
        if (!cfg.reset_detach) ds_o -= m.lif_u_th * du_o_next;
        const Matrix du_o =
            ds_o.cwiseProduct(gradient_factor_mat(tr.u_o[ti], m.lif_u_th, cfg.k_slope)) +
            m.lif_beta * du_o_next;
        gw_out += tr.s_h[ti] * du_o.transpose();
        Matrix ds_h = m.weights_out * du_o;
        if (!cfg.reset_detach) ds_h -= m.lif_u_th * du_h_next;
        const Matrix du_h =
            ds_h.cwiseProduct(gradient_factor_mat(tr.u_h[ti], m.lif_u_th, cfg.k_slope)) +
            m.lif_beta * du_h_next;
        du_h_sum += du_h;
        du_o_next = du_o;
        du_h_next = du_h;
    }

    BatchGrads g;
    const double inv = 1.0 / static_cast<double>(batch);
    g.gw_in = (f * du_h_sum.transpose()) * inv;
    g.gw_out = gw_out * inv;
    g.mean_loss = loss_acc * inv;
    return g;
}

void sgd_update(SnnModel& model, const BatchGrads& g, const TrainConfig& cfg, SgdState& sgd) {
    if (cfg.momentum > 0.0) {
        if (sgd.velocity_in.size() == 0) {
            sgd.velocity_in = Matrix::Zero(model.weights_in.rows(), model.weights_in.cols());
            sgd.velocity_out = Matrix::Zero(model.weights_out.rows(), model.weights_out.cols());
        }
        sgd.velocity_in = cfg.momentum * sgd.velocity_in + g.gw_in;
        sgd.velocity_out = cfg.momentum * sgd.velocity_out + g.gw_out;
        model.weights_in -= cfg.learning_rate * sgd.velocity_in;
        model.weights_out -= cfg.learning_rate * sgd.velocity_out;
    } else {
        model.weights_in -= cfg.learning_rate * g.gw_in;
        model.weights_out -= cfg.learning_rate * g.gw_out;
    }
}

}  // namespace

SurrogateResult surrogate_spike(double u, double u_th, double k, SurrogateMode mode) {
    if (!(k > 0.0)) throw ConfigError("train: k_slope must be positive");
    const double x = u - u_th;
    const double denom = k * std::abs(x) + 1.0;
    SurrogateResult r;
    r.gradient_factor = 1.0 / (denom * denom);
    r.activation = mode == SurrogateMode::hard ? (x > 0.0 ? 1.0 : 0.0) : x / (1.0 + k * std::abs(x));
    return r;
}

double loss(const Vector& class_sums, int label, LossKind kind, double normalizer) {
    if (label < 0 || label >= class_sums.size()) throw ConfigError("train: label out of range");
    if (!(normalizer > 0.0)) throw ConfigError("train: loss normalizer must be positive");
    const Vector r = class_sums / normalizer;
    if (kind == LossKind::cross_entropy) {
        const double mx = r.maxCoeff();
        const double lse = std::log((r.array() - mx).exp().sum()) + mx;
        return lse - r(label);
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double d = r(i) - (i == label ? 1.0 : 0.0);
        acc += d * d;
    }
    return acc / static_cast<double>(r.size());
}

Vector loss_gradient(const Vector& class_sums, int label, LossKind kind, double normalizer) {
    if (label < 0 || label >= class_sums.size()) throw ConfigError("train: label out of range");
    if (!(normalizer > 0.0)) throw ConfigError("train: loss normalizer must be positive");
    const Vector r = class_sums / normalizer;
    Vector g(r.size());
    if (kind == LossKind::cross_entropy) {
        const double mx = r.maxCoeff();
        const Eigen::ArrayXd e = (r.array() - mx).exp();
        g = (e / e.sum()).matrix();
        g(label) -= 1.0;
    } else {
        for (Eigen::Index i = 0; i < r.size(); ++i)
            g(i) = 2.0 * (r(i) - (i == label ? 1.0 : 0.0)) / static_cast<double>(r.size());
    }
    return g / normalizer;
}

Gradients backward(const SnnModel& model, const Vector& feature, int label, const TrainConfig& cfg,
                   SurrogateMode mode) {
    validate(cfg);
    validate_model(model);
    if (feature.size() != model.input_dim)
        throw ConfigError("train: feature length does not match the model input dim");
    const Matrix f = feature;
    const BatchTrace tr = batch_forward(model, f, mode, cfg.k_slope);
    const BatchGrads bg = batch_backward(model, f, {label}, cfg, tr);
    Gradients g;
    g.weights_in = bg.gw_in;
    g.weights_out = bg.gw_out;
    g.loss = bg.mean_loss;
    g.class_sums = tr.class_sums.col(0);
    return g;
}

EpochMetrics train_epoch(SnnModel& model, const Dataset& data, const TrainConfig& cfg, int epoch,
                         SgdState* sgd) {
    validate(cfg);
    validate_model(model);
    const Eigen::Index n = data.size();
    if (n == 0) throw ConfigError("train: empty dataset");
    if (data.features.rows() != model.input_dim)
        throw ConfigError("train: dataset feature dim does not match the model");
    if (static_cast<Eigen::Index>(data.labels.size()) != n)
        throw ConfigError("train: label count does not match the feature count");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng(CounterRng::derive(cfg.seed, 0x5u, static_cast<std::uint64_t>(epoch)));
    for (Eigen::Index i = n - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)],
                  order[rng.uniform_index(static_cast<std::uint64_t>(i + 1))]);

    SgdState local;
    SgdState& opt = sgd ? *sgd : local;

    double loss_sum = 0.0;
    Eigen::Index correct = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
        const Eigen::Index bsz = std::min<Eigen::Index>(cfg.batch_size, n - start);
        Matrix f(model.input_dim, bsz);
        std::vector<int> labels(static_cast<std::size_t>(bsz));
        for (Eigen::Index j = 0; j < bsz; ++j) {
            const Eigen::Index src = order[static_cast<std::size_t>(start + j)];
            f.col(j) = data.features.col(src);
            labels[static_cast<std::size_t>(j)] = data.labels[static_cast<std::size_t>(src)];
        }
        const BatchTrace tr = batch_forward(model, f, SurrogateMode::hard, cfg.k_slope);
        for (Eigen::Index j = 0; j < bsz; ++j)
            if (decode_population(tr.class_sums.col(j)) == labels[static_cast<std::size_t>(j)])
                ++correct;
        const BatchGrads g = batch_backward(model, f, labels, cfg, tr);
        loss_sum += g.mean_loss * static_cast<double>(bsz);
        sgd_update(model, g, cfg, opt);
    }

    EpochMetrics m;
    m.mean_loss = loss_sum / static_cast<double>(n);
    m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    return m;
}

double evaluate_accuracy(const SnnModel& model, const Dataset& data) {
    validate_model(model);
    const Eigen::Index n = data.size();
    if (n == 0) throw ConfigError("train: empty dataset");
    if (data.features.rows() != model.input_dim)
        throw ConfigError("train: dataset feature dim does not match the model");
    constexpr Eigen::Index chunk = 256;
    Eigen::Index correct = 0;
    for (Eigen::Index start = 0; start < n; start += chunk) {
        const Eigen::Index bsz = std::min(chunk, n - start);
        const Matrix sums = batch_class_sums(model, data.features.middleCols(start, bsz));
        for (Eigen::Index j = 0; j < bsz; ++j)
            if (decode_population(sums.col(j)) == data.labels[static_cast<std::size_t>(start + j)])
                ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

FitReport fit(SnnModel& model, const Dataset& train_set, const Dataset& test_set,
              const TrainConfig& cfg) {
    validate(cfg);
    FitReport report;
    SgdState sgd;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const EpochMetrics m = train_epoch(model, train_set, cfg, epoch, &sgd);
        TrainLogRow row;
        row.epoch = epoch;
        row.mean_loss = m.mean_loss;
        row.train_acc = m.accuracy;
        row.test_acc = test_set.size() > 0 ? evaluate_accuracy(model, test_set) : 0.0;
        report.log.push_back(row);
    }
    if (!report.log.empty()) report.final_test_accuracy = report.log.back().test_acc;
    return report;
}

GradCheckReport grad_check(const SnnModel& model, const Vector& feature, int label,
                           const TrainConfig& cfg, double epsilon) {
    if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
    TrainConfig rc = cfg;
    rc.reset_detach = false;  // the numeric probe differentiates the full relaxed path
    const Gradients analytic = backward(model, feature, label, rc, SurrogateMode::relaxed);

    const Eigen::Index n_in = model.weights_in.size();
    const Eigen::Index total = n_in + model.weights_out.size();
    std::vector<Eigen::Index> checked;
    if (total <= 500) {
        checked.resize(static_cast<std::size_t>(total));
        std::iota(checked.begin(), checked.end(), 0);
    } else {
        CounterRng rng(CounterRng::derive(cfg.seed, 0x6cu));
        std::unordered_set<Eigen::Index> seen;
        while (seen.size() < 500)
            seen.insert(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(total))));
        checked.assign(seen.begin(), seen.end());
        std::sort(checked.begin(), checked.end());
    }

    const double normalizer = static_cast<double>(model.population) * model.t_sim;
    SnnModel probe = model;
    auto param = [&](Eigen::Index i) -> double& {
        return i < n_in ? probe.weights_in.data()[i] : probe.weights_out.data()[i - n_in];
    };
    auto relaxed_loss = [&]() {
        const BatchTrace tr = batch_forward(probe, feature, SurrogateMode::relaxed, rc.k_slope);
        return loss(tr.class_sums.col(0), label, rc.loss_kind, normalizer);
    };

    GradCheckReport report;
    report.epsilon = epsilon;
    report.checked = checked;
    for (const Eigen::Index i : checked) {
        const double saved = param(i);
        param(i) = saved + epsilon;
        const double up = relaxed_loss();
        param(i) = saved - epsilon;
        const double down = relaxed_loss();
        param(i) = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double exact = i < n_in ? analytic.weights_in.data()[i]
                                      : analytic.weights_out.data()[i - n_in];
        const double rel =
            std::abs(exact - numeric) / std::max({std::abs(exact), std::abs(numeric), 1e-8});
        report.errors.push_back(rel);
        report.max_rel_error = std::max(report.max_rel_error, rel);
    }
    return report;
}

}  // namespace emgsnn
