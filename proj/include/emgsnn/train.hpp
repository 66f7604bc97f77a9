#pragma once

#include <cstdint>
#include <vector>

#include "emgsnn/snn.hpp"
#include "emgsnn/types.hpp"

namespace emgsnn {

enum class LossKind { cross_entropy, mse };

// hard: Heaviside spikes (inference behavior). relaxed: the fast-sigmoid
// activation itself, used for gradient checking because the hard forward is
// piecewise constant.
enum class SurrogateMode { hard, relaxed };

struct TrainConfig {
    double k_slope = 25.0;
    double learning_rate = 2.0;
    int epochs = 50;
    int batch_size = 32;
    std::uint64_t seed = 0;
    LossKind loss_kind = LossKind::cross_entropy;
    bool reset_detach = true;  // treat the s_prev*u_th reset term as constant
    double momentum = 0.0;     // 0 = plain SGD; 0.9 is the conventional setting
};

struct SurrogateResult {
    double activation;
    double gradient_factor;  // 1 / (k|u - u_th| + 1)^2, both modes
};

SurrogateResult surrogate_spike(double u, double u_th, double k, SurrogateMode mode);

// Cross-entropy is computed over class_sums / normalizer (normalizer =
// population * t_sim, the maximum attainable sum). MSE targets a rate of 1
// for the true class and 0 elsewhere.
double loss(const Vector& class_sums, int label, LossKind kind, double normalizer);
Vector loss_gradient(const Vector& class_sums, int label, LossKind kind, double normalizer);

struct Gradients {
    Matrix weights_in;
    Matrix weights_out;
    double loss = 0.0;
    Vector class_sums;
};

// Reverse-mode differentiation of the t_sim-unrolled dynamics, with the
// surrogate gradient_factor standing in for dS/dU.
Gradients backward(const SnnModel& model, const Vector& feature, int label, const TrainConfig& cfg,
                   SurrogateMode mode = SurrogateMode::hard);

struct Dataset {
    Matrix features;          // input_dim x size
    std::vector<int> labels;  // size
    Eigen::Index size() const { return features.cols(); }
};

struct EpochMetrics {
    double mean_loss = 0.0;
    double accuracy = 0.0;
};

struct SgdState {
    Matrix velocity_in;
    Matrix velocity_out;
};

// Seeded shuffle (seed mixed with the epoch index), mini-batch averaged
// gradients, SGD update in place.
EpochMetrics train_epoch(SnnModel& model, const Dataset& data, const TrainConfig& cfg, int epoch,
                         SgdState* sgd = nullptr);

// Hard-mode batched inference accuracy (argmax of class sums vs labels).
double evaluate_accuracy(const SnnModel& model, const Dataset& data);

struct TrainLogRow {
    int epoch = 0;
    double mean_loss = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
};

struct FitReport {
    std::vector<TrainLogRow> log;
    double final_test_accuracy = 0.0;
};

FitReport fit(SnnModel& model, const Dataset& train_set, const Dataset& test_set,
              const TrainConfig& cfg);

struct GradCheckReport {
    double max_rel_error = 0.0;
    double epsilon = 0.0;
    std::vector<Eigen::Index> checked;  // flat parameter indices, weights_in first
    std::vector<double> errors;         // relative errors aligned with `checked`
};

// Central finite differences against backward, both in relaxed mode with the
// reset term attached (detaching would differentiate a different function
// than the one probed numerically). Checks every parameter, or a seeded
// 500-parameter subsample for larger models.
GradCheckReport grad_check(const SnnModel& model, const Vector& feature, int label,
                           const TrainConfig& cfg, double epsilon = 1e-5);

}  // namespace emgsnn
