#pragma once

#include <cstdint>

#include "emgsnn/types.hpp"

namespace emgsnn {

struct SnnModel {
    Eigen::Index input_dim = 0;    // H
    Eigen::Index hidden_dim = 128;
    Eigen::Index classes = 0;      // k
    Eigen::Index population = 100; // p output neurons per class
    Matrix weights_in;             // H x hidden
    Matrix weights_out;            // hidden x (k*p), class-major neuron order
    double lif_beta = 0.9;
    double lif_u_th = 1.0;
    int t_sim = 30;
    Eigen::Index t_fix = 2000;  // fixed action length fed to the solvers
    Eigen::Index bin = 20;      // multi-step window L

    Eigen::Index output_dim() const { return classes * population; }
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], filled column by
// column from a generator derived from the seed (stream 0 for weights_in,
// stream 1 for weights_out). input_scale is the expected peak magnitude of a
// feature entry (e.g. the N*L bin-count ceiling); the weights_in bound is
// divided by it so the initial FC currents land near the unit LIF threshold
// regardless of feature units.
SnnModel make_snn_model(Eigen::Index input_dim, Eigen::Index hidden_dim, Eigen::Index classes,
                        Eigen::Index population, std::uint64_t seed, double input_scale = 1.0);

void validate_model(const SnnModel& model);

// Collapse the train dimension: out(c, t) = sum_n x(c, n, t).
Matrix multi_train_sum(const SpikeTensor& x);

// Length-adjust to t_fix (zero-pad or truncate on the right), then sum counts
// in windows of `bin` samples: out is channels x (t_fix / bin).
Matrix multi_step_sum(const Matrix& counts, Eigen::Index bin, Eigen::Index t_fix);

// Channel-major concatenation of the rows.
Vector flatten(const Matrix& binned);

// Full feature path for one detected segment. With use_solvers the result has
// length C * t_fix / bin; without, the raw channels*trains bit rows are
// length-adjusted and flattened (length C * N * t_fix).
Vector build_features(const SpikeTensor& spikes, Eigen::Index bin, Eigen::Index t_fix,
                      bool use_solvers = true);

struct LifStepResult {
    Vector u;
    BitVector s;
};

// u' = beta*u + i_in - s_prev*u_th (soft reset); s' = 1 strictly above u_th.
LifStepResult lif_step(const Vector& u, const BitVector& s_prev, const Vector& i_in, double beta,
                       double u_th);

struct ForwardRecord {
    Matrix hidden_u;     // hidden x t_sim membrane traces
    BitMatrix hidden_s;  // hidden x t_sim spikes
    Matrix output_u;     // (k*p) x t_sim
    BitMatrix output_s;
    Vector class_sums;   // k: spikes summed over population and time
    std::uint64_t hidden_spike_events = 0;
};

// The static FC current weights_in^T * f drives the hidden layer for t_sim
// steps; the output layer is driven by the same step's hidden spikes.
ForwardRecord forward(const SnnModel& model, const Vector& features);

// Argmax over class sums, ties to the lowest class index.
int decode_population(const Vector& class_sums);

struct EnergyModel {
    double ac_pj = 0.1;
    double mac_pj = 3.2;
};

struct StageOps {
    std::uint64_t ac = 0;
    std::uint64_t mac = 0;
};

struct EnergyReport {
    StageOps encode;
    StageOps detect;
    StageOps fc_in;
    StageOps lif_hidden;
    StageOps fc_out;
    StageOps lif_out;

    std::uint64_t ac_count() const;
    std::uint64_t mac_count() const;
    double total_pj(const EnergyModel& costs = {}) const;
};

// Rule table over one inference: fc_in H*hidden MACs once; each LIF neuron
// 1 MAC + 2 ACs per step; fc_out k*p ACs per hidden spike event. The encode
// and detect stages are stream-level and stay zero here.
EnergyReport count_ops(const SnnModel& model, const Vector& features, const ForwardRecord& record);

// Stream-level stage rules: encoding costs (1 + n_trains) ACs per sample per
// channel; detection costs 1 MAC + 2 ACs per active step.
StageOps encode_ops(Eigen::Index channels, Eigen::Index steps, int n_trains);
StageOps detect_ops(std::uint64_t active_steps);

}  // namespace emgsnn
