#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "graml/dataset.hpp"
#include "graml/env.hpp"

namespace graml {

using Embedding = Eigen::VectorXd;

// Single-layer LSTM. Gate blocks are stacked row-wise in the order
// input, forget, output, candidate: W is 4k x input_dim, U is 4k x k.
struct LstmParams {
  int input_dim = 0;
  int hidden = 0;
  Eigen::MatrixXd W;
  Eigen::MatrixXd U;
  Eigen::VectorXd b;

  static LstmParams zeros(int input_dim, int hidden);
  // uniform(-1/sqrt(k), 1/sqrt(k)) weights, forget bias 1.
  static LstmParams random(int input_dim, int hidden, std::uint64_t seed);

  std::size_t size() const {
    return static_cast<std::size_t>(W.size() + U.size() + b.size());
  }
  double& operator[](std::size_t i);
  double operator[](std::size_t i) const;
  void set_zero();
  double squared_norm() const;
  bool all_finite() const;

  friend bool operator==(const LstmParams& x, const LstmParams& y);
};

Embedding lstm_forward(const LstmParams& p, const EncodedSequence& seq);

// exp(-||v1 - v2||_1)
double similarity(const Embedding& v1, const Embedding& v2);

inline constexpr double kLossClamp = 1e-12;
double bce_loss(double y_hat, int y);

struct PairLoss {
  double loss = 0.0;
  double y_hat = 0.0;
};

// Forward both branches through the shared parameters, then backpropagate
// through time. Gradients are accumulated into `grad` (same shape as p).
PairLoss pair_loss(const LstmParams& p, const EncodedSequence& a, const EncodedSequence& b,
                   int y);
PairLoss pair_backward(const LstmParams& p, const EncodedSequence& a, const EncodedSequence& b,
                       int y, LstmParams& grad);

// Gradient of the loss through one branch only, holding the other branch's
// embedding fixed. Summing both calls gives the shared-weight gradient.
void branch_backward(const LstmParams& p, const EncodedSequence& branch, const Embedding& other,
                     int y, LstmParams& grad);

// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over all
// parameters, numeric gradients by central differences with step h.
double grad_check(const LstmParams& p, const EncodedSequence& a, const EncodedSequence& b, int y,
                  double h);

struct MetricModel {
  LstmParams params;
  Encoding encoding = Encoding::OneHot;
  std::string env_id;
  int width = 0;
  int height = 0;
};

MetricModel make_model(const GridEnv& env, Encoding encoding, int hidden, std::uint64_t seed);
Embedding embed(const MetricModel& model, const Trace& trace, const GridEnv& env);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double grad_clip = 5.0;
  double holdout_fraction = 0.1;
  int hidden = 32;
  Encoding encoding = Encoding::OneHot;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MetricModel model;
  std::vector<double> loss_history;  // mean training loss per epoch
  double heldout_accuracy = 0.0;
  std::size_t heldout_pairs = 0;
};

// Pair accuracy with the decision threshold y_hat >= 0.5.
double pair_accuracy(const MetricModel& model, const std::vector<PairSample>& pairs,
                     const GridEnv& env);

// Adam on shuffled minibatches with global-norm clipping. Throws Divergence
// when a batch loss or gradient turns non-finite.
TrainResult train(const std::vector<PairSample>& dataset, const TrainConfig& cfg,
                  const GridEnv& env);

void save_model(std::ostream& out, const MetricModel& model);
MetricModel load_model(std::istream& in);

}  // namespace graml
