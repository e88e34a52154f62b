#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "graml/env.hpp"
#include "graml/random.hpp"
#include "graml/trace.hpp"

namespace graml {

inline constexpr std::array<double, 4> kObservabilityRatios = {0.3, 0.5, 0.7, 1.0};

// ceil(ratio * len), at least one; tolerant of ratios like 0.3 * 10.
std::size_t masked_length(std::size_t len, double ratio);

// Prefix of masked_length(len, ratio) observations. A ratio of 1 yields a
// Full trace.
Trace mask_consecutive(const Trace& trace, double ratio);
// Uniformly random subset of masked_length(len, ratio) positions, in order.
Trace mask_nonconsecutive(const Trace& trace, double ratio, Rng& rng);

// Goal-ordered trace pool used for pair generation.
struct GoalTraces {
  State goal;
  std::vector<Trace> traces;
};

struct TraceRef {
  std::uint32_t goal = 0;   // index into the pool
  std::uint32_t trace = 0;  // index into that goal's traces
};

struct PairSample {
  Trace a;
  Trace b;
  int label = 0;
  TraceRef source_a;
  TraceRef source_b;
};

// round(balance * n_pairs) positive pairs, the rest negative, in shuffled
// order. Each member is masked independently with a ratio from
// kObservabilityRatios and a kind drawn from {Consecutive, NonConsecutive}.
std::vector<PairSample> generate_pairs(const std::vector<GoalTraces>& pool,
                                       std::size_t n_pairs, double balance, Rng& rng);

enum class Encoding { OneHot, Coordinates };

std::string_view to_string(Encoding e);
Encoding encoding_from_string(std::string_view name);
int encoding_dim(Encoding e, int width, int height);

// One column per observation. One-hot sequences also keep the two active
// indices per step so the recurrence can skip the dense product.
struct EncodedSequence {
  Encoding mode = Encoding::OneHot;
  Eigen::MatrixXd steps;                   // input_dim x length
  std::vector<std::array<int, 2>> active;  // one-hot only

  int input_dim() const { return static_cast<int>(steps.rows()); }
  std::size_t length() const { return static_cast<std::size_t>(steps.cols()); }
};

EncodedSequence encode_trace(const Trace& trace, const GridEnv& env, Encoding mode);
// Inverse of the one-hot encoding for column t.
Observation decode_one_hot(const EncodedSequence& seq, std::size_t t, const GridEnv& env);

// Line-delimited JSON: one record per pair holding source goal/trace indices,
// the kept positions and mask of each member, and the label.
void save_pairs(std::ostream& out, const std::vector<GoalTraces>& pool,
                const std::vector<PairSample>& pairs);
std::vector<PairSample> load_pairs(std::istream& in, const std::vector<GoalTraces>& pool);

}  // namespace graml
