#include "graml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "graml/error.hpp"
#include "graml/serialize.hpp"

namespace graml {

namespace {

void check_ratio(double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    fail(ErrorKind::ContractViolation, "observability ratio must lie in (0, 1]");
  }
}

// Source positions of `trace` (its own `kept` when already masked).
std::uint32_t source_index(const Trace& trace, std::size_t i) {
  return trace.kept.empty() ? static_cast<std::uint32_t>(i) : trace.kept[i];
}

Trace select(const Trace& trace, const std::vector<std::size_t>& positions, MaskKind kind,
             double ratio) {
  Trace out;
  out.goal = trace.goal;
  out.mask_kind = kind;
  out.observed_ratio = ratio;
  out.observations.reserve(positions.size());
  out.kept.reserve(positions.size());
  for (auto p : positions) {
    out.observations.push_back(trace.observations[p]);
    out.kept.push_back(source_index(trace, p));
  }
  return out;
}

Trace random_mask(const Trace& trace, Rng& rng) {
  const double ratio = kObservabilityRatios[uniform_index(rng, kObservabilityRatios.size())];
  const bool consecutive = uniform_index(rng, 2) == 0;
  return consecutive ? mask_consecutive(trace, ratio) : mask_nonconsecutive(trace, ratio, rng);
}

}  // namespace

std::size_t masked_length(std::size_t len, double ratio) {
  check_ratio(ratio);
  const double raw = ratio * static_cast<double>(len);
  auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(n, 1, len);
}

Trace mask_consecutive(const Trace& trace, double ratio) {
  if (trace.empty()) fail(ErrorKind::ContractViolation, "cannot mask an empty trace");
  const auto n = masked_length(trace.size(), ratio);
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  if (ratio >= 1.0) return select(trace, positions, MaskKind::Full, 1.0);
  return select(trace, positions, MaskKind::Consecutive, ratio);
}

Trace mask_nonconsecutive(const Trace& trace, double ratio, Rng& rng) {
  if (trace.empty()) fail(ErrorKind::ContractViolation, "cannot mask an empty trace");
  const auto n = masked_length(trace.size(), ratio);
  std::vector<std::size_t> all(trace.size());
  std::iota(all.begin(), all.end(), 0);
  if (ratio >= 1.0) return select(trace, all, MaskKind::Full, 1.0);
  // Partial Fisher-Yates: the first n slots form a uniform random subset.
  for (std::size_t i = 0; i < n; ++i) {
    std::swap(all[i], all[i + uniform_index(rng, all.size() - i)]);
  }
  all.resize(n);
  std::sort(all.begin(), all.end());
  return select(trace, all, MaskKind::NonConsecutive, ratio);
}

std::vector<PairSample> generate_pairs(const std::vector<GoalTraces>& pool,
                                       std::size_t n_pairs, double balance, Rng& rng) {
  if (!(balance > 0.0 && balance < 1.0)) {
    fail(ErrorKind::ContractViolation, "pair balance must lie in (0, 1)");
  }
  std::size_t usable = 0;
  for (const auto& g : pool) {
    for (const auto& t : g.traces) {
      if (t.empty()) fail(ErrorKind::ContractViolation, "empty trace in pair pool");
    }
    if (!g.traces.empty()) ++usable;
  }
  if (usable < 2 || usable != pool.size()) {
    fail(ErrorKind::ContractViolation, "pair generation needs at least 2 goals, each with traces");
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (pool[i].goal == pool[j].goal) {
        fail(ErrorKind::ContractViolation, "duplicate goal " + to_string(pool[i].goal) + " in pool");
      }
    }
  }

  const auto positives =
      static_cast<std::size_t>(std::llround(balance * static_cast<double>(n_pairs)));
  std::vector<int> labels(n_pairs, 0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(positives), 1);
  std::shuffle(labels.begin(), labels.end(), rng);

  auto pick = [&](std::size_t goal) {
    return TraceRef{static_cast<std::uint32_t>(goal),
                    static_cast<std::uint32_t>(uniform_index(rng, pool[goal].traces.size()))};
  };

  std::vector<PairSample> pairs;
  pairs.reserve(n_pairs);
  for (int label : labels) {
    const auto ga = uniform_index(rng, pool.size());
    auto gb = ga;
    if (label == 0) {
      gb = uniform_index(rng, pool.size() - 1);
      if (gb >= ga) ++gb;
    }
    PairSample p;
    p.label = label;
    p.source_a = pick(ga);
    p.source_b = pick(gb);
    p.a = random_mask(pool[ga].traces[p.source_a.trace], rng);
    p.b = random_mask(pool[gb].traces[p.source_b.trace], rng);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::string_view to_string(Encoding e) {
  return e == Encoding::OneHot ? "onehot" : "coordinates";
}

Encoding encoding_from_string(std::string_view name) {
  if (name == "onehot") return Encoding::OneHot;
  if (name == "coordinates") return Encoding::Coordinates;
  fail(ErrorKind::Parse, "unknown encoding '" + std::string(name) + "'");
}

int encoding_dim(Encoding e, int width, int height) {
  const int actions = static_cast<int>(kNumActions);
  return e == Encoding::OneHot ? width * height + actions : 2 + actions;
}

EncodedSequence encode_trace(const Trace& trace, const GridEnv& env, Encoding mode) {
  const int w = env.width();
  const int h = env.height();
  const int dim = encoding_dim(mode, w, h);
  const int action_offset = dim - kNumActions;
  EncodedSequence seq;
  seq.mode = mode;
  seq.steps = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(trace.size()));
  if (mode == Encoding::OneHot) seq.active.reserve(trace.size());
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& o = trace.observations[t];
    if (!env.in_bounds(o.state)) {
      fail(ErrorKind::Encoding, "observation " + std::to_string(t) + " at " +
                                    to_string(o.state) + " lies outside " + env.id());
    }
    const auto col = static_cast<Eigen::Index>(t);
    const int a = action_offset + static_cast<int>(index_of(o.action));
    if (mode == Encoding::OneHot) {
      const int s = o.state.y * w + o.state.x;
      seq.steps(s, col) = 1.0;
      seq.active.push_back({s, a});
    } else {
      seq.steps(0, col) = static_cast<double>(o.state.x) / w;
      seq.steps(1, col) = static_cast<double>(o.state.y) / h;
    }
    seq.steps(a, col) = 1.0;
  }
  return seq;
}

Observation decode_one_hot(const EncodedSequence& seq, std::size_t t, const GridEnv& env) {
  if (seq.mode != Encoding::OneHot || t >= seq.length()) {
    fail(ErrorKind::ContractViolation, "decode_one_hot needs a one-hot column in range");
  }
  const int cells = env.width() * env.height();
  if (seq.input_dim() != encoding_dim(Encoding::OneHot, env.width(), env.height())) {
    fail(ErrorKind::Dimension, "sequence width does not match the environment");
  }
  const auto col = seq.steps.col(static_cast<Eigen::Index>(t));
  Eigen::Index s = 0;
  Eigen::Index a = 0;
  col.head(cells).maxCoeff(&s);
  col.tail(kNumActions).maxCoeff(&a);
  return {env.state_at(static_cast<std::size_t>(s)), action_from_index(static_cast<std::size_t>(a))};
}

namespace {

Json member_json(const TraceRef& ref, const Trace& t) {
  return {{"goal", ref.goal}, {"trace", ref.trace}, {"mask", to_string(t.mask_kind)},
          {"ratio", t.observed_ratio}, {"kept", t.kept}};
}

Trace member_from_json(const Json& j, const std::vector<GoalTraces>& pool, TraceRef& ref) {
  ref.goal = j.at("goal").get<std::uint32_t>();
  ref.trace = j.at("trace").get<std::uint32_t>();
  if (ref.goal >= pool.size() || ref.trace >= pool[ref.goal].traces.size()) {
    fail(ErrorKind::Parse, "pair references a trace missing from the pool");
  }
  const Trace& src = pool[ref.goal].traces[ref.trace];
  Trace out;
  out.goal = src.goal ? src.goal : std::optional<State>(pool[ref.goal].goal);
  out.mask_kind = mask_kind_from_string(j.at("mask").get<std::string>());
  out.observed_ratio = j.at("ratio").get<double>();
  out.kept = j.at("kept").get<std::vector<std::uint32_t>>();
  for (auto k : out.kept) {
    if (k >= src.size()) fail(ErrorKind::Parse, "kept index beyond source trace");
    out.observations.push_back(src.observations[k]);
  }
  return out;
}

}  // namespace

void save_pairs(std::ostream& out, const std::vector<GoalTraces>& pool,
                const std::vector<PairSample>& pairs) {
  for (const auto& p : pairs) {
    Json j = {{"label", p.label},
              {"goal_a", to_json(pool.at(p.source_a.goal).goal)},
              {"goal_b", to_json(pool.at(p.source_b.goal).goal)},
              {"a", member_json(p.source_a, p.a)},
              {"b", member_json(p.source_b, p.b)}};
    out << j.dump() << '\n';
  }
}

std::vector<PairSample> load_pairs(std::istream& in, const std::vector<GoalTraces>& pool) {
  std::vector<PairSample> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      PairSample p;
      p.label = j.at("label").get<int>();
      p.a = member_from_json(j.at("a"), pool, p.source_a);
      p.b = member_from_json(j.at("b"), pool, p.source_b);
      pairs.push_back(std::move(p));
    } catch (const Json::exception& e) {
      fail(ErrorKind::Parse, "pair line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace graml
