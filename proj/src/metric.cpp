#include "graml/metric.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "graml/error.hpp"
#include "graml/random.hpp"
#include "graml/text_io.hpp"

namespace graml {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Activations kept for backpropagation. Column t of `gates` holds
// (i, f, o, g) after their nonlinearities; h and c carry a leading zero column.
struct Tape {
  Eigen::MatrixXd gates;
  Eigen::MatrixXd c;
  Eigen::MatrixXd h;
};

void check_input(const LstmParams& p, const EncodedSequence& seq) {
  if (seq.length() == 0) fail(ErrorKind::ContractViolation, "cannot embed an empty sequence");
  if (seq.input_dim() != p.input_dim) {
    fail(ErrorKind::Dimension, "sequence step has dimension " + std::to_string(seq.input_dim()) +
                                   ", model expects " + std::to_string(p.input_dim));
  }
}

bool sparse(const EncodedSequence& seq) {
  return seq.mode == Encoding::OneHot && seq.active.size() == seq.length();
}

Tape run(const LstmParams& p, const EncodedSequence& seq) {
  check_input(p, seq);
  const int k = p.hidden;
  const auto T = static_cast<Eigen::Index>(seq.length());
  Tape tape;
  tape.gates.resize(4 * k, T);
  tape.c = Eigen::MatrixXd::Zero(k, T + 1);
  tape.h = Eigen::MatrixXd::Zero(k, T + 1);
  const bool one_hot = sparse(seq);
  Eigen::VectorXd z(4 * k);
  for (Eigen::Index t = 0; t < T; ++t) {
    z.noalias() = p.b + p.U * tape.h.col(t);
    if (one_hot) {
      const auto& act = seq.active[static_cast<std::size_t>(t)];
      z += p.W.col(act[0]) + p.W.col(act[1]);
    } else {
      z.noalias() += p.W * seq.steps.col(t);
    }
    auto gate = tape.gates.col(t);
    for (int r = 0; r < 3 * k; ++r) gate(r) = sigmoid(z(r));
    for (int r = 3 * k; r < 4 * k; ++r) gate(r) = std::tanh(z(r));
    tape.c.col(t + 1) = gate.segment(k, k).cwiseProduct(tape.c.col(t)) +
                        gate.head(k).cwiseProduct(gate.segment(3 * k, k));
    tape.h.col(t + 1) =
        gate.segment(2 * k, k).cwiseProduct(tape.c.col(t + 1).array().tanh().matrix());
  }
  return tape;
}

// Backpropagation through time from dL/dh_T.
void backprop(const LstmParams& p, const EncodedSequence& seq, const Tape& tape,
              const Eigen::VectorXd& dh_last, LstmParams& grad) {
  const int k = p.hidden;
  const auto T = static_cast<Eigen::Index>(seq.length());
  const bool one_hot = sparse(seq);
  Eigen::VectorXd dh = dh_last;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd dz(4 * k);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const auto gate = tape.gates.col(t);
    const auto i = gate.head(k).array();
    const auto f = gate.segment(k, k).array();
    const auto o = gate.segment(2 * k, k).array();
    const auto g = gate.segment(3 * k, k).array();
    const Eigen::ArrayXd tc = tape.c.col(t + 1).array().tanh();
    dc.array() += dh.array() * o * (1.0 - tc.square());
    dz.segment(0, k).array() = dc.array() * g * i * (1.0 - i);
    dz.segment(k, k).array() = dc.array() * tape.c.col(t).array() * f * (1.0 - f);
    dz.segment(2 * k, k).array() = dh.array() * tc * o * (1.0 - o);
    dz.segment(3 * k, k).array() = dc.array() * i * (1.0 - g.square());
    dc.array() *= f;

    grad.b += dz;
    grad.U.noalias() += dz * tape.h.col(t).transpose();
    if (one_hot) {
      const auto& act = seq.active[static_cast<std::size_t>(t)];
      grad.W.col(act[0]) += dz;
      grad.W.col(act[1]) += dz;
    } else {
      grad.W.noalias() += dz * seq.steps.col(t).transpose();
    }
    dh.noalias() = p.U.transpose() * dz;
  }
}

// dL/dd for d = ||v1 - v2||_1 and y_hat = exp(-d); zero where the clamp binds.
double loss_slope(double d, int y) {
  const double y_hat = std::exp(-d);
  if (y_hat <= kLossClamp || y_hat >= 1.0 - kLossClamp) return 0.0;
  return y - (1 - y) * y_hat / (1.0 - y_hat);
}

Eigen::VectorXd branch_seed(const Embedding& self, const Embedding& other, double slope) {
  Eigen::VectorXd dv(self.size());
  for (Eigen::Index r = 0; r < self.size(); ++r) dv(r) = slope * sign(self(r) - other(r));
  return dv;
}

double* slot(LstmParams& p, std::size_t i) {
  const auto nw = static_cast<std::size_t>(p.W.size());
  const auto nu = static_cast<std::size_t>(p.U.size());
  if (i < nw) return p.W.data() + i;
  i -= nw;
  if (i < nu) return p.U.data() + i;
  i -= nu;
  if (i < static_cast<std::size_t>(p.b.size())) return p.b.data() + i;
  fail(ErrorKind::ContractViolation, "parameter index out of range");
}

}  // namespace

LstmParams LstmParams::zeros(int input_dim, int hidden) {
  if (input_dim <= 0 || hidden <= 0) {
    fail(ErrorKind::ContractViolation, "LSTM dimensions must be positive");
  }
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden = hidden;
  p.W = Eigen::MatrixXd::Zero(4 * hidden, input_dim);
  p.U = Eigen::MatrixXd::Zero(4 * hidden, hidden);
  p.b = Eigen::VectorXd::Zero(4 * hidden);
  return p;
}

LstmParams LstmParams::random(int input_dim, int hidden, std::uint64_t seed) {
  LstmParams p = zeros(input_dim, hidden);
  Rng rng(derive_seed(seed, {0x157}));
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < p.W.size(); ++i) p.W.data()[i] = dist(rng);
  for (Eigen::Index i = 0; i < p.U.size(); ++i) p.U.data()[i] = dist(rng);
  for (Eigen::Index i = 0; i < p.b.size(); ++i) p.b(i) = dist(rng);
  p.b.segment(hidden, hidden).setConstant(1.0);
  return p;
}

double& LstmParams::operator[](std::size_t i) { return *slot(*this, i); }
double LstmParams::operator[](std::size_t i) const {
  return *slot(const_cast<LstmParams&>(*this), i);
}

void LstmParams::set_zero() {
  W.setZero();
  U.setZero();
  b.setZero();
}

double LstmParams::squared_norm() const {
  return W.squaredNorm() + U.squaredNorm() + b.squaredNorm();
}

bool LstmParams::all_finite() const {
  return W.allFinite() && U.allFinite() && b.allFinite();
}

bool operator==(const LstmParams& x, const LstmParams& y) {
  return x.input_dim == y.input_dim && x.hidden == y.hidden && x.W == y.W && x.U == y.U &&
         x.b == y.b;
}

Embedding lstm_forward(const LstmParams& p, const EncodedSequence& seq) {
  const Tape tape = run(p, seq);
  return tape.h.col(tape.h.cols() - 1);
}

double similarity(const Embedding& v1, const Embedding& v2) {
  if (v1.size() != v2.size()) {
    fail(ErrorKind::Dimension, "embedding sizes differ: " + std::to_string(v1.size()) + " vs " +
                                   std::to_string(v2.size()));
  }
  return std::exp(-(v1 - v2).cwiseAbs().sum());
}

double bce_loss(double y_hat, int y) {
  const double p = std::clamp(y_hat, kLossClamp, 1.0 - kLossClamp);
  return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

PairLoss pair_loss(const LstmParams& p, const EncodedSequence& a, const EncodedSequence& b,
                   int y) {
  const double y_hat = similarity(lstm_forward(p, a), lstm_forward(p, b));
  return {bce_loss(y_hat, y), y_hat};
}

PairLoss pair_backward(const LstmParams& p, const EncodedSequence& a, const EncodedSequence& b,
                       int y, LstmParams& grad) {
  const Tape ta = run(p, a);
  const Tape tb = run(p, b);
  const Embedding va = ta.h.col(ta.h.cols() - 1);
  const Embedding vb = tb.h.col(tb.h.cols() - 1);
  const double d = (va - vb).cwiseAbs().sum();
  const double y_hat = std::exp(-d);
  const double slope = loss_slope(d, y);
  if (slope != 0.0) {
    backprop(p, a, ta, branch_seed(va, vb, slope), grad);
    backprop(p, b, tb, branch_seed(vb, va, slope), grad);
  }
  return {bce_loss(y_hat, y), y_hat};
}

void branch_backward(const LstmParams& p, const EncodedSequence& branch, const Embedding& other,
                     int y, LstmParams& grad) {
  const Tape tape = run(p, branch);
  const Embedding v = tape.h.col(tape.h.cols() - 1);
  if (v.size() != other.size()) fail(ErrorKind::Dimension, "embedding sizes differ");
  const double slope = loss_slope((v - other).cwiseAbs().sum(), y);
  if (slope != 0.0) backprop(p, branch, tape, branch_seed(v, other, slope), grad);
}

double grad_check(const LstmParams& p, const EncodedSequence& a, const EncodedSequence& b, int y,
                  double h) {
  if (!(h > 0.0)) fail(ErrorKind::ContractViolation, "finite-difference step must be positive");
  LstmParams grad = LstmParams::zeros(p.input_dim, p.hidden);
  pair_backward(p, a, b, y, grad);
  LstmParams probe = p;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = pair_loss(probe, a, b, y).loss;
    probe[i] = orig - h;
    const double down = pair_loss(probe, a, b, y).loss;
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = grad[i];
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
  }
  return worst;
}

MetricModel make_model(const GridEnv& env, Encoding encoding, int hidden, std::uint64_t seed) {
  MetricModel m;
  m.params = LstmParams::random(encoding_dim(encoding, env.width(), env.height()), hidden, seed);
  m.encoding = encoding;
  m.env_id = env.id();
  m.width = env.width();
  m.height = env.height();
  return m;
}

Embedding embed(const MetricModel& model, const Trace& trace, const GridEnv& env) {
  if (env.width() != model.width || env.height() != model.height) {
    fail(ErrorKind::Dimension, "model was trained on a " + std::to_string(model.width) + "x" +
                                   std::to_string(model.height) + " grid");
  }
  return lstm_forward(model.params, encode_trace(trace, env, model.encoding));
}

double pair_accuracy(const MetricModel& model, const std::vector<PairSample>& pairs,
                     const GridEnv& env) {
  if (pairs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& p : pairs) {
    const double y_hat = similarity(embed(model, p.a, env), embed(model, p.b, env));
    if ((y_hat >= 0.5 ? 1 : 0) == p.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

TrainResult train(const std::vector<PairSample>& dataset, const TrainConfig& cfg,
                  const GridEnv& env) {
  if (dataset.empty()) fail(ErrorKind::ContractViolation, "training set is empty");
  if (!(cfg.learning_rate > 0.0)) fail(ErrorKind::Config, "learning_rate must be positive");
  if (cfg.epochs < 0 || cfg.batch_size <= 0 || cfg.hidden <= 0) {
    fail(ErrorKind::Config, "epochs, batch_size and hidden must be non-negative/positive");
  }
  if (!(cfg.holdout_fraction >= 0.0 && cfg.holdout_fraction < 1.0)) {
    fail(ErrorKind::Config, "holdout_fraction must lie in [0, 1)");
  }

  TrainResult result;
  result.model = make_model(env, cfg.encoding, cfg.hidden, cfg.seed);
  LstmParams& p = result.model.params;

  struct Encoded {
    EncodedSequence a;
    EncodedSequence b;
    int y;
  };
  std::vector<Encoded> data;
  data.reserve(dataset.size());
  for (const auto& s : dataset) {
    data.push_back({encode_trace(s.a, env, cfg.encoding), encode_trace(s.b, env, cfg.encoding),
                    s.label});
  }

  Rng rng(derive_seed(cfg.seed, {0x7a1}));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_held = static_cast<std::size_t>(
      std::floor(cfg.holdout_fraction * static_cast<double>(data.size())));
  const std::vector<std::size_t> held(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_held));
  std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(n_held), order.end());
  if (fit.empty()) fail(ErrorKind::Config, "hold-out split leaves no training pairs");

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  LstmParams grad = LstmParams::zeros(p.input_dim, p.hidden);
  LstmParams m1 = grad;
  LstmParams m2 = grad;
  const std::size_t n = p.size();
  std::uint64_t step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(fit.begin(), fit.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < fit.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(fit.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grad.set_zero();
      double batch_loss = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        const auto& e = data[fit[j]];
        batch_loss += pair_backward(p, e.a, e.b, e.y, grad).loss;
      }
      const double count = static_cast<double>(end - start);
      grad.W /= count;
      grad.U /= count;
      grad.b /= count;
      const double norm = std::sqrt(grad.squared_norm());
      if (!std::isfinite(batch_loss) || !std::isfinite(norm)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << start / cfg.batch_size
            << ": loss " << batch_loss / count << ", gradient norm " << norm;
        fail(ErrorKind::Divergence, msg.str());
      }
      if (norm > cfg.grad_clip && cfg.grad_clip > 0.0) {
        const double s = cfg.grad_clip / norm;
        grad.W *= s;
        grad.U *= s;
        grad.b *= s;
      }
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        double& a = m1[i];
        double& v = m2[i];
        a = kBeta1 * a + (1.0 - kBeta1) * g;
        v = kBeta2 * v + (1.0 - kBeta2) * g * g;
        p[i] -= cfg.learning_rate * (a / c1) / (std::sqrt(v / c2) + kEps);
      }
      epoch_loss += batch_loss;
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(fit.size()));
  }

  std::vector<PairSample> held_pairs;
  held_pairs.reserve(held.size());
  for (auto i : held) held_pairs.push_back(dataset[i]);
  result.heldout_pairs = held_pairs.size();
  result.heldout_accuracy = pair_accuracy(result.model, held_pairs, env);
  return result;
}

namespace {

void write_matrix(std::ostream& out, std::string_view name, const Eigen::MatrixXd& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << (c ? " " : "") << text_io::format_double(m(r, c));
    }
    out << '\n';
  }
}

Eigen::MatrixXd read_matrix(text_io::TokenReader& in, std::string_view name,
                            Eigen::Index rows, Eigen::Index cols) {
  in.expect(name);
  if (in.next_int() != rows || in.next_int() != cols) {
    fail(ErrorKind::Parse, "checkpoint block '" + std::string(name) + "' has wrong shape");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = in.next_double();
  }
  return m;
}

}  // namespace

void save_model(std::ostream& out, const MetricModel& model) {
  const auto& p = model.params;
  out << "graml-metric 1\n";
  out << "encoding " << to_string(model.encoding) << '\n';
  out << "env " << model.env_id << '\n';
  out << "dims " << model.width << ' ' << model.height << '\n';
  out << "lstm " << p.input_dim << ' ' << p.hidden << '\n';
  write_matrix(out, "W", p.W);
  write_matrix(out, "U", p.U);
  write_matrix(out, "b", p.b);
}

MetricModel load_model(std::istream& in) {
  text_io::TokenReader r(in);
  r.expect("graml-metric");
  if (r.next_int() != 1) fail(ErrorKind::Parse, "unsupported metric checkpoint version");
  MetricModel m;
  r.expect("encoding");
  m.encoding = encoding_from_string(r.next());
  r.expect("env");
  m.env_id = r.next();
  r.expect("dims");
  m.width = static_cast<int>(r.next_int());
  m.height = static_cast<int>(r.next_int());
  r.expect("lstm");
  const auto input_dim = static_cast<int>(r.next_int());
  const auto hidden = static_cast<int>(r.next_int());
  if (input_dim != encoding_dim(m.encoding, m.width, m.height)) {
    fail(ErrorKind::Parse, "checkpoint input_dim does not match its encoding and grid");
  }
  m.params = LstmParams::zeros(input_dim, hidden);
  m.params.W = read_matrix(r, "W", 4 * hidden, input_dim);
  m.params.U = read_matrix(r, "U", 4 * hidden, hidden);
  m.params.b = read_matrix(r, "b", 4 * hidden, 1);
  return m;
}

}  // namespace graml
