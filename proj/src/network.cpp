#include "srmap/network.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "srmap/error.hpp"
#include "srmap/random.hpp"

namespace srmap {

namespace {

constexpr char kMagic[8] = {'S', 'R', 'M', 'A', 'P', 'N', 'N', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error(ErrorKind::Format, "truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

// Four independent partial sums so the reduction vectorizes without
// reassociation flags; the summation order is still fixed.
double dot(const double* a, const double* b, std::size_t n) {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    for (std::size_t k = 0; k < 4; ++k) acc[k] += a[i + k] * b[i + k];
  for (; i < n; ++i) acc[0] += a[i] * b[i];
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

void check_state(const LayeredNetwork& net, StateId state) {
  if (state >= net.input_width())
    throw Error(ErrorKind::Index,
                "state " + std::to_string(state) + " out of range for width " + std::to_string(net.input_width()));
}

}  // namespace

LayeredNetwork::LayeredNetwork(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                               std::uint64_t seed)
    : input_(input_width),
      hidden_(hidden_width),
      output_(output_width),
      seed_(seed),
      w1_(input_width * hidden_width, 0.0),
      b1_(hidden_width, 0.0),
      w2_(hidden_width * output_width, 0.0),
      b2_(output_width, 0.0) {}

std::vector<std::span<double>> LayeredNetwork::parameter_blocks() { return {w1_, b1_, w2_, b2_}; }

std::vector<std::span<const double>> LayeredNetwork::parameter_blocks() const { return {w1_, b1_, w2_, b2_}; }

void LayeredNetwork::evaluate(StateId state, std::span<double> hidden, std::span<double> logits) const {
  const auto col = w1_column(state);
  for (std::size_t h = 0; h < hidden_; ++h) hidden[h] = std::max(0.0, col[h] + b1_[h]);
  std::copy(b2_.begin(), b2_.end(), logits.begin());
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double a = hidden[h];
    if (a == 0.0) continue;
    const auto fan = w2_fanout(h);
    for (std::size_t o = 0; o < output_; ++o) logits[o] += a * fan[o];
  }
}

std::vector<double> LayeredNetwork::logits(StateId state) const {
  check_state(*this, state);
  std::vector<double> hidden(hidden_);
  std::vector<double> z(output_);
  evaluate(state, hidden, z);
  return z;
}

LayeredNetwork init_network(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                            std::uint64_t seed) {
  if (input_width == 0 || hidden_width == 0 || output_width == 0)
    throw Error(ErrorKind::Config, "network widths must be positive");
  LayeredNetwork net(input_width, hidden_width, output_width, seed);
  Rng rng(seed);
  const auto fill = [&](std::size_t fan_in, std::size_t fan_out, auto&& set) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t r = 0; r < fan_out; ++r)
      for (std::size_t c = 0; c < fan_in; ++c) set(r, c, bound * (2.0 * uniform01(rng) - 1.0));
  };
  fill(input_width, hidden_width, [&](std::size_t h, std::size_t i, double v) { net.w1(h, i) = v; });
  fill(hidden_width, output_width, [&](std::size_t o, std::size_t h, double v) { net.w2(o, h) = v; });
  return net;
}

LayeredNetwork init_network(std::size_t n_states, std::size_t hidden_width, std::uint64_t seed) {
  if (n_states < 2) throw Error(ErrorKind::Config, "network needs at least two states");
  return init_network(n_states, hidden_width, n_states, seed);
}

void softmax_in_place(std::span<double> z) {
  const double peak = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - peak);
    sum += v;
  }
  for (double& v : z) v /= sum;
}

std::vector<double> forward(const LayeredNetwork& net, StateId state) {
  auto z = net.logits(state);
  softmax_in_place(z);
  return z;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorKind::Config, "batch size must be at least 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Config, "learning rate must be positive");
}

namespace {

// Accumulates cross-entropy gradients for one-hot inputs. W1 gradients are
// only kept for the input columns the batch touched.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const LayeredNetwork& net)
      : net_(net),
        hidden_(net.hidden_width()),
        probs_(net.output_width()),
        g_w1_(net.input_width() * net.hidden_width(), 0.0),
        touched_(net.input_width(), false),
        g_b1_(net.hidden_width(), 0.0),
        g_w2_(net.hidden_width() * net.output_width(), 0.0),
        g_b2_(net.output_width(), 0.0) {}

  // Adds the gradient of -log p(to | from); returns that loss.
  double add(const TransitionPair& pair) {
    const std::size_t nh = net_.hidden_width();
    const std::size_t no = net_.output_width();
    net_.evaluate(pair.from, hidden_, probs_);
    const double peak = *std::max_element(probs_.begin(), probs_.end());
    double sum = 0.0;
    for (double& v : probs_) {
      v = std::exp(v - peak);
      sum += v;
    }
    for (double& v : probs_) v /= sum;
    const double loss = -std::log(std::max(probs_[pair.to], 1e-300));

    // probs_ becomes dL/dlogits = p - onehot(to).
    probs_[pair.to] -= 1.0;
    for (std::size_t o = 0; o < no; ++o) g_b2_[o] += probs_[o];

    if (!touched_[pair.from]) {
      touched_[pair.from] = true;
      touched_list_.push_back(pair.from);
    }
    double* g_col = g_w1_.data() + pair.from * nh;
    for (std::size_t h = 0; h < nh; ++h) {
      const double a = hidden_[h];
      if (a == 0.0) continue;  // ReLU inactive (or exactly at the kink): no gradient
      const auto fan = net_.w2_fanout(h);
      double* g_fan = g_w2_.data() + h * no;
      for (std::size_t o = 0; o < no; ++o) g_fan[o] += a * probs_[o];
      const double back = dot(fan.data(), probs_.data(), no);
      g_col[h] += back;
      g_b1_[h] += back;
    }
    ++count_;
    return loss;
  }

  // Parameter update p -= rate * g / count, then reset.
  void apply(LayeredNetwork& net, double rate) {
    const double scale = rate / static_cast<double>(count_);
    const std::size_t nh = net.hidden_width();
    for (StateId s : touched_list_) {
      auto col = net.w1_column(s);
      double* g = g_w1_.data() + s * nh;
      for (std::size_t h = 0; h < nh; ++h) {
        col[h] -= scale * g[h];
        g[h] = 0.0;
      }
      touched_[s] = false;
    }
    touched_list_.clear();
    step(net.b1(), g_b1_, scale);
    for (std::size_t h = 0; h < nh; ++h) step(net.w2_fanout(h), std::span(g_w2_).subspan(h * net.output_width(), net.output_width()), scale);
    step(net.b2(), g_b2_, scale);
    count_ = 0;
  }

  Gradients take() const {
    Gradients g;
    const double inv = 1.0 / static_cast<double>(count_);
    for (const auto* block : {&g_w1_, &g_b1_, &g_w2_, &g_b2_}) {
      g.blocks.emplace_back(*block);
      for (double& v : g.blocks.back()) v *= inv;
    }
    return g;
  }

 private:
  static void step(std::span<double> params, std::span<double> grads, double scale) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i] -= scale * grads[i];
      grads[i] = 0.0;
    }
  }

  const LayeredNetwork& net_;
  std::vector<double> hidden_;
  std::vector<double> probs_;
  std::vector<double> g_w1_;
  std::vector<bool> touched_;
  std::vector<StateId> touched_list_;
  std::vector<double> g_b1_;
  std::vector<double> g_w2_;
  std::vector<double> g_b2_;
  std::size_t count_ = 0;
};

void check_pairs(const LayeredNetwork& net, std::span<const TransitionPair> pairs) {
  for (const auto& p : pairs) {
    check_state(net, p.from);
    if (p.to >= net.output_width())
      throw Error(ErrorKind::Index, "successor " + std::to_string(p.to) + " out of range");
  }
}

}  // namespace

Gradients cross_entropy_gradients(const LayeredNetwork& net, std::span<const TransitionPair> batch) {
  if (batch.empty()) throw Error(ErrorKind::Input, "gradient of an empty batch");
  check_pairs(net, batch);
  GradientAccumulator acc(net);
  double loss = 0.0;
  for (const auto& p : batch) loss += acc.add(p);
  Gradients g = acc.take();
  g.loss = loss / static_cast<double>(batch.size());
  return g;
}

double cross_entropy(const LayeredNetwork& net, std::span<const TransitionPair> batch) {
  if (batch.empty()) return 0.0;
  check_pairs(net, batch);
  double loss = 0.0;
  for (const auto& p : batch) {
    const auto probs = forward(net, p.from);
    loss -= std::log(std::max(probs[p.to], 1e-300));
  }
  return loss / static_cast<double>(batch.size());
}

TrainReport train(LayeredNetwork& net, const TrainingSet& data, const TrainConfig& cfg) {
  cfg.validate();
  check_pairs(net, data.pairs);
  TrainReport report;
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = data.pairs.size();
  if (n == 0 || cfg.epochs == 0) return report;

  const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = static_cast<double>(batches_per_epoch * cfg.epochs);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed);
  GradientAccumulator acc(net);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < n; b += cfg.batch_size) {
      const std::size_t end = std::min(n, b + cfg.batch_size);
      for (std::size_t i = b; i < end; ++i) epoch_loss += acc.add(data.pairs[order[i]]);
      double rate = cfg.learning_rate;
      if (cfg.schedule == LrSchedule::LinearDecay)
        rate *= 1.0 - static_cast<double>(report.steps) / total_steps;
      acc.apply(net, rate);
      ++report.steps;
    }
    report.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  report.final_loss = report.epoch_loss.back();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double regress_output(LayeredNetwork& net, StateId state, std::size_t output, double target,
                      double learning_rate) {
  check_state(net, state);
  if (output >= net.output_width()) throw Error(ErrorKind::Index, "output unit out of range");
  const std::size_t nh = net.hidden_width();
  std::vector<double> hidden(nh);
  std::vector<double> z(net.output_width());
  net.evaluate(state, hidden, z);
  const double before = z[output];
  const double err = before - target;
  auto col = net.w1_column(state);
  auto b1 = net.b1();
  for (std::size_t h = 0; h < nh; ++h) {
    if (hidden[h] == 0.0) continue;
    double& w = net.w2(output, h);
    const double back = err * w;
    w -= learning_rate * err * hidden[h];
    col[h] -= learning_rate * back;
    b1[h] -= learning_rate * back;
  }
  net.b2()[output] -= learning_rate * err;
  return before;
}

TransitionMatrix predict_tp_matrix(const LayeredNetwork& net, const StateSpace& space) {
  if (net.input_width() != space.n_states || net.output_width() != space.n_states)
    throw Error(ErrorKind::Shape, "network width " + std::to_string(net.input_width()) + " does not match " +
                                      std::to_string(space.n_states) + " states");
  TransitionMatrix tp{Matrix(space.n_states, space.n_states), space.untrained_rows()};
  for (StateId s = 0; s < space.n_states; ++s) {
    const auto row = forward(net, s);
    std::copy(row.begin(), row.end(), tp.probs.row(s).begin());
  }
  return tp;
}

void save_checkpoint(std::ostream& out, const LayeredNetwork& net) {
  out.write(kMagic, sizeof(kMagic));
  put_u64(out, kCheckpointVersion);
  put_u64(out, net.input_width());
  put_u64(out, net.hidden_width());
  put_u64(out, net.output_width());
  put_u64(out, net.seed());
  for (const auto block : net.parameter_blocks())
    for (double v : block) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw Error(ErrorKind::Io, "failed writing checkpoint");
}

LayeredNetwork load_checkpoint(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kMagic))
    throw Error(ErrorKind::Format, "not a network checkpoint");
  if (get_u64(in) != kCheckpointVersion) throw Error(ErrorKind::Format, "unsupported checkpoint version");
  const std::size_t input = get_u64(in);
  const std::size_t hidden = get_u64(in);
  const std::size_t output = get_u64(in);
  const std::uint64_t seed = get_u64(in);
  if (input == 0 || hidden == 0 || output == 0 || input > (1u << 20) || hidden > (1u << 20) || output > (1u << 20))
    throw Error(ErrorKind::Format, "implausible checkpoint widths");
  LayeredNetwork net(input, hidden, output, seed);
  for (auto block : net.parameter_blocks())
    for (double& v : block) v = std::bit_cast<double>(get_u64(in));
  return net;
}

}  // namespace srmap
