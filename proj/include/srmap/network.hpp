#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "srmap/environments.hpp"

namespace srmap {

/// Three-layer feedforward map: one-hot state -> ReLU hidden -> output logits.
///
/// Inputs are always one-hot, so the first layer is stored input-major: the
/// hidden pre-activation for state s is simply column s of W1 plus b1. The
/// second layer is stored hidden-major for the same reason (only active hidden
/// units contribute). The accessors below present the conventional
/// W1[hidden][input] and W2[output][hidden] views.
class LayeredNetwork {
 public:
  LayeredNetwork() = default;
  LayeredNetwork(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                 std::uint64_t seed = 0);

  std::size_t input_width() const noexcept { return input_; }
  std::size_t hidden_width() const noexcept { return hidden_; }
  std::size_t output_width() const noexcept { return output_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double& w1(std::size_t h, std::size_t i) { return w1_[i * hidden_ + h]; }
  double w1(std::size_t h, std::size_t i) const { return w1_[i * hidden_ + h]; }
  double& w2(std::size_t o, std::size_t h) { return w2_[h * output_ + o]; }
  double w2(std::size_t o, std::size_t h) const { return w2_[h * output_ + o]; }
  std::span<double> b1() noexcept { return b1_; }
  std::span<const double> b1() const noexcept { return b1_; }
  std::span<double> b2() noexcept { return b2_; }
  std::span<const double> b2() const noexcept { return b2_; }

  // Hidden weights driven by input unit i.
  std::span<double> w1_column(std::size_t i) { return {w1_.data() + i * hidden_, hidden_}; }
  std::span<const double> w1_column(std::size_t i) const { return {w1_.data() + i * hidden_, hidden_}; }
  // Output weights fed by hidden unit h.
  std::span<double> w2_fanout(std::size_t h) { return {w2_.data() + h * output_, output_}; }
  std::span<const double> w2_fanout(std::size_t h) const { return {w2_.data() + h * output_, output_}; }

  /// Every trainable parameter, in checkpoint order (W1, b1, W2, b2).
  std::vector<std::span<double>> parameter_blocks();
  std::vector<std::span<const double>> parameter_blocks() const;

  /// ReLU hidden activations and output logits for a one-hot input.
  void evaluate(StateId state, std::span<double> hidden, std::span<double> logits) const;
  std::vector<double> logits(StateId state) const;

  bool operator==(const LayeredNetwork&) const = default;

 private:
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
  std::size_t output_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> w1_;
  std::vector<double> b1_;
  std::vector<double> w2_;
  std::vector<double> b2_;
};

/// Square network (output width = input width = n_states) with weights drawn
/// from U(-sqrt(6/(fan_in+fan_out)), +sqrt(...)) and zero biases.
LayeredNetwork init_network(std::size_t n_states, std::size_t hidden_width, std::uint64_t seed);
LayeredNetwork init_network(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                            std::uint64_t seed);

/// Softmax over the output logits.
std::vector<double> forward(const LayeredNetwork& net, StateId state);
void softmax_in_place(std::span<double> z);

enum class LrSchedule { Constant, LinearDecay };

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  LrSchedule schedule = LrSchedule::LinearDecay;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean cross-entropy over each epoch
  double final_loss = 0.0;
  double seconds = 0.0;
  std::size_t steps = 0;
};

/// Mini-batch gradient descent on the cross-entropy between the softmax
/// output and the one-hot successor.
TrainReport train(LayeredNetwork& net, const TrainingSet& data, const TrainConfig& cfg);

/// Gradient of the mean cross-entropy over `batch`, laid out like the parameter blocks.
struct Gradients {
  std::vector<std::vector<double>> blocks;
  double loss = 0.0;
};
Gradients cross_entropy_gradients(const LayeredNetwork& net, std::span<const TransitionPair> batch);
double cross_entropy(const LayeredNetwork& net, std::span<const TransitionPair> batch);

/// One gradient step on 0.5 * (logit[output] - target)^2 for a single state;
/// returns the logit before the step.
double regress_output(LayeredNetwork& net, StateId state, std::size_t output, double target,
                      double learning_rate);

/// Rows are forward(net, s) for every state; untrained rows follow the space.
TransitionMatrix predict_tp_matrix(const LayeredNetwork& net, const StateSpace& space);

// Binary checkpoint: "SRMAPNN" magic, format version, widths, seed, then the
// parameter blocks as little-endian IEEE doubles.
void save_checkpoint(std::ostream& out, const LayeredNetwork& net);
LayeredNetwork load_checkpoint(std::istream& in);

}  // namespace srmap
