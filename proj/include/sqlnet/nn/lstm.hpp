#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sqlnet/nn/ops.hpp"
#include "sqlnet/nn/tape.hpp"

namespace sqlnet::nn {

/// Fills `p` uniformly in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
template <typename T>
void init_uniform(Parameter<T>& p, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.value.values()) v = static_cast<T>(dist(rng));
}

/// Weights of one LSTM direction. Gate blocks are stacked in the order
/// input, forget, output, candidate.
template <typename T>
struct LstmWeights {
  Parameter<T> input_weights;   // 4h x in
  Parameter<T> hidden_weights;  // 4h x h
  Parameter<T> bias;            // 4h

  LstmWeights() = default;
  LstmWeights(const std::string& prefix, std::size_t input_size, std::size_t hidden_size)
      : input_weights(prefix + ".w_input", Tensor<T>({4 * hidden_size, input_size})),
        hidden_weights(prefix + ".w_hidden", Tensor<T>({4 * hidden_size, hidden_size})),
        bias(prefix + ".bias", Tensor<T>({4 * hidden_size})) {}

  std::size_t input_size() const { return input_weights.value.cols(); }
  std::size_t hidden_size() const { return hidden_weights.value.cols(); }

  /// Uniform fan-in initialization with the forget-gate bias set to 1.
  void initialize(std::mt19937_64& rng) {
    const std::size_t h = hidden_size();
    init_uniform(input_weights, input_size(), rng);
    init_uniform(hidden_weights, h, rng);
    init_uniform(bias, h, rng);
    for (std::size_t i = h; i < 2 * h; ++i) bias.value[i] = T{1};
  }

  std::vector<Parameter<T>*> parameters() { return {&input_weights, &hidden_weights, &bias}; }
};

template <typename T>
struct LstmState {
  Expr<T> hidden;
  Expr<T> cell;
};

/// One step of the standard LSTM cell:
///   i, f, o = sigmoid(.), g = tanh(.), c = f*c_prev + i*g, h = o*tanh(c)
template <typename T>
LstmState<T> lstm_step(LstmWeights<T>& weights, Expr<T> x, const LstmState<T>& prev) {
  Tape<T>& tape = *x.tape;
  const std::size_t h = weights.hidden_size();
  if (x.size() != weights.input_size() || prev.hidden.size() != h || prev.cell.size() != h) {
    throw ShapeError("lstm_step: input " + to_string(x.shape()) + ", hidden " + to_string(prev.hidden.shape()) +
                     ", cell " + to_string(prev.cell.shape()) + " vs weights " +
                     to_string(weights.input_weights.value.shape()));
  }
  auto gates = matmul(tape.parameter(weights.input_weights), x) +
               matmul(tape.parameter(weights.hidden_weights), prev.hidden) + tape.parameter(weights.bias);
  auto in_gate = sigmoid(slice(gates, 0, h));
  auto forget_gate = sigmoid(slice(gates, h, h));
  auto out_gate = sigmoid(slice(gates, 2 * h, h));
  auto candidate = tanh(slice(gates, 3 * h, h));
  auto cell = mul(forget_gate, prev.cell) + mul(in_gate, candidate);
  auto hidden = mul(out_gate, tanh(cell));
  return {hidden, cell};
}

template <typename T>
LstmState<T> zero_state(Tape<T>& tape, std::size_t hidden_size) {
  auto zeros = tape.constant(Tensor<T>({hidden_size}));
  return {zeros, zeros};
}

template <typename T>
struct BiLstm {
  LstmWeights<T> forward;
  LstmWeights<T> backward;

  BiLstm() = default;
  BiLstm(const std::string& prefix, std::size_t input_size, std::size_t hidden_per_direction)
      : forward(prefix + ".fwd", input_size, hidden_per_direction),
        backward(prefix + ".bwd", input_size, hidden_per_direction) {}

  void initialize(std::mt19937_64& rng) {
    forward.initialize(rng);
    backward.initialize(rng);
  }

  /// Concatenated output width.
  std::size_t output_size() const { return forward.hidden_size() + backward.hidden_size(); }

  std::vector<Parameter<T>*> parameters() {
    auto out = forward.parameters();
    for (auto* p : backward.parameters()) out.push_back(p);
    return out;
  }
};

template <typename T>
struct BiLstmOutput {
  Expr<T> states;   // d x L; column i = [forward_i ; backward_i]
  Expr<T> summary;  // [forward at L ; backward at 1]
};

template <typename T>
BiLstmOutput<T> bilstm_encode(BiLstm<T>& lstm, const std::vector<Expr<T>>& inputs) {
  if (inputs.empty()) throw ShapeError("bilstm_encode: empty input sequence");
  Tape<T>& tape = *inputs.front().tape;
  const std::size_t n = inputs.size();
  std::vector<Expr<T>> fwd(n), bwd(n);
  auto state = zero_state(tape, lstm.forward.hidden_size());
  for (std::size_t i = 0; i < n; ++i) {
    state = lstm_step(lstm.forward, inputs[i], state);
    fwd[i] = state.hidden;
  }
  state = zero_state(tape, lstm.backward.hidden_size());
  for (std::size_t i = n; i-- > 0;) {
    state = lstm_step(lstm.backward, inputs[i], state);
    bwd[i] = state.hidden;
  }
  std::vector<Expr<T>> columns(n);
  for (std::size_t i = 0; i < n; ++i) columns[i] = concat<T>({fwd[i], bwd[i]});
  return {stack_columns(columns), concat<T>({fwd[n - 1], bwd[0]})};
}

}  // namespace sqlnet::nn
