#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "sqlnet/nn/ops.hpp"
#include "sqlnet/nn/tape.hpp"
#include "sqlnet/nn/tensor.hpp"

using namespace sqlnet::nn;

namespace {

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Central differences of a scalar function over every entry of every input,
// compared with the tape's gradients.
double max_gradient_error(const std::vector<Tensor<double>>& inputs,
                          const std::function<Expr<double>(Tape<double>&, std::vector<Expr<double>>&)>& f) {
  std::vector<Parameter<double>> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) params.emplace_back("p" + std::to_string(i), inputs[i]);
  auto run = [&](bool record) {
    Tape<double> tape(record);
    std::vector<Expr<double>> xs;
    for (auto& p : params) xs.push_back(tape.parameter(p));
    auto out = f(tape, xs);
    const double v = out.value().item();
    if (record) tape.backward(out);
    return v;
  };
  run(true);
  double worst = 0.0;
  const double h = 1e-5;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value[i];
      p.value[i] = saved + h;
      const double plus = run(false);
      p.value[i] = saved - h;
      const double minus = run(false);
      p.value[i] = saved;
      const double numeric = (plus - minus) / (2 * h);
      const double scale = std::max({std::abs(numeric), std::abs(p.grad[i]), 1e-6});
      worst = std::max(worst, std::abs(numeric - p.grad[i]) / scale);
    }
  }
  return worst;
}

}  // namespace

TEST(Tensor, RejectsZeroExtentAndMismatchedData) {
  EXPECT_THROW(Tensor<double>({0}), ShapeError);
  EXPECT_THROW(Tensor<double>({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  Tensor<double> t({2, 3});
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Ops, SigmoidTanhAtZero) {
  Tape<double> tape;
  auto x = tape.constant(Tensor<double>::vector({0.0}));
  EXPECT_DOUBLE_EQ(sigmoid(x).value()[0], 0.5);
  EXPECT_DOUBLE_EQ(tanh(x).value()[0], 0.0);
}

TEST(Ops, IdentityMatmul) {
  std::mt19937_64 rng(1);
  Tape<double> tape;
  auto x = random_tensor({4, 3}, rng);
  auto y = matmul(tape.constant(Tensor<double>::identity(4)), tape.constant(x));
  EXPECT_EQ(y.value(), x);
  auto v = random_tensor({4}, rng);
  EXPECT_EQ(matmul(tape.constant(Tensor<double>::identity(4)), tape.constant(v)).value(), v);
}

TEST(Ops, ShapeErrorsNameTheOperation) {
  Tape<double> tape;
  auto a = tape.constant(Tensor<double>({2, 3}));
  auto b = tape.constant(Tensor<double>({2}));
  try {
    matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos) << e.what();
  }
  EXPECT_THROW(a + b, ShapeError);
  EXPECT_THROW(dot(b, tape.constant(Tensor<double>({3}))), ShapeError);
  EXPECT_THROW(softmax(a), ShapeError);
}

TEST(Softmax, Uniform) {
  Tape<double> tape;
  auto p = softmax(tape.constant(Tensor<double>::vector({0, 0, 0}))).value();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, LargeLogitsStayFinite) {
  Tape<double> tape;
  auto p = softmax(tape.constant(Tensor<double>::vector({1000, 0}))).value();
  EXPECT_TRUE(p.all_finite());
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
  auto lp = log_softmax(tape.constant(Tensor<double>::vector({1000, 0}))).value();
  EXPECT_NEAR(lp[1], -1000.0, 1e-9);
}

TEST(Softmax, LogOfIntegers) {
  Tape<double> tape;
  auto p = softmax(tape.constant(Tensor<double>::vector({std::log(1.0), std::log(2.0), std::log(3.0)}))).value();
  EXPECT_NEAR(p[0], 1.0 / 6, 1e-15);
  EXPECT_NEAR(p[1], 2.0 / 6, 1e-15);
  EXPECT_NEAR(p[2], 3.0 / 6, 1e-15);
}

TEST(Softmax, NormalizesOnRandomInputs) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Tape<double> tape(false);
    const std::size_t n = 1 + trial % 17;
    auto p = softmax(tape.constant(random_tensor({n}, rng, 30.0))).value();
    double total = 0.0;
    for (double v : p.values()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LE(v, 1.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
  }
}

TEST(Softmax, PermutingInputsPermutesOutputsExactly) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    auto x = random_tensor({n}, rng, 5.0);
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Tensor<double> y({n});
    for (std::size_t i = 0; i < n; ++i) y[i] = x[perm[i]];
    Tape<double> tape(false);
    auto px = softmax(tape.constant(x)).value();
    auto py = softmax(tape.constant(y)).value();
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(py[i], px[perm[i]]);
  }
}

TEST(Backward, SumGivesOnes) {
  Parameter<double> p("p", Tensor<double>::vector({1, 2, 3}));
  Tape<double> tape;
  tape.backward(sum(tape.parameter(p)));
  for (double g : p.grad.values()) EXPECT_EQ(g, 1.0);
}

TEST(Backward, SigmoidAtZero) {
  Parameter<double> p("x", Tensor<double>::vector({0.0}));
  Tape<double> tape;
  tape.backward(sum(sigmoid(tape.parameter(p))));
  EXPECT_DOUBLE_EQ(p.grad[0], 0.25);
}

TEST(Backward, TwiceIsAnError) {
  Parameter<double> p("x", Tensor<double>::vector({0.5}));
  Tape<double> tape;
  auto loss = sum(tape.parameter(p));
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), std::logic_error);
}

TEST(Backward, UnreachableParameterKeepsZeroGrad) {
  Parameter<double> used("a", Tensor<double>::vector({1.0, 2.0}));
  Parameter<double> unused("b", Tensor<double>::vector({3.0}));
  Tape<double> tape;
  tape.parameter(unused);
  tape.backward(sum(tape.parameter(used)));
  EXPECT_EQ(unused.grad[0], 0.0);
}

TEST(Backward, NonScalarLossRejected) {
  Parameter<double> p("x", Tensor<double>::vector({1.0, 2.0}));
  Tape<double> tape;
  EXPECT_THROW(tape.backward(tape.parameter(p)), std::logic_error);
}

TEST(Forward, BitIdenticalAcrossRuns) {
  std::mt19937_64 rng(9);
  auto a = random_tensor({5, 4}, rng);
  auto x = random_tensor({4}, rng);
  auto run = [&] {
    Tape<double> tape(false);
    return softmax(tanh(matmul(tape.constant(a), tape.constant(x)))).value();
  };
  EXPECT_EQ(run(), run());
}

// Reverse-mode gradients of every operator against central differences on
// randomized shapes up to d=16, L=8.
class OperatorGradients : public ::testing::TestWithParam<int> {};

TEST_P(OperatorGradients, MatchFiniteDifferences) {
  std::mt19937_64 rng(100 + GetParam());
  std::uniform_int_distribution<std::size_t> dim(1, 16), len(1, 8);
  const std::size_t d = dim(rng), l = len(rng), k = dim(rng);
  auto wsum = [&](std::size_t n) { return random_tensor({n}, rng); };
  struct Case {
    const char* name;
    std::vector<Tensor<double>> inputs;
    std::function<Expr<double>(Tape<double>&, std::vector<Expr<double>>&)> f;
  };
  const auto w_d = wsum(d), w_l = wsum(l), w_k = wsum(k), w_2d = wsum(2 * d);
  std::vector<Case> cases{
      {"add", {random_tensor({d}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(x[0] + x[1], t.constant(w_d)); }},
      {"sub_neg_scale", {random_tensor({d}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(scale(-(x[0] - x[1]), 0.7), t.constant(w_d)); }},
      {"mul", {random_tensor({d}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(mul(x[0], x[1]), t.constant(w_d)); }},
      {"matmul_vec", {random_tensor({k, d}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(matmul(x[0], x[1]), t.constant(w_k)); }},
      {"matmul_mat", {random_tensor({k, d}, rng), random_tensor({d, l}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(matmul_t(matmul(x[0], x[1]), t.constant(w_k)), t.constant(w_l)); }},
      {"matmul_t_vec", {random_tensor({d, l}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(matmul_t(x[0], x[1]), t.constant(w_l)); }},
      {"sigmoid_tanh", {random_tensor({d}, rng, 3.0)},
       [&](Tape<double>& t, auto& x) { return dot(sigmoid(x[0]) + tanh(x[0]), t.constant(w_d)); }},
      {"log", {random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(log(sigmoid(x[0])), t.constant(w_d)); }},
      {"log_sigmoid", {random_tensor({d}, rng, 8.0)},
       [&](Tape<double>& t, auto& x) { return dot(log_sigmoid(x[0]), t.constant(w_d)); }},
      {"concat_slice", {random_tensor({d}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) {
         auto c = concat<double>({x[0], x[1]});
         return dot(c, t.constant(w_2d)) + sum(slice(c, d / 2, d));
       }},
      {"stack_column", {random_tensor({d}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) {
         auto m = stack_columns<double>({x[0], x[1], x[0]});
         return dot(column(m, 2), t.constant(w_d)) + dot(column(m, 1), x[0]);
       }},
      {"add_to_columns", {random_tensor({d, l}, rng), random_tensor({d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(matmul_t(tanh(add_to_columns(x[0], x[1])), t.constant(w_d)), t.constant(w_l)); }},
      {"softmax", {random_tensor({l}, rng, 3.0)},
       [&](Tape<double>& t, auto& x) { return dot(softmax(x[0]), t.constant(w_l)); }},
      {"log_softmax_pick", {random_tensor({l}, rng, 3.0)},
       [&](Tape<double>& t, auto& x) { return pick(log_softmax(x[0]), l - 1) + scale(sum(log_softmax(x[0])), 0.1); }},
      {"cross_entropy", {random_tensor({k}, rng, 3.0)},
       [&](Tape<double>&, auto& x) { return cross_entropy(x[0], 0); }},
      {"gather_row", {random_tensor({l, d}, rng)},
       [&](Tape<double>& t, auto& x) { return dot(gather_row(x[0], l - 1), t.constant(w_d)); }},
  };
  for (const auto& c : cases) {
    EXPECT_LT(max_gradient_error(c.inputs, c.f), 1e-4) << c.name << " d=" << d << " l=" << l << " k=" << k;
  }
}

INSTANTIATE_TEST_SUITE_P(RandomShapes, OperatorGradients, ::testing::Range(0, 8));
