#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sqlnet/nn/tape.hpp"

namespace sqlnet::nn {

struct GradCheckOptions {
  double step = 1e-5;
  /// Entries checked per parameter; parameters at or below this size are
  /// checked exhaustively.
  std::size_t samples_per_parameter = 48;
  /// Gradient magnitudes below this are compared on an absolute scale. Near
  /// eps * |loss| / step the central difference is roundoff, not signal.
  double magnitude_floor = 1e-5;
  std::uint64_t seed = 17;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t entries_checked = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;

  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

/// Compares reverse-mode gradients of `loss` against central differences.
///
/// `loss` must rebuild the whole computation on the tape it is given; it is
/// called once with a recording tape and twice per checked entry without.
template <typename T>
GradCheckReport grad_check(const std::function<Expr<T>(Tape<T>&)>& loss, const std::vector<Parameter<T>*>& params,
                           const GradCheckOptions& options = {}) {
  for (auto* p : params) {
    p->requires_grad = true;
    p->zero_grad();
  }
  {
    Tape<T> tape;
    tape.backward(loss(tape));
  }
  auto evaluate = [&loss]() {
    Tape<T> tape(false);
    return static_cast<double>(loss(tape).value().item());
  };

  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (auto* p : params) {
    const std::size_t n = p->value.size();
    std::vector<std::size_t> picked(n);
    std::iota(picked.begin(), picked.end(), std::size_t{0});
    if (n > options.samples_per_parameter) {
      // Favor entries the loss actually touches (embedding rows), but keep a
      // few untouched ones to confirm they stay zero.
      std::vector<std::size_t> touched, untouched;
      for (std::size_t i = 0; i < n; ++i) (p->grad[i] != T{0} ? touched : untouched).push_back(i);
      std::shuffle(touched.begin(), touched.end(), rng);
      std::shuffle(untouched.begin(), untouched.end(), rng);
      const std::size_t zero_quota = std::min(untouched.size(), options.samples_per_parameter / 4);
      const std::size_t live_quota = std::min(touched.size(), options.samples_per_parameter - zero_quota);
      picked.assign(touched.begin(), touched.begin() + live_quota);
      picked.insert(picked.end(), untouched.begin(), untouched.begin() + zero_quota);
    }
    for (std::size_t i : picked) {
      const T saved = p->value[i];
      const T up = static_cast<T>(saved + options.step), down = static_cast<T>(saved - options.step);
      p->value[i] = up;
      const double plus = evaluate();
      p->value[i] = down;
      const double minus = evaluate();
      p->value[i] = saved;
      const double numeric = (plus - minus) / static_cast<double>(up - down);
      const double analytic = p->grad[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), options.magnitude_floor});
      const double rel = std::abs(numeric - analytic) / scale;
      ++report.entries_checked;
      if (rel > report.max_relative_error || report.entries_checked == 1) {
        report.max_relative_error = rel;
        report.worst_parameter = p->name;
        report.worst_index = i;
        report.worst_analytic = analytic;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace sqlnet::nn
