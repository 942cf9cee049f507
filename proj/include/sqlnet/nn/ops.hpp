#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "sqlnet/nn/tape.hpp"
#include "sqlnet/nn/tensor.hpp"

// Differentiable operators over Tape expressions. Every operator validates
// shapes eagerly and throws ShapeError naming itself and the offending shapes.

namespace sqlnet::nn {

namespace detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
Eigen::Map<const RowMatrix<T>> as_matrix(const Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
template <typename T>
Eigen::Map<RowMatrix<T>> as_matrix(Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}
template <typename T>
Eigen::Map<const ColVector<T>> as_vector(const Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.size())};
}
template <typename T>
Eigen::Map<ColVector<T>> as_vector(Tensor<T>& t) {
  return {t.data(), static_cast<Eigen::Index>(t.size())};
}

[[noreturn]] inline void shape_fail(const std::string& op, const Shape& a, const Shape& b) {
  throw ShapeError(op + ": incompatible shapes " + to_string(a) + " and " + to_string(b));
}

[[noreturn]] inline void shape_fail(const std::string& op, const Shape& a) {
  throw ShapeError(op + ": unsupported shape " + to_string(a));
}

inline void require_vector(const std::string& op, const Shape& s) {
  if (s.size() != 1) shape_fail(op, s);
}

/// Sum that does not depend on element order: values are added in sorted
/// order, so permuting the input yields a bit-identical result.
template <typename T>
T order_invariant_sum(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  T total{0};
  for (T v : values) total += v;
  return total;
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

}  // namespace detail

template <typename T>
Expr<T> operator+(Expr<T> a, Expr<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.shape() != B.shape()) detail::shape_fail("add", A.shape(), B.shape());
  Tensor<T> out = A;
  out += B;
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    if (t.needs_grad(a)) t.grad(a) += g;
    if (t.needs_grad(b)) t.grad(b) += g;
  });
}

template <typename T>
Expr<T> scale(Expr<T> a, std::type_identity_t<T> factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v *= factor;
  return a.tape->record(std::move(out), {a}, [a, factor](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

template <typename T>
Expr<T> operator-(Expr<T> a) {
  return scale(a, T{-1});
}

template <typename T>
Expr<T> operator-(Expr<T> a, Expr<T> b) {
  return a + scale(b, T{-1});
}

/// Elementwise product.
template <typename T>
Expr<T> mul(Expr<T> a, Expr<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.shape() != B.shape()) detail::shape_fail("mul", A.shape(), B.shape());
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = A[i] * B[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    if (t.needs_grad(a)) {
      auto& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.needs_grad(b)) {
      auto& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

/// A (m x k) times B (k) or B (k x n).
template <typename T>
Expr<T> matmul(Expr<T> a, Expr<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || B.rank() < 1 || B.rank() > 2 || A.cols() != B.rows()) {
    detail::shape_fail("matmul", A.shape(), B.shape());
  }
  const bool vec = B.rank() == 1;
  Tensor<T> out(vec ? Shape{A.rows()} : Shape{A.rows(), B.cols()});
  if (vec) {
    detail::as_vector(out).noalias() = detail::as_matrix(A) * detail::as_vector(B);
  } else {
    detail::as_matrix(out).noalias() = detail::as_matrix(A) * detail::as_matrix(B);
  }
  return a.tape->record(std::move(out), {a, b}, [a, b, vec](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    if (t.needs_grad(a)) {
      if (vec) {
        detail::as_matrix(t.grad(a)).noalias() += detail::as_vector(g) * detail::as_vector(B).transpose();
      } else {
        detail::as_matrix(t.grad(a)).noalias() += detail::as_matrix(g) * detail::as_matrix(B).transpose();
      }
    }
    if (t.needs_grad(b)) {
      if (vec) {
        detail::as_vector(t.grad(b)).noalias() += detail::as_matrix(A).transpose() * detail::as_vector(g);
      } else {
        detail::as_matrix(t.grad(b)).noalias() += detail::as_matrix(A).transpose() * detail::as_matrix(g);
      }
    }
  });
}

/// A^T B for A (k x m) and B (k) or B (k x n).
template <typename T>
Expr<T> matmul_t(Expr<T> a, Expr<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 2 || B.rank() < 1 || B.rank() > 2 || A.rows() != B.rows()) {
    detail::shape_fail("matmul_t", A.shape(), B.shape());
  }
  const bool vec = B.rank() == 1;
  Tensor<T> out(vec ? Shape{A.cols()} : Shape{A.cols(), B.cols()});
  if (vec) {
    detail::as_vector(out).noalias() = detail::as_matrix(A).transpose() * detail::as_vector(B);
  } else {
    detail::as_matrix(out).noalias() = detail::as_matrix(A).transpose() * detail::as_matrix(B);
  }
  return a.tape->record(std::move(out), {a, b}, [a, b, vec](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    if (t.needs_grad(a)) {
      if (vec) {
        detail::as_matrix(t.grad(a)).noalias() += detail::as_vector(B) * detail::as_vector(g).transpose();
      } else {
        detail::as_matrix(t.grad(a)).noalias() += detail::as_matrix(B) * detail::as_matrix(g).transpose();
      }
    }
    if (t.needs_grad(b)) {
      if (vec) {
        detail::as_vector(t.grad(b)).noalias() += detail::as_matrix(A) * detail::as_vector(g);
      } else {
        detail::as_matrix(t.grad(b)).noalias() += detail::as_matrix(A) * detail::as_matrix(g);
      }
    }
  });
}

template <typename T>
Expr<T> sigmoid(Expr<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v = detail::stable_sigmoid(v);
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Tensor<T>& y, const Tensor<T>& g) {
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (T{1} - y[i]);
  });
}

template <typename T>
Expr<T> tanh(Expr<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v = std::tanh(v);
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Tensor<T>& y, const Tensor<T>& g) {
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (T{1} - y[i] * y[i]);
  });
}

template <typename T>
Expr<T> log(Expr<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v = std::log(v);
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    const auto& x = t.value(a);
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / x[i];
  });
}

/// log(sigmoid(x)) without overflow for large |x|.
template <typename T>
Expr<T> log_sigmoid(Expr<T> a) {
  Tensor<T> out = a.value();
  for (auto& v : out.values()) v = std::min(v, T{0}) - std::log1p(std::exp(-std::abs(v)));
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    const auto& x = t.value(a);
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * detail::stable_sigmoid(-x[i]);
  });
}

/// Sum of all entries, as a scalar.
template <typename T>
Expr<T> sum(Expr<T> a) {
  const auto& A = a.value();
  T total{0};
  for (T v : A.values()) total += v;
  return a.tape->record(Tensor<T>::scalar(total), {a}, [a](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    auto& ga = t.grad(a);
    for (auto& v : ga.values()) v += g[0];
  });
}

template <typename T>
Expr<T> dot(Expr<T> a, Expr<T> b) {
  const auto& A = a.value();
  const auto& B = b.value();
  if (A.rank() != 1 || A.shape() != B.shape()) detail::shape_fail("dot", A.shape(), B.shape());
  const T result = detail::as_vector(A).dot(detail::as_vector(B));
  return a.tape->record(Tensor<T>::scalar(result), {a, b}, [a, b](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    const auto& A = t.value(a);
    const auto& B = t.value(b);
    if (t.needs_grad(a)) detail::as_vector(t.grad(a)) += g[0] * detail::as_vector(B);
    if (t.needs_grad(b)) detail::as_vector(t.grad(b)) += g[0] * detail::as_vector(A);
  });
}

/// Concatenates vectors end to end.
template <typename T>
Expr<T> concat(const std::vector<Expr<T>>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  std::vector<T> out;
  for (const auto& p : parts) {
    detail::require_vector("concat", p.shape());
    const auto& v = p.value().values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return parts.front().tape->record(Tensor<T>::vector(std::move(out)), parts,
                                    [parts](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                                      std::size_t offset = 0;
                                      for (const auto& p : parts) {
                                        const std::size_t n = t.value(p).size();
                                        if (t.needs_grad(p)) {
                                          auto& gp = t.grad(p);
                                          for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
                                        }
                                        offset += n;
                                      }
                                    });
}

/// Contiguous sub-vector [offset, offset + length).
template <typename T>
Expr<T> slice(Expr<T> a, std::size_t offset, std::size_t length) {
  const auto& A = a.value();
  detail::require_vector("slice", A.shape());
  if (length == 0 || offset + length > A.size()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + length) +
                     ") outside " + to_string(A.shape()));
  }
  std::vector<T> out(A.values().begin() + offset, A.values().begin() + offset + length);
  return a.tape->record(Tensor<T>::vector(std::move(out)), {a},
                        [a, offset](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                          auto& ga = t.grad(a);
                          for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
                        });
}

/// Builds a (d x n) matrix whose j-th column is columns[j].
template <typename T>
Expr<T> stack_columns(const std::vector<Expr<T>>& columns) {
  if (columns.empty()) throw ShapeError("stack_columns: no inputs");
  const std::size_t d = columns.front().size();
  const std::size_t n = columns.size();
  Tensor<T> out({d, n});
  for (std::size_t j = 0; j < n; ++j) {
    const auto& c = columns[j].value();
    if (c.rank() != 1 || c.size() != d) detail::shape_fail("stack_columns", columns.front().shape(), c.shape());
    for (std::size_t i = 0; i < d; ++i) out.at(i, j) = c[i];
  }
  return columns.front().tape->record(std::move(out), columns,
                                      [columns](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                                        for (std::size_t j = 0; j < columns.size(); ++j) {
                                          if (!t.needs_grad(columns[j])) continue;
                                          auto& gc = t.grad(columns[j]);
                                          for (std::size_t i = 0; i < gc.size(); ++i) gc[i] += g.at(i, j);
                                        }
                                      });
}

/// The j-th column of a matrix.
template <typename T>
Expr<T> column(Expr<T> m, std::size_t j) {
  const auto& M = m.value();
  if (M.rank() != 2 || j >= M.cols()) {
    throw ShapeError("column: index " + std::to_string(j) + " outside " + to_string(M.shape()));
  }
  Tensor<T> out({M.rows()});
  for (std::size_t i = 0; i < M.rows(); ++i) out[i] = M.at(i, j);
  return m.tape->record(std::move(out), {m}, [m, j](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    auto& gm = t.grad(m);
    for (std::size_t i = 0; i < g.size(); ++i) gm.at(i, j) += g[i];
  });
}

/// Adds vector v (d) to every column of m (d x n).
template <typename T>
Expr<T> add_to_columns(Expr<T> m, Expr<T> v) {
  const auto& M = m.value();
  const auto& V = v.value();
  if (M.rank() != 2 || V.rank() != 1 || M.rows() != V.size()) {
    detail::shape_fail("add_to_columns", M.shape(), V.shape());
  }
  Tensor<T> out = M;
  detail::as_matrix(out).colwise() += detail::as_vector(V);
  return m.tape->record(std::move(out), {m, v}, [m, v](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    if (t.needs_grad(m)) t.grad(m) += g;
    if (t.needs_grad(v)) detail::as_vector(t.grad(v)) += detail::as_matrix(g).rowwise().sum();
  });
}

/// Numerically stable softmax over a vector. The normalizer is summed in
/// sorted order so permuting the input permutes the output exactly.
template <typename T>
Expr<T> softmax(Expr<T> a) {
  const auto& A = a.value();
  detail::require_vector("softmax", A.shape());
  const T peak = *std::max_element(A.values().begin(), A.values().end());
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = std::exp(A[i] - peak);
  const T total = detail::order_invariant_sum(out.values());
  for (auto& v : out.values()) v /= total;
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Tensor<T>& y, const Tensor<T>& g) {
    T gy{0};
    for (std::size_t i = 0; i < y.size(); ++i) gy += g[i] * y[i];
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += y[i] * (g[i] - gy);
  });
}

template <typename T>
Expr<T> log_softmax(Expr<T> a) {
  const auto& A = a.value();
  detail::require_vector("log_softmax", A.shape());
  const T peak = *std::max_element(A.values().begin(), A.values().end());
  std::vector<T> exps(A.size());
  for (std::size_t i = 0; i < A.size(); ++i) exps[i] = std::exp(A[i] - peak);
  const T log_total = std::log(detail::order_invariant_sum(std::move(exps))) + peak;
  Tensor<T> out(A.shape());
  for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - log_total;
  return a.tape->record(std::move(out), {a}, [a](Tape<T>& t, const Tensor<T>& y, const Tensor<T>& g) {
    T gsum{0};
    for (std::size_t i = 0; i < g.size(); ++i) gsum += g[i];
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < y.size(); ++i) ga[i] += g[i] - std::exp(y[i]) * gsum;
  });
}

/// Element i of a vector, as a scalar.
template <typename T>
Expr<T> pick(Expr<T> a, std::size_t i) {
  const auto& A = a.value();
  detail::require_vector("pick", A.shape());
  if (i >= A.size()) throw ShapeError("pick: index " + std::to_string(i) + " outside " + to_string(A.shape()));
  return a.tape->record(Tensor<T>::scalar(A[i]), {a}, [a, i](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
    t.grad(a)[i] += g[0];
  });
}

/// Row `row` of a matrix, as a vector (embedding lookup).
template <typename T>
Expr<T> gather_row(Expr<T> table, std::size_t row) {
  const auto& M = table.value();
  if (M.rank() != 2 || row >= M.rows()) {
    throw ShapeError("gather_row: row " + std::to_string(row) + " outside " + to_string(M.shape()));
  }
  const std::size_t n = M.cols();
  std::vector<T> out(M.data() + row * n, M.data() + (row + 1) * n);
  return table.tape->record(Tensor<T>::vector(std::move(out)), {table},
                            [table, row, n](Tape<T>& t, const Tensor<T>&, const Tensor<T>& g) {
                              T* dst = t.grad(table).data() + row * n;
                              for (std::size_t i = 0; i < n; ++i) dst[i] += g[i];
                            });
}

/// Negative log-likelihood of class `target` under softmax(logits).
template <typename T>
Expr<T> cross_entropy(Expr<T> logits, std::size_t target) {
  return -pick(log_softmax(logits), target);
}

}  // namespace sqlnet::nn
