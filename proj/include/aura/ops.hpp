#pragma once

// Kernel set for the forecasting stack. Every kernel is pure, computes in
// 64-bit floats, and records a reverse-mode rule when any input requires
// gradient.

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aura/tensor.hpp"

namespace aura::diff {

namespace detail {

inline bool any_grad(std::initializer_list<const Tensor*> ts) {
    for (const Tensor* t : ts)
        if (t->requires_grad()) return true;
    return false;
}

inline Tensor record(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                     std::function<void(const std::vector<double>&, AdjointMap&)> fn) {
    Tensor out = Tensor::from(std::move(shape), std::move(values));
    bool grad = false;
    for (const Tensor& t : inputs) grad = grad || t.requires_grad();
    if (grad) {
        out.node()->requires_grad = true;
        for (const Tensor& t : inputs) out.node()->parents.push_back(t.node());
        out.node()->backprop = std::move(fn);
    }
    return out;
}

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic. add/mul/div additionally accept a broadcast operand:
// b of shape [1] (scalar) anywhere, and for add a row vector [1xN] against
// [MxN].
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
    auto an = a.node();
    auto bn = b.node();
    if (a.shape() == b.shape()) {
        std::vector<double> v(a.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) + b.at(i);
        return detail::record(a.shape(), std::move(v), {a, b},
                              [an, bn](const std::vector<double>& g, AdjointMap& adj) {
                                  if (an->requires_grad) {
                                      auto& da = adjoint_of(adj, an.get());
                                      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                                  }
                                  if (bn->requires_grad) {
                                      auto& db = adjoint_of(adj, bn.get());
                                      for (std::size_t i = 0; i < g.size(); ++i) db[i] += g[i];
                                  }
                              });
    }
    if (b.size() == 1) {
        std::vector<double> v(a.size());
        double s = b.at(0);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) + s;
        return detail::record(a.shape(), std::move(v), {a, b},
                              [an, bn](const std::vector<double>& g, AdjointMap& adj) {
                                  if (an->requires_grad) {
                                      auto& da = adjoint_of(adj, an.get());
                                      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                                  }
                                  if (bn->requires_grad) {
                                      auto& db = adjoint_of(adj, bn.get());
                                      for (double gi : g) db[0] += gi;
                                  }
                              });
    }
    if (a.rank() == 2 && b.rank() == 2 && b.dim(0) == 1 && b.dim(1) == a.dim(1)) {
        std::size_t m = a.dim(0), n = a.dim(1);
        std::vector<double> v(a.size());
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) v[r * n + c] = a.at(r, c) + b.at(0, c);
        return detail::record(a.shape(), std::move(v), {a, b},
                              [an, bn, m, n](const std::vector<double>& g, AdjointMap& adj) {
                                  if (an->requires_grad) {
                                      auto& da = adjoint_of(adj, an.get());
                                      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                                  }
                                  if (bn->requires_grad) {
                                      auto& db = adjoint_of(adj, bn.get());
                                      for (std::size_t r = 0; r < m; ++r)
                                          for (std::size_t c = 0; c < n; ++c) db[c] += g[r * n + c];
                                  }
                              });
    }
    throw DimError("add: incompatible shapes " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()));
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::check_same_shape("sub", a, b);
    auto an = a.node();
    auto bn = b.node();
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) - b.at(i);
    return detail::record(a.shape(), std::move(v), {a, b},
                          [an, bn](const std::vector<double>& g, AdjointMap& adj) {
                              if (an->requires_grad) {
                                  auto& da = adjoint_of(adj, an.get());
                                  for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                              }
                              if (bn->requires_grad) {
                                  auto& db = adjoint_of(adj, bn.get());
                                  for (std::size_t i = 0; i < g.size(); ++i) db[i] -= g[i];
                              }
                          });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    auto an = a.node();
    auto bn = b.node();
    if (a.shape() == b.shape()) {
        std::vector<double> v(a.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) * b.at(i);
        return detail::record(a.shape(), std::move(v), {a, b},
                              [an, bn](const std::vector<double>& g, AdjointMap& adj) {
                                  if (an->requires_grad) {
                                      auto& da = adjoint_of(adj, an.get());
                                      for (std::size_t i = 0; i < g.size(); ++i)
                                          da[i] += g[i] * bn->values[i];
                                  }
                                  if (bn->requires_grad) {
                                      auto& db = adjoint_of(adj, bn.get());
                                      for (std::size_t i = 0; i < g.size(); ++i)
                                          db[i] += g[i] * an->values[i];
                                  }
                              });
    }
    if (b.size() == 1) {
        double s = b.at(0);
        std::vector<double> v(a.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) * s;
        return detail::record(a.shape(), std::move(v), {a, b},
                              [an, bn, s](const std::vector<double>& g, AdjointMap& adj) {
                                  if (an->requires_grad) {
                                      auto& da = adjoint_of(adj, an.get());
                                      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * s;
                                  }
                                  if (bn->requires_grad) {
                                      auto& db = adjoint_of(adj, bn.get());
                                      double acc = 0.0;
                                      for (std::size_t i = 0; i < g.size(); ++i)
                                          acc += g[i] * an->values[i];
                                      db[0] += acc;
                                  }
                              });
    }
    if (a.size() == 1) return mul(b, a);
    throw DimError("mul: incompatible shapes " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()));
}

inline Tensor div(const Tensor& a, const Tensor& b) {
    auto an = a.node();
    auto bn = b.node();
    if (b.size() == 1) {
        double s = b.at(0);
        std::vector<double> v(a.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) / s;
        return detail::record(a.shape(), std::move(v), {a, b},
                              [an, bn, s](const std::vector<double>& g, AdjointMap& adj) {
                                  if (an->requires_grad) {
                                      auto& da = adjoint_of(adj, an.get());
                                      for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] / s;
                                  }
                                  if (bn->requires_grad) {
                                      auto& db = adjoint_of(adj, bn.get());
                                      double acc = 0.0;
                                      for (std::size_t i = 0; i < g.size(); ++i)
                                          acc -= g[i] * an->values[i] / (s * s);
                                      db[0] += acc;
                                  }
                              });
    }
    detail::check_same_shape("div", a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) / b.at(i);
    return detail::record(a.shape(), std::move(v), {a, b},
                          [an, bn](const std::vector<double>& g, AdjointMap& adj) {
                              if (an->requires_grad) {
                                  auto& da = adjoint_of(adj, an.get());
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                      da[i] += g[i] / bn->values[i];
                              }
                              if (bn->requires_grad) {
                                  auto& db = adjoint_of(adj, bn.get());
                                  for (std::size_t i = 0; i < g.size(); ++i)
                                      db[i] -= g[i] * an->values[i] / (bn->values[i] * bn->values[i]);
                              }
                          });
}

inline Tensor add_scalar(const Tensor& a, double c) {
    auto an = a.node();
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) + c;
    return detail::record(a.shape(), std::move(v), {a},
                          [an](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                          });
}

inline Tensor mul_scalar(const Tensor& a, double c) {
    auto an = a.node();
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.at(i) * c;
    return detail::record(a.shape(), std::move(v), {a},
                          [an, c](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i] * c;
                          });
}

// ---------------------------------------------------------------------------
// Linear algebra and shape surgery.
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw DimError("matmul: operands must be rank-2, got " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
    if (a.dim(1) != b.dim(0))
        throw DimError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> v(m * n, 0.0);
    const auto& av = a.data();
    const auto& bv = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) v[i * n + j] += aip * bv[p * n + j];
        }
    auto an = a.node();
    auto bn = b.node();
    return detail::record(
        {m, n}, std::move(v), {a, b},
        [an, bn, m, k, n](const std::vector<double>& g, AdjointMap& adj) {
            if (an->requires_grad) {
                // dA = G * B^T
                auto& da = adjoint_of(adj, an.get());
                const auto& bv = bn->values;
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) {
                        const double gij = g[i * n + j];
                        for (std::size_t p = 0; p < k; ++p) da[i * k + p] += gij * bv[p * n + j];
                    }
            }
            if (bn->requires_grad) {
                // dB = A^T * G
                auto& db = adjoint_of(adj, bn.get());
                const auto& av = an->values;
                for (std::size_t p = 0; p < k; ++p)
                    for (std::size_t i = 0; i < m; ++i) {
                        const double aip = av[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) db[p * n + j] += aip * g[i * n + j];
                    }
            }
        });
}

inline Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw DimError("transpose: rank-2 required, got " + shape_str(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1);
    std::vector<double> v(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) v[j * m + i] = a.at(i, j);
    auto an = a.node();
    return detail::record({n, m}, std::move(v), {a},
                          [an, m, n](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < m; ++i)
                                  for (std::size_t j = 0; j < n; ++j) da[i * n + j] += g[j * m + i];
                          });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.size())
        throw DimError("reshape: element count mismatch, " + shape_str(a.shape()) + " -> " +
                       shape_str(shape));
    auto an = a.node();
    std::vector<double> v = a.data();
    return detail::record(std::move(shape), std::move(v), {a},
                          [an](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
                          });
}

inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimError("concat_rows: no inputs");
    const std::size_t n = parts[0].cols();
    std::size_t m = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != 2 || p.dim(1) != n)
            throw DimError("concat_rows: width mismatch, expected " + std::to_string(n) + " got " +
                           shape_str(p.shape()));
        m += p.dim(0);
    }
    std::vector<double> v;
    v.reserve(m * n);
    for (const Tensor& p : parts) v.insert(v.end(), p.data().begin(), p.data().end());
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    return detail::record({m, n}, std::move(v), parts,
                          [nodes, n](const std::vector<double>& g, AdjointMap& adj) {
                              std::size_t off = 0;
                              for (const NodePtr& p : nodes) {
                                  const std::size_t cnt = numel(p->shape);
                                  if (p->requires_grad) {
                                      auto& dp = adjoint_of(adj, p.get());
                                      for (std::size_t i = 0; i < cnt; ++i) dp[i] += g[off + i];
                                  }
                                  off += cnt;
                              }
                          });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimError("concat_cols: no inputs");
    const std::size_t m = parts[0].rows();
    std::size_t n = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != 2 || p.dim(0) != m)
            throw DimError("concat_cols: height mismatch, expected " + std::to_string(m) +
                           " got " + shape_str(p.shape()));
        n += p.dim(1);
    }
    std::vector<double> v(m * n);
    std::size_t coff = 0;
    for (const Tensor& p : parts) {
        const std::size_t pc = p.dim(1);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < pc; ++c) v[r * n + coff + c] = p.at(r, c);
        coff += pc;
    }
    std::vector<NodePtr> nodes;
    for (const Tensor& p : parts) nodes.push_back(p.node());
    return detail::record({m, n}, std::move(v), parts,
                          [nodes, m, n](const std::vector<double>& g, AdjointMap& adj) {
                              std::size_t coff = 0;
                              for (const NodePtr& p : nodes) {
                                  const std::size_t pc = p->shape[1];
                                  if (p->requires_grad) {
                                      auto& dp = adjoint_of(adj, p.get());
                                      for (std::size_t r = 0; r < m; ++r)
                                          for (std::size_t c = 0; c < pc; ++c)
                                              dp[r * pc + c] += g[r * n + coff + c];
                                  }
                                  coff += pc;
                              }
                          });
}

inline Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
    if (a.rank() != 2 || r0 >= r1 || r1 > a.dim(0))
        throw DimError("slice_rows: invalid range [" + std::to_string(r0) + "," +
                       std::to_string(r1) + ") for " + shape_str(a.shape()));
    const std::size_t n = a.dim(1), m = r1 - r0;
    std::vector<double> v(a.data().begin() + r0 * n, a.data().begin() + r1 * n);
    auto an = a.node();
    return detail::record({m, n}, std::move(v), {a},
                          [an, r0, n](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < g.size(); ++i) da[r0 * n + i] += g[i];
                          });
}

inline Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
    if (a.rank() != 2 || c0 >= c1 || c1 > a.dim(1))
        throw DimError("slice_cols: invalid range [" + std::to_string(c0) + "," +
                       std::to_string(c1) + ") for " + shape_str(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1), w = c1 - c0;
    std::vector<double> v(m * w);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < w; ++c) v[r * w + c] = a.at(r, c0 + c);
    auto an = a.node();
    return detail::record({m, w}, std::move(v), {a},
                          [an, c0, n, w, m](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t r = 0; r < m; ++r)
                                  for (std::size_t c = 0; c < w; ++c)
                                      da[r * n + c0 + c] += g[r * w + c];
                          });
}

// ---------------------------------------------------------------------------
// Reductions.
// ---------------------------------------------------------------------------

inline Tensor sum_all(const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    auto an = a.node();
    return detail::record({1}, {s}, {a}, [an](const std::vector<double>& g, AdjointMap& adj) {
        auto& da = adjoint_of(adj, an.get());
        for (double& d : da) d += g[0];
    });
}

inline Tensor mean_all(const Tensor& a) {
    double s = 0.0;
    for (double x : a.data()) s += x;
    const double inv = 1.0 / static_cast<double>(a.size());
    auto an = a.node();
    return detail::record({1}, {s * inv}, {a},
                          [an, inv](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (double& d : da) d += g[0] * inv;
                          });
}

// Column means of a rank-2 tensor: [MxN] -> [1xN].
inline Tensor mean_rows(const Tensor& a) {
    if (a.rank() != 2) throw DimError("mean_rows: rank-2 required, got " + shape_str(a.shape()));
    const std::size_t m = a.dim(0), n = a.dim(1);
    std::vector<double> v(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) v[c] += a.at(r, c);
    const double inv = 1.0 / static_cast<double>(m);
    for (double& x : v) x *= inv;
    auto an = a.node();
    return detail::record({1, n}, std::move(v), {a},
                          [an, m, n, inv](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t r = 0; r < m; ++r)
                                  for (std::size_t c = 0; c < n; ++c) da[r * n + c] += g[c] * inv;
                          });
}

// ---------------------------------------------------------------------------
// Nonlinearities and normalization.
// ---------------------------------------------------------------------------

// Slices along the last axis; rank-1 tensors are one slice. Stabilized by
// max-subtraction.
inline Tensor softmax(const Tensor& a) {
    if (a.rank() > 2) throw DimError("softmax: rank-1/2 supported, got " + shape_str(a.shape()));
    const std::size_t rows = a.rows(), n = a.cols();
    if (n < 1) throw DimError("softmax: empty axis");
    std::vector<double> v(a.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.data().data() + r * n;
        double* y = v.data() + r * n;
        double mx = x[0];
        for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = std::exp(x[i] - mx);
            z += y[i];
        }
        for (std::size_t i = 0; i < n; ++i) y[i] /= z;
    }
    auto an = a.node();
    std::vector<double> out = v;
    return detail::record(a.shape(), std::move(v), {a},
                          [an, rows, n, out](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t r = 0; r < rows; ++r) {
                                  const double* s = out.data() + r * n;
                                  const double* gr = g.data() + r * n;
                                  double dot = 0.0;
                                  for (std::size_t i = 0; i < n; ++i) dot += gr[i] * s[i];
                                  for (std::size_t i = 0; i < n; ++i)
                                      da[r * n + i] += s[i] * (gr[i] - dot);
                              }
                          });
}

inline Tensor sigmoid(const Tensor& a) {
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-a.at(i)));
    auto an = a.node();
    std::vector<double> out = v;
    return detail::record(a.shape(), std::move(v), {a},
                          [an, out](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < g.size(); ++i)
                                  da[i] += g[i] * out[i] * (1.0 - out[i]);
                          });
}

// Exact (erf-based) GELU.
inline Tensor gelu(const Tensor& a) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt2pi = 0.39894228040143267794;
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = a.at(i);
        v[i] = 0.5 * x * (1.0 + std::erf(x * inv_sqrt2));
    }
    auto an = a.node();
    return detail::record(a.shape(), std::move(v), {a},
                          [an](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < g.size(); ++i) {
                                  const double x = an->values[i];
                                  const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
                                  const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
                                  da[i] += g[i] * (cdf + x * pdf);
                              }
                          });
}

// Row-wise layer normalization with affine gain/bias: gamma, beta of shape
// [1xN] (or [N]).
inline Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                         double eps = 1e-5) {
    if (x.rank() != 2) throw DimError("layer_norm: rank-2 input required, got " + shape_str(x.shape()));
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (gamma.size() != n || beta.size() != n)
        throw DimError("layer_norm: gamma/beta width " + std::to_string(gamma.size()) + "/" +
                       std::to_string(beta.size()) + " does not match input " + shape_str(x.shape()));
    std::vector<double> v(m * n);
    std::vector<double> xhat(m * n);
    std::vector<double> inv_std(m);
    for (std::size_t r = 0; r < m; ++r) {
        const double* xr = x.data().data() + r * n;
        double mu = 0.0;
        for (std::size_t c = 0; c < n; ++c) mu += xr[c];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t c = 0; c < n; ++c) var += (xr[c] - mu) * (xr[c] - mu);
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        inv_std[r] = is;
        for (std::size_t c = 0; c < n; ++c) {
            const double h = (xr[c] - mu) * is;
            xhat[r * n + c] = h;
            v[r * n + c] = gamma.at(c) * h + beta.at(c);
        }
    }
    auto xn = x.node();
    auto gn = gamma.node();
    auto bn = beta.node();
    return detail::record(
        x.shape(), std::move(v), {x, gamma, beta},
        [xn, gn, bn, m, n, xhat, inv_std](const std::vector<double>& g, AdjointMap& adj) {
            if (gn->requires_grad) {
                auto& dg = adjoint_of(adj, gn.get());
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < n; ++c) dg[c] += g[r * n + c] * xhat[r * n + c];
            }
            if (bn->requires_grad) {
                auto& db = adjoint_of(adj, bn.get());
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < n; ++c) db[c] += g[r * n + c];
            }
            if (xn->requires_grad) {
                auto& dx = adjoint_of(adj, xn.get());
                const double invn = 1.0 / static_cast<double>(n);
                for (std::size_t r = 0; r < m; ++r) {
                    double mean_gh = 0.0, mean_ghx = 0.0;
                    for (std::size_t c = 0; c < n; ++c) {
                        const double gh = g[r * n + c] * gn->values[c];
                        mean_gh += gh;
                        mean_ghx += gh * xhat[r * n + c];
                    }
                    mean_gh *= invn;
                    mean_ghx *= invn;
                    for (std::size_t c = 0; c < n; ++c) {
                        const double gh = g[r * n + c] * gn->values[c];
                        dx[r * n + c] +=
                            inv_std[r] * (gh - mean_gh - xhat[r * n + c] * mean_ghx);
                    }
                }
            }
        });
}

// Replaces entries where mask != 0 with `fill`. The mask is data, not a
// differentiation path.
inline Tensor masked_fill(const Tensor& a, const Tensor& mask, double fill) {
    detail::check_same_shape("masked_fill", a, mask);
    std::vector<double> v(a.size());
    std::vector<bool> keep(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool masked = mask.at(i) != 0.0;
        keep[i] = !masked;
        v[i] = masked ? fill : a.at(i);
    }
    auto an = a.node();
    return detail::record(a.shape(), std::move(v), {a},
                          [an, keep](const std::vector<double>& g, AdjointMap& adj) {
                              auto& da = adjoint_of(adj, an.get());
                              for (std::size_t i = 0; i < g.size(); ++i)
                                  if (keep[i]) da[i] += g[i];
                          });
}

// Mean squared error between two equal-length tensors, as a scalar graph node.
inline Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    detail::check_same_shape("mse_loss", pred, target);
    Tensor d = sub(pred, target);
    return mean_all(mul(d, d));
}

}  // namespace aura::diff
