#include "mrgr/diffcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mrgr/diffcore/kernels.hpp"

namespace mrgr::diff {
namespace {

enum class Bcast { same, row, column, scalar };

Bcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa == sb) return Bcast::same;
  if (sb.rows == 1 && sb.cols == 1) return Bcast::scalar;
  if (sb.rows == 1 && sb.cols == sa.cols) return Bcast::row;
  if (sb.cols == 1 && sb.rows == sa.rows) return Bcast::column;
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + to_string(sa) +
                              " and " + to_string(sb));
}

inline std::size_t bindex(Bcast k, std::size_t i, std::size_t cols) {
  switch (k) {
    case Bcast::same: return i;
    case Bcast::row: return i % cols;
    case Bcast::column: return i / cols;
    case Bcast::scalar: return 0;
  }
  return 0;
}

template <class Fwd, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* op, Fwd fwd, DA da, DB db) {
  const Bcast k = broadcast_kind(a, b, op);
  const std::size_t n = a.size();
  const std::size_t cols = a.cols();
  auto av = a.data();
  auto bv = b.data();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[bindex(k, i, cols)]);
  if (!needs_grad({&a, &b})) return make_result(a.shape(), std::move(out), {}, nullptr);
  return make_result(a.shape(), std::move(out), {a, b},
                     [a, b, k, cols, da, db](std::span<const double> g,
                                             std::span<std::vector<double>*> gin) {
                       auto av = a.data();
                       auto bv = b.data();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         const std::size_t j = bindex(k, i, cols);
                         if (gin[0]) (*gin[0])[i] += g[i] * da(av[i], bv[j]);
                         if (gin[1]) (*gin[1])[j] += g[i] * db(av[i], bv[j]);
                       }
                     });
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  auto av = a.data();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i]);
  if (!needs_grad({&a})) return make_result(a.shape(), std::move(out), {}, nullptr);
  return make_result(a.shape(), out, {a},
                     [a, out, deriv](std::span<const double> g,
                                     std::span<std::vector<double>*> gin) {
                       auto av = a.data();
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         (*gin[0])[i] += g[i] * deriv(av[i], out[i]);
                       }
                     });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double, double y) { return 1.0 / y; }, [](double x, double y) { return -x / (y * y); });
}

Tensor scale(const Tensor& a, double k) {
  return unary(
      a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Tensor add_scalar(const Tensor& a, double k) {
  return unary(
      a, [k](double x) { return x + k; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ, " + to_string(a.shape()) +
                                " * " + to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  kernels::gemm(a.data(), b.data(), out, m, k, n, false, false);
  if (!needs_grad({&a, &b})) return make_result({m, n}, std::move(out), {}, nullptr);
  return make_result({m, n}, std::move(out), {a, b},
                     [a, b, m, k, n](std::span<const double> g,
                                     std::span<std::vector<double>*> gin) {
                       if (gin[0]) {
                         std::vector<double> ga(m * k);
                         kernels::gemm(g, b.data(), ga, m, n, k, false, true);
                         for (std::size_t i = 0; i < ga.size(); ++i) (*gin[0])[i] += ga[i];
                       }
                       if (gin[1]) {
                         std::vector<double> gb(k * n);
                         kernels::gemm(a.data(), g, gb, k, m, n, true, false);
                         for (std::size_t i = 0; i < gb.size(); ++i) (*gin[1])[i] += gb[i];
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto av = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  return make_result({c, r}, std::move(out), {a},
                     [r, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) (*gin[0])[i * c + j] += g[j * r + i];
                     });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto av = a.data();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = av.data() + i * c;
    double* y = out.data() + i * c;
    const double mx = *std::max_element(x, x + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < c; ++j) y[j] /= z;
  }
  return make_result({r, c}, out, {a},
                     [out, r, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < r; ++i) {
                         const double* y = out.data() + i * c;
                         const double* gr = g.data() + i * c;
                         double dot = 0.0;
                         for (std::size_t j = 0; j < c; ++j) dot += gr[j] * y[j];
                         for (std::size_t j = 0; j < c; ++j)
                           (*gin[0])[i * c + j] += y[j] * (gr[j] - dot);
                       }
                     });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return make_result({1, 1}, {s}, {a},
                     [](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (double& x : *gin[0]) x += g[0];
                     });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor sum_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto av = a.data();
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += av[i * c + j];
  return make_result({1, c}, std::move(out), {a},
                     [r, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) (*gin[0])[i * c + j] += g[j];
                     });
}

Tensor sum_cols(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto av = a.data();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i] += av[i * c + j];
  return make_result({r, 1}, std::move(out), {a},
                     [r, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < c; ++j) (*gin[0])[i * c + j] += g[i];
                     });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.rows() != r) {
      throw std::invalid_argument("concat_cols: row counts differ, " + to_string(parts[0].shape()) +
                                  " vs " + to_string(p.shape()));
    }
    offsets.push_back(c);
    c += p.cols();
  }
  std::vector<double> out(r * c);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto pv = parts[k].data();
    const std::size_t pc = parts[k].cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(pv.data() + i * pc, pc, out.data() + i * c + offsets[k]);
  }
  std::vector<Tensor> parents(parts.begin(), parts.end());
  std::vector<std::size_t> widths;
  for (const auto& p : parts) widths.push_back(p.cols());
  return make_result({r, c}, std::move(out), parents,
                     [r, c, offsets, widths](std::span<const double> g,
                                             std::span<std::vector<double>*> gin) {
                       for (std::size_t k = 0; k < gin.size(); ++k) {
                         if (!gin[k]) continue;
                         const std::size_t pc = widths[k];
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < pc; ++j)
                             (*gin[k])[i * pc + j] += g[i * c + offsets[k] + j];
                       }
                     });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.cols() != c) {
      throw std::invalid_argument("concat_rows: column counts differ, " +
                                  to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
    }
    offsets.push_back(r * c);
    r += p.rows();
  }
  std::vector<double> out;
  out.reserve(r * c);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<Tensor> parents(parts.begin(), parts.end());
  return make_result({r, c}, std::move(out), parents,
                     [offsets](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t k = 0; k < gin.size(); ++k) {
                         if (!gin[k]) continue;
                         auto& dst = *gin[k];
                         for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[offsets[k] + i];
                       }
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.rows()) {
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(begin) + ", " +
                                std::to_string(end) + ") of " + to_string(a.shape()));
  }
  const std::size_t c = a.cols();
  auto av = a.data();
  std::vector<double> out(av.begin() + static_cast<std::ptrdiff_t>(begin * c),
                          av.begin() + static_cast<std::ptrdiff_t>(end * c));
  return make_result({end - begin, c}, std::move(out), {a},
                     [begin, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[begin * c + i] += g[i];
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin >= end || end > a.cols()) {
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(begin) + ", " +
                                std::to_string(end) + ") of " + to_string(a.shape()));
  }
  const std::size_t r = a.rows(), c = a.cols(), w = end - begin;
  auto av = a.data();
  std::vector<double> out(r * w);
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(av.data() + i * c + begin, w, out.data() + i * w);
  return make_result({r, w}, std::move(out), {a},
                     [r, c, w, begin](std::span<const double> g,
                                      std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < r; ++i)
                         for (std::size_t j = 0; j < w; ++j)
                           (*gin[0])[i * c + begin + j] += g[i * w + j];
                     });
}

Tensor repeat_rows(const Tensor& a, std::size_t n) {
  if (a.rows() != 1) throw std::invalid_argument("repeat_rows: expects a single row");
  const std::size_t c = a.cols();
  std::vector<double> out;
  out.reserve(n * c);
  for (std::size_t i = 0; i < n; ++i) out.insert(out.end(), a.data().begin(), a.data().end());
  return make_result({n, c}, std::move(out), {a},
                     [n, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < n; ++i)
                         for (std::size_t j = 0; j < c; ++j) (*gin[0])[j] += g[i * c + j];
                     });
}

Tensor pick(const Tensor& a, std::span<const std::size_t> index) {
  const std::size_t r = a.rows(), c = a.cols();
  if (index.size() != r) {
    throw std::invalid_argument("pick: " + std::to_string(index.size()) + " indices for " +
                                std::to_string(r) + " rows");
  }
  auto av = a.data();
  std::vector<double> out(r);
  std::vector<std::size_t> idx(index.begin(), index.end());
  for (std::size_t i = 0; i < r; ++i) {
    if (idx[i] >= c) throw std::out_of_range("pick: column index out of range");
    out[i] = av[i * c + idx[i]];
  }
  return make_result({r, 1}, std::move(out), {a},
                     [idx, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         (*gin[0])[i * c + idx[i]] += g[i];
                     });
}

Tensor entropy(const Tensor& weights) {
  // Floor keeps the derivative finite for exactly-zero weights.
  static constexpr double kFloor = 1e-300;
  auto wv = weights.data();
  double h = 0.0;
  for (double w : wv) {
    if (w > 0.0) h -= w * std::log(w);
  }
  return make_result({1, 1}, {h}, {weights},
                     [weights](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       auto wv = weights.data();
                       for (std::size_t i = 0; i < wv.size(); ++i) {
                         (*gin[0])[i] -= g[0] * (std::log(std::max(wv[i], kFloor)) + 1.0);
                       }
                     });
}

Tensor entropy_rows(const Tensor& weights) {
  static constexpr double kFloor = 1e-300;
  const std::size_t r = weights.rows(), c = weights.cols();
  auto wv = weights.data();
  std::vector<double> out(r, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) {
      const double w = wv[i * c + j];
      if (w > 0.0) out[i] -= w * std::log(w);
    }
  return make_result({r, 1}, std::move(out), {weights},
                     [weights, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       auto wv = weights.data();
                       for (std::size_t i = 0; i < wv.size(); ++i) {
                         (*gin[0])[i] -= g[i / c] * (std::log(std::max(wv[i], kFloor)) + 1.0);
                       }
                     });
}

Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols) {
  if (rows * cols != a.size()) {
    throw std::invalid_argument("reshape: cannot view " + to_string(a.shape()) + " as " +
                                std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_result({rows, cols}, std::move(out), {a},
                     [](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < g.size(); ++i) (*gin[0])[i] += g[i];
                     });
}

Tensor sum_row_blocks(const Tensor& a, std::size_t block) {
  if (block == 0 || a.rows() % block != 0) {
    throw std::invalid_argument("sum_row_blocks: " + std::to_string(a.rows()) +
                                " rows do not split into blocks of " + std::to_string(block));
  }
  const std::size_t c = a.cols(), nb = a.rows() / block;
  auto av = a.data();
  std::vector<double> out(nb * c, 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j) out[(i / block) * c + j] += av[i * c + j];
  return make_result({nb, c}, std::move(out), {a},
                     [block, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       auto& dst = *gin[0];
                       for (std::size_t i = 0; i < dst.size(); ++i)
                         dst[i] += g[(i / c / block) * c + i % c];
                     });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  const std::size_t c = a.cols();
  auto av = a.data();
  std::vector<std::size_t> idx(index.begin(), index.end());
  std::vector<double> out(idx.size() * c);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= a.rows()) throw std::out_of_range("gather_rows: row index out of range");
    std::copy_n(av.data() + idx[i] * c, c, out.data() + i * c);
  }
  return make_result({idx.size(), c}, std::move(out), {a},
                     [idx, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < idx.size(); ++i)
                         for (std::size_t j = 0; j < c; ++j) (*gin[0])[idx[i] * c + j] += g[i * c + j];
                     });
}

Tensor segment_sum(const Tensor& a, std::span<const std::size_t> segment, std::size_t segments) {
  if (segment.size() != a.rows()) {
    throw std::invalid_argument("segment_sum: " + std::to_string(segment.size()) +
                                " segment ids for " + std::to_string(a.rows()) + " rows");
  }
  const std::size_t c = a.cols();
  auto av = a.data();
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  std::vector<double> out(segments * c, 0.0);
  for (std::size_t i = 0; i < seg.size(); ++i) {
    if (seg[i] >= segments) throw std::out_of_range("segment_sum: segment id out of range");
    for (std::size_t j = 0; j < c; ++j) out[seg[i] * c + j] += av[i * c + j];
  }
  if (!needs_grad({&a})) return make_result({segments, c}, std::move(out), {}, nullptr);
  return make_result({segments, c}, std::move(out), {a},
                     [seg, c](std::span<const double> g, std::span<std::vector<double>*> gin) {
                       for (std::size_t i = 0; i < seg.size(); ++i)
                         for (std::size_t j = 0; j < c; ++j) (*gin[0])[i * c + j] += g[seg[i] * c + j];
                     });
}

}  // namespace mrgr::diff
