#include "mrgr/diffcore/kernels.hpp"

#include <cstdint>

namespace mrgr::diff::kernels {
namespace {

inline double elem(std::span<const double> x, std::size_t r, std::size_t c, std::size_t ld,
                   bool trans) {
  return trans ? x[c * ld + r] : x[r * ld + c];
}

inline void gemm_row(std::span<const double> a, std::span<const double> b, std::span<double> c,
                     std::size_t i, std::size_t m, std::size_t k, std::size_t n, bool trans_a,
                     bool trans_b) {
  const std::size_t lda = trans_a ? m : k;
  const std::size_t ldb = trans_b ? k : n;
  double* out = c.data() + i * n;
  for (std::size_t j = 0; j < n; ++j) out[j] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = elem(a, i, p, lda, trans_a);
    if (av == 0.0) continue;
    if (!trans_b) {
      const double* brow = b.data() + p * ldb;
      for (std::size_t j = 0; j < n; ++j) out[j] += av * brow[j];
    } else {
      for (std::size_t j = 0; j < n; ++j) out[j] += av * b[j * ldb + p];
    }
  }
}

}  // namespace

void gemm_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b) {
  for (std::size_t i = 0; i < m; ++i) gemm_row(a, b, c, i, m, k, n, trans_a, trans_b);
}

void gemm_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b) {
  const auto rows = static_cast<std::int64_t>(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i) {
    gemm_row(a, b, c, static_cast<std::size_t>(i), m, k, n, trans_a, trans_b);
  }
}

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b) {
  if (m > 1 && m * k * n >= kParallelGemmWork) {
    gemm_parallel(a, b, c, m, k, n, trans_a, trans_b);
  } else {
    gemm_serial(a, b, c, m, k, n, trans_a, trans_b);
  }
}

}  // namespace mrgr::diff::kernels
