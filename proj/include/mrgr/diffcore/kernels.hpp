#pragma once

#include <cstddef>
#include <span>

namespace mrgr::diff::kernels {

// C (m x n) = op(A) * op(B), with op = transpose when the flag is set.
// A is m x k (or k x m when trans_a), B is k x n (or n x k when trans_b).
// Every output element is accumulated in increasing-k order in both
// variants, so they agree bit for bit.
void gemm_serial(std::span<const double> a, std::span<const double> b, std::span<double> c,
                 std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b);

void gemm_parallel(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b);

// Dispatches to the parallel kernel above a work threshold.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n, bool trans_a, bool trans_b);

// Multiply-accumulate count above which gemm() goes parallel.
inline constexpr std::size_t kParallelGemmWork = 1u << 16;

}  // namespace mrgr::diff::kernels
