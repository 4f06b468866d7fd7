#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mrgr/diffcore/tensor.hpp"

namespace mrgr::diff {

// Binary elementwise ops accept equal shapes, or a right operand that is a
// 1 x cols row, a rows x 1 column, or a 1 x 1 scalar, broadcast over the left.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double k);
Tensor add_scalar(const Tensor& a, double k);
Tensor neg(const Tensor& a);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor tanh(const Tensor& a);
// Clip at zero; the subgradient at the kink is 0.
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor square(const Tensor& a);
// Values outside [lo, hi] are clamped and pass no gradient.
Tensor clamp(const Tensor& a, double lo, double hi);
Tensor softmax_rows(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor sum_rows(const Tensor& a);  // rows x cols -> 1 x cols
Tensor sum_cols(const Tensor& a);  // rows x cols -> rows x 1

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
// Repeats a 1 x cols row `n` times.
Tensor repeat_rows(const Tensor& a, std::size_t n);
// out[r] = a[r, index[r]]; result is rows x 1.
Tensor pick(const Tensor& a, std::span<const std::size_t> index);

// Shannon entropy of a column or row of non-negative weights; zero weights
// contribute nothing.
Tensor entropy(const Tensor& weights);
// Entropy of each row; rows x cols -> rows x 1.
Tensor entropy_rows(const Tensor& weights);

// Same values, new shape (row-major order is preserved).
Tensor reshape(const Tensor& a, std::size_t rows, std::size_t cols);
// Sums consecutive groups of `block` rows: (n*block) x c -> n x c.
Tensor sum_row_blocks(const Tensor& a, std::size_t block);
// out[s] = sum of rows i with segment[i] == s; result is segments x cols.
Tensor segment_sum(const Tensor& a, std::span<const std::size_t> segment, std::size_t segments);
// out[i] = a[index[i]]; rows may repeat.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);

}  // namespace mrgr::diff
