#pragma once

#include "headline/tensor.hpp"

// Dense kernels used by the model. Each kernel exists twice: an OpenMP
// version parallel over output rows, and a plain serial version kept in
// `reference` for tests and benchmarks. Every output element is reduced in
// ascending index order by exactly one thread, so results do not depend on
// the thread count.
namespace headline::kernels {

enum class Mode { kOverwrite, kAccumulate };

/// out = a * b (or out += a * b).
void matmul(const Matrix& a, const Matrix& b, Matrix& out, Mode mode = Mode::kOverwrite);
/// out = a^T * b
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out, Mode mode = Mode::kOverwrite);
/// out = a * b^T
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out, Mode mode = Mode::kOverwrite);

/// Row-wise softmax in place. Entries equal to -inf get probability 0. A row
/// whose maximum is not finite (all -inf, +inf or NaN) becomes all NaN.
void softmax_rows(Matrix& m);

/// Adds the 1 x cols row vector `bias` to every row of m.
void add_row_bias(Matrix& m, const Matrix& bias);

/// out(0, j) += sum_i m(i, j)
void accumulate_column_sums(const Matrix& m, Matrix& out);

namespace reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out, Mode mode = Mode::kOverwrite);
void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out, Mode mode = Mode::kOverwrite);
void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out, Mode mode = Mode::kOverwrite);
void softmax_rows(Matrix& m);

}  // namespace reference

/// Threads OpenMP will use for the parallel kernels (1 without OpenMP).
int max_threads();

}  // namespace headline::kernels
