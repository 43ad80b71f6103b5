#include "headline/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace headline::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1u << 15;

void prepare(Matrix& out, std::size_t rows, std::size_t cols, Mode mode) {
  if (mode == Mode::kAccumulate) {
    if (out.rows() != rows || out.cols() != cols) {
      throw std::invalid_argument("accumulate target has the wrong shape");
    }
    return;
  }
  if (out.rows() != rows || out.cols() != cols) {
    out = Matrix(rows, cols);
  } else {
    out.set_zero();
  }
}

void softmax_row(std::span<double> row) {
  double max = -std::numeric_limits<double>::infinity();
  for (double v : row) max = std::max(max, v);
  // Throwing here would terminate inside a parallel region; NaN instead
  // reaches the loss, where training reports divergence.
  if (!std::isfinite(max)) {
    std::fill(row.begin(), row.end(), std::numeric_limits<double>::quiet_NaN());
    return;
  }
  double sum = 0.0;
  for (double& v : row) {
    v = std::exp(v - max);
    sum += v;
  }
  const double inv = 1.0 / sum;
  for (double& v : row) v *= inv;
}

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out, Mode mode) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  prepare(out, a.rows(), b.cols(), mode);
  const auto m = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t k = a.cols(), n = b.cols();
#pragma omp parallel for schedule(static) if (a.rows() * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double* o = out.data() + static_cast<std::size_t>(i) * n;
    const double* ar = a.data() + static_cast<std::size_t>(i) * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = ar[p];
      const double* br = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out, Mode mode) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_at_b: row counts differ");
  prepare(out, a.cols(), b.cols(), mode);
  const auto m = static_cast<std::ptrdiff_t>(a.cols());
  const std::size_t k = a.rows(), n = b.cols(), lda = a.cols();
#pragma omp parallel for schedule(static) if (a.cols() * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    double* o = out.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = a.data()[p * lda + static_cast<std::size_t>(i)];
      const double* br = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out, Mode mode) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_a_bt: column counts differ");
  prepare(out, a.rows(), b.rows(), mode);
  const auto m = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t k = a.cols(), n = b.rows();
#pragma omp parallel for schedule(static) if (a.rows() * k * n > kParallelWork)
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    const double* ar = a.data() + static_cast<std::size_t>(i) * k;
    double* o = out.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* br = b.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      o[j] += s;
    }
  }
}

void softmax_rows(Matrix& m) {
  const auto rows = static_cast<std::ptrdiff_t>(m.rows());
#pragma omp parallel for schedule(static) if (m.size() > kParallelWork)
  for (std::ptrdiff_t r = 0; r < rows; ++r) softmax_row(m.row(static_cast<std::size_t>(r)));
}

void add_row_bias(Matrix& m, const Matrix& bias) {
  if (bias.rows() != 1 || bias.cols() != m.cols()) {
    throw std::invalid_argument("add_row_bias: bias shape mismatch");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += bias(0, c);
  }
}

void accumulate_column_sums(const Matrix& m, Matrix& out) {
  if (out.rows() != 1 || out.cols() != m.cols()) {
    throw std::invalid_argument("accumulate_column_sums: shape mismatch");
  }
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += row[c];
  }
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace reference {

void matmul(const Matrix& a, const Matrix& b, Matrix& out, Mode mode) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  prepare(out, a.rows(), b.cols(), mode);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = out(i, j);
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(p, j);
      out(i, j) = s;
    }
  }
}

void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& out, Mode mode) {
  if (a.rows() != b.rows()) throw std::invalid_argument("matmul_at_b: row counts differ");
  prepare(out, a.cols(), b.cols(), mode);
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = out(i, j);
      for (std::size_t p = 0; p < a.rows(); ++p) s += a(p, i) * b(p, j);
      out(i, j) = s;
    }
  }
}

void matmul_a_bt(const Matrix& a, const Matrix& b, Matrix& out, Mode mode) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_a_bt: column counts differ");
  prepare(out, a.rows(), b.rows(), mode);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += a(i, p) * b(j, p);
      out(i, j) += s;
    }
  }
}

void softmax_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) softmax_row(m.row(r));
}

}  // namespace reference

}  // namespace headline::kernels
