#include "toxictrap/kernels.hpp"

#include <cmath>

#include "toxictrap/error.hpp"

namespace toxictrap::kernels {
namespace {

constexpr std::size_t kParallelRowCutoff = 64;
constexpr std::size_t kParallelVocabCutoff = 4096;

inline void score_row(const SparseRows& x, std::size_t r, std::span<const double> weights,
                      std::span<const double> bias, std::size_t dim, double* out) {
  const std::size_t labels = bias.size();
  for (std::size_t k = 0; k < labels; ++k) {
    const double* w = weights.data() + k * dim;
    double acc = bias[k];
    for (std::size_t j = x.offsets[r]; j < x.offsets[r + 1]; ++j) acc += w[x.index[j]] * x.value[j];
    out[k] = acc;
  }
}

inline double cosine_row(std::span<const float> matrix, std::span<const double> norms,
                         std::span<const float> query, double qnorm, std::size_t row) {
  const std::size_t dim = query.size();
  const float* v = matrix.data() + row * dim;
  double dot = 0;
  for (std::size_t d = 0; d < dim; ++d) dot += static_cast<double>(v[d]) * query[d];
  return dot / (norms[row] * qnorm);
}

double norm_of(std::span<const float> q) {
  double s = 0;
  for (float f : q) s += static_cast<double>(f) * f;
  if (s == 0.0) throw PreconditionError("cosine_scan: zero query vector");
  return std::sqrt(s);
}

void check_linear(const SparseRows& x, std::span<const double> weights,
                  std::span<const double> bias, std::size_t dim, std::span<double> out) {
  if (weights.size() != bias.size() * dim || out.size() != x.rows() * bias.size()) {
    throw PreconditionError("linear_scores: shape mismatch");
  }
}

}  // namespace

namespace serial {

void linear_scores(const SparseRows& x, std::span<const double> weights,
                   std::span<const double> bias, std::size_t dim, std::span<double> out) {
  check_linear(x, weights, bias, dim, out);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    score_row(x, r, weights, bias, dim, out.data() + r * bias.size());
  }
}

void cosine_scan(std::span<const float> matrix, std::span<const double> norms,
                 std::span<const float> query, std::span<double> out) {
  const double qnorm = norm_of(query);
  for (std::size_t r = 0; r < norms.size(); ++r) out[r] = cosine_row(matrix, norms, query, qnorm, r);
}

}  // namespace serial

namespace omp {

void linear_scores(const SparseRows& x, std::span<const double> weights,
                   std::span<const double> bias, std::size_t dim, std::span<double> out) {
  check_linear(x, weights, bias, dim, out);
  const auto rows = static_cast<std::int64_t>(x.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    score_row(x, static_cast<std::size_t>(r), weights, bias, dim,
              out.data() + static_cast<std::size_t>(r) * bias.size());
  }
}

void cosine_scan(std::span<const float> matrix, std::span<const double> norms,
                 std::span<const float> query, std::span<double> out) {
  const double qnorm = norm_of(query);
  const auto rows = static_cast<std::int64_t>(norms.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    out[static_cast<std::size_t>(r)] =
        cosine_row(matrix, norms, query, qnorm, static_cast<std::size_t>(r));
  }
}

}  // namespace omp

void linear_scores(const SparseRows& x, std::span<const double> weights,
                   std::span<const double> bias, std::size_t dim, std::span<double> out) {
  if (x.rows() >= kParallelRowCutoff) {
    omp::linear_scores(x, weights, bias, dim, out);
  } else {
    serial::linear_scores(x, weights, bias, dim, out);
  }
}

void cosine_scan(std::span<const float> matrix, std::span<const double> norms,
                 std::span<const float> query, std::span<double> out) {
  if (norms.size() >= kParallelVocabCutoff) {
    omp::cosine_scan(matrix, norms, query, out);
  } else {
    serial::cosine_scan(matrix, norms, query, out);
  }
}

}  // namespace toxictrap::kernels
