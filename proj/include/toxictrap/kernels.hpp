#pragma once

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial
// reference with identical per-element arithmetic, so both produce bitwise
// equal results; tests compare them and bench/ times them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace toxictrap::kernels {

// Compressed sparse rows of hashed feature counts.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t rows() const noexcept { return offsets.size() - 1; }
};

// out[r * labels + k] = bias[k] + sum_j weights[k * dim + index_j] * value_j
namespace serial {
void linear_scores(const SparseRows& x, std::span<const double> weights,
                   std::span<const double> bias, std::size_t dim, std::span<double> out);
void cosine_scan(std::span<const float> matrix, std::span<const double> norms,
                 std::span<const float> query, std::span<double> out);
}  // namespace serial

namespace omp {
void linear_scores(const SparseRows& x, std::span<const double> weights,
                   std::span<const double> bias, std::size_t dim, std::span<double> out);
void cosine_scan(std::span<const float> matrix, std::span<const double> norms,
                 std::span<const float> query, std::span<double> out);
}  // namespace omp

// Dispatchers: OpenMP above a size cutoff, serial below.
void linear_scores(const SparseRows& x, std::span<const double> weights,
                   std::span<const double> bias, std::size_t dim, std::span<double> out);
void cosine_scan(std::span<const float> matrix, std::span<const double> norms,
                 std::span<const float> query, std::span<double> out);

}  // namespace toxictrap::kernels
