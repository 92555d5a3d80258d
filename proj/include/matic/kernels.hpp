#pragma once

#include <cstddef>
#include <span>

namespace matic::kernels {

// Data-parallel inner loops used by the network and training code. Each
// kernel exists twice: a serial reference in kernels::serial and an
// OpenMP version in kernels::par. Both compute every output element with
// the same sequential accumulation order, so results are bit-identical
// and the dispatcher below may pick either freely. kernel_bench compares
// their throughput.

namespace serial {

// out[r] = bias[r] + sum_c w[r*cols + c] * x[c]
void dense_affine(std::span<const double> w, std::span<const double> bias,
                  std::span<const double> x, std::span<double> out,
                  std::size_t rows, std::size_t cols);

// back[c] = sum_r w[r*cols + c] * delta[r]
void dense_backprop_delta(std::span<const double> w, std::span<const double> delta,
                          std::span<double> back, std::size_t rows, std::size_t cols);

// gw[r*cols + c] += delta[r] * x[c]; gb[r] += delta[r]
void dense_grad_accum(std::span<const double> delta, std::span<const double> x,
                      std::span<double> gw, std::span<double> gb,
                      std::size_t rows, std::size_t cols);

// y[i] = a * x[i] + y[i]
void axpy(double a, std::span<const double> x, std::span<double> y);

} // namespace serial

namespace par {

void dense_affine(std::span<const double> w, std::span<const double> bias,
                  std::span<const double> x, std::span<double> out,
                  std::size_t rows, std::size_t cols);

void dense_backprop_delta(std::span<const double> w, std::span<const double> delta,
                          std::span<double> back, std::size_t rows, std::size_t cols);

void dense_grad_accum(std::span<const double> delta, std::span<const double> x,
                      std::span<double> gw, std::span<double> gb,
                      std::size_t rows, std::size_t cols);

void axpy(double a, std::span<const double> x, std::span<double> y);

} // namespace par

// Work-size threshold below which the parallel versions are not worth the
// fork/join overhead.
inline constexpr std::size_t parallel_cutoff = 16384;

inline bool use_parallel(std::size_t work) { return work >= parallel_cutoff; }

void dense_affine(std::span<const double> w, std::span<const double> bias,
                  std::span<const double> x, std::span<double> out,
                  std::size_t rows, std::size_t cols);

void dense_backprop_delta(std::span<const double> w, std::span<const double> delta,
                          std::span<double> back, std::size_t rows, std::size_t cols);

void dense_grad_accum(std::span<const double> delta, std::span<const double> x,
                      std::span<double> gw, std::span<double> gb,
                      std::size_t rows, std::size_t cols);

void axpy(double a, std::span<const double> x, std::span<double> y);

} // namespace matic::kernels
