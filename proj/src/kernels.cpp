#include "matic/kernels.hpp"

#include <cstdint>

namespace matic::kernels {

namespace serial {

void dense_affine(std::span<const double> w, std::span<const double> bias,
                  std::span<const double> x, std::span<double> out,
                  std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w.data() + r * cols;
        double acc = bias[r];
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        out[r] = acc;
    }
}

void dense_backprop_delta(std::span<const double> w, std::span<const double> delta,
                          std::span<double> back, std::size_t rows, std::size_t cols) {
    for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += w[r * cols + c] * delta[r];
        back[c] = acc;
    }
}

void dense_grad_accum(std::span<const double> delta, std::span<const double> x,
                      std::span<double> gw, std::span<double> gb,
                      std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) {
        double d = delta[r];
        double* gr = gw.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) gr[c] += d * x[c];
        gb[r] += d;
    }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

} // namespace serial

namespace par {

void dense_affine(std::span<const double> w, std::span<const double> bias,
                  std::span<const double> x, std::span<double> out,
                  std::size_t rows, std::size_t cols) {
    const double* wd = w.data();
    const double* xd = x.data();
    const double* bd = bias.data();
    double* od = out.data();
    std::int64_t n = std::int64_t(rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        const double* wr = wd + std::size_t(r) * cols;
        double acc = bd[r];
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * xd[c];
        od[r] = acc;
    }
}

void dense_backprop_delta(std::span<const double> w, std::span<const double> delta,
                          std::span<double> back, std::size_t rows, std::size_t cols) {
    const double* wd = w.data();
    const double* dd = delta.data();
    double* bd = back.data();
    std::int64_t n = std::int64_t(cols);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < n; ++c) {
        double acc = 0.0;
        for (std::size_t r = 0; r < rows; ++r) acc += wd[r * cols + std::size_t(c)] * dd[r];
        bd[c] = acc;
    }
}

void dense_grad_accum(std::span<const double> delta, std::span<const double> x,
                      std::span<double> gw, std::span<double> gb,
                      std::size_t rows, std::size_t cols) {
    const double* dd = delta.data();
    const double* xd = x.data();
    double* gwd = gw.data();
    double* gbd = gb.data();
    std::int64_t n = std::int64_t(rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        double d = dd[r];
        double* gr = gwd + std::size_t(r) * cols;
        for (std::size_t c = 0; c < cols; ++c) gr[c] += d * xd[c];
        gbd[r] += d;
    }
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    const double* xd = x.data();
    double* yd = y.data();
    std::int64_t n = std::int64_t(x.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) yd[i] += a * xd[i];
}

} // namespace par

void dense_affine(std::span<const double> w, std::span<const double> bias,
                  std::span<const double> x, std::span<double> out,
                  std::size_t rows, std::size_t cols) {
    if (use_parallel(rows * cols))
        par::dense_affine(w, bias, x, out, rows, cols);
    else
        serial::dense_affine(w, bias, x, out, rows, cols);
}

void dense_backprop_delta(std::span<const double> w, std::span<const double> delta,
                          std::span<double> back, std::size_t rows, std::size_t cols) {
    if (use_parallel(rows * cols))
        par::dense_backprop_delta(w, delta, back, rows, cols);
    else
        serial::dense_backprop_delta(w, delta, back, rows, cols);
}

void dense_grad_accum(std::span<const double> delta, std::span<const double> x,
                      std::span<double> gw, std::span<double> gb,
                      std::size_t rows, std::size_t cols) {
    if (use_parallel(rows * cols))
        par::dense_grad_accum(delta, x, gw, gb, rows, cols);
    else
        serial::dense_grad_accum(delta, x, gw, gb, rows, cols);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (use_parallel(x.size()))
        par::axpy(a, x, y);
    else
        serial::axpy(a, x, y);
}

} // namespace matic::kernels
