#pragma once

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "satnet/rng.hpp"

namespace satnet {

/// Dense row-major matrix of doubles. Column vectors are (n, 1), scalars (1, 1).
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double v);
    static Tensor scalar(double v);
    static Tensor from(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor column(std::initializer_list<double> values);

    /// Entries i.i.d. uniform in [-bound, bound].
    static Tensor uniform(int r, int c, double bound, Rng& rng);
    static Tensor normal(int r, int c, double mean, double stddev, Rng& rng);
    /// Glorot/Xavier uniform for a fan_in x fan_out weight matrix.
    static Tensor glorot(int fan_in, int fan_out, Rng& rng);

    double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    std::int64_t size() const { return static_cast<std::int64_t>(rows) * cols; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }

    double item() const;        ///< value of a 1x1 tensor; throws otherwise
    double sum() const;
    double sq_norm() const;
    bool all_finite() const;

    void fill(double v);
    void add_scaled(const Tensor& other, double k);  ///< *this += k * other
};

bool operator==(const Tensor& a, const Tensor& b);

/// max_ij |a_ij - b_ij|
double max_abs_diff(const Tensor& a, const Tensor& b);

} // namespace satnet
