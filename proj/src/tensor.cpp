#include "satnet/tensor.hpp"

#include <cmath>

#include "satnet/error.hpp"

namespace satnet {

Tensor Tensor::full(int r, int c, double v) {
    Tensor t(r, c);
    t.fill(v);
    return t;
}

Tensor Tensor::scalar(double v) { return full(1, 1, v); }

Tensor Tensor::from(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Tensor t(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c)
            throw DimensionError("Tensor::from: ragged initializer");
        int j = 0;
        for (double v : row) t(i, j++) = v;
        ++i;
    }
    return t;
}

Tensor Tensor::column(std::initializer_list<double> values) {
    Tensor t(static_cast<int>(values.size()), 1);
    int i = 0;
    for (double v : values) t.data[i++] = v;
    return t;
}

Tensor Tensor::uniform(int r, int c, double bound, Rng& rng) {
    Tensor t(r, c);
    for (auto& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

Tensor Tensor::normal(int r, int c, double mean, double stddev, Rng& rng) {
    Tensor t(r, c);
    for (auto& v : t.data) v = rng.normal(mean, stddev);
    return t;
}

Tensor Tensor::glorot(int fan_in, int fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    return uniform(fan_in, fan_out, bound, rng);
}

double Tensor::item() const {
    if (!is_scalar()) throw DimensionError("Tensor::item: not a 1x1 tensor");
    return data[0];
}

double Tensor::sum() const {
    double s = 0.0;
    for (double v : data) s += v;
    return s;
}

double Tensor::sq_norm() const {
    double s = 0.0;
    for (double v : data) s += v * v;
    return s;
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

void Tensor::fill(double v) {
    for (auto& x : data) x = v;
}

void Tensor::add_scaled(const Tensor& other, double k) {
    if (!same_shape(other)) throw DimensionError("Tensor::add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += k * other.data[i];
}

bool operator==(const Tensor& a, const Tensor& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

} // namespace satnet
