#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssmp {

/// Dense row-major matrix of doubles. The only tensor type used in the
/// project; vectors are 1xN or Nx1 matrices.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("Matrix: negative dims");
    }

    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix zeros(int r, int c) { return Matrix(r, c); }

    static Matrix full(int r, int c, double v) {
        Matrix m(r, c);
        std::fill(m.data.begin(), m.data.end(), v);
        return m;
    }

    /// Seeded Gaussian fill, entries N(0, sd^2).
    static Matrix randn(int r, int c, double sd, std::mt19937_64& rng) {
        Matrix m(r, c);
        std::normal_distribution<double> dist(0.0, sd);
        for (auto& x : m.data) x = dist(rng);
        return m;
    }

    bool all_finite() const {
        for (double x : data)
            if (!std::isfinite(x)) return false;
        return true;
    }

    double row_norm(int r) const {
        double s = 0.0;
        for (int c = 0; c < cols; ++c) s += at(r, c) * at(r, c);
        return std::sqrt(s);
    }
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

}  // namespace ssmp
