#include "ssmp/kernels.hpp"

#include <cmath>

namespace ssmp::kernels {

namespace {

void check_matmul_dims(const Matrix& a, const Matrix& b) {
    require(a.cols == b.rows, "matmul: inner dimensions differ (" + std::to_string(a.cols) +
                                  " vs " + std::to_string(b.rows) + ")");
}

void check_cosine_dims(const Matrix& a, const Matrix& b) {
    require(a.cols == b.cols, "cosine_sim: feature dimensions differ");
    for (int r = 0; r < a.rows; ++r)
        require(a.row_norm(r) > 0.0, "cosine_sim: zero-norm row " + std::to_string(r) + " in lhs");
    for (int r = 0; r < b.rows; ++r)
        require(b.row_norm(r) > 0.0, "cosine_sim: zero-norm row " + std::to_string(r) + " in rhs");
}

inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
    // ikj order: accumulate row i of the result.
    double* orow = &out.data[static_cast<size_t>(i) * out.cols];
    const double* arow = &a.data[static_cast<size_t>(i) * a.cols];
    for (int k = 0; k < a.cols; ++k) {
        const double aik = arow[k];
        const double* brow = &b.data[static_cast<size_t>(k) * b.cols];
        for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
}

inline void cosine_row(const Matrix& a, const Matrix& b, Matrix& out, int i) {
    const double na = a.row_norm(i);
    for (int j = 0; j < b.rows; ++j) {
        double dot = 0.0;
        for (int c = 0; c < a.cols; ++c) dot += a.at(i, c) * b.at(j, c);
        out.at(i, j) = dot / (na * b.row_norm(j));
    }
}

inline void softmax_row(const Matrix& a, Matrix& out, int i) {
    double mx = a.at(i, 0);
    for (int j = 1; j < a.cols; ++j) mx = std::max(mx, a.at(i, j));
    double sum = 0.0;
    for (int j = 0; j < a.cols; ++j) {
        const double e = std::exp(a.at(i, j) - mx);
        out.at(i, j) = e;
        sum += e;
    }
    for (int j = 0; j < a.cols; ++j) out.at(i, j) /= sum;
}

}  // namespace

Matrix matmul_serial(const Matrix& a, const Matrix& b) {
    check_matmul_dims(a, b);
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
    return out;
}

Matrix matmul_parallel(const Matrix& a, const Matrix& b) {
    check_matmul_dims(a, b);
    Matrix out(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) matmul_row(a, b, out, i);
    return out;
}

Matrix cosine_sim_serial(const Matrix& a, const Matrix& b) {
    check_cosine_dims(a, b);
    Matrix out(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) cosine_row(a, b, out, i);
    return out;
}

Matrix cosine_sim_parallel(const Matrix& a, const Matrix& b) {
    check_cosine_dims(a, b);
    Matrix out(a.rows, b.rows);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) cosine_row(a, b, out, i);
    return out;
}

Matrix row_softmax_serial(const Matrix& a) {
    require(a.cols >= 1, "row_softmax: empty rows");
    Matrix out(a.rows, a.cols);
    for (int i = 0; i < a.rows; ++i) softmax_row(a, out, i);
    return out;
}

Matrix row_softmax_parallel(const Matrix& a) {
    require(a.cols >= 1, "row_softmax: empty rows");
    Matrix out(a.rows, a.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i) softmax_row(a, out, i);
    return out;
}

namespace {
constexpr size_t kParallelFlopCutoff = 1u << 20;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    const size_t flops = static_cast<size_t>(a.rows) * a.cols * b.cols;
    return flops >= kParallelFlopCutoff ? matmul_parallel(a, b) : matmul_serial(a, b);
}

Matrix cosine_sim(const Matrix& a, const Matrix& b) {
    const size_t flops = static_cast<size_t>(a.rows) * b.rows * a.cols;
    return flops >= kParallelFlopCutoff ? cosine_sim_parallel(a, b) : cosine_sim_serial(a, b);
}

Matrix row_softmax(const Matrix& a) {
    const size_t n = a.size();
    return n >= kParallelFlopCutoff ? row_softmax_parallel(a) : row_softmax_serial(a);
}

}  // namespace ssmp::kernels
