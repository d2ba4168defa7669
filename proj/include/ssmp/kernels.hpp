#pragma once

#include "ssmp/matrix.hpp"

namespace ssmp::kernels {

// Serial reference kernels. Kept deliberately naive; the parallel versions
// must produce bitwise-identical results (same per-element accumulation
// order, only the outer loop is distributed).

Matrix matmul_serial(const Matrix& a, const Matrix& b);
Matrix matmul_parallel(const Matrix& a, const Matrix& b);

/// Cosine similarity of every row of `a` against every row of `b`,
/// result a.rows x b.rows. Rejects zero-norm rows.
Matrix cosine_sim_serial(const Matrix& a, const Matrix& b);
Matrix cosine_sim_parallel(const Matrix& a, const Matrix& b);

/// Row-wise softmax with max subtraction.
Matrix row_softmax_serial(const Matrix& a);
Matrix row_softmax_parallel(const Matrix& a);

// Dispatchers: parallel above a size threshold, serial below (the OpenMP
// fork overhead dominates on desk-scale matrices).
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix cosine_sim(const Matrix& a, const Matrix& b);
Matrix row_softmax(const Matrix& a);

}  // namespace ssmp::kernels
