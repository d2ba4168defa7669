#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ssmp/matrix.hpp"

namespace ssmp {

/// Reverse-mode differentiation over dense matrices. Nodes live on a tape in
/// topological order; backward() walks the tape in reverse. Supports exactly
/// the operations the encoder and losses need.
class Tape {
  public:
    using Ref = int;

    /// Registers a leaf (parameter or constant). Gradients of leaves are
    /// readable after backward().
    Ref leaf(Matrix value);

    const Matrix& value(Ref r) const { return nodes_[r].value; }
    const Matrix& grad(Ref r) const { return nodes_[r].grad; }

    Ref matmul(Ref a, Ref b);
    Ref add(Ref a, Ref b);       // same shape
    Ref mul(Ref a, Ref b);       // elementwise, same shape
    Ref scale(Ref a, double s);
    Ref transpose(Ref a);
    Ref concat_rows(Ref a, Ref b);
    Ref slice_rows(Ref a, int begin, int count);
    Ref slice_cols(Ref a, int begin, int count);
    Ref concat_cols(const std::vector<Ref>& parts);
    Ref row_softmax(Ref a);
    Ref rms_norm(Ref x, Ref gain, double eps);  // gain is 1 x cols
    Ref silu(Ref a);
    Ref sigmoid(Ref a);
    Ref log(Ref a);
    Ref sum(Ref a);   // 1x1
    Ref mean(Ref a);  // 1x1

    /// Rotary position encoding over 2-planes (2k, 2k+1) of each row; row t
    /// is rotated by angles positions[t] * base^(-2k/cols). Norm-preserving.
    Ref rope(Ref x, const std::vector<int>& positions, double base);

    /// Cosine similarity of each row of `pred` against each row of the
    /// constant matrix `anchors`; gradients flow through `pred` only.
    Ref cosine_rows(Ref pred, const Matrix& anchors);

    /// Builds a J x D matrix whose row j is `kept` row j when mask[j] == 0
    /// and the (1 x D) node `placeholder` otherwise. Gradients of masked
    /// rows accumulate into the placeholder.
    Ref assemble_masked(const Matrix& kept, const std::vector<uint8_t>& mask, Ref placeholder);

    /// Populates gradients of every node reachable from the scalar root.
    void backward(Ref root);

    void zero_grads();
    size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::function<void(Tape&, const Node&)> back;  // null for leaves
    };

    Ref push(Matrix value, std::function<void(Tape&, const Node&)> back, const char* op);
    Matrix& grad_mut(Ref r) { return nodes_[r].grad; }

    std::vector<Node> nodes_;
};

/// Max relative error between analytic gradients and central finite
/// differences of a scalar function over a set of parameter matrices.
/// Samples at most `max_coords` coordinates per matrix (0 = all).
double grad_check(const std::function<double()>& f, const std::vector<Matrix*>& params,
                  const std::vector<const Matrix*>& analytic_grads, double eps,
                  int max_coords = 0, uint64_t seed = 0);

}  // namespace ssmp
