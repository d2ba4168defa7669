#include "ssmp/autograd.hpp"

#include <algorithm>
#include <cmath>

#include "ssmp/kernels.hpp"

namespace ssmp {

namespace {

Matrix transpose_of(const Matrix& m) {
    Matrix t(m.cols, m.rows);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) t.at(c, r) = m.at(r, c);
    return t;
}

void accumulate(Matrix& dst, const Matrix& src) {
    for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

double sigmoid_scalar(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tape::Ref Tape::push(Matrix value, std::function<void(Tape&, const Node&)> back, const char* op) {
    require(value.all_finite(), std::string("autograd: non-finite result in op '") + op + "'");
    Node n;
    n.grad = Matrix::zeros(value.rows, value.cols);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Ref>(nodes_.size() - 1);
}

Tape::Ref Tape::leaf(Matrix value) { return push(std::move(value), nullptr, "leaf"); }

Tape::Ref Tape::matmul(Ref a, Ref b) {
    Matrix out = kernels::matmul(value(a), value(b));
    return push(std::move(out),
                [a, b](Tape& t, const Node& self) {
                    accumulate(t.grad_mut(a),
                               kernels::matmul(self.grad, transpose_of(t.value(b))));
                    accumulate(t.grad_mut(b),
                               kernels::matmul(transpose_of(t.value(a)), self.grad));
                },
                "matmul");
}

Tape::Ref Tape::add(Ref a, Ref b) {
    require(value(a).same_shape(value(b)), "add: shape mismatch");
    Matrix out = value(a);
    accumulate(out, value(b));
    return push(std::move(out),
                [a, b](Tape& t, const Node& self) {
                    accumulate(t.grad_mut(a), self.grad);
                    accumulate(t.grad_mut(b), self.grad);
                },
                "add");
}

Tape::Ref Tape::mul(Ref a, Ref b) {
    require(value(a).same_shape(value(b)), "mul: shape mismatch");
    Matrix out = value(a);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= value(b).data[i];
    return push(std::move(out),
                [a, b](Tape& t, const Node& self) {
                    for (size_t i = 0; i < self.grad.data.size(); ++i) {
                        t.grad_mut(a).data[i] += self.grad.data[i] * t.value(b).data[i];
                        t.grad_mut(b).data[i] += self.grad.data[i] * t.value(a).data[i];
                    }
                },
                "mul");
}

Tape::Ref Tape::scale(Ref a, double s) {
    Matrix out = value(a);
    for (auto& x : out.data) x *= s;
    return push(std::move(out),
                [a, s](Tape& t, const Node& self) {
                    for (size_t i = 0; i < self.grad.data.size(); ++i)
                        t.grad_mut(a).data[i] += s * self.grad.data[i];
                },
                "scale");
}

Tape::Ref Tape::transpose(Ref a) {
    return push(transpose_of(value(a)),
                [a](Tape& t, const Node& self) {
                    accumulate(t.grad_mut(a), transpose_of(self.grad));
                },
                "transpose");
}

Tape::Ref Tape::concat_rows(Ref a, Ref b) {
    require(value(a).cols == value(b).cols, "concat_rows: column mismatch");
    Matrix out(value(a).rows + value(b).rows, value(a).cols);
    std::copy(value(a).data.begin(), value(a).data.end(), out.data.begin());
    std::copy(value(b).data.begin(), value(b).data.end(),
              out.data.begin() + static_cast<long>(value(a).size()));
    return push(std::move(out),
                [a, b](Tape& t, const Node& self) {
                    const size_t na = t.value(a).size();
                    for (size_t i = 0; i < na; ++i) t.grad_mut(a).data[i] += self.grad.data[i];
                    for (size_t i = 0; i < t.value(b).size(); ++i)
                        t.grad_mut(b).data[i] += self.grad.data[na + i];
                },
                "concat_rows");
}

Tape::Ref Tape::slice_rows(Ref a, int begin, int count) {
    require(begin >= 0 && count >= 1 && begin + count <= value(a).rows,
            "slice_rows: out of range");
    const Matrix& v = value(a);
    Matrix out(count, v.cols);
    std::copy(v.data.begin() + static_cast<long>(begin) * v.cols,
              v.data.begin() + static_cast<long>(begin + count) * v.cols, out.data.begin());
    return push(std::move(out),
                [a, begin](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    const size_t off = static_cast<size_t>(begin) * g.cols;
                    for (size_t i = 0; i < self.grad.data.size(); ++i)
                        g.data[off + i] += self.grad.data[i];
                },
                "slice_rows");
}

Tape::Ref Tape::slice_cols(Ref a, int begin, int count) {
    require(begin >= 0 && count >= 1 && begin + count <= value(a).cols,
            "slice_cols: out of range");
    const Matrix& v = value(a);
    Matrix out(v.rows, count);
    for (int r = 0; r < v.rows; ++r)
        for (int c = 0; c < count; ++c) out.at(r, c) = v.at(r, begin + c);
    return push(std::move(out),
                [a, begin](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    for (int r = 0; r < self.grad.rows; ++r)
                        for (int c = 0; c < self.grad.cols; ++c)
                            g.at(r, begin + c) += self.grad.at(r, c);
                },
                "slice_cols");
}

Tape::Ref Tape::concat_cols(const std::vector<Ref>& parts) {
    require(!parts.empty(), "concat_cols: no parts");
    int total = 0;
    const int rows = value(parts[0]).rows;
    for (Ref p : parts) {
        require(value(p).rows == rows, "concat_cols: row mismatch");
        total += value(p).cols;
    }
    Matrix out(rows, total);
    int off = 0;
    for (Ref p : parts) {
        const Matrix& v = value(p);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < v.cols; ++c) out.at(r, off + c) = v.at(r, c);
        off += v.cols;
    }
    return push(std::move(out),
                [parts](Tape& t, const Node& self) {
                    int off = 0;
                    for (Ref p : parts) {
                        Matrix& g = t.grad_mut(p);
                        for (int r = 0; r < g.rows; ++r)
                            for (int c = 0; c < g.cols; ++c) g.at(r, c) += self.grad.at(r, off + c);
                        off += g.cols;
                    }
                },
                "concat_cols");
}

Tape::Ref Tape::row_softmax(Ref a) {
    Matrix out = kernels::row_softmax(value(a));
    return push(std::move(out),
                [a](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    const Matrix& y = self.value;
                    for (int r = 0; r < y.rows; ++r) {
                        double dot = 0.0;
                        for (int c = 0; c < y.cols; ++c) dot += self.grad.at(r, c) * y.at(r, c);
                        for (int c = 0; c < y.cols; ++c)
                            g.at(r, c) += y.at(r, c) * (self.grad.at(r, c) - dot);
                    }
                },
                "row_softmax");
}

Tape::Ref Tape::rms_norm(Ref x, Ref gain, double eps) {
    const Matrix& v = value(x);
    require(value(gain).rows == 1 && value(gain).cols == v.cols, "rms_norm: gain must be 1 x cols");
    Matrix out(v.rows, v.cols);
    std::vector<double> inv_rms(v.rows);
    for (int r = 0; r < v.rows; ++r) {
        double ms = 0.0;
        for (int c = 0; c < v.cols; ++c) ms += v.at(r, c) * v.at(r, c);
        ms = ms / v.cols + eps;
        inv_rms[r] = 1.0 / std::sqrt(ms);
        for (int c = 0; c < v.cols; ++c)
            out.at(r, c) = v.at(r, c) * inv_rms[r] * value(gain).at(0, c);
    }
    return push(std::move(out),
                [x, gain, inv_rms](Tape& t, const Node& self) {
                    const Matrix& v = t.value(x);
                    const Matrix& g = t.value(gain);
                    Matrix& dx = t.grad_mut(x);
                    Matrix& dg = t.grad_mut(gain);
                    const int D = v.cols;
                    for (int r = 0; r < v.rows; ++r) {
                        const double ir = inv_rms[r];
                        double proj = 0.0;  // sum_e dy_e * g_e * x_e
                        for (int c = 0; c < D; ++c)
                            proj += self.grad.at(r, c) * g.at(0, c) * v.at(r, c);
                        for (int c = 0; c < D; ++c) {
                            dx.at(r, c) += g.at(0, c) * self.grad.at(r, c) * ir -
                                           v.at(r, c) * proj * ir * ir * ir / D;
                            dg.at(0, c) += self.grad.at(r, c) * v.at(r, c) * ir;
                        }
                    }
                },
                "rms_norm");
}

Tape::Ref Tape::silu(Ref a) {
    Matrix out = value(a);
    for (auto& x : out.data) x = x * sigmoid_scalar(x);
    return push(std::move(out),
                [a](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    for (size_t i = 0; i < g.data.size(); ++i) {
                        const double x = t.value(a).data[i];
                        const double s = sigmoid_scalar(x);
                        g.data[i] += self.grad.data[i] * s * (1.0 + x * (1.0 - s));
                    }
                },
                "silu");
}

Tape::Ref Tape::sigmoid(Ref a) {
    Matrix out = value(a);
    for (auto& x : out.data) x = sigmoid_scalar(x);
    return push(std::move(out),
                [a](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    for (size_t i = 0; i < g.data.size(); ++i) {
                        const double s = self.value.data[i];
                        g.data[i] += self.grad.data[i] * s * (1.0 - s);
                    }
                },
                "sigmoid");
}

Tape::Ref Tape::log(Ref a) {
    Matrix out = value(a);
    for (auto& x : out.data) {
        require(x > 0.0, "log: non-positive input");
        x = std::log(x);
    }
    return push(std::move(out),
                [a](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    for (size_t i = 0; i < g.data.size(); ++i)
                        g.data[i] += self.grad.data[i] / t.value(a).data[i];
                },
                "log");
}

Tape::Ref Tape::sum(Ref a) {
    double s = 0.0;
    for (double x : value(a).data) s += x;
    Matrix out(1, 1);
    out.at(0, 0) = s;
    return push(std::move(out),
                [a](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    for (auto& x : g.data) x += self.grad.at(0, 0);
                },
                "sum");
}

Tape::Ref Tape::mean(Ref a) {
    const double n = static_cast<double>(value(a).size());
    double s = 0.0;
    for (double x : value(a).data) s += x;
    Matrix out(1, 1);
    out.at(0, 0) = s / n;
    return push(std::move(out),
                [a, n](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(a);
                    for (auto& x : g.data) x += self.grad.at(0, 0) / n;
                },
                "mean");
}

Tape::Ref Tape::rope(Ref x, const std::vector<int>& positions, double base) {
    const Matrix& v = value(x);
    require(v.cols % 2 == 0, "rope: odd head dimension");
    require(static_cast<int>(positions.size()) == v.rows, "rope: positions size mismatch");
    const int planes = v.cols / 2;
    std::vector<double> theta(planes);
    for (int k = 0; k < planes; ++k)
        theta[k] = std::pow(base, -2.0 * k / static_cast<double>(v.cols));
    Matrix out(v.rows, v.cols);
    for (int r = 0; r < v.rows; ++r) {
        for (int k = 0; k < planes; ++k) {
            const double ang = positions[r] * theta[k];
            const double c = std::cos(ang), s = std::sin(ang);
            const double x0 = v.at(r, 2 * k), x1 = v.at(r, 2 * k + 1);
            out.at(r, 2 * k) = x0 * c - x1 * s;
            out.at(r, 2 * k + 1) = x0 * s + x1 * c;
        }
    }
    return push(std::move(out),
                [x, positions, theta](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(x);
                    const int planes = g.cols / 2;
                    for (int r = 0; r < g.rows; ++r) {
                        for (int k = 0; k < planes; ++k) {
                            const double ang = positions[r] * theta[k];
                            const double c = std::cos(ang), s = std::sin(ang);
                            const double g0 = self.grad.at(r, 2 * k);
                            const double g1 = self.grad.at(r, 2 * k + 1);
                            // inverse rotation of the upstream gradient
                            g.at(r, 2 * k) += g0 * c + g1 * s;
                            g.at(r, 2 * k + 1) += -g0 * s + g1 * c;
                        }
                    }
                },
                "rope");
}

Tape::Ref Tape::cosine_rows(Ref pred, const Matrix& anchors) {
    const Matrix& v = value(pred);
    require(v.cols == anchors.cols, "cosine_rows: dimension mismatch");
    std::vector<double> vnorm(v.rows), anorm(anchors.rows);
    for (int j = 0; j < v.rows; ++j) {
        vnorm[j] = v.row_norm(j);
        require(vnorm[j] > 0.0, "cosine_rows: zero-norm predicted row " + std::to_string(j));
    }
    for (int i = 0; i < anchors.rows; ++i) {
        anorm[i] = anchors.row_norm(i);
        require(anorm[i] > 0.0, "cosine_rows: zero-norm anchor row " + std::to_string(i));
    }
    Matrix out(v.rows, anchors.rows);
    for (int j = 0; j < v.rows; ++j)
        for (int i = 0; i < anchors.rows; ++i) {
            double dot = 0.0;
            for (int c = 0; c < v.cols; ++c) dot += v.at(j, c) * anchors.at(i, c);
            out.at(j, i) = dot / (vnorm[j] * anorm[i]);
        }
    return push(std::move(out),
                [pred, anchors, vnorm, anorm](Tape& t, const Node& self) {
                    const Matrix& v = t.value(pred);
                    Matrix& g = t.grad_mut(pred);
                    for (int j = 0; j < v.rows; ++j) {
                        const double inv_vn = 1.0 / vnorm[j];
                        for (int i = 0; i < anchors.rows; ++i) {
                            const double gs = self.grad.at(j, i);
                            if (gs == 0.0) continue;
                            const double s = self.value.at(j, i);
                            const double coef = gs * inv_vn / anorm[i];
                            const double proj = gs * s * inv_vn * inv_vn;
                            for (int c = 0; c < v.cols; ++c)
                                g.at(j, c) += coef * anchors.at(i, c) - proj * v.at(j, c);
                        }
                    }
                },
                "cosine_rows");
}

Tape::Ref Tape::assemble_masked(const Matrix& kept, const std::vector<uint8_t>& mask,
                                Ref placeholder) {
    require(static_cast<int>(mask.size()) == kept.rows, "assemble_masked: mask size mismatch");
    require(value(placeholder).rows == 1 && value(placeholder).cols == kept.cols,
            "assemble_masked: placeholder must be 1 x D");
    Matrix out = kept;
    for (int j = 0; j < kept.rows; ++j)
        if (mask[j])
            for (int c = 0; c < kept.cols; ++c) out.at(j, c) = value(placeholder).at(0, c);
    return push(std::move(out),
                [mask, placeholder](Tape& t, const Node& self) {
                    Matrix& g = t.grad_mut(placeholder);
                    for (int j = 0; j < self.grad.rows; ++j)
                        if (mask[j])
                            for (int c = 0; c < self.grad.cols; ++c)
                                g.at(0, c) += self.grad.at(j, c);
                },
                "assemble_masked");
}

void Tape::backward(Ref root) {
    require(value(root).rows == 1 && value(root).cols == 1, "backward: root must be scalar");
    nodes_[root].grad.at(0, 0) = 1.0;
    for (Ref r = root; r >= 0; --r) {
        const Node& n = nodes_[r];
        if (n.back) n.back(*this, n);
    }
}

void Tape::zero_grads() {
    for (auto& n : nodes_) std::fill(n.grad.data.begin(), n.grad.data.end(), 0.0);
}

double grad_check(const std::function<double()>& f, const std::vector<Matrix*>& params,
                  const std::vector<const Matrix*>& analytic_grads, double eps, int max_coords,
                  uint64_t seed) {
    require(eps >= 1e-6 && eps <= 1e-3, "grad_check: eps out of range");
    require(params.size() == analytic_grads.size(), "grad_check: size mismatch");
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (size_t p = 0; p < params.size(); ++p) {
        Matrix& m = *params[p];
        const Matrix& a = *analytic_grads[p];
        require(m.same_shape(a), "grad_check: grad shape mismatch");
        std::vector<size_t> coords(m.size());
        for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (max_coords > 0 && coords.size() > static_cast<size_t>(max_coords)) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(max_coords);
        }
        for (size_t i : coords) {
            const double orig = m.data[i];
            m.data[i] = orig + eps;
            const double fp = f();
            m.data[i] = orig - eps;
            const double fm = f();
            m.data[i] = orig;
            require(std::isfinite(fp) && std::isfinite(fm), "grad_check: non-finite function value");
            const double numeric = (fp - fm) / (2.0 * eps);
            const double analytic = a.data[i];
            const double rel =
                std::abs(analytic - numeric) / (std::abs(analytic) + std::abs(numeric) + 1e-12);
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace ssmp
