#include "radsum/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace radsum::tensor {

Index shape_numel(const Shape& s) {
    Index n = 1;
    for (Index d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    out += "]";
    return out;
}

namespace {

void check_shape(bool ok, const std::string& op, const Shape& a, const Shape& b) {
    if (!ok) {
        throw std::invalid_argument(op + ": incompatible shapes " + shape_str(a) +
                                    " and " + shape_str(b));
    }
}

bool is_suffix(const Shape& suffix, const Shape& full) {
    if (suffix.size() > full.size()) return false;
    std::size_t off = full.size() - suffix.size();
    for (std::size_t i = 0; i < suffix.size(); ++i) {
        if (suffix[i] != full[off + i]) return false;
    }
    return true;
}

// C[m,n] += A[m,k] * B[k,n]
void gemm_acc(const double* A, const double* B, double* C, Index m, Index k, Index n) {
    for (Index i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (Index p = 0; p < k; ++p) {
            const double av = a[p];
            if (av == 0.0) continue;
            const double* b = B + p * n;
            for (Index j = 0; j < n; ++j) {
                c[j] += av * b[j];
            }
        }
    }
}

std::vector<double> transpose2d(const std::vector<double>& a, Index rows, Index cols) {
    std::vector<double> out(a.size());
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            out[static_cast<std::size_t>(j * rows + i)] =
                a[static_cast<std::size_t>(i * cols + j)];
        }
    }
    return out;
}

void axis_extents(const Shape& s, int axis, Index& outer, Index& n, Index& inner) {
    outer = 1;
    inner = 1;
    for (int i = 0; i < axis; ++i) outer *= s[static_cast<std::size_t>(i)];
    n = s[static_cast<std::size_t>(axis)];
    for (std::size_t i = static_cast<std::size_t>(axis) + 1; i < s.size(); ++i) inner *= s[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != static_cast<Index>(values.size())) {
        throw std::invalid_argument("tensor: value count " + std::to_string(values.size()) +
                                    " does not match shape " + shape_str(shape));
    }
    impl_ = std::make_shared<TensorImpl>();
    impl_->shape = std::move(shape);
    impl_->value = std::move(values);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(const Shape& shape, bool requires_grad) {
    return Tensor(shape, std::vector<double>(static_cast<std::size_t>(shape_numel(shape)), 0.0),
                  requires_grad);
}

Tensor Tensor::full(const Shape& shape, double v, bool requires_grad) {
    return Tensor(shape, std::vector<double>(static_cast<std::size_t>(shape_numel(shape)), v),
                  requires_grad);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor(Shape{1}, std::vector<double>{v}, requires_grad);
}

double Tensor::item() const {
    if (numel() != 1) {
        throw std::invalid_argument("item: tensor is not scalar, shape " + shape_str(shape()));
    }
    return impl_->value[0];
}

std::vector<double>& Tensor::grad() const {
    if (impl_->grad.empty()) {
        impl_->grad.assign(impl_->value.size(), 0.0);
    }
    return impl_->grad;
}

void Tensor::zero_grad() const {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

void Tape::record(const Tensor& out, std::function<void()> backward) {
    if (!recording_) return;
    produced_[out.impl()] = nodes_.size();
    nodes_.push_back(Node{out, std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    shape_str(loss.shape()));
    }
    auto it = produced_.find(loss.impl());
    if (it == produced_.end()) {
        throw std::invalid_argument("backward: loss is not attached to this tape");
    }
    // Intermediate gradients are scratch: reset them every call so that only
    // leaf gradients accumulate across calls.
    for (auto& node : nodes_) {
        node.out.grad();
        node.out.zero_grad();
    }
    loss.impl()->grad[0] = 1.0;
    for (std::size_t i = it->second + 1; i-- > 0;) {
        if (nodes_[i].backward) nodes_[i].backward();
    }
}

void Tape::clear() {
    nodes_.clear();
    produced_.clear();
}

// ---------------------------------------------------------------------------
// Ops
// ---------------------------------------------------------------------------

namespace {

inline bool want_grad(const Tensor& a) { return a.requires_grad(); }
inline bool want_grad(const Tensor& a, const Tensor& b) {
    return a.requires_grad() || b.requires_grad();
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
    check_shape(is_suffix(b.shape(), a.shape()), "add", a.shape(), b.shape());
    const auto& av = a.value();
    const auto& bv = b.value();
    const std::size_t bn = bv.size();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        out[i] = av[i] + bv[i % bn];
    }
    Tensor o(a.shape(), std::move(out), want_grad(a, b));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, b, o]() {
            const auto& go = o.impl()->grad;
            if (a.requires_grad()) {
                auto& ga = a.grad();
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                const std::size_t bn2 = gb.size();
                for (std::size_t i = 0; i < go.size(); ++i) gb[i % bn2] += go[i];
            }
        });
    }
    return o;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
    check_shape(a.shape() == b.shape(), "mul", a.shape(), b.shape());
    const auto& av = a.value();
    const auto& bv = b.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    Tensor o(a.shape(), std::move(out), want_grad(a, b));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, b, o]() {
            const auto& go = o.impl()->grad;
            if (a.requires_grad()) {
                auto& ga = a.grad();
                const auto& bv2 = b.value();
                for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv2[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.grad();
                const auto& av2 = a.value();
                for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av2[i];
            }
        });
    }
    return o;
}

Tensor scale(Tape& tape, const Tensor& a, double c) {
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
    Tensor o(a.shape(), std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o, c]() {
            const auto& go = o.impl()->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * c;
        });
    }
    return o;
}

namespace {

// Shared 2D core; batch index selects slices for rank-3 operands.
struct MatmulDims {
    Index batch;  // 1 for pure 2D
    Index m, k, n;
    bool a_batched, b_batched;
};

MatmulDims matmul_dims(const Shape& sa, const Shape& sb) {
    MatmulDims d{};
    if (sa.size() == 2 && sb.size() == 2) {
        d = {1, sa[0], sa[1], sb[1], false, false};
        if (sa[1] != sb[0]) check_shape(false, "matmul", sa, sb);
    } else if (sa.size() == 3 && sb.size() == 3) {
        d = {sa[0], sa[1], sa[2], sb[2], true, true};
        if (sa[0] != sb[0] || sa[2] != sb[1]) check_shape(false, "matmul", sa, sb);
    } else if (sa.size() == 3 && sb.size() == 2) {
        d = {sa[0], sa[1], sa[2], sb[1], true, false};
        if (sa[2] != sb[0]) check_shape(false, "matmul", sa, sb);
    } else {
        check_shape(false, "matmul", sa, sb);
    }
    return d;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
    const MatmulDims d = matmul_dims(a.shape(), b.shape());
    Shape out_shape;
    if (a.rank() == 2 && b.rank() == 2) {
        out_shape = {d.m, d.n};
    } else {
        out_shape = {d.batch, d.m, d.n};
    }
    std::vector<double> out(static_cast<std::size_t>(d.batch * d.m * d.n), 0.0);
    const double* pa = a.value().data();
    const double* pb = b.value().data();
    for (Index s = 0; s < d.batch; ++s) {
        gemm_acc(pa + (d.a_batched ? s * d.m * d.k : 0),
                 pb + (d.b_batched ? s * d.k * d.n : 0),
                 out.data() + s * d.m * d.n, d.m, d.k, d.n);
    }
    Tensor o(out_shape, std::move(out), want_grad(a, b));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, b, o, d]() {
            const double* go = o.impl()->grad.data();
            if (a.requires_grad()) {
                // dA[s] += dC[s] * B[s]^T
                auto& ga = a.grad();
                for (Index s = 0; s < d.batch; ++s) {
                    const double* pb2 = b.value().data() + (d.b_batched ? s * d.k * d.n : 0);
                    std::vector<double> bt(static_cast<std::size_t>(d.k * d.n));
                    std::copy(pb2, pb2 + d.k * d.n, bt.begin());
                    bt = transpose2d(bt, d.k, d.n);  // [n,k]
                    gemm_acc(go + s * d.m * d.n, bt.data(),
                             ga.data() + (d.a_batched ? s * d.m * d.k : 0), d.m, d.n, d.k);
                }
            }
            if (b.requires_grad()) {
                // dB[s] += A[s]^T * dC[s]
                auto& gb = b.grad();
                for (Index s = 0; s < d.batch; ++s) {
                    const double* pa2 = a.value().data() + (d.a_batched ? s * d.m * d.k : 0);
                    std::vector<double> at(static_cast<std::size_t>(d.m * d.k));
                    std::copy(pa2, pa2 + d.m * d.k, at.begin());
                    at = transpose2d(at, d.m, d.k);  // [k,m]
                    gemm_acc(at.data(), go + s * d.m * d.n,
                             gb.data() + (d.b_batched ? s * d.k * d.n : 0), d.k, d.m, d.n);
                }
            }
        });
    }
    return o;
}

namespace {

std::vector<Index> strides_of(const Shape& s) {
    std::vector<Index> st(s.size(), 1);
    for (std::size_t i = s.size(); i-- > 1;) {
        st[i - 1] = st[i] * s[i];
    }
    return st;
}

void permute_copy(const std::vector<double>& in, std::vector<double>& out,
                  const Shape& in_shape, int d0, int d1, bool accumulate_into_out) {
    Shape out_shape = in_shape;
    std::swap(out_shape[static_cast<std::size_t>(d0)], out_shape[static_cast<std::size_t>(d1)]);
    const auto in_st = strides_of(in_shape);
    const auto out_st = strides_of(out_shape);
    const std::size_t rank = in_shape.size();
    const Index total = shape_numel(in_shape);
    std::vector<Index> idx(rank, 0);
    for (Index lin = 0; lin < total; ++lin) {
        Index rem = lin;
        for (std::size_t i = 0; i < rank; ++i) {
            idx[i] = rem / in_st[i];
            rem %= in_st[i];
        }
        std::swap(idx[static_cast<std::size_t>(d0)], idx[static_cast<std::size_t>(d1)]);
        Index out_lin = 0;
        for (std::size_t i = 0; i < rank; ++i) out_lin += idx[i] * out_st[i];
        if (accumulate_into_out) {
            out[static_cast<std::size_t>(out_lin)] += in[static_cast<std::size_t>(lin)];
        } else {
            out[static_cast<std::size_t>(out_lin)] = in[static_cast<std::size_t>(lin)];
        }
    }
}

}  // namespace

Tensor transpose(Tape& tape, const Tensor& a, int d0, int d1) {
    if (d0 < 0 || d1 < 0 || d0 >= a.rank() || d1 >= a.rank()) {
        throw std::invalid_argument("transpose: dims (" + std::to_string(d0) + "," +
                                    std::to_string(d1) + ") out of range for shape " +
                                    shape_str(a.shape()));
    }
    Shape out_shape = a.shape();
    std::swap(out_shape[static_cast<std::size_t>(d0)], out_shape[static_cast<std::size_t>(d1)]);
    std::vector<double> out(a.value().size());
    permute_copy(a.value(), out, a.shape(), d0, d1, false);
    Tensor o(out_shape, std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o, d0, d1]() {
            // transposing the output grad back is the exact adjoint
            permute_copy(o.impl()->grad, a.grad(), o.shape(), d0, d1, true);
        });
    }
    return o;
}

Tensor reshape(Tape& tape, const Tensor& a, const Shape& shape) {
    if (shape_numel(shape) != a.numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(a.shape()) + " as " +
                                    shape_str(shape));
    }
    Tensor o(shape, a.value(), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o]() {
            const auto& go = o.impl()->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
        });
    }
    return o;
}

namespace {

void softmax_forward(const std::vector<double>& in, std::vector<double>& out, Index outer,
                     Index n, Index inner, bool log_mode) {
    for (Index o = 0; o < outer; ++o) {
        for (Index in_i = 0; in_i < inner; ++in_i) {
            const Index base = o * n * inner + in_i;
            double mx = -1e308;
            for (Index i = 0; i < n; ++i) {
                mx = std::max(mx, in[static_cast<std::size_t>(base + i * inner)]);
            }
            double sum = 0.0;
            for (Index i = 0; i < n; ++i) {
                sum += std::exp(in[static_cast<std::size_t>(base + i * inner)] - mx);
            }
            if (log_mode) {
                const double lse = mx + std::log(sum);
                for (Index i = 0; i < n; ++i) {
                    const auto p = static_cast<std::size_t>(base + i * inner);
                    out[p] = in[p] - lse;
                }
            } else {
                for (Index i = 0; i < n; ++i) {
                    const auto p = static_cast<std::size_t>(base + i * inner);
                    out[p] = std::exp(in[p] - mx) / sum;
                }
            }
        }
    }
}

void check_axis(const Tensor& a, int axis, const char* op) {
    if (axis < 0 || axis >= a.rank()) {
        throw std::invalid_argument(std::string(op) + ": axis " + std::to_string(axis) +
                                    " out of range for shape " + shape_str(a.shape()));
    }
}

}  // namespace

Tensor softmax(Tape& tape, const Tensor& a, int axis) {
    check_axis(a, axis, "softmax");
    Index outer, n, inner;
    axis_extents(a.shape(), axis, outer, n, inner);
    std::vector<double> out(a.value().size());
    softmax_forward(a.value(), out, outer, n, inner, false);
    Tensor o(a.shape(), std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o, outer, n, inner]() {
            const auto& y = o.value();
            const auto& go = o.impl()->grad;
            auto& ga = a.grad();
            for (Index ou = 0; ou < outer; ++ou) {
                for (Index in_i = 0; in_i < inner; ++in_i) {
                    const Index base = ou * n * inner + in_i;
                    double dot = 0.0;
                    for (Index i = 0; i < n; ++i) {
                        const auto p = static_cast<std::size_t>(base + i * inner);
                        dot += go[p] * y[p];
                    }
                    for (Index i = 0; i < n; ++i) {
                        const auto p = static_cast<std::size_t>(base + i * inner);
                        ga[p] += y[p] * (go[p] - dot);
                    }
                }
            }
        });
    }
    return o;
}

Tensor log_softmax(Tape& tape, const Tensor& a, int axis) {
    check_axis(a, axis, "log_softmax");
    Index outer, n, inner;
    axis_extents(a.shape(), axis, outer, n, inner);
    std::vector<double> out(a.value().size());
    softmax_forward(a.value(), out, outer, n, inner, true);
    Tensor o(a.shape(), std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o, outer, n, inner]() {
            const auto& lsm = o.value();
            const auto& go = o.impl()->grad;
            auto& ga = a.grad();
            for (Index ou = 0; ou < outer; ++ou) {
                for (Index in_i = 0; in_i < inner; ++in_i) {
                    const Index base = ou * n * inner + in_i;
                    double gsum = 0.0;
                    for (Index i = 0; i < n; ++i) {
                        gsum += go[static_cast<std::size_t>(base + i * inner)];
                    }
                    for (Index i = 0; i < n; ++i) {
                        const auto p = static_cast<std::size_t>(base + i * inner);
                        ga[p] += go[p] - std::exp(lsm[p]) * gsum;
                    }
                }
            }
        });
    }
    return o;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
    if (x.rank() < 1) {
        throw std::invalid_argument("layer_norm: rank-0 input");
    }
    const Index d = x.dim(x.rank() - 1);
    check_shape(gain.rank() == 1 && gain.dim(0) == d, "layer_norm(gain)", x.shape(), gain.shape());
    check_shape(bias.rank() == 1 && bias.dim(0) == d, "layer_norm(bias)", x.shape(), bias.shape());
    const Index rows = x.numel() / d;
    const auto& xv = x.value();
    const auto& gv = gain.value();
    const auto& bv = bias.value();
    std::vector<double> out(xv.size());
    std::vector<double> inv_std(static_cast<std::size_t>(rows));
    std::vector<double> means(static_cast<std::size_t>(rows));
    for (Index r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * d;
        double mean = 0.0;
        for (Index i = 0; i < d; ++i) mean += row[i];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (Index i = 0; i < d; ++i) {
            const double c = row[i] - mean;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        means[static_cast<std::size_t>(r)] = mean;
        inv_std[static_cast<std::size_t>(r)] = is;
        double* orow = out.data() + r * d;
        for (Index i = 0; i < d; ++i) {
            orow[i] = (row[i] - mean) * is * gv[static_cast<std::size_t>(i)] +
                      bv[static_cast<std::size_t>(i)];
        }
    }
    Tensor o(x.shape(), std::move(out), x.requires_grad() || gain.requires_grad() ||
                                            bias.requires_grad());
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [x, gain, bias, o, d, rows, means, inv_std]() {
            const auto& go = o.impl()->grad;
            const auto& xv2 = x.value();
            const auto& gv2 = gain.value();
            for (Index r = 0; r < rows; ++r) {
                const double* row = xv2.data() + r * d;
                const double* grow = go.data() + r * d;
                const double mean = means[static_cast<std::size_t>(r)];
                const double is = inv_std[static_cast<std::size_t>(r)];
                // dxhat_i = go_i * gain_i ; dx from the standard layer-norm adjoint
                double sum_dxh = 0.0;
                double sum_dxh_xh = 0.0;
                for (Index i = 0; i < d; ++i) {
                    const double xh = (row[i] - mean) * is;
                    const double dxh = grow[i] * gv2[static_cast<std::size_t>(i)];
                    sum_dxh += dxh;
                    sum_dxh_xh += dxh * xh;
                }
                const double inv_d = 1.0 / static_cast<double>(d);
                if (x.requires_grad()) {
                    auto& gx = x.grad();
                    double* gxrow = gx.data() + r * d;
                    for (Index i = 0; i < d; ++i) {
                        const double xh = (row[i] - mean) * is;
                        const double dxh = grow[i] * gv2[static_cast<std::size_t>(i)];
                        gxrow[i] += is * (dxh - inv_d * sum_dxh - xh * inv_d * sum_dxh_xh);
                    }
                }
                if (gain.requires_grad()) {
                    auto& gg = gain.grad();
                    for (Index i = 0; i < d; ++i) {
                        const double xh = (row[i] - mean) * is;
                        gg[static_cast<std::size_t>(i)] += grow[i] * xh;
                    }
                }
                if (bias.requires_grad()) {
                    auto& gb = bias.grad();
                    for (Index i = 0; i < d; ++i) {
                        gb[static_cast<std::size_t>(i)] += grow[i];
                    }
                }
            }
        });
    }
    return o;
}

Tensor relu(Tape& tape, const Tensor& a) {
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
    Tensor o(a.shape(), std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o]() {
            const auto& go = o.impl()->grad;
            const auto& av2 = a.value();
            auto& ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) {
                if (av2[i] > 0.0) ga[i] += go[i];
            }
        });
    }
    return o;
}

Tensor gelu(Tape& tape, const Tensor& a) {
    static constexpr double kC = 0.7978845608028653558798921198687;  // sqrt(2/pi)
    static constexpr double kA = 0.044715;
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double x = av[i];
        const double u = kC * (x + kA * x * x * x);
        out[i] = 0.5 * x * (1.0 + std::tanh(u));
    }
    Tensor o(a.shape(), std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o]() {
            const auto& go = o.impl()->grad;
            const auto& av2 = a.value();
            auto& ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) {
                const double x = av2[i];
                const double u = kC * (x + kA * x * x * x);
                const double t = std::tanh(u);
                const double sech2 = 1.0 - t * t;
                const double du = kC * (1.0 + 3.0 * kA * x * x);
                ga[i] += go[i] * (0.5 * (1.0 + t) + 0.5 * x * sech2 * du);
            }
        });
    }
    return o;
}

Tensor embedding_gather(Tape& tape, const Tensor& table, const std::vector<Index>& ids,
                        const Shape& id_shape) {
    if (table.rank() != 2) {
        throw std::invalid_argument("embedding_gather: table must be rank 2, got " +
                                    shape_str(table.shape()));
    }
    if (shape_numel(id_shape) != static_cast<Index>(ids.size())) {
        throw std::invalid_argument("embedding_gather: id count does not match id_shape " +
                                    shape_str(id_shape));
    }
    const Index v = table.dim(0);
    const Index d = table.dim(1);
    for (Index id : ids) {
        if (id < 0 || id >= v) {
            throw std::invalid_argument("embedding_gather: id " + std::to_string(id) +
                                        " out of range [0," + std::to_string(v) + ")");
        }
    }
    Shape out_shape = id_shape;
    out_shape.push_back(d);
    std::vector<double> out(static_cast<std::size_t>(ids.size()) * static_cast<std::size_t>(d));
    const auto& tv = table.value();
    for (std::size_t r = 0; r < ids.size(); ++r) {
        std::copy(tv.data() + ids[r] * d, tv.data() + (ids[r] + 1) * d,
                  out.data() + static_cast<Index>(r) * d);
    }
    Tensor o(out_shape, std::move(out), want_grad(table));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [table, o, ids, d]() {
            const auto& go = o.impl()->grad;
            auto& gt = table.grad();
            for (std::size_t r = 0; r < ids.size(); ++r) {
                double* dst = gt.data() + ids[r] * d;
                const double* src = go.data() + static_cast<Index>(r) * d;
                for (Index i = 0; i < d; ++i) dst[i] += src[i];
            }
        });
    }
    return o;
}

Tensor masked_fill(Tape& tape, const Tensor& a, const std::vector<std::uint8_t>& mask,
                   double fill_value) {
    if (static_cast<Index>(mask.size()) != a.numel()) {
        throw std::invalid_argument("masked_fill: mask size " + std::to_string(mask.size()) +
                                    " does not match tensor numel " + std::to_string(a.numel()));
    }
    const auto& av = a.value();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = mask[i] ? fill_value : av[i];
    Tensor o(a.shape(), std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o, mask]() {
            const auto& go = o.impl()->grad;
            auto& ga = a.grad();
            for (std::size_t i = 0; i < go.size(); ++i) {
                if (!mask[i]) ga[i] += go[i];
            }
        });
    }
    return o;
}

Tensor reduce_sum(Tape& tape, const Tensor& a) {
    double s = 0.0;
    for (double v : a.value()) s += v;
    Tensor o = Tensor::scalar(s, want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o]() {
            const double g = o.impl()->grad[0];
            auto& ga = a.grad();
            for (auto& v : ga) v += g;
        });
    }
    return o;
}

Tensor reduce_mean(Tape& tape, const Tensor& a) {
    if (a.numel() == 0) {
        throw std::invalid_argument("reduce_mean: empty tensor");
    }
    double s = 0.0;
    for (double v : a.value()) s += v;
    const double inv_n = 1.0 / static_cast<double>(a.numel());
    Tensor o = Tensor::scalar(s * inv_n, want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o, inv_n]() {
            const double g = o.impl()->grad[0] * inv_n;
            auto& ga = a.grad();
            for (auto& v : ga) v += g;
        });
    }
    return o;
}

Tensor select_index(Tape& tape, const Tensor& a, const std::vector<Index>& ids) {
    if (a.rank() != 2) {
        throw std::invalid_argument("select_index: input must be rank 2, got " +
                                    shape_str(a.shape()));
    }
    const Index n = a.dim(0);
    const Index v = a.dim(1);
    if (static_cast<Index>(ids.size()) != n) {
        throw std::invalid_argument("select_index: expected " + std::to_string(n) + " ids, got " +
                                    std::to_string(ids.size()));
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    const auto& av = a.value();
    for (Index r = 0; r < n; ++r) {
        const Index id = ids[static_cast<std::size_t>(r)];
        if (id < 0 || id >= v) {
            throw std::invalid_argument("select_index: id " + std::to_string(id) +
                                        " out of range [0," + std::to_string(v) + ")");
        }
        out[static_cast<std::size_t>(r)] = av[static_cast<std::size_t>(r * v + id)];
    }
    Tensor o(Shape{n}, std::move(out), want_grad(a));
    if (tape.recording() && o.requires_grad()) {
        tape.record(o, [a, o, ids, v]() {
            const auto& go = o.impl()->grad;
            auto& ga = a.grad();
            for (std::size_t r = 0; r < ids.size(); ++r) {
                ga[r * static_cast<std::size_t>(v) + static_cast<std::size_t>(ids[r])] += go[r];
            }
        });
    }
    return o;
}

}  // namespace radsum::tensor
