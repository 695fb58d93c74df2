#pragma once

// Dense double-precision tensors with tape-based reverse-mode automatic
// differentiation. Deliberately small: only the operations the
// encoder-decoder model and the losses need, all with exact analytic
// backward passes checked against finite differences in the tests.
//
// Conventions:
//   - Row-major storage, 64-bit values throughout.
//   - No implicit broadcasting except add/mul with a right-hand side whose
//     shape is a suffix of the left (bias-style); everything else requires
//     explicit reshape/transpose.
//   - A Tape owns the recorded operations of one forward pass. backward()
//     re-zeroes intermediate gradients and accumulates into leaf gradients,
//     so repeated backward calls sum into leaves.
//   - A Tape constructed with recording=false runs ops forward-only
//     (inference mode).

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace radsum::tensor {

using Index = std::int64_t;
using Shape = std::vector<Index>;

Index shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

struct TensorImpl {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until first touched
    bool requires_grad{false};
};

class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(const Shape& shape, bool requires_grad = false);
    static Tensor full(const Shape& shape, double v, bool requires_grad = false);
    static Tensor scalar(double v, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    Index dim(int i) const { return impl_->shape[static_cast<std::size_t>(i)]; }
    Index numel() const { return static_cast<Index>(impl_->value.size()); }

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

    // Tensor is a shared handle: accessors are const but hand out mutable
    // references to the underlying buffers, like smart pointers do.
    std::vector<double>& value() const { return impl_->value; }

    // Value of a scalar (numel == 1) tensor.
    double item() const;

    // Gradient buffer, allocated as zeros on first access.
    std::vector<double>& grad() const;
    bool has_grad() const { return !impl_->grad.empty(); }
    void zero_grad() const;

    TensorImpl* impl() const { return impl_.get(); }

private:
    std::shared_ptr<TensorImpl> impl_;
};

class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }

    void record(const Tensor& out, std::function<void()> backward);

    // Seeds d(loss)/d(loss) = 1 and runs recorded ops in reverse order.
    // Throws if loss is not scalar or was not produced on this tape.
    void backward(const Tensor& loss);

    // Drops all recorded nodes (and with them the captured activations).
    void clear();

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor out;
        std::function<void()> backward;
    };
    std::vector<Node> nodes_;
    std::unordered_map<const TensorImpl*, std::size_t> produced_;
    bool recording_;
};

// ---------------------------------------------------------------------------
// Primitive operations
// ---------------------------------------------------------------------------

// Elementwise sum. b.shape must equal a.shape or be a suffix of it
// (bias-style broadcast across the leading dims of a).
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);

// Elementwise product, same shapes only.
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor scale(Tape& tape, const Tensor& a, double c);

// matmul supports: [m,k]x[k,n] -> [m,n];  [B,m,k]x[B,k,n] -> [B,m,n];
// [B,m,k]x[k,n] -> [B,m,n].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor transpose(Tape& tape, const Tensor& a, int d0, int d1);

Tensor reshape(Tape& tape, const Tensor& a, const Shape& shape);

Tensor softmax(Tape& tape, const Tensor& a, int axis);
Tensor log_softmax(Tape& tape, const Tensor& a, int axis);

// Normalizes over the last dim; gain and bias have shape [last_dim].
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain,
                  const Tensor& bias, double eps = 1e-6);

Tensor relu(Tape& tape, const Tensor& a);
Tensor gelu(Tape& tape, const Tensor& a);  // tanh approximation

// Rows of table ([V, D]) gathered by ids; output shape = id_shape + [D].
Tensor embedding_gather(Tape& tape, const Tensor& table,
                        const std::vector<Index>& ids, const Shape& id_shape);

// out[i] = mask[i] ? fill_value : a[i]; mask length must equal numel.
Tensor masked_fill(Tape& tape, const Tensor& a,
                   const std::vector<std::uint8_t>& mask, double fill_value);

Tensor reduce_sum(Tape& tape, const Tensor& a);   // -> scalar
Tensor reduce_mean(Tape& tape, const Tensor& a);  // -> scalar

// a is [N, V]; out[i] = a[i, ids[i]] -> [N]. Used to pick target log-probs.
Tensor select_index(Tape& tape, const Tensor& a, const std::vector<Index>& ids);

}  // namespace radsum::tensor
