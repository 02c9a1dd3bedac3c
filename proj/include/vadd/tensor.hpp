#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vadd/common.hpp"

namespace vadd::ad {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);
int64_t shape_numel(const Shape& s);

struct TensorImpl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad; // same length as data iff gradients are tracked
    bool requires_grad = false;
    bool leaf = false;

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
};

// Shared-storage handle. Copying a Tensor aliases the buffer; clone() copies.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);
    static Tensor one_hot(int size, int index);
    // leaf with gradient tracking (a trainable parameter)
    static Tensor param(Shape shape, std::vector<double> values);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return impl_->numel(); }

    std::vector<double>& data() { return impl_->data; }
    const std::vector<double>& data() const { return impl_->data; }
    std::vector<double>& grad() { return impl_->grad; }
    const std::vector<double>& grad() const { return impl_->grad; }
    bool has_grad() const { return impl_->grad.size() == impl_->data.size(); }

    bool requires_grad() const { return impl_->requires_grad; }
    bool is_leaf() const { return impl_->leaf; }

    double value() const; // scalar convenience, errors when numel != 1
    double at(int i) const { return impl_->data[static_cast<size_t>(i)]; }
    double at(int r, int c) const;

    Tensor clone() const;
    void zero_grad() { if (has_grad()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0); }

    const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

private:
    std::shared_ptr<TensorImpl> impl_;
};

// Define-by-run tape. One tape per forward pass; backward() walks the node
// list in reverse insertion order and accumulates into leaf gradients.
// A non-recording tape evaluates values only (used for inference and the
// finite-difference side of gradient checks).
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    size_t size() const { return nodes_.size(); }
    size_t log_clamp_count() const { return log_clamps_; }
    void count_log_clamp() { ++log_clamps_; }

    void record(const char* op, std::shared_ptr<TensorImpl> out, std::function<void()> back);

    // loss must be scalar; every requires_grad leaf reachable from it ends up
    // holding dLoss/dLeaf. Grad buffers of intermediates are released.
    void backward(const Tensor& loss);

private:
    struct Node {
        const char* op;
        std::shared_ptr<TensorImpl> out;
        std::function<void()> back;
    };
    std::vector<Node> nodes_;
    bool recording_;
    bool backward_run_ = false;
    size_t log_clamps_ = 0;
};

// ---- primitive operations -------------------------------------------------
//
// Shapes are rank 1 or rank 2, row-major. Every op validates shapes and
// throws vadd::error naming the op and the offending shapes.

// [m×k]·[k×n] -> [m×n]; [m×k]·[k] -> [m]; [m]·[m×k] -> [k]
Tensor matmul(Tape& t, const Tensor& a, const Tensor& b);
// a·b^T for row-major weight layouts: [n×k]·([m×k])^T -> [n×m]
Tensor matmul_nt(Tape& t, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& t, const Tensor& a);

Tensor add(Tape& t, const Tensor& a, const Tensor& b);            // same shape
Tensor add_rows(Tape& t, const Tensor& m, const Tensor& v);       // [n×k] + [k] per row
Tensor sub(Tape& t, const Tensor& a, const Tensor& b);            // same shape
Tensor mul(Tape& t, const Tensor& a, const Tensor& b);            // same shape, elementwise
Tensor scale(Tape& t, const Tensor& a, double c);                 // constant scale
Tensor scale_by(Tape& t, const Tensor& a, const Tensor& s);       // s is [1], both differentiable
Tensor scale_rows(Tape& t, const Tensor& m, const Tensor& v);     // row i of m times v[i]

Tensor concat(Tape& t, const Tensor& a, const Tensor& b);         // last dim
Tensor stack_rows(Tape& t, const std::vector<Tensor>& rows);      // n×[k] -> [n×k]
Tensor row(Tape& t, const Tensor& m, int i);                      // [n×k] -> [k]
Tensor slice(Tape& t, const Tensor& a, int start, int len);       // last dim
Tensor pick(Tape& t, const Tensor& v, int i);                     // [k] -> [1]

Tensor tanh(Tape& t, const Tensor& a);
Tensor sigmoid(Tape& t, const Tensor& a);
Tensor log(Tape& t, const Tensor& a);                             // clamped at 1e-12, counted on tape
Tensor softmax(Tape& t, const Tensor& a);                         // last dim, row-max stabilized

Tensor sum(Tape& t, const Tensor& a);                             // -> [1]
Tensor mean(Tape& t, const Tensor& a);                            // -> [1]
Tensor sum_rows(Tape& t, const Tensor& m);                        // [n×k] -> [k]

Tensor embed_lookup(Tape& t, const Tensor& table, int id);        // row id of [D×E]

} // namespace vadd::ad
