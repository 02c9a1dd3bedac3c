#include "vadd/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace vadd::ad {

namespace {

constexpr double kLogClamp = 1e-12;

#ifndef NDEBUG
void check_finite(const char* op, const std::vector<double>& d) {
    for (double x : d) {
        if (!std::isfinite(x)) fail(op, ": produced a non-finite value");
    }
}
#define VADD_CHECK_FINITE(op, d) check_finite(op, d)
#else
#define VADD_CHECK_FINITE(op, d) ((void)0)
#endif

Tensor make_result(Shape shape, std::vector<double> data, bool requires_grad) {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = std::move(shape);
    impl->data = std::move(data);
    impl->requires_grad = requires_grad;
    if (requires_grad) impl->ensure_grad();
    return Tensor(std::move(impl));
}

bool wants_grad(const Tape& t, std::initializer_list<const Tensor*> inputs) {
    if (!t.recording()) return false;
    for (const Tensor* x : inputs) {
        if (x->requires_grad()) return true;
    }
    return false;
}

void prepare_inputs(std::initializer_list<const Tensor*> inputs) {
    for (const Tensor* x : inputs) {
        if (x->requires_grad()) x->impl()->ensure_grad();
    }
}

void need_rank(const char* op, const Tensor& t, int r) {
    if (t.rank() != r)
        fail(op, ": expected rank ", r, " tensor, got ", shape_str(t.shape()));
}

void need_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        fail(op, ": shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
}

} // namespace

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int e : s) n *= e;
    return n;
}

Tensor Tensor::zeros(Shape shape) {
    int64_t n = shape_numel(shape);
    return make_result(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0), false);
}

Tensor Tensor::full(Shape shape, double value) {
    int64_t n = shape_numel(shape);
    return make_result(std::move(shape), std::vector<double>(static_cast<size_t>(n), value), false);
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    if (shape_numel(shape) != static_cast<int64_t>(values.size()))
        fail("tensor: shape ", shape_str(shape), " does not match ", values.size(), " values");
    return make_result(std::move(shape), std::move(values), false);
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::one_hot(int size, int index) {
    if (index < 0 || index >= size)
        fail("one_hot: index ", index, " out of range for size ", size);
    std::vector<double> v(static_cast<size_t>(size), 0.0);
    v[static_cast<size_t>(index)] = 1.0;
    return from({size}, std::move(v));
}

Tensor Tensor::param(Shape shape, std::vector<double> values) {
    Tensor t = from(std::move(shape), std::move(values));
    t.impl()->requires_grad = true;
    t.impl()->leaf = true;
    t.impl()->ensure_grad();
    return t;
}

double Tensor::value() const {
    if (numel() != 1)
        fail("tensor: value() called on non-scalar ", shape_str(shape()));
    return impl_->data[0];
}

double Tensor::at(int r, int c) const {
    return impl_->data[static_cast<size_t>(r) * static_cast<size_t>(dim(1)) + static_cast<size_t>(c)];
}

Tensor Tensor::clone() const {
    auto impl = std::make_shared<TensorImpl>();
    impl->shape = impl_->shape;
    impl->data = impl_->data;
    impl->requires_grad = impl_->requires_grad;
    impl->leaf = impl_->leaf;
    if (impl->requires_grad) impl->ensure_grad();
    return Tensor(std::move(impl));
}

void Tape::record(const char* op, std::shared_ptr<TensorImpl> out, std::function<void()> back) {
    nodes_.push_back(Node{op, std::move(out), std::move(back)});
}

void Tape::backward(const Tensor& loss) {
    if (backward_run_) fail("backward: already run on this tape");
    if (nodes_.empty()) fail("backward: tape is empty");
    if (loss.numel() != 1)
        fail("backward: loss must be scalar, got ", shape_str(loss.shape()));
    if (!loss.requires_grad())
        fail("backward: loss does not require grad (was it recorded on this tape?)");
    backward_run_ = true;

    loss.impl()->ensure_grad();
    loss.impl()->grad[0] = 1.0;

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->back();
    }

    // release intermediate grad buffers; leaves keep theirs for the optimizer
    for (auto& node : nodes_) {
        if (!node.out->leaf) std::vector<double>().swap(node.out->grad);
        node.back = nullptr;
    }
}

// ---- matmul ----------------------------------------------------------------

Tensor matmul(Tape& t, const Tensor& a, const Tensor& b) {
    const bool grad = wants_grad(t, {&a, &b});

    if (a.rank() == 2 && b.rank() == 2) {
        if (a.dim(1) != b.dim(0))
            fail("matmul: shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
        const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
        std::vector<double> out(static_cast<size_t>(m) * n, 0.0);
        for (int i = 0; i < m; ++i)
            for (int l = 0; l < k; ++l) {
                const double av = a.at(i, l);
                for (int j = 0; j < n; ++j) out[static_cast<size_t>(i) * n + j] += av * b.at(l, j);
            }
        VADD_CHECK_FINITE("matmul", out);
        Tensor res = make_result({m, n}, std::move(out), grad);
        if (grad) {
            prepare_inputs({&a, &b});
            t.record("matmul", res.impl(), [a, b, res, m, k, n]() {
                const auto& g = res.grad();
                if (a.requires_grad()) {
                    auto& ga = a.impl()->grad;
                    for (int i = 0; i < m; ++i)
                        for (int l = 0; l < k; ++l) {
                            double acc = 0.0;
                            for (int j = 0; j < n; ++j) acc += g[static_cast<size_t>(i) * n + j] * b.at(l, j);
                            ga[static_cast<size_t>(i) * k + l] += acc;
                        }
                }
                if (b.requires_grad()) {
                    auto& gb = b.impl()->grad;
                    for (int l = 0; l < k; ++l)
                        for (int i = 0; i < m; ++i) {
                            const double av = a.at(i, l);
                            for (int j = 0; j < n; ++j) gb[static_cast<size_t>(l) * n + j] += av * g[static_cast<size_t>(i) * n + j];
                        }
                }
            });
        }
        return res;
    }

    if (a.rank() == 2 && b.rank() == 1) {
        if (a.dim(1) != b.dim(0))
            fail("matmul: shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
        const int m = a.dim(0), k = a.dim(1);
        std::vector<double> out(static_cast<size_t>(m), 0.0);
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += a.at(i, l) * b.at(l);
            out[static_cast<size_t>(i)] = acc;
        }
        VADD_CHECK_FINITE("matmul", out);
        Tensor res = make_result({m}, std::move(out), grad);
        if (grad) {
            prepare_inputs({&a, &b});
            t.record("matmul", res.impl(), [a, b, res, m, k]() {
                const auto& g = res.grad();
                if (a.requires_grad()) {
                    auto& ga = a.impl()->grad;
                    for (int i = 0; i < m; ++i)
                        for (int l = 0; l < k; ++l) ga[static_cast<size_t>(i) * k + l] += g[static_cast<size_t>(i)] * b.at(l);
                }
                if (b.requires_grad()) {
                    auto& gb = b.impl()->grad;
                    for (int i = 0; i < m; ++i) {
                        const double gi = g[static_cast<size_t>(i)];
                        for (int l = 0; l < k; ++l) gb[static_cast<size_t>(l)] += a.at(i, l) * gi;
                    }
                }
            });
        }
        return res;
    }

    if (a.rank() == 1 && b.rank() == 2) {
        if (a.dim(0) != b.dim(0))
            fail("matmul: shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
        const int m = a.dim(0), k = b.dim(1);
        std::vector<double> out(static_cast<size_t>(k), 0.0);
        for (int i = 0; i < m; ++i) {
            const double av = a.at(i);
            for (int j = 0; j < k; ++j) out[static_cast<size_t>(j)] += av * b.at(i, j);
        }
        VADD_CHECK_FINITE("matmul", out);
        Tensor res = make_result({k}, std::move(out), grad);
        if (grad) {
            prepare_inputs({&a, &b});
            t.record("matmul", res.impl(), [a, b, res, m, k]() {
                const auto& g = res.grad();
                if (a.requires_grad()) {
                    auto& ga = a.impl()->grad;
                    for (int i = 0; i < m; ++i) {
                        double acc = 0.0;
                        for (int j = 0; j < k; ++j) acc += g[static_cast<size_t>(j)] * b.at(i, j);
                        ga[static_cast<size_t>(i)] += acc;
                    }
                }
                if (b.requires_grad()) {
                    auto& gb = b.impl()->grad;
                    for (int i = 0; i < m; ++i) {
                        const double av = a.at(i);
                        for (int j = 0; j < k; ++j) gb[static_cast<size_t>(i) * k + j] += av * g[static_cast<size_t>(j)];
                    }
                }
            });
        }
        return res;
    }

    fail("matmul: unsupported ranks ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
}

Tensor matmul_nt(Tape& t, const Tensor& a, const Tensor& b) {
    need_rank("matmul_nt", a, 2);
    need_rank("matmul_nt", b, 2);
    if (a.dim(1) != b.dim(1))
        fail("matmul_nt: shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
    const int n = a.dim(0), k = a.dim(1), m = b.dim(0);
    const bool grad = wants_grad(t, {&a, &b});
    std::vector<double> out(static_cast<size_t>(n) * m, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int l = 0; l < k; ++l) acc += a.at(i, l) * b.at(j, l);
            out[static_cast<size_t>(i) * m + j] = acc;
        }
    VADD_CHECK_FINITE("matmul_nt", out);
    Tensor res = make_result({n, m}, std::move(out), grad);
    if (grad) {
        prepare_inputs({&a, &b});
        t.record("matmul_nt", res.impl(), [a, b, res, n, k, m]() {
            const auto& g = res.grad();
            if (a.requires_grad()) {
                auto& ga = a.impl()->grad;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) {
                        const double gv = g[static_cast<size_t>(i) * m + j];
                        for (int l = 0; l < k; ++l) ga[static_cast<size_t>(i) * k + l] += gv * b.at(j, l);
                    }
            }
            if (b.requires_grad()) {
                auto& gb = b.impl()->grad;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < m; ++j) {
                        const double gv = g[static_cast<size_t>(i) * m + j];
                        for (int l = 0; l < k; ++l) gb[static_cast<size_t>(j) * k + l] += gv * a.at(i, l);
                    }
            }
        });
    }
    return res;
}

Tensor transpose(Tape& t, const Tensor& a) {
    need_rank("transpose", a, 2);
    const int r = a.dim(0), c = a.dim(1);
    const bool grad = wants_grad(t, {&a});
    std::vector<double> out(static_cast<size_t>(r) * c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<size_t>(j) * r + i] = a.at(i, j);
    Tensor res = make_result({c, r}, std::move(out), grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("transpose", res.impl(), [a, res, r, c]() {
            const auto& g = res.grad();
            auto& ga = a.impl()->grad;
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) ga[static_cast<size_t>(i) * c + j] += g[static_cast<size_t>(j) * r + i];
        });
    }
    return res;
}

// ---- elementwise -----------------------------------------------------------

Tensor add(Tape& t, const Tensor& a, const Tensor& b) {
    need_same_shape("add", a, b);
    const bool grad = wants_grad(t, {&a, &b});
    std::vector<double> out(a.data());
    const auto& bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
    VADD_CHECK_FINITE("add", out);
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a, &b});
        t.record("add", res.impl(), [a, b, res]() {
            const auto& g = res.grad();
            if (a.requires_grad()) {
                auto& ga = a.impl()->grad;
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.impl()->grad;
                for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
            }
        });
    }
    return res;
}

Tensor add_rows(Tape& t, const Tensor& m, const Tensor& v) {
    need_rank("add_rows", m, 2);
    need_rank("add_rows", v, 1);
    if (m.dim(1) != v.dim(0))
        fail("add_rows: shape mismatch ", shape_str(m.shape()), " vs ", shape_str(v.shape()));
    const int n = m.dim(0), k = m.dim(1);
    const bool grad = wants_grad(t, {&m, &v});
    std::vector<double> out(m.data());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) out[static_cast<size_t>(i) * k + j] += v.at(j);
    VADD_CHECK_FINITE("add_rows", out);
    Tensor res = make_result(m.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&m, &v});
        t.record("add_rows", res.impl(), [m, v, res, n, k]() {
            const auto& g = res.grad();
            if (m.requires_grad()) {
                auto& gm = m.impl()->grad;
                for (size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
            }
            if (v.requires_grad()) {
                auto& gv = v.impl()->grad;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < k; ++j) gv[static_cast<size_t>(j)] += g[static_cast<size_t>(i) * k + j];
            }
        });
    }
    return res;
}

Tensor sub(Tape& t, const Tensor& a, const Tensor& b) {
    need_same_shape("sub", a, b);
    const bool grad = wants_grad(t, {&a, &b});
    std::vector<double> out(a.data());
    const auto& bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a, &b});
        t.record("sub", res.impl(), [a, b, res]() {
            const auto& g = res.grad();
            if (a.requires_grad()) {
                auto& ga = a.impl()->grad;
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.impl()->grad;
                for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
            }
        });
    }
    return res;
}

Tensor mul(Tape& t, const Tensor& a, const Tensor& b) {
    need_same_shape("mul", a, b);
    const bool grad = wants_grad(t, {&a, &b});
    std::vector<double> out(a.data());
    const auto& bd = b.data();
    for (size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
    VADD_CHECK_FINITE("mul", out);
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a, &b});
        t.record("mul", res.impl(), [a, b, res]() {
            const auto& g = res.grad();
            if (a.requires_grad()) {
                auto& ga = a.impl()->grad;
                const auto& bd2 = b.data();
                for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bd2[i];
            }
            if (b.requires_grad()) {
                auto& gb = b.impl()->grad;
                const auto& ad2 = a.data();
                for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ad2[i];
            }
        });
    }
    return res;
}

Tensor scale(Tape& t, const Tensor& a, double c) {
    const bool grad = wants_grad(t, {&a});
    std::vector<double> out(a.data());
    for (double& x : out) x *= c;
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("scale", res.impl(), [a, res, c]() {
            const auto& g = res.grad();
            auto& ga = a.impl()->grad;
            for (size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
        });
    }
    return res;
}

Tensor scale_by(Tape& t, const Tensor& a, const Tensor& s) {
    if (s.numel() != 1)
        fail("scale_by: scale must be [1], got ", shape_str(s.shape()));
    const bool grad = wants_grad(t, {&a, &s});
    const double c = s.at(0);
    std::vector<double> out(a.data());
    for (double& x : out) x *= c;
    VADD_CHECK_FINITE("scale_by", out);
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a, &s});
        t.record("scale_by", res.impl(), [a, s, res, c]() {
            const auto& g = res.grad();
            if (a.requires_grad()) {
                auto& ga = a.impl()->grad;
                for (size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
            }
            if (s.requires_grad()) {
                double acc = 0.0;
                const auto& ad = a.data();
                for (size_t i = 0; i < g.size(); ++i) acc += g[i] * ad[i];
                s.impl()->grad[0] += acc;
            }
        });
    }
    return res;
}

Tensor scale_rows(Tape& t, const Tensor& m, const Tensor& v) {
    need_rank("scale_rows", m, 2);
    need_rank("scale_rows", v, 1);
    if (m.dim(0) != v.dim(0))
        fail("scale_rows: shape mismatch ", shape_str(m.shape()), " vs ", shape_str(v.shape()));
    const int n = m.dim(0), k = m.dim(1);
    const bool grad = wants_grad(t, {&m, &v});
    std::vector<double> out(m.data());
    for (int i = 0; i < n; ++i) {
        const double c = v.at(i);
        for (int j = 0; j < k; ++j) out[static_cast<size_t>(i) * k + j] *= c;
    }
    VADD_CHECK_FINITE("scale_rows", out);
    Tensor res = make_result(m.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&m, &v});
        t.record("scale_rows", res.impl(), [m, v, res, n, k]() {
            const auto& g = res.grad();
            if (m.requires_grad()) {
                auto& gm = m.impl()->grad;
                for (int i = 0; i < n; ++i) {
                    const double c = v.at(i);
                    for (int j = 0; j < k; ++j) gm[static_cast<size_t>(i) * k + j] += g[static_cast<size_t>(i) * k + j] * c;
                }
            }
            if (v.requires_grad()) {
                auto& gv = v.impl()->grad;
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int j = 0; j < k; ++j) acc += g[static_cast<size_t>(i) * k + j] * m.at(i, j);
                    gv[static_cast<size_t>(i)] += acc;
                }
            }
        });
    }
    return res;
}

// ---- shape ops ---------------------------------------------------------------

Tensor concat(Tape& t, const Tensor& a, const Tensor& b) {
    const bool grad = wants_grad(t, {&a, &b});
    if (a.rank() == 1 && b.rank() == 1) {
        const int p = a.dim(0), q = b.dim(0);
        std::vector<double> out;
        out.reserve(static_cast<size_t>(p + q));
        out.insert(out.end(), a.data().begin(), a.data().end());
        out.insert(out.end(), b.data().begin(), b.data().end());
        Tensor res = make_result({p + q}, std::move(out), grad);
        if (grad) {
            prepare_inputs({&a, &b});
            t.record("concat", res.impl(), [a, b, res, p, q]() {
                const auto& g = res.grad();
                if (a.requires_grad()) {
                    auto& ga = a.impl()->grad;
                    for (int i = 0; i < p; ++i) ga[static_cast<size_t>(i)] += g[static_cast<size_t>(i)];
                }
                if (b.requires_grad()) {
                    auto& gb = b.impl()->grad;
                    for (int i = 0; i < q; ++i) gb[static_cast<size_t>(i)] += g[static_cast<size_t>(p + i)];
                }
            });
        }
        return res;
    }
    if (a.rank() == 2 && b.rank() == 2) {
        if (a.dim(0) != b.dim(0))
            fail("concat: row counts differ ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
        const int n = a.dim(0), p = a.dim(1), q = b.dim(1);
        std::vector<double> out(static_cast<size_t>(n) * (p + q));
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) out[static_cast<size_t>(i) * (p + q) + j] = a.at(i, j);
            for (int j = 0; j < q; ++j) out[static_cast<size_t>(i) * (p + q) + p + j] = b.at(i, j);
        }
        Tensor res = make_result({n, p + q}, std::move(out), grad);
        if (grad) {
            prepare_inputs({&a, &b});
            t.record("concat", res.impl(), [a, b, res, n, p, q]() {
                const auto& g = res.grad();
                if (a.requires_grad()) {
                    auto& ga = a.impl()->grad;
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < p; ++j)
                            ga[static_cast<size_t>(i) * p + j] += g[static_cast<size_t>(i) * (p + q) + j];
                }
                if (b.requires_grad()) {
                    auto& gb = b.impl()->grad;
                    for (int i = 0; i < n; ++i)
                        for (int j = 0; j < q; ++j)
                            gb[static_cast<size_t>(i) * q + j] += g[static_cast<size_t>(i) * (p + q) + p + j];
                }
            });
        }
        return res;
    }
    fail("concat: shape mismatch ", shape_str(a.shape()), " vs ", shape_str(b.shape()));
}

Tensor stack_rows(Tape& t, const std::vector<Tensor>& rows) {
    if (rows.empty()) fail("stack_rows: no rows");
    const int k = rows[0].dim(0);
    const int n = static_cast<int>(rows.size());
    bool grad = false;
    for (const Tensor& r : rows) {
        need_rank("stack_rows", r, 1);
        if (r.dim(0) != k)
            fail("stack_rows: shape mismatch ", shape_str(rows[0].shape()), " vs ", shape_str(r.shape()));
        if (t.recording() && r.requires_grad()) grad = true;
    }
    std::vector<double> out(static_cast<size_t>(n) * k);
    for (int i = 0; i < n; ++i)
        std::copy(rows[static_cast<size_t>(i)].data().begin(), rows[static_cast<size_t>(i)].data().end(),
                  out.begin() + static_cast<size_t>(i) * k);
    Tensor res = make_result({n, k}, std::move(out), grad);
    if (grad) {
        for (const Tensor& r : rows)
            if (r.requires_grad()) r.impl()->ensure_grad();
        t.record("stack_rows", res.impl(), [rows, res, n, k]() {
            const auto& g = res.grad();
            for (int i = 0; i < n; ++i) {
                const Tensor& r = rows[static_cast<size_t>(i)];
                if (!r.requires_grad()) continue;
                auto& gr = r.impl()->grad;
                for (int j = 0; j < k; ++j) gr[static_cast<size_t>(j)] += g[static_cast<size_t>(i) * k + j];
            }
        });
    }
    return res;
}

Tensor row(Tape& t, const Tensor& m, int i) {
    need_rank("row", m, 2);
    if (i < 0 || i >= m.dim(0)) fail("row: index ", i, " out of range for ", shape_str(m.shape()));
    const int k = m.dim(1);
    const bool grad = wants_grad(t, {&m});
    std::vector<double> out(m.data().begin() + static_cast<size_t>(i) * k,
                            m.data().begin() + static_cast<size_t>(i + 1) * k);
    Tensor res = make_result({k}, std::move(out), grad);
    if (grad) {
        prepare_inputs({&m});
        t.record("row", res.impl(), [m, res, i, k]() {
            const auto& g = res.grad();
            auto& gm = m.impl()->grad;
            for (int j = 0; j < k; ++j) gm[static_cast<size_t>(i) * k + j] += g[static_cast<size_t>(j)];
        });
    }
    return res;
}

Tensor slice(Tape& t, const Tensor& a, int start, int len) {
    const int last = a.dim(a.rank() - 1);
    if (start < 0 || len <= 0 || start + len > last)
        fail("slice: range [", start, ", ", start + len, ") out of ", shape_str(a.shape()));
    const bool grad = wants_grad(t, {&a});
    if (a.rank() == 1) {
        std::vector<double> out(a.data().begin() + start, a.data().begin() + start + len);
        Tensor res = make_result({len}, std::move(out), grad);
        if (grad) {
            prepare_inputs({&a});
            t.record("slice", res.impl(), [a, res, start, len]() {
                const auto& g = res.grad();
                auto& ga = a.impl()->grad;
                for (int j = 0; j < len; ++j) ga[static_cast<size_t>(start + j)] += g[static_cast<size_t>(j)];
            });
        }
        return res;
    }
    if (a.rank() == 2) {
        const int n = a.dim(0), k = a.dim(1);
        std::vector<double> out(static_cast<size_t>(n) * len);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < len; ++j) out[static_cast<size_t>(i) * len + j] = a.at(i, start + j);
        Tensor res = make_result({n, len}, std::move(out), grad);
        if (grad) {
            prepare_inputs({&a});
            t.record("slice", res.impl(), [a, res, start, len, n, k]() {
                const auto& g = res.grad();
                auto& ga = a.impl()->grad;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < len; ++j)
                        ga[static_cast<size_t>(i) * k + start + j] += g[static_cast<size_t>(i) * len + j];
            });
        }
        return res;
    }
    fail("slice: unsupported rank for ", shape_str(a.shape()));
}

Tensor pick(Tape& t, const Tensor& v, int i) {
    need_rank("pick", v, 1);
    return slice(t, v, i, 1);
}

// ---- nonlinearities ----------------------------------------------------------

Tensor tanh(Tape& t, const Tensor& a) {
    const bool grad = wants_grad(t, {&a});
    std::vector<double> out(a.data());
    for (double& x : out) x = std::tanh(x);
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("tanh", res.impl(), [a, res]() {
            const auto& g = res.grad();
            const auto& y = res.data();
            auto& ga = a.impl()->grad;
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        });
    }
    return res;
}

Tensor sigmoid(Tape& t, const Tensor& a) {
    const bool grad = wants_grad(t, {&a});
    std::vector<double> out(a.data());
    for (double& x : out) x = 1.0 / (1.0 + std::exp(-x));
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("sigmoid", res.impl(), [a, res]() {
            const auto& g = res.grad();
            const auto& y = res.data();
            auto& ga = a.impl()->grad;
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        });
    }
    return res;
}

Tensor log(Tape& t, const Tensor& a) {
    const bool grad = wants_grad(t, {&a});
    std::vector<double> out(a.data());
    for (double& x : out) {
        if (x < kLogClamp) {
            t.count_log_clamp();
            x = std::log(kLogClamp);
        } else {
            x = std::log(x);
        }
    }
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("log", res.impl(), [a, res]() {
            const auto& g = res.grad();
            const auto& x = a.data();
            auto& ga = a.impl()->grad;
            for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / std::max(x[i], kLogClamp);
        });
    }
    return res;
}

Tensor softmax(Tape& t, const Tensor& a) {
    const bool grad = wants_grad(t, {&a});
    const int k = a.dim(a.rank() - 1);
    const int n = static_cast<int>(a.numel()) / k;
    std::vector<double> out(a.data());
    for (int r = 0; r < n; ++r) {
        double* p = out.data() + static_cast<size_t>(r) * k;
        double mx = p[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, p[j]);
        double denom = 0.0;
        for (int j = 0; j < k; ++j) {
            p[j] = std::exp(p[j] - mx);
            denom += p[j];
        }
        for (int j = 0; j < k; ++j) p[j] /= denom;
    }
    VADD_CHECK_FINITE("softmax", out);
    Tensor res = make_result(a.shape(), std::move(out), grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("softmax", res.impl(), [a, res, n, k]() {
            const auto& g = res.grad();
            const auto& y = res.data();
            auto& ga = a.impl()->grad;
            for (int r = 0; r < n; ++r) {
                const size_t off = static_cast<size_t>(r) * k;
                double dot = 0.0;
                for (int j = 0; j < k; ++j) dot += g[off + j] * y[off + j];
                for (int j = 0; j < k; ++j) ga[off + j] += y[off + j] * (g[off + j] - dot);
            }
        });
    }
    return res;
}

// ---- reductions ----------------------------------------------------------------

Tensor sum(Tape& t, const Tensor& a) {
    const bool grad = wants_grad(t, {&a});
    double acc = 0.0;
    for (double x : a.data()) acc += x;
    Tensor res = make_result({1}, {acc}, grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("sum", res.impl(), [a, res]() {
            const double g = res.grad()[0];
            auto& ga = a.impl()->grad;
            for (double& x : ga) x += g;
        });
    }
    return res;
}

Tensor mean(Tape& t, const Tensor& a) {
    const bool grad = wants_grad(t, {&a});
    double acc = 0.0;
    for (double x : a.data()) acc += x;
    const double inv = 1.0 / static_cast<double>(a.numel());
    Tensor res = make_result({1}, {acc * inv}, grad);
    if (grad) {
        prepare_inputs({&a});
        t.record("mean", res.impl(), [a, res, inv]() {
            const double g = res.grad()[0] * inv;
            auto& ga = a.impl()->grad;
            for (double& x : ga) x += g;
        });
    }
    return res;
}

Tensor sum_rows(Tape& t, const Tensor& m) {
    need_rank("sum_rows", m, 2);
    const int n = m.dim(0), k = m.dim(1);
    const bool grad = wants_grad(t, {&m});
    std::vector<double> out(static_cast<size_t>(k), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) out[static_cast<size_t>(j)] += m.at(i, j);
    Tensor res = make_result({k}, std::move(out), grad);
    if (grad) {
        prepare_inputs({&m});
        t.record("sum_rows", res.impl(), [m, res, n, k]() {
            const auto& g = res.grad();
            auto& gm = m.impl()->grad;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < k; ++j) gm[static_cast<size_t>(i) * k + j] += g[static_cast<size_t>(j)];
        });
    }
    return res;
}

Tensor embed_lookup(Tape& t, const Tensor& table, int id) {
    need_rank("embed_lookup", table, 2);
    if (id < 0 || id >= table.dim(0))
        fail("embed_lookup: id ", id, " out of range for table ", shape_str(table.shape()));
    const int e = table.dim(1);
    const bool grad = wants_grad(t, {&table});
    std::vector<double> out(table.data().begin() + static_cast<size_t>(id) * e,
                            table.data().begin() + static_cast<size_t>(id + 1) * e);
    Tensor res = make_result({e}, std::move(out), grad);
    if (grad) {
        prepare_inputs({&table});
        t.record("embed_lookup", res.impl(), [table, res, id, e]() {
            const auto& g = res.grad();
            auto& gt = table.impl()->grad;
            for (int j = 0; j < e; ++j) gt[static_cast<size_t>(id) * e + j] += g[static_cast<size_t>(j)];
        });
    }
    return res;
}

} // namespace vadd::ad
