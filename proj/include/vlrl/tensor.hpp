#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "vlrl/common.hpp"
#include "vlrl/detail/gemm.hpp"

namespace vlrl {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& s) {
    std::int64_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
    os << ']';
    return os.str();
}

namespace detail {

template <class Real>
struct TensorData {
    Shape shape;
    std::vector<Real> data;
    std::vector<Real> grad;  // empty until the first backward touches it
    bool requires_grad = false;

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), Real(0));
    }
};

// Depth of nested NoGradGuard scopes; shared by all precisions.
inline int& no_grad_depth() {
    thread_local int depth = 0;
    return depth;
}

}  // namespace detail

/// Disables adjoint recording for the enclosing scope (target branches,
/// action selection, evaluation rollouts).
struct NoGradGuard {
    NoGradGuard() { ++detail::no_grad_depth(); }
    ~NoGradGuard() { --detail::no_grad_depth(); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

inline bool grad_enabled() { return detail::no_grad_depth() == 0; }

template <class Real>
class Tensor;

/// Reverse-mode tape. One tape per training run; replaying the recorded
/// adjoints in reverse order implements the chain rule for everything
/// built from the ops below.
template <class Real>
class Tape {
public:
    using BackFn = std::function<void()>;

    static Tape& current() {
        thread_local Tape tape;
        return tape;
    }

    void record(BackFn fn) { nodes_.push_back(std::move(fn)); }

    std::size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    void truncate(std::size_t n) {
        if (n < nodes_.size()) nodes_.resize(n);
    }

    void replay_reverse() {
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
    }

private:
    std::vector<BackFn> nodes_;
};

template <class Real>
class Tensor {
public:
    Tensor() = default;

    static Tensor from(std::vector<Real> data, Shape shape, bool requires_grad = false) {
        if (shape_numel(shape) != static_cast<std::int64_t>(data.size())) {
            throw DimError("tensor data length " + std::to_string(data.size()) +
                           " does not match shape " + shape_str(shape));
        }
        for (auto d : shape) {
            if (d <= 0) throw DimError("tensor dims must be positive, got " + shape_str(shape));
        }
        Tensor t;
        t.p_ = std::make_shared<detail::TensorData<Real>>();
        t.p_->shape = std::move(shape);
        t.p_->data = std::move(data);
        t.p_->requires_grad = requires_grad && grad_enabled();
        return t;
    }

    static Tensor from_rows(const std::vector<std::vector<Real>>& rows, bool requires_grad = false) {
        if (rows.empty()) throw DimError("from_rows needs at least one row");
        const auto cols = static_cast<std::int64_t>(rows.front().size());
        std::vector<Real> flat;
        flat.reserve(rows.size() * rows.front().size());
        for (const auto& r : rows) {
            if (static_cast<std::int64_t>(r.size()) != cols) {
                throw DimError("ragged rows in from_rows");
            }
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return from(std::move(flat), {static_cast<std::int64_t>(rows.size()), cols}, requires_grad);
    }

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        auto n = shape_numel(shape);
        return from(std::vector<Real>(static_cast<std::size_t>(n), Real(0)), std::move(shape),
                    requires_grad);
    }

    static Tensor full(Shape shape, Real value, bool requires_grad = false) {
        auto n = shape_numel(shape);
        return from(std::vector<Real>(static_cast<std::size_t>(n), value), std::move(shape),
                    requires_grad);
    }

    static Tensor ones(Shape shape, bool requires_grad = false) {
        return full(std::move(shape), Real(1), requires_grad);
    }

    static Tensor scalar(Real value, bool requires_grad = false) {
        return from({value}, {1}, requires_grad);
    }

    static Tensor randn(Rng& rng, Shape shape, Real stddev = Real(1), bool requires_grad = false) {
        auto n = shape_numel(shape);
        std::vector<Real> d(static_cast<std::size_t>(n));
        for (auto& v : d) v = static_cast<Real>(rng.normal(0.0, static_cast<double>(stddev)));
        return from(std::move(d), std::move(shape), requires_grad);
    }

    static Tensor uniform(Rng& rng, Shape shape, Real lo, Real hi, bool requires_grad = false) {
        auto n = shape_numel(shape);
        std::vector<Real> d(static_cast<std::size_t>(n));
        for (auto& v : d) {
            v = static_cast<Real>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
        }
        return from(std::move(d), std::move(shape), requires_grad);
    }

    bool defined() const { return p_ != nullptr; }

    const Shape& shape() const { return impl().shape; }

    std::int64_t numel() const { return static_cast<std::int64_t>(impl().data.size()); }

    std::int64_t rank() const { return static_cast<std::int64_t>(impl().shape.size()); }

    // Row/column accessors for rank-2 tensors; rank-1 acts as a single row.
    std::int64_t rows() const { return rank() == 1 ? 1 : impl().shape[0]; }
    std::int64_t cols() const { return rank() == 1 ? impl().shape[0] : impl().shape[1]; }

    std::span<const Real> data() const { return {impl().data.data(), impl().data.size()}; }

    /// Direct mutable access. Parameter initialization and optimizer updates
    /// only; mutating an activation that is already on the tape invalidates
    /// recorded adjoints.
    std::span<Real> mutable_data() { return {impl().data.data(), impl().data.size()}; }

    Real item() const {
        if (numel() != 1) {
            throw ContractError("item() requires a scalar tensor, shape is " + shape_str(shape()));
        }
        return impl().data[0];
    }

    Real at(std::int64_t i) const { return impl().data.at(static_cast<std::size_t>(i)); }

    Real at(std::int64_t r, std::int64_t c) const {
        return impl().data.at(static_cast<std::size_t>(r * cols() + c));
    }

    bool requires_grad() const { return impl().requires_grad; }

    void set_requires_grad(bool v) { impl().requires_grad = v; }

    bool has_grad() const { return !impl().grad.empty(); }

    std::span<const Real> grad() const {
        if (!has_grad()) {
            throw ContractError("tensor has no gradient (no backward pass reached it)");
        }
        return {impl().grad.data(), impl().grad.size()};
    }

    void zero_grad() {
        if (has_grad()) std::fill(impl().grad.begin(), impl().grad.end(), Real(0));
    }

    /// Value copy that is disconnected from the tape.
    Tensor detach() const {
        Tensor t;
        t.p_ = std::make_shared<detail::TensorData<Real>>();
        t.p_->shape = impl().shape;
        t.p_->data = impl().data;
        t.p_->requires_grad = false;
        return t;
    }

    std::vector<Real> to_vector() const { return impl().data; }

    detail::TensorData<Real>& impl() const {
        if (!p_) throw ContractError("use of undefined tensor");
        return *p_;
    }

    std::shared_ptr<detail::TensorData<Real>> ptr() const { return p_; }

private:
    std::shared_ptr<detail::TensorData<Real>> p_;
};

// ---------------------------------------------------------------------------
// Op plumbing
// ---------------------------------------------------------------------------

namespace detail {

template <class Real>
bool should_record(std::initializer_list<const Tensor<Real>*> inputs) {
    if (!grad_enabled()) return false;
    for (const auto* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

template <class Real>
Tensor<Real> make_result(std::vector<Real> data, Shape shape, bool requires_grad) {
    auto t = Tensor<Real>::from(std::move(data), std::move(shape), false);
    t.impl().requires_grad = requires_grad;
    return t;
}

// Output grad of a node, or nullptr when no gradient flowed there (the node is
// off the loss's subgraph and can be skipped).
template <class Real>
const std::vector<Real>* out_grad(const std::shared_ptr<TensorData<Real>>& out) {
    return out->grad.empty() ? nullptr : &out->grad;
}

}  // namespace detail

template <class Real>
void require_same_shape(const Tensor<Real>& a, const Tensor<Real>& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
    }
}

// ---------------------------------------------------------------------------
// Matrix product
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw DimError("matmul expects rank-2 tensors, got " + shape_str(a.shape()) + " and " +
                       shape_str(b.shape()));
    }
    const auto m = a.shape()[0], k = a.shape()[1], k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2) {
        throw DimError("matmul: inner dimensions disagree, " + shape_str(a.shape()) + " x " +
                       shape_str(b.shape()));
    }
    std::vector<Real> out(static_cast<std::size_t>(m * n), Real(0));
    detail::gemm(false, false, static_cast<int>(m), static_cast<int>(n), static_cast<int>(k),
                 Real(1), a.data().data(), static_cast<int>(k), b.data().data(),
                 static_cast<int>(n), Real(0), out.data(), static_cast<int>(n));

    const bool rg = detail::should_record({&a, &b});
    auto result = detail::make_result(std::move(out), {m, n}, rg);
    if (rg) {
        Tape<Real>::current().record([ap = a.ptr(), bp = b.ptr(), cp = result.ptr(), m, n, k]() {
            const auto* gc = detail::out_grad(cp);
            if (!gc) return;
            if (ap->requires_grad) {
                ap->ensure_grad();  // dA += dC * B^T
                detail::gemm(false, true, static_cast<int>(m), static_cast<int>(k),
                             static_cast<int>(n), Real(1), gc->data(), static_cast<int>(n),
                             bp->data.data(), static_cast<int>(n), Real(1), ap->grad.data(),
                             static_cast<int>(k));
            }
            if (bp->requires_grad) {
                bp->ensure_grad();  // dB += A^T * dC
                detail::gemm(true, false, static_cast<int>(k), static_cast<int>(n),
                             static_cast<int>(m), Real(1), ap->data.data(), static_cast<int>(k),
                             gc->data(), static_cast<int>(n), Real(1), bp->grad.data(),
                             static_cast<int>(n));
            }
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// Elementwise ops (same shape, or scalar-vs-tensor broadcast)
// ---------------------------------------------------------------------------

namespace detail {

// add/mul support exactly one broadcast form: a scalar (numel 1) against any
// shape. Returns {out_shape, a_is_scalar, b_is_scalar}.
template <class Real>
std::tuple<Shape, bool, bool> binary_shape(const Tensor<Real>& a, const Tensor<Real>& b,
                                           const char* op) {
    const bool as = a.numel() == 1, bs = b.numel() == 1;
    if (a.shape() == b.shape()) return {a.shape(), false, false};
    if (as) return {b.shape(), true, false};
    if (bs) return {a.shape(), false, true};
    throw DimError(std::string(op) + ": incompatible shapes " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()) + " (only scalar broadcast is supported)");
}

}  // namespace detail

template <class Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
    auto [shape, as, bs] = detail::binary_shape(a, b, "add");
    const auto n = shape_numel(shape);
    std::vector<Real> out(static_cast<std::size_t>(n));
    const auto da = a.data(), db = b.data();
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = da[as ? 0 : static_cast<std::size_t>(i)] +
                                           db[bs ? 0 : static_cast<std::size_t>(i)];
    }
    const bool rg = detail::should_record({&a, &b});
    auto result = detail::make_result(std::move(out), shape, rg);
    if (rg) {
        Tape<Real>::current().record([ap = a.ptr(), bp = b.ptr(), cp = result.ptr(), as, bs, n]() {
            const auto* gc = detail::out_grad(cp);
            if (!gc) return;
            if (ap->requires_grad) {
                ap->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i) {
                    ap->grad[as ? 0 : static_cast<std::size_t>(i)] += (*gc)[static_cast<std::size_t>(i)];
                }
            }
            if (bp->requires_grad) {
                bp->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i) {
                    bp->grad[bs ? 0 : static_cast<std::size_t>(i)] += (*gc)[static_cast<std::size_t>(i)];
                }
            }
        });
    }
    return result;
}

template <class Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
    auto [shape, as, bs] = detail::binary_shape(a, b, "mul");
    const auto n = shape_numel(shape);
    std::vector<Real> out(static_cast<std::size_t>(n));
    const auto da = a.data(), db = b.data();
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = da[as ? 0 : static_cast<std::size_t>(i)] *
                                           db[bs ? 0 : static_cast<std::size_t>(i)];
    }
    const bool rg = detail::should_record({&a, &b});
    auto result = detail::make_result(std::move(out), shape, rg);
    if (rg) {
        Tape<Real>::current().record([ap = a.ptr(), bp = b.ptr(), cp = result.ptr(), as, bs, n]() {
            const auto* gc = detail::out_grad(cp);
            if (!gc) return;
            if (ap->requires_grad) {
                ap->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i) {
                    const auto g = (*gc)[static_cast<std::size_t>(i)];
                    ap->grad[as ? 0 : static_cast<std::size_t>(i)] +=
                        g * bp->data[bs ? 0 : static_cast<std::size_t>(i)];
                }
            }
            if (bp->requires_grad) {
                bp->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i) {
                    const auto g = (*gc)[static_cast<std::size_t>(i)];
                    bp->grad[bs ? 0 : static_cast<std::size_t>(i)] +=
                        g * ap->data[as ? 0 : static_cast<std::size_t>(i)];
                }
            }
        });
    }
    return result;
}

template <class Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
    return add(a, negate(b));
}

namespace detail {

// Shared machinery for unary elementwise ops. dfn receives (input, output).
template <class Real, class Fn, class Dfn>
Tensor<Real> unary_op(const Tensor<Real>& x, Fn fn, Dfn dfn) {
    const auto n = x.numel();
    std::vector<Real> out(static_cast<std::size_t>(n));
    const auto dx = x.data();
    for (std::int64_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = fn(dx[static_cast<std::size_t>(i)]);
    }
    const bool rg = should_record({&x});
    auto result = make_result(std::move(out), x.shape(), rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), yp = result.ptr(), dfn, n]() {
            const auto* gy = out_grad(yp);
            if (!gy || !xp->requires_grad) return;
            xp->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                xp->grad[idx] += (*gy)[idx] * dfn(xp->data[idx], yp->data[idx]);
            }
        });
    }
    return result;
}

}  // namespace detail

template <class Real>
Tensor<Real> negate(const Tensor<Real>& x) {
    return detail::unary_op(
        x, [](Real v) { return -v; }, [](Real, Real) { return Real(-1); });
}

template <class Real>
Tensor<Real> scale(const Tensor<Real>& x, std::type_identity_t<Real> c) {
    return detail::unary_op(
        x, [c](Real v) { return c * v; }, [c](Real, Real) { return c; });
}

template <class Real>
Tensor<Real> add_const(const Tensor<Real>& x, std::type_identity_t<Real> c) {
    return detail::unary_op(
        x, [c](Real v) { return v + c; }, [](Real, Real) { return Real(1); });
}

template <class Real>
Tensor<Real> relu(const Tensor<Real>& x) {
    // Subgradient 0 at the origin.
    return detail::unary_op(
        x, [](Real v) { return v > Real(0) ? v : Real(0); },
        [](Real v, Real) { return v > Real(0) ? Real(1) : Real(0); });
}

template <class Real>
Tensor<Real> tanh(const Tensor<Real>& x) {
    return detail::unary_op(
        x, [](Real v) { return std::tanh(v); },
        [](Real, Real y) { return Real(1) - y * y; });
}

template <class Real>
Tensor<Real> exp(const Tensor<Real>& x) {
    return detail::unary_op(
        x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

template <class Real>
Tensor<Real> log(const Tensor<Real>& x) {
    return detail::unary_op(
        x, [](Real v) { return std::log(v); }, [](Real v, Real) { return Real(1) / v; });
}

template <class Real>
Tensor<Real> clamp(const Tensor<Real>& x, std::type_identity_t<Real> lo,
                   std::type_identity_t<Real> hi) {
    return detail::unary_op(
        x, [lo, hi](Real v) { return std::clamp(v, lo, hi); },
        [lo, hi](Real v, Real) { return (v >= lo && v <= hi) ? Real(1) : Real(0); });
}

template <class Real>
Tensor<Real> square(const Tensor<Real>& x) {
    return detail::unary_op(
        x, [](Real v) { return v * v; }, [](Real v, Real) { return Real(2) * v; });
}

/// Elementwise minimum; ties route the gradient to the first argument.
template <class Real>
Tensor<Real> minimum(const Tensor<Real>& a, const Tensor<Real>& b) {
    require_same_shape(a, b, "minimum");
    const auto n = a.numel();
    std::vector<Real> out(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        out[idx] = std::min(a.data()[idx], b.data()[idx]);
    }
    const bool rg = detail::should_record({&a, &b});
    auto result = detail::make_result(std::move(out), a.shape(), rg);
    if (rg) {
        Tape<Real>::current().record([ap = a.ptr(), bp = b.ptr(), cp = result.ptr(), n]() {
            const auto* gc = detail::out_grad(cp);
            if (!gc) return;
            for (std::int64_t i = 0; i < n; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                const bool a_wins = ap->data[idx] <= bp->data[idx];
                if (a_wins && ap->requires_grad) {
                    ap->ensure_grad();
                    ap->grad[idx] += (*gc)[idx];
                } else if (!a_wins && bp->requires_grad) {
                    bp->ensure_grad();
                    bp->grad[idx] += (*gc)[idx];
                }
            }
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// Structural ops
// ---------------------------------------------------------------------------

/// X[m x n] + b[n], broadcast over rows (affine-layer bias).
template <class Real>
Tensor<Real> add_row_bias(const Tensor<Real>& x, const Tensor<Real>& bias) {
    if (x.rank() != 2 || bias.rank() != 1 || x.shape()[1] != bias.shape()[0]) {
        throw DimError("add_row_bias: need [m x n] and [n], got " + shape_str(x.shape()) +
                       " and " + shape_str(bias.shape()));
    }
    const auto m = x.shape()[0], n = x.shape()[1];
    std::vector<Real> out(static_cast<std::size_t>(m * n));
    for (std::int64_t r = 0; r < m; ++r) {
        for (std::int64_t c = 0; c < n; ++c) {
            out[static_cast<std::size_t>(r * n + c)] =
                x.data()[static_cast<std::size_t>(r * n + c)] + bias.data()[static_cast<std::size_t>(c)];
        }
    }
    const bool rg = detail::should_record({&x, &bias});
    auto result = detail::make_result(std::move(out), x.shape(), rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), bp = bias.ptr(), yp = result.ptr(), m, n]() {
            const auto* gy = detail::out_grad(yp);
            if (!gy) return;
            if (xp->requires_grad) {
                xp->ensure_grad();
                for (std::size_t i = 0; i < gy->size(); ++i) xp->grad[i] += (*gy)[i];
            }
            if (bp->requires_grad) {
                bp->ensure_grad();
                for (std::int64_t r = 0; r < m; ++r) {
                    for (std::int64_t c = 0; c < n; ++c) {
                        bp->grad[static_cast<std::size_t>(c)] += (*gy)[static_cast<std::size_t>(r * n + c)];
                    }
                }
            }
        });
    }
    return result;
}

/// Horizontal concatenation of [m x p] and [m x q] into [m x (p+q)].
template <class Real>
Tensor<Real> concat_cols(const Tensor<Real>& a, const Tensor<Real>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.shape()[0] != b.shape()[0]) {
        throw DimError("concat_cols: row counts differ, " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
    }
    const auto m = a.shape()[0], p = a.shape()[1], q = b.shape()[1];
    std::vector<Real> out(static_cast<std::size_t>(m * (p + q)));
    for (std::int64_t r = 0; r < m; ++r) {
        std::copy_n(a.data().data() + r * p, p, out.data() + r * (p + q));
        std::copy_n(b.data().data() + r * q, q, out.data() + r * (p + q) + p);
    }
    const bool rg = detail::should_record({&a, &b});
    auto result = detail::make_result(std::move(out), {m, p + q}, rg);
    if (rg) {
        Tape<Real>::current().record([ap = a.ptr(), bp = b.ptr(), cp = result.ptr(), m, p, q]() {
            const auto* gc = detail::out_grad(cp);
            if (!gc) return;
            for (std::int64_t r = 0; r < m; ++r) {
                if (ap->requires_grad) {
                    ap->ensure_grad();
                    for (std::int64_t c = 0; c < p; ++c) {
                        ap->grad[static_cast<std::size_t>(r * p + c)] +=
                            (*gc)[static_cast<std::size_t>(r * (p + q) + c)];
                    }
                }
                if (bp->requires_grad) {
                    bp->ensure_grad();
                    for (std::int64_t c = 0; c < q; ++c) {
                        bp->grad[static_cast<std::size_t>(r * q + c)] +=
                            (*gc)[static_cast<std::size_t>(r * (p + q) + p + c)];
                    }
                }
            }
        });
    }
    return result;
}

/// Columns [c0, c1) of a rank-2 tensor.
template <class Real>
Tensor<Real> slice_cols(const Tensor<Real>& x, std::int64_t c0, std::int64_t c1) {
    if (x.rank() != 2) throw DimError("slice_cols expects rank-2, got " + shape_str(x.shape()));
    const auto m = x.shape()[0], n = x.shape()[1];
    if (c0 < 0 || c1 > n || c0 >= c1) {
        throw ContractError("slice_cols: bad column range [" + std::to_string(c0) + ", " +
                            std::to_string(c1) + ") for width " + std::to_string(n));
    }
    const auto w = c1 - c0;
    std::vector<Real> out(static_cast<std::size_t>(m * w));
    for (std::int64_t r = 0; r < m; ++r) {
        std::copy_n(x.data().data() + r * n + c0, w, out.data() + r * w);
    }
    const bool rg = detail::should_record({&x});
    auto result = detail::make_result(std::move(out), {m, w}, rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), yp = result.ptr(), m, n, c0, w]() {
            const auto* gy = detail::out_grad(yp);
            if (!gy || !xp->requires_grad) return;
            xp->ensure_grad();
            for (std::int64_t r = 0; r < m; ++r) {
                for (std::int64_t c = 0; c < w; ++c) {
                    xp->grad[static_cast<std::size_t>(r * n + c0 + c)] +=
                        (*gy)[static_cast<std::size_t>(r * w + c)];
                }
            }
        });
    }
    return result;
}

/// out[i] = x[i, index[i]] (per-row gather, e.g. Q-value of the taken action).
template <class Real>
Tensor<Real> row_select(const Tensor<Real>& x, const std::vector<std::int64_t>& index) {
    if (x.rank() != 2) throw DimError("row_select expects rank-2, got " + shape_str(x.shape()));
    const auto m = x.shape()[0], n = x.shape()[1];
    if (static_cast<std::int64_t>(index.size()) != m) {
        throw DimError("row_select: index count " + std::to_string(index.size()) +
                       " != rows " + std::to_string(m));
    }
    std::vector<Real> out(static_cast<std::size_t>(m));
    for (std::int64_t r = 0; r < m; ++r) {
        const auto c = index[static_cast<std::size_t>(r)];
        if (c < 0 || c >= n) throw ContractError("row_select: index out of range");
        out[static_cast<std::size_t>(r)] = x.data()[static_cast<std::size_t>(r * n + c)];
    }
    const bool rg = detail::should_record({&x});
    auto result = detail::make_result(std::move(out), {m}, rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), yp = result.ptr(), index, n]() {
            const auto* gy = detail::out_grad(yp);
            if (!gy || !xp->requires_grad) return;
            xp->ensure_grad();
            for (std::size_t r = 0; r < index.size(); ++r) {
                xp->grad[r * static_cast<std::size_t>(n) + static_cast<std::size_t>(index[r])] +=
                    (*gy)[r];
            }
        });
    }
    return result;
}

/// Repeats a [m x d] block vertically `times` times -> [times*m x d].
template <class Real>
Tensor<Real> tile_rows(const Tensor<Real>& x, std::int64_t times) {
    if (x.rank() != 2) throw DimError("tile_rows expects rank-2, got " + shape_str(x.shape()));
    if (times < 1) throw ContractError("tile_rows: times must be >= 1");
    const auto m = x.shape()[0], d = x.shape()[1];
    std::vector<Real> out(static_cast<std::size_t>(times * m * d));
    for (std::int64_t t = 0; t < times; ++t) {
        std::copy_n(x.data().data(), m * d, out.data() + t * m * d);
    }
    const bool rg = detail::should_record({&x});
    auto result = detail::make_result(std::move(out), {times * m, d}, rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), yp = result.ptr(), times, m, d]() {
            const auto* gy = detail::out_grad(yp);
            if (!gy || !xp->requires_grad) return;
            xp->ensure_grad();
            for (std::int64_t t = 0; t < times; ++t) {
                for (std::int64_t i = 0; i < m * d; ++i) {
                    xp->grad[static_cast<std::size_t>(i)] += (*gy)[static_cast<std::size_t>(t * m * d + i)];
                }
            }
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

template <class Real>
Tensor<Real> sum(const Tensor<Real>& x) {
    Real acc = 0;
    for (auto v : x.data()) acc += v;
    const bool rg = detail::should_record({&x});
    auto result = detail::make_result(std::vector<Real>{acc}, {1}, rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), yp = result.ptr()]() {
            const auto* gy = detail::out_grad(yp);
            if (!gy || !xp->requires_grad) return;
            xp->ensure_grad();
            for (auto& g : xp->grad) g += (*gy)[0];
        });
    }
    return result;
}

template <class Real>
Tensor<Real> mean(const Tensor<Real>& x) {
    return scale(sum(x), Real(1) / static_cast<Real>(x.numel()));
}

/// Per-row sum of a [m x n] tensor -> [m].
template <class Real>
Tensor<Real> row_sum(const Tensor<Real>& x) {
    if (x.rank() != 2) throw DimError("row_sum expects rank-2, got " + shape_str(x.shape()));
    const auto m = x.shape()[0], n = x.shape()[1];
    std::vector<Real> out(static_cast<std::size_t>(m), Real(0));
    for (std::int64_t r = 0; r < m; ++r) {
        for (std::int64_t c = 0; c < n; ++c) {
            out[static_cast<std::size_t>(r)] += x.data()[static_cast<std::size_t>(r * n + c)];
        }
    }
    const bool rg = detail::should_record({&x});
    auto result = detail::make_result(std::move(out), {m}, rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), yp = result.ptr(), m, n]() {
            const auto* gy = detail::out_grad(yp);
            if (!gy || !xp->requires_grad) return;
            xp->ensure_grad();
            for (std::int64_t r = 0; r < m; ++r) {
                for (std::int64_t c = 0; c < n; ++c) {
                    xp->grad[static_cast<std::size_t>(r * n + c)] += (*gy)[static_cast<std::size_t>(r)];
                }
            }
        });
    }
    return result;
}

// ---------------------------------------------------------------------------
// Cosine similarity
// ---------------------------------------------------------------------------

namespace detail {

// Forward+adjoint core shared by the vector and the batched-row variants.
// Zero vectors yield similarity 0 with zero gradient and bump the
// diagnostics counter, so representational collapse stays observable
// instead of producing NaNs.
template <class Real>
Tensor<Real> cosine_impl(const Tensor<Real>& x, const Tensor<Real>& y, std::int64_t m,
                         std::int64_t d, Shape out_shape) {
    std::vector<Real> out(static_cast<std::size_t>(m));
    std::vector<Real> inv_nx(static_cast<std::size_t>(m), Real(0));
    std::vector<Real> inv_ny(static_cast<std::size_t>(m), Real(0));
    for (std::int64_t r = 0; r < m; ++r) {
        Real sx = 0, sy = 0, dot = 0;
        for (std::int64_t c = 0; c < d; ++c) {
            const auto xv = x.data()[static_cast<std::size_t>(r * d + c)];
            const auto yv = y.data()[static_cast<std::size_t>(r * d + c)];
            sx += xv * xv;
            sy += yv * yv;
            dot += xv * yv;
        }
        if (sx == Real(0) || sy == Real(0)) {
            out[static_cast<std::size_t>(r)] = Real(0);
            ++Diagnostics::zero_cosine_count();
        } else {
            const Real ix = Real(1) / std::sqrt(sx);
            const Real iy = Real(1) / std::sqrt(sy);
            inv_nx[static_cast<std::size_t>(r)] = ix;
            inv_ny[static_cast<std::size_t>(r)] = iy;
            out[static_cast<std::size_t>(r)] = std::clamp(dot * ix * iy, Real(-1), Real(1));
        }
    }
    const bool rg = should_record({&x, &y});
    auto result = make_result(std::move(out), std::move(out_shape), rg);
    if (rg) {
        Tape<Real>::current().record([xp = x.ptr(), yp = y.ptr(), cp = result.ptr(),
                                      inv_nx = std::move(inv_nx), inv_ny = std::move(inv_ny), m,
                                      d]() {
            const auto* gc = out_grad(cp);
            if (!gc) return;
            if (xp->requires_grad) xp->ensure_grad();
            if (yp->requires_grad) yp->ensure_grad();
            for (std::int64_t r = 0; r < m; ++r) {
                const auto ri = static_cast<std::size_t>(r);
                const Real ix = inv_nx[ri], iy = inv_ny[ri];
                if (ix == Real(0) || iy == Real(0)) continue;  // zero-vector rule
                const Real cos_v = cp->data[ri];
                const Real g = (*gc)[ri];
                for (std::int64_t c = 0; c < d; ++c) {
                    const auto i = static_cast<std::size_t>(r * d + c);
                    const Real xv = xp->data[i], yv = yp->data[i];
                    if (xp->requires_grad) {
                        xp->grad[i] += g * (yv * ix * iy - cos_v * xv * ix * ix);
                    }
                    if (yp->requires_grad) {
                        yp->grad[i] += g * (xv * ix * iy - cos_v * yv * iy * iy);
                    }
                }
            }
        });
    }
    return result;
}

}  // namespace detail

/// cos(x, y) for two vectors of equal width -> scalar.
template <class Real>
Tensor<Real> cosine_similarity(const Tensor<Real>& x, const Tensor<Real>& y) {
    if (x.rank() != 1 || y.rank() != 1) {
        throw DimError("cosine_similarity expects rank-1 tensors, got " + shape_str(x.shape()) +
                       " and " + shape_str(y.shape()));
    }
    require_same_shape(x, y, "cosine_similarity");
    return detail::cosine_impl(x, y, 1, x.shape()[0], {1});
}

/// Row-wise cosine for [m x d] pairs -> [m].
template <class Real>
Tensor<Real> cosine_rows(const Tensor<Real>& x, const Tensor<Real>& y) {
    if (x.rank() != 2 || y.rank() != 2) {
        throw DimError("cosine_rows expects rank-2 tensors, got " + shape_str(x.shape()) +
                       " and " + shape_str(y.shape()));
    }
    require_same_shape(x, y, "cosine_rows");
    return detail::cosine_impl(x, y, x.shape()[0], x.shape()[1], {x.shape()[0]});
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

/// Reverse pass from a scalar loss. Accumulates dloss/dt into the grad of
/// every requires_grad tensor recorded on the current tape.
template <class Real>
void backward(const Tensor<Real>& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward requires a scalar loss, shape is " + shape_str(loss.shape()));
    }
    if (!loss.requires_grad()) {
        throw ContractError("backward on a tensor with no gradient path (requires_grad unset)");
    }
    loss.impl().ensure_grad();
    loss.impl().grad[0] += Real(1);
    Tape<Real>::current().replay_reverse();
}

// Pure-data helpers (never recorded).

template <class Real>
std::vector<std::int64_t> argmax_rows(const Tensor<Real>& x) {
    if (x.rank() != 2) throw DimError("argmax_rows expects rank-2, got " + shape_str(x.shape()));
    const auto m = x.shape()[0], n = x.shape()[1];
    std::vector<std::int64_t> out(static_cast<std::size_t>(m));
    for (std::int64_t r = 0; r < m; ++r) {
        std::int64_t best = 0;
        for (std::int64_t c = 1; c < n; ++c) {
            if (x.at(r, c) > x.at(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = best;
    }
    return out;
}

}  // namespace vlrl
