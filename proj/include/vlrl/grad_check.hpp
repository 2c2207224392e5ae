#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vlrl/tensor.hpp"

namespace vlrl {

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = false;
    std::vector<std::int64_t> excluded;  // coordinates sitting on a kink
};

namespace detail {

inline double rel_err(double a, double b, double floor = 1e-8) {
    const double denom = std::max({std::abs(a), std::abs(b), floor});
    return std::abs(a - b) / denom;
}

}  // namespace detail

/// Compares the autodiff gradient of a scalar-valued function against
/// central finite differences, coordinate by coordinate. Coordinates where
/// the one-sided differences disagree (a relu-style kink inside the
/// perturbation interval) are excluded from the comparison and reported.
template <class Real>
GradCheckReport grad_check(const std::function<Tensor<Real>(const Tensor<Real>&)>& f,
                           const Tensor<Real>& x, double tolerance, double h = 1e-5) {
    auto& tape = Tape<Real>::current();
    const auto tape_before = tape.size();

    auto xg = Tensor<Real>::from(x.to_vector(), x.shape(), true);
    auto loss = f(xg);
    if (loss.numel() != 1) {
        throw ContractError("grad_check: function must produce a scalar, got " +
                            shape_str(loss.shape()));
    }
    std::vector<double> auto_grad(static_cast<std::size_t>(xg.numel()), 0.0);
    if (loss.requires_grad()) {
        backward(loss);
        if (xg.has_grad()) {
            for (std::size_t i = 0; i < auto_grad.size(); ++i) {
                auto_grad[i] = static_cast<double>(xg.grad()[i]);
            }
        }
    }
    // Drop the probe graph so repeated checks do not grow the caller's tape.
    tape.truncate(tape_before);

    GradCheckReport report;
    NoGradGuard ng;
    auto base = x.to_vector();
    const auto eval = [&](const std::vector<Real>& v) {
        auto t = Tensor<Real>::from(v, x.shape(), false);
        return static_cast<double>(f(t).item());
    };
    const double f0 = eval(base);
    for (std::size_t i = 0; i < base.size(); ++i) {
        const Real x0 = base[i];
        base[i] = x0 + static_cast<Real>(h);
        const double fp = eval(base);
        base[i] = x0 - static_cast<Real>(h);
        const double fm = eval(base);
        base[i] = x0;

        const double d_fwd = (fp - f0) / h;
        const double d_bwd = (f0 - fm) / h;
        const double kink_scale = std::max({1.0, std::abs(d_fwd), std::abs(d_bwd)});
        if (std::abs(d_fwd - d_bwd) / kink_scale > 1e-2) {
            report.excluded.push_back(static_cast<std::int64_t>(i));
            continue;
        }
        const double central = (fp - fm) / (2.0 * h);
        const double err = detail::rel_err(auto_grad[i], central);
        if (err > report.max_rel_err) report.max_rel_err = err;
    }
    report.pass = report.max_rel_err <= tolerance;
    return report;
}

}  // namespace vlrl
