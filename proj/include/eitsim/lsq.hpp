#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "eitsim/errors.hpp"

// Gauss-Newton with Levenberg damping and numerical Jacobians. Termination on
// relative step < step_tol or max_iter.

namespace eitsim {

struct LsqOptions {
    int max_iter = 200;
    double step_tol = 1e-10;
    double lambda0 = 1e-3;
    double jac_step = 1e-7;
};

struct LsqResult {
    Eigen::VectorXd x;
    double residual_norm = 0.0;
    Eigen::MatrixXd covariance;
    int iterations = 0;
    bool converged = false;
};

inline LsqResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const Eigen::VectorXd& x0, const LsqOptions& opts = {}) {
    const int n = int(x0.size());
    Eigen::VectorXd x = x0;
    Eigen::VectorXd r = residual(x);
    double cost = r.squaredNorm();
    double lambda = opts.lambda0;

    auto jacobian = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& r_at) {
        Eigen::MatrixXd j(r_at.size(), n);
        for (int k = 0; k < n; ++k) {
            Eigen::VectorXd xp = at;
            const double h = opts.jac_step * std::max(1.0, std::abs(at[k]));
            xp[k] += h;
            j.col(k) = (residual(xp) - r_at) / h;
        }
        return j;
    };

    LsqResult out;
    Eigen::MatrixXd j = jacobian(x, r);
    for (int it = 0; it < opts.max_iter; ++it) {
        out.iterations = it + 1;
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd jtr = j.transpose() * r;
        Eigen::MatrixXd damped = jtj;
        damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
        const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
        const Eigen::VectorXd x_new = x + step;
        const Eigen::VectorXd r_new = residual(x_new);
        const double cost_new = r_new.squaredNorm();
        if (cost_new < cost) {
            const double rel_step =
                step.norm() / std::max(1e-30, x.norm() + step.norm());
            x = x_new;
            r = r_new;
            cost = cost_new;
            lambda = std::max(lambda * 0.3, 1e-14);
            j = jacobian(x, r);
            if (rel_step < opts.step_tol) {
                out.converged = true;
                break;
            }
        } else {
            // A rejected step that is already below tolerance means the damped
            // update cannot move the iterate: we are at a (possibly nonzero
            // residual) local minimum.
            const double rel_step =
                step.norm() / std::max(1e-30, x.norm() + step.norm());
            if (rel_step < opts.step_tol) {
                out.converged = true;
                break;
            }
            lambda *= 8.0;
            if (lambda > 1e12) break;
        }
    }
    // Accept a solution sitting at machine-level cost even if the relative
    // step never dipped below tolerance.
    if (!out.converged && cost < 1e-24) out.converged = true;

    out.x = x;
    out.residual_norm = std::sqrt(cost);
    const int m = int(r.size());
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const double dof = std::max(1, m - n);
    const double s2 = cost / dof;
    Eigen::MatrixXd inv = jtj;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    out.covariance = lu.isInvertible()
                         ? Eigen::MatrixXd(s2 * lu.inverse())
                         : Eigen::MatrixXd::Constant(n, n,
                                                     std::numeric_limits<double>::quiet_NaN());
    return out;
}

} // namespace eitsim
