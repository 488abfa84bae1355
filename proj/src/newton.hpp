#ifndef FSWEL_SRC_NEWTON_HPP
#define FSWEL_SRC_NEWTON_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>

#include "fswel/errors.hpp"

namespace fswel::detail {

struct NewtonOptions {
    double tol = 1e-10;
    int max_iter = 50;
    double fd_step = 1e-6;
    int max_halvings = 40;
    // Iterates whose infinity norm passes this bound are treated as
    // separation (monotone residual with no interior root).
    double diverge_norm = std::numeric_limits<double>::infinity();
    std::function<void(Eigen::VectorXd&)> project;
};

using Residual = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline double inf_norm(const Eigen::VectorXd& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Damped Newton with a central finite-difference Jacobian. Residual
// evaluations that throw during the line search count as infinitely bad
// steps; evaluation failures at the current iterate propagate.
inline Eigen::VectorXd newton_solve(const Residual& residual, Eigen::VectorXd p,
                                    const NewtonOptions& opt, int* iterations = nullptr) {
    const auto project = [&opt](Eigen::VectorXd v) {
        if (opt.project) opt.project(v);
        return v;
    };
    p = project(std::move(p));
    Eigen::VectorXd r = residual(p);
    double rnorm = inf_norm(r);
    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        if (rnorm < opt.tol) break;
        const int dim = static_cast<int>(p.size());
        Eigen::MatrixXd jac(r.size(), dim);
        for (int j = 0; j < dim; ++j) {
            const double h = opt.fd_step * std::max(1.0, std::abs(p(j)));
            Eigen::VectorXd pp = p, pm = p;
            pp(j) += h;
            pm(j) -= h;
            pp = project(std::move(pp));
            pm = project(std::move(pm));
            const double spread = pp(j) - pm(j);
            if (spread == 0.0) throw SingularJacobian("parameter pinned by its bounds");
            jac.col(j) = (residual(pp) - residual(pm)) / spread;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
            throw SingularJacobian("rank-deficient Newton system");
        }
        const Eigen::VectorXd direction = lu.solve(-r);

        double step = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings <= opt.max_halvings; ++halvings) {
            const Eigen::VectorXd trial = project(p + step * direction);
            double tnorm = std::numeric_limits<double>::infinity();
            Eigen::VectorXd tr;
            try {
                tr = residual(trial);
                tnorm = inf_norm(tr);
            } catch (const Error&) {
            }
            if (tnorm < rnorm) {
                p = trial;
                r = std::move(tr);
                rnorm = tnorm;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            throw NonConvergence("line search stalled at residual " + std::to_string(rnorm));
        }
        if (inf_norm(p) > opt.diverge_norm) {
            throw CompleteSeparation("iterates diverged beyond " +
                                     std::to_string(opt.diverge_norm));
        }
    }
    if (iterations) *iterations = iter;
    if (rnorm >= opt.tol) {
        throw NonConvergence("no root after " + std::to_string(opt.max_iter) +
                             " iterations, residual " + std::to_string(rnorm));
    }
    return p;
}

}  // namespace fswel::detail

#endif
