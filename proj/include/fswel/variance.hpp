#ifndef FSWEL_VARIANCE_HPP
#define FSWEL_VARIANCE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fswel/estimator.hpp"

namespace fswel::variance {

// Empirical pieces of the sandwich. a_i stacks the weighted association
// scores, b_i the missingness summands (rows = subjects); f0 holds the
// nuisance influence per control row over the free delta cells (every base
// pattern but the last, by genotype; layout cell(x, g) = x * 3 + g).
struct SandwichComponents {
    Eigen::MatrixXd M;   // bread: stacked residual Jacobian in (eta, alpha)
    Eigen::MatrixXd C3;  // d assoc-block / d free delta cells
    Eigen::MatrixXd D3;  // d miss-block / d free delta cells
    Eigen::MatrixXd a;   // n x dim(eta)
    Eigen::MatrixXd b;   // n x dim(alpha)
    Eigen::MatrixXd f0;  // n_controls x n_free
    double p0 = 0.0;     // control fraction N0 / N
};

SandwichComponents compute_components(const estimator::Problem& problem,
                                      const estimator::FitResult& fit,
                                      const estimator::FitConfig& config = {});

// Bread matrix: central-difference Jacobian of the stacked mean estimating
// function, delta re-estimated inside so the alpha columns carry the
// nuisance dependence. Throws SingularM past condition number 1e12.
Eigen::MatrixXd compute_M(const estimator::Problem& problem, const estimator::FitResult& fit,
                          const estimator::FitConfig& config = {});

// Meat matrix [V11 V12; V12' V22]: full-sample covariances of (a_i, b_i)
// plus control-only corrections through C3 f_i and D3 f_i scaled by 1/p0.
Eigen::MatrixXd compute_V(const estimator::Problem& problem, const estimator::FitResult& fit,
                          const estimator::FitConfig& config = {});
Eigen::MatrixXd compute_V(const SandwichComponents& parts, const estimator::Problem& problem);

// M^{-1} V M^{-T} / n.
Eigen::MatrixXd sandwich_cov(const Eigen::MatrixXd& M, const Eigen::MatrixXd& V, int n);

struct WaldSummary {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
    double p_one_sided = 0.0;  // 1 - Phi(|z|)
    double p_two_sided = 0.0;
    double ci_lower = 0.0;
    double ci_upper = 0.0;
};

// Per-parameter Wald inference at the 95% level. Requires fit.cov.
std::vector<WaldSummary> wald(const estimator::FitResult& fit);

WaldSummary wald_row(const std::string& name, double estimate, double std_error);

double normal_cdf(double z);

inline constexpr double kZ975 = 1.959963984540054;

}  // namespace fswel::variance

#endif
