#ifndef FSWEL_BASELINES_HPP
#define FSWEL_BASELINES_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fswel/data.hpp"
#include "fswel/errors.hpp"
#include "fswel/model.hpp"

namespace fswel::baselines {

struct LogisticFit {
    Eigen::VectorXd coef;
    Eigen::MatrixXd cov;  // inverse weighted information
    int iterations = 0;
};

// Weighted logistic regression by iteratively reweighted least squares.
// Throws CompleteSeparation when the coefficient norm runs away and
// NonConvergence past max_iter.
LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                         const Eigen::VectorXd& weights, double tol = 1e-10,
                         int max_iter = 100);

enum class BaselineMethod { MCAR, MAR };

struct BaselineResult {
    BaselineMethod method = BaselineMethod::MCAR;
    std::vector<std::string> names;  // beta_0, beta_<term>..., theta
    Eigen::VectorXd estimates;
    Eigen::VectorXd std_errors;      // NaN where undefined (MAR theta)
    bool weights_used = false;
};

struct MafEstimate {
    double theta = 0.0;
    double std_error = 0.0;
};

// Allele frequency among complete controls: (2 n2 + n1) / (2 n0), with the
// binomial standard error sqrt(theta (1 - theta) / (2 n0)).
MafEstimate maf_naive(const data::Dataset& data);

// Weighted allele count ratio over complete controls; weights indexed by
// record position.
double maf_mar(const data::Dataset& data, const Eigen::VectorXd& weights);

// Complete-case logistic fit of the association model plus maf_naive.
BaselineResult fit_mcar_naive(const model::ModelSpec& spec, const data::Dataset& data);

// Two-step inverse-probability-weighted fit: availability modeled on
// (1, Y, X) over the full sample, then each complete record weighted by the
// inverse fitted probability, plus maf_mar.
BaselineResult fit_mar_ipw(const model::ModelSpec& spec, const data::Dataset& data,
                           double weight_floor = 1e-6);

}  // namespace fswel::baselines

#endif
