#include "fswel/baselines.hpp"

#include <cmath>
#include <limits>

#include "newton.hpp"

namespace fswel::baselines {

namespace {

constexpr double kSeparationBound = 15.0;

Eigen::VectorXd assoc_design_row(const model::ModelSpec& spec, const Eigen::VectorXd& x, int g) {
    Eigen::VectorXd row(spec.n_assoc() + 1);
    row(0) = 1.0;
    for (int k = 0; k < spec.n_assoc(); ++k) {
        row(k + 1) = model::term_value(spec.assoc_terms[static_cast<std::size_t>(k)], 0.0, x, g);
    }
    return row;
}

std::vector<std::string> assoc_param_names(const model::ModelSpec& spec) {
    std::vector<std::string> names{"beta_0"};
    for (const std::string& l : spec.assoc_labels()) names.push_back("beta_" + l);
    names.push_back("theta");
    return names;
}

}  // namespace

LogisticFit fit_logistic(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                         const Eigen::VectorXd& weights, double tol, int max_iter) {
    const int n = static_cast<int>(design.rows());
    const int p = static_cast<int>(design.cols());
    if (outcome.size() != n || weights.size() != n) {
        throw InvariantViolation("logistic fit inputs disagree in length");
    }
    Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);

    const auto mean_score = [&](const Eigen::VectorXd& c) {
        Eigen::VectorXd mu(n);
        for (int i = 0; i < n; ++i) mu(i) = model::logistic(design.row(i).dot(c));
        return Eigen::VectorXd(design.transpose() * (weights.array() * (outcome - mu).array()).matrix() / n);
    };
    const auto information = [&](const Eigen::VectorXd& c) {
        Eigen::VectorXd w(n);
        for (int i = 0; i < n; ++i) {
            const double mu = model::logistic(design.row(i).dot(c));
            w(i) = weights(i) * mu * (1.0 - mu);
        }
        return Eigen::MatrixXd(design.transpose() * w.asDiagonal() * design);
    };

    Eigen::VectorXd score = mean_score(coef);
    double snorm = detail::inf_norm(score);
    int iter = 0;
    for (; iter < max_iter && snorm >= tol; ++iter) {
        const Eigen::MatrixXd info = information(coef);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
        if (!lu.isInvertible()) throw SingularJacobian("singular weighted information matrix");
        const Eigen::VectorXd direction = lu.solve(static_cast<double>(n) * score);
        double step = 1.0;
        bool accepted = false;
        for (int halvings = 0; halvings <= 40; ++halvings) {
            const Eigen::VectorXd trial = coef + step * direction;
            const Eigen::VectorXd tscore = mean_score(trial);
            const double tnorm = detail::inf_norm(tscore);
            if (tnorm < snorm) {
                coef = trial;
                score = tscore;
                snorm = tnorm;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) throw NonConvergence("logistic step halving stalled");
        if (detail::inf_norm(coef) > kSeparationBound) {
            throw CompleteSeparation("logistic coefficients diverged (monotone likelihood)");
        }
    }
    if (snorm >= tol) {
        throw NonConvergence("logistic fit: no root after " + std::to_string(max_iter) +
                             " iterations");
    }

    LogisticFit fit;
    fit.coef = coef;
    fit.iterations = iter;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(information(coef));
    if (!lu.isInvertible()) throw SingularJacobian("singular information at the optimum");
    fit.cov = lu.inverse();
    return fit;
}

MafEstimate maf_naive(const data::Dataset& data) {
    long alleles = 0;
    long n0 = 0;
    for (const data::SubjectRecord& rec : data.records()) {
        if (rec.y == 0 && rec.r == 1) {
            alleles += rec.g;
            ++n0;
        }
    }
    if (n0 == 0) throw EmptyControls("no complete controls for the allele frequency");
    MafEstimate est;
    est.theta = static_cast<double>(alleles) / (2.0 * static_cast<double>(n0));
    est.std_error = std::sqrt(est.theta * (1.0 - est.theta) / (2.0 * static_cast<double>(n0)));
    return est;
}

double maf_mar(const data::Dataset& data, const Eigen::VectorXd& weights) {
    if (weights.size() != data.n()) {
        throw InvariantViolation("one weight per record is required");
    }
    double num = 0.0;
    double den = 0.0;
    bool any = false;
    for (int i = 0; i < data.n(); ++i) {
        const data::SubjectRecord& rec = data.records()[static_cast<std::size_t>(i)];
        if (rec.y != 0 || rec.r != 1) continue;
        any = true;
        num += weights(i) * rec.g;
        den += 2.0 * weights(i);
    }
    if (!any) throw EmptyControls("no complete controls for the allele frequency");
    if (!(den > 0.0)) throw DegenerateWeight("weighted allele count has no mass");
    return num / den;
}

BaselineResult fit_mcar_naive(const model::ModelSpec& spec, const data::Dataset& data) {
    const int n_complete = [&data] {
        int c = 0;
        for (const data::SubjectRecord& rec : data.records()) c += rec.r;
        return c;
    }();
    if (n_complete == 0) throw EmptyControls("no complete records");
    Eigen::MatrixXd design(n_complete, spec.n_assoc() + 1);
    Eigen::VectorXd outcome(n_complete);
    int i = 0;
    for (const data::SubjectRecord& rec : data.records()) {
        if (rec.r != 1) continue;
        design.row(i) = assoc_design_row(spec, rec.x, rec.g);
        outcome(i) = rec.y;
        ++i;
    }
    const LogisticFit fit =
        fit_logistic(design, outcome, Eigen::VectorXd::Ones(n_complete));
    const MafEstimate maf = maf_naive(data);

    BaselineResult out;
    out.method = BaselineMethod::MCAR;
    out.names = assoc_param_names(spec);
    out.estimates.resize(fit.coef.size() + 1);
    out.estimates << fit.coef, maf.theta;
    out.std_errors.resize(fit.coef.size() + 1);
    out.std_errors << fit.cov.diagonal().cwiseSqrt(), maf.std_error;
    out.weights_used = false;
    return out;
}

BaselineResult fit_mar_ipw(const model::ModelSpec& spec, const data::Dataset& data,
                           double weight_floor) {
    const int n = data.n();
    const int k = static_cast<int>(spec.x_names.size());
    // Availability modeled on the observed variables only.
    Eigen::MatrixXd r_design(n, 2 + k);
    Eigen::VectorXd r_outcome(n);
    for (int i = 0; i < n; ++i) {
        const data::SubjectRecord& rec = data.records()[static_cast<std::size_t>(i)];
        r_design(i, 0) = 1.0;
        r_design(i, 1) = rec.y;
        r_design.row(i).tail(k) = rec.x.transpose();
        r_outcome(i) = rec.r;
    }
    const LogisticFit r_fit = fit_logistic(r_design, r_outcome, Eigen::VectorXd::Ones(n));

    Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
    int n_complete = 0;
    for (int i = 0; i < n; ++i) {
        const data::SubjectRecord& rec = data.records()[static_cast<std::size_t>(i)];
        if (rec.r != 1) continue;
        const double pi = model::logistic(r_design.row(i).dot(r_fit.coef));
        if (pi < weight_floor) {
            throw DegenerateWeight("fitted availability " + std::to_string(pi) + " below floor");
        }
        weights(i) = 1.0 / pi;
        ++n_complete;
    }
    if (n_complete == 0) throw EmptyControls("no complete records");

    Eigen::MatrixXd design(n_complete, spec.n_assoc() + 1);
    Eigen::VectorXd outcome(n_complete);
    Eigen::VectorXd w(n_complete);
    int row = 0;
    for (int i = 0; i < n; ++i) {
        const data::SubjectRecord& rec = data.records()[static_cast<std::size_t>(i)];
        if (rec.r != 1) continue;
        design.row(row) = assoc_design_row(spec, rec.x, rec.g);
        outcome(row) = rec.y;
        w(row) = weights(i);
        ++row;
    }
    const LogisticFit fit = fit_logistic(design, outcome, w);

    BaselineResult out;
    out.method = BaselineMethod::MAR;
    out.names = assoc_param_names(spec);
    out.estimates.resize(fit.coef.size() + 1);
    out.estimates << fit.coef, maf_mar(data, weights);
    out.std_errors.resize(fit.coef.size() + 1);
    out.std_errors << fit.cov.diagonal().cwiseSqrt(),
        std::numeric_limits<double>::quiet_NaN();
    out.weights_used = true;
    return out;
}

}  // namespace fswel::baselines
