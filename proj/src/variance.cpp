#include "fswel/variance.hpp"

#include <algorithm>
#include <cmath>

#include "newton.hpp"

namespace fswel::variance {

namespace {

using estimator::DeltaTable;
using estimator::FitConfig;
using estimator::FitResult;
using estimator::Problem;

Eigen::VectorXd pack(const model::AssocParams& eta, const Eigen::VectorXd& alpha) {
    Eigen::VectorXd v(eta.beta.size() + 1 + alpha.size());
    v << eta.packed(), alpha;
    return v;
}

// Free delta coordinates: every base pattern but the last, by genotype;
// the last base row absorbs the complement.
int n_free(const estimator::DeltaPlan& plan) { return 3 * (plan.n_base - 1); }

Eigen::VectorXd free_cells(const estimator::DeltaPlan& plan, const DeltaTable& base) {
    Eigen::VectorXd v(n_free(plan));
    for (int j = 0; j + 1 < plan.n_base; ++j) {
        for (int g = 0; g < 3; ++g) v(3 * j + g) = base(j, g);
    }
    return v;
}

struct ScorePair {
    Eigen::VectorXd assoc;
    Eigen::VectorXd miss;
};

ScorePair scores_at_delta(const Problem& problem, const FitResult& fit,
                          const FitConfig& config, const DeltaTable& base) {
    const DeltaTable delta = apply_extension(problem.plan(), base);
    ScorePair out;
    out.assoc = weighted_assoc_score(problem, fit.eta, fit.alpha, delta, config.weight_floor);
    out.miss = miss_score_equation(problem, fit.alpha, fit.eta, delta);
    return out;
}

}  // namespace

Eigen::MatrixXd compute_M(const Problem& problem, const FitResult& fit,
                          const FitConfig& config) {
    const int theta_index = problem.spec().n_assoc();
    const int dim = problem.spec().n_eta() + problem.spec().n_miss();
    const Eigen::VectorXd center = pack(fit.eta, fit.alpha);
    const auto project = [&](Eigen::VectorXd v) {
        v(theta_index) = std::clamp(v(theta_index), config.theta_clamp, 1.0 - config.theta_clamp);
        return v;
    };
    const auto residual = [&](const Eigen::VectorXd& p) {
        const model::AssocParams eta =
            model::AssocParams::unpack(p.head(problem.spec().n_eta()));
        return stacked_residual(problem, eta, p.tail(problem.spec().n_miss()), config);
    };
    Eigen::MatrixXd m(dim, dim);
    for (int j = 0; j < dim; ++j) {
        const double h = config.fd_step * std::max(1.0, std::abs(center(j)));
        Eigen::VectorXd pp = center, pm = center;
        pp(j) += h;
        pm(j) -= h;
        pp = project(std::move(pp));
        pm = project(std::move(pm));
        const double spread = pp(j) - pm(j);
        if (spread == 0.0) throw SingularM("parameter pinned by its bounds");
        m.col(j) = (residual(pp) - residual(pm)) / spread;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (!(smin > 0.0) || smax / smin > 1e12) {
        throw SingularM("bread matrix is numerically rank-deficient");
    }
    return m;
}

SandwichComponents compute_components(const Problem& problem, const FitResult& fit,
                                      const FitConfig& config) {
    const model::ModelSpec& spec = problem.spec();
    const estimator::DeltaPlan& plan = problem.plan();
    const data::Dataset& data = problem.data();
    const int n = problem.n();
    const int ne = spec.n_eta();
    const int nm = spec.n_miss();
    const int nf = n_free(plan);

    SandwichComponents parts;
    parts.M = compute_M(problem, fit, config);
    parts.p0 = static_cast<double>(data.n_controls()) / n;

    const DeltaTable base = delta_weighted_base(problem, fit.alpha, config.weight_floor);
    const DeltaTable delta = apply_extension(plan, base);
    const Eigen::VectorXd delta_free = free_cells(plan, base);

    // d(score)/d(free cell), complement adjusted on the last base row.
    parts.C3.resize(ne, nf);
    parts.D3.resize(nm, nf);
    const int last = plan.n_base - 1;
    for (int j = 0; j + 1 < plan.n_base; ++j) {
        for (int g = 0; g < 3; ++g) {
            const double h = config.fd_step;
            const double up = std::min(h, base(last, g));
            const double down = std::min(h, base(j, g));
            const int col = 3 * j + g;
            if (up + down == 0.0) {
                parts.C3.col(col).setZero();
                parts.D3.col(col).setZero();
                continue;
            }
            DeltaTable bp = base, bm = base;
            bp(j, g) += up;
            bp(last, g) -= up;
            bm(j, g) -= down;
            bm(last, g) += down;
            const ScorePair sp = scores_at_delta(problem, fit, config, bp);
            const ScorePair sm = scores_at_delta(problem, fit, config, bm);
            parts.C3.col(col) = (sp.assoc - sm.assoc) / (up + down);
            parts.D3.col(col) = (sp.miss - sm.miss) / (up + down);
        }
    }

    parts.a = Eigen::MatrixXd::Zero(n, ne);
    parts.b = Eigen::MatrixXd::Zero(n, nm);
    parts.f0 = Eigen::MatrixXd::Zero(data.n_controls(), nf);
    const genetics::GenotypeDist hwe = genetics::hwe_probs(fit.eta.theta);
    int control_row = 0;
    for (int i = 0; i < n; ++i) {
        const data::SubjectRecord& rec = data.records()[static_cast<std::size_t>(i)];
        if (rec.r == 1) {
            const double pi =
                model::miss_prob(spec, fit.alpha, rec.y, rec.x, rec.g);
            parts.a.row(i) =
                estimator::assoc_score(spec, fit.eta, delta, plan, rec).transpose() / pi;
        }
        parts.b.row(i) =
            estimator::miss_score_subject(spec, fit.alpha, fit.eta, delta, plan, rec)
                .transpose();
        if (rec.y == 0) {
            Eigen::VectorXd f = -delta_free;
            if (rec.r == 1) {
                const int row = plan.row_of_pattern[static_cast<std::size_t>(
                    data.pattern_id(static_cast<std::size_t>(i)))];
                if (row < last) {
                    const double c =
                        model::miss_prob(spec, fit.alpha, 0.0, rec.x, rec.g) * hwe[rec.g];
                    f(3 * row + rec.g) += 1.0 / c;
                }
            }
            parts.f0.row(control_row) = f.transpose();
            ++control_row;
        }
    }
    return parts;
}

namespace {

// cov(u, v) = mean(u v') - mean(u) mean(v)', 1/N normalization.
Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    const double n = static_cast<double>(u.rows());
    const Eigen::RowVectorXd mu = u.colwise().mean();
    const Eigen::RowVectorXd mv = v.colwise().mean();
    return (u.transpose() * v) / n - mu.transpose() * mv;
}

}  // namespace

Eigen::MatrixXd compute_V(const Problem& problem, const FitResult& fit,
                          const FitConfig& config) {
    const SandwichComponents parts = compute_components(problem, fit, config);
    return compute_V(parts, problem);
}

Eigen::MatrixXd compute_V(const SandwichComponents& parts, const Problem& problem) {
    const data::Dataset& data = problem.data();
    const int n = problem.n();
    const int n0 = data.n_controls();
    const int ne = static_cast<int>(parts.a.cols());
    const int nm = static_cast<int>(parts.b.cols());
    if (n0 == 0) throw EmptyControls("no controls for the nuisance corrections");

    Eigen::MatrixXd a0(n0, ne);
    Eigen::MatrixXd b0(n0, nm);
    int row = 0;
    for (int i = 0; i < n; ++i) {
        if (data.records()[static_cast<std::size_t>(i)].y == 0) {
            a0.row(row) = parts.a.row(i);
            b0.row(row) = parts.b.row(i);
            ++row;
        }
    }
    const Eigen::MatrixXd cf = parts.f0 * parts.C3.transpose();  // rows: C3 f_i
    const Eigen::MatrixXd df = parts.f0 * parts.D3.transpose();

    const double inv_p0 = 1.0 / parts.p0;
    const Eigen::MatrixXd v11 = sample_cov(parts.a, parts.a) + inv_p0 * sample_cov(cf, cf) +
                                sample_cov(a0, cf) + sample_cov(cf, a0);
    const Eigen::MatrixXd v22 = sample_cov(parts.b, parts.b) + inv_p0 * sample_cov(df, df) +
                                sample_cov(b0, df) + sample_cov(df, b0);
    const Eigen::MatrixXd v12 = sample_cov(parts.a, parts.b) + sample_cov(cf, b0) +
                                sample_cov(a0, df) + inv_p0 * sample_cov(cf, df);

    Eigen::MatrixXd v(ne + nm, ne + nm);
    v.topLeftCorner(ne, ne) = v11;
    v.topRightCorner(ne, nm) = v12;
    v.bottomLeftCorner(nm, ne) = v12.transpose();
    v.bottomRightCorner(nm, nm) = v22;
    return 0.5 * (v + v.transpose());
}

Eigen::MatrixXd sandwich_cov(const Eigen::MatrixXd& m, const Eigen::MatrixXd& v, int n) {
    if (m.rows() != m.cols() || v.rows() != v.cols() || m.rows() != v.rows()) {
        throw InvariantViolation("sandwich pieces disagree in shape");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw SingularM("bread matrix is singular");
    const Eigen::MatrixXd minv = lu.inverse();
    return minv * v * minv.transpose() / n;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

WaldSummary wald_row(const std::string& name, double estimate, double std_error) {
    WaldSummary w;
    w.name = name;
    w.estimate = estimate;
    w.std_error = std_error;
    if (std_error > 0.0) {
        w.z = estimate / std_error;
    } else {
        w.z = estimate == 0.0 ? 0.0
                              : std::copysign(std::numeric_limits<double>::infinity(), estimate);
    }
    const double tail = 1.0 - normal_cdf(std::abs(w.z));
    w.p_one_sided = tail;
    w.p_two_sided = std::min(1.0, 2.0 * tail);
    w.ci_lower = estimate - kZ975 * std_error;
    w.ci_upper = estimate + kZ975 * std_error;
    return w;
}

std::vector<WaldSummary> wald(const estimator::FitResult& fit) {
    if (fit.se.size() != fit.estimates.size()) {
        throw InvariantViolation("covariance unavailable for Wald inference");
    }
    std::vector<WaldSummary> out;
    out.reserve(static_cast<std::size_t>(fit.estimates.size()));
    for (int i = 0; i < fit.estimates.size(); ++i) {
        out.push_back(wald_row(fit.names[static_cast<std::size_t>(i)], fit.estimates(i),
                               fit.se(i)));
    }
    return out;
}

}  // namespace fswel::variance
