#include "fswel/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "fswel/baselines.hpp"
#include "fswel/variance.hpp"
#include "newton.hpp"

namespace fswel::estimator {

namespace {

double s_theta(int g, double theta) { return g / theta - (2 - g) / (1.0 - theta); }

Eigen::VectorXd assoc_terms_at(const model::ModelSpec& spec, const Eigen::VectorXd& x, int g) {
    Eigen::VectorXd t(spec.n_assoc());
    for (int k = 0; k < spec.n_assoc(); ++k) {
        t(k) = model::term_value(spec.assoc_terms[static_cast<std::size_t>(k)], 0.0, x, g);
    }
    return t;
}

struct QStats {
    double s = 0.0;            // normalizer of the tilted law
    Eigen::VectorXd mean_t;
    double mean_stheta = 0.0;
};

QStats q_stats(const model::ModelSpec& spec, const model::AssocParams& eta,
               const DeltaTable& delta, const DeltaPlan& plan) {
    if (delta.rows() != plan.n_rows() || delta.cols() != 3) {
        throw InvariantViolation("delta table shape does not match the plan");
    }
    const genetics::GenotypeDist hwe = genetics::hwe_probs(eta.theta);
    QStats q;
    q.mean_t = Eigen::VectorXd::Zero(spec.n_assoc());
    for (int row = 0; row < plan.n_rows(); ++row) {
        for (int g = 0; g < 3; ++g) {
            const double d = delta(row, g);
            if (d == 0.0) continue;
            const Eigen::VectorXd t =
                assoc_terms_at(spec, plan.support_x[static_cast<std::size_t>(row)], g);
            const double w = d * hwe[g] * std::exp(eta.beta.dot(t));
            q.s += w;
            q.mean_t += w * t;
            q.mean_stheta += w * s_theta(g, eta.theta);
        }
    }
    if (!(q.s > 0.0)) throw InvariantViolation("empirical covariate law has no mass");
    q.mean_t /= q.s;
    q.mean_stheta /= q.s;
    return q;
}

Eigen::VectorXd score_at(const model::ModelSpec& spec, const model::AssocParams& eta,
                         const QStats& q, int y, const Eigen::VectorXd& x, int g) {
    Eigen::VectorXd u(spec.n_eta());
    const Eigen::VectorXd t = assoc_terms_at(spec, x, g);
    u.head(spec.n_assoc()) = y * (t - q.mean_t);
    u(spec.n_assoc()) = s_theta(g, eta.theta) - y * q.mean_stheta;
    return u;
}

int nearest_row(const std::vector<Eigen::VectorXd>& rows, int limit, const Eigen::VectorXd& x) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < limit; ++i) {
        const double d = (rows[static_cast<std::size_t>(i)] - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best < 0) throw NoAdjacentPattern("no control pattern to borrow mass from");
    return best;
}

// Posterior summand of the missingness equation for one incomplete record.
Eigen::VectorXd incomplete_summand(const model::ModelSpec& spec, const Eigen::VectorXd& alpha,
                                   const model::AssocParams& eta, const DeltaTable& delta,
                                   const genetics::FamilyTables& tables, int y,
                                   const Eigen::VectorXd& x, int row,
                                   const genetics::FamilyProxy& proxy) {
    const std::array<double, 3> joint = tables.joint_column(proxy);
    if (joint[0] + joint[1] + joint[2] == 0.0) {
        throw IncompatibleProxy("family configuration " + genetics::proxy_kind_name(proxy.kind) +
                                "(" + std::to_string(proxy.a) + "," + std::to_string(proxy.b) +
                                ") has zero probability");
    }
    Eigen::VectorXd num = Eigen::VectorXd::Zero(spec.n_miss());
    double denom = 0.0;
    for (int g = 0; g < 3; ++g) {
        const double d = delta(row, g);
        if (d == 0.0 || joint[static_cast<std::size_t>(g)] == 0.0) continue;
        const double pi = model::miss_prob(spec, alpha, y, x, g);
        double t = (1.0 - pi) * d * joint[static_cast<std::size_t>(g)];
        if (y == 1) t *= std::exp(eta.beta.dot(assoc_terms_at(spec, x, g)));
        denom += t;
        num += (pi * t) * model::miss_design(spec, y, x, g);
    }
    if (denom == 0.0) {
        throw DegenerateWeight("posterior genotype weights vanished for an incomplete record");
    }
    return -num / denom;
}

int find_row(const DeltaPlan& plan, const Eigen::VectorXd& x) {
    for (int row = 0; row < plan.n_rows(); ++row) {
        const Eigen::VectorXd& s = plan.support_x[static_cast<std::size_t>(row)];
        if (s.size() == x.size() && s == x) return row;
    }
    throw PatternNotInDelta("covariate pattern absent from the delta support");
}

DeltaTable delta_base_accumulate(const Problem& problem, const Eigen::VectorXd* alpha,
                                 double weight_floor) {
    const DeltaPlan& plan = problem.plan();
    Eigen::MatrixXd num = Eigen::MatrixXd::Zero(plan.n_base, 3);
    Eigen::Vector3d den = Eigen::Vector3d::Zero();
    // Weights are normalized by the first control cell's probability; the
    // ratio is scale-invariant and constant weights then cancel exactly.
    double pi_ref = 0.0;
    for (const CompleteCell& cell : problem.cells().complete) {
        if (cell.y != 0) continue;
        const int row = plan.row_of_pattern[static_cast<std::size_t>(cell.pattern)];
        if (row < 0 || row >= plan.n_base) {
            throw InvariantViolation("complete control pattern outside the base support");
        }
        double w = cell.count;
        if (alpha) {
            const double pi = model::miss_prob(
                problem.spec(), *alpha, 0.0,
                problem.data().patterns()[static_cast<std::size_t>(cell.pattern)], cell.g);
            if (pi < weight_floor) {
                throw DegenerateWeight("retention probability " + std::to_string(pi) +
                                       " below floor in the control reweighting");
            }
            if (pi_ref == 0.0) pi_ref = pi;
            w *= pi_ref / pi;
        }
        num(row, cell.g) += w;
        den(cell.g) += w;
    }
    for (int g = 0; g < 3; ++g) {
        if (den(g) == 0.0) {
            throw EmptyGenotypeStratum("no complete control carries genotype " +
                                       std::to_string(g));
        }
    }
    DeltaTable base = num;
    for (int g = 0; g < 3; ++g) base.col(g) /= den(g);
    return base;
}

}  // namespace

DeltaPlan DeltaPlan::build(const data::Dataset& data) {
    const int np = data.n_patterns();
    std::vector<char> in_base(static_cast<std::size_t>(np), 0);
    for (std::size_t i = 0; i < data.records().size(); ++i) {
        const data::SubjectRecord& rec = data.records()[i];
        if (rec.r == 1 && rec.y == 0) in_base[static_cast<std::size_t>(data.pattern_id(i))] = 1;
    }
    DeltaPlan plan;
    plan.row_of_pattern.assign(static_cast<std::size_t>(np), -1);
    for (int j = 0; j < np; ++j) {
        if (in_base[static_cast<std::size_t>(j)]) {
            plan.row_of_pattern[static_cast<std::size_t>(j)] = plan.n_rows();
            plan.support_x.push_back(data.patterns()[static_cast<std::size_t>(j)]);
        }
    }
    plan.n_base = plan.n_rows();
    if (plan.n_base == 0) throw NoAdjacentPattern("no complete control patterns in the data");
    for (int j = 0; j < np; ++j) {
        if (in_base[static_cast<std::size_t>(j)]) continue;
        const Eigen::VectorXd& x = data.patterns()[static_cast<std::size_t>(j)];
        plan.donor_of_extended.push_back(nearest_row(plan.support_x, plan.n_base, x));
        plan.row_of_pattern[static_cast<std::size_t>(j)] = plan.n_rows();
        plan.support_x.push_back(x);
    }
    return plan;
}

CellIndex build_cells(const data::Dataset& data) {
    CellIndex cells;
    cells.n_total = data.n();
    cells.n_cases = data.n_cases();
    std::map<std::array<int, 3>, int> complete;
    std::map<std::array<int, 5>, int> incomplete;
    for (std::size_t i = 0; i < data.records().size(); ++i) {
        const data::SubjectRecord& rec = data.records()[i];
        const int pid = data.pattern_id(i);
        if (rec.r == 1) {
            ++complete[{rec.y, pid, rec.g}];
            ++cells.n_complete;
        } else if (rec.family.kind == genetics::ProxyKind::None) {
            ++cells.n_incomplete_no_proxy;
        } else {
            ++incomplete[{rec.y, pid, static_cast<int>(rec.family.kind), rec.family.a,
                          rec.family.b}];
        }
    }
    cells.complete.reserve(complete.size());
    for (const auto& [key, count] : complete) {
        cells.complete.push_back({key[0], key[1], key[2], count});
    }
    cells.incomplete.reserve(incomplete.size());
    for (const auto& [key, count] : incomplete) {
        genetics::FamilyProxy proxy;
        proxy.kind = static_cast<genetics::ProxyKind>(key[2]);
        proxy.a = key[3];
        proxy.b = key[4];
        cells.incomplete.push_back({key[0], key[1], proxy, count});
    }
    return cells;
}

Problem::Problem(const data::Dataset& data, const model::ModelSpec& spec)
    : Problem(data, spec, DeltaPlan::build(data)) {}

Problem::Problem(const data::Dataset& data, const model::ModelSpec& spec, DeltaPlan plan)
    : data_(&data), spec_(&spec), plan_(std::move(plan)), cells_(build_cells(data)) {
    if (spec.x_names != data.x_names()) {
        throw ConfigError("model covariates do not match the dataset columns");
    }
    if (static_cast<int>(plan_.row_of_pattern.size()) != data.n_patterns()) {
        throw InvariantViolation("delta plan does not cover the dataset patterns");
    }
    for (int j = 0; j < data.n_patterns(); ++j) {
        const int row = plan_.row_of_pattern[static_cast<std::size_t>(j)];
        if (row < 0) continue;
        if (row >= plan_.n_rows() ||
            plan_.support_x[static_cast<std::size_t>(row)] !=
                data.patterns()[static_cast<std::size_t>(j)]) {
            throw InvariantViolation("delta plan row disagrees with its pattern");
        }
    }
    if (spec.miss_controls_only) {
        for (const IncompleteCell& cell : cells_.incomplete) {
            if (cell.y == 1) {
                throw InvariantViolation(
                    "case with missing genotype under controls-only missingness");
            }
        }
    }
}

DeltaTable apply_extension(const DeltaPlan& plan, const DeltaTable& base) {
    if (base.rows() != plan.n_base || base.cols() != 3) {
        throw InvariantViolation("base table shape does not match the plan");
    }
    DeltaTable out(plan.n_rows(), 3);
    out.topRows(plan.n_base) = base;
    for (int k = 0; k < plan.n_extended(); ++k) {
        const int donor = plan.donor_of_extended[static_cast<std::size_t>(k)];
        out.row(donor) *= 0.5;
        out.row(plan.n_base + k) = out.row(donor);
    }
    return out;
}

DeltaTable extend_delta_support(const DeltaTable& delta,
                                const std::vector<Eigen::VectorXd>& control_patterns,
                                const std::vector<Eigen::VectorXd>& new_patterns) {
    if (delta.rows() != static_cast<int>(control_patterns.size()) || delta.cols() != 3) {
        throw InvariantViolation("delta table shape does not match the control patterns");
    }
    DeltaPlan plan;
    plan.support_x = control_patterns;
    plan.n_base = static_cast<int>(control_patterns.size());
    for (const Eigen::VectorXd& x : new_patterns) {
        plan.donor_of_extended.push_back(nearest_row(plan.support_x, plan.n_base, x));
        plan.support_x.push_back(x);
    }
    return apply_extension(plan, delta);
}

DeltaTable delta_weighted_base(const Problem& problem, const Eigen::VectorXd& alpha,
                               double weight_floor) {
    return delta_base_accumulate(problem, &alpha, weight_floor);
}

DeltaTable delta_weighted(const Problem& problem, const Eigen::VectorXd& alpha,
                          double weight_floor) {
    return apply_extension(problem.plan(), delta_weighted_base(problem, alpha, weight_floor));
}

DeltaTable delta_unweighted(const Problem& problem) {
    return apply_extension(problem.plan(), delta_base_accumulate(problem, nullptr, 0.0));
}

Eigen::VectorXd assoc_score(const model::ModelSpec& spec, const model::AssocParams& eta,
                            const DeltaTable& delta, const DeltaPlan& plan,
                            const data::SubjectRecord& subject) {
    if (subject.r != 1) {
        throw InvariantViolation("association score requires an observed genotype");
    }
    const QStats q = q_stats(spec, eta, delta, plan);
    return score_at(spec, eta, q, subject.y, subject.x, subject.g);
}

Eigen::VectorXd miss_score_subject(const model::ModelSpec& spec, const Eigen::VectorXd& alpha,
                                   const model::AssocParams& eta, const DeltaTable& delta,
                                   const DeltaPlan& plan, const data::SubjectRecord& subject) {
    if (subject.r == 1) {
        const double pi = model::miss_prob(spec, alpha, subject.y, subject.x, subject.g);
        return (1.0 - pi) * model::miss_design(spec, subject.y, subject.x, subject.g);
    }
    if (subject.family.kind == genetics::ProxyKind::None) {
        return Eigen::VectorXd::Zero(spec.n_miss());
    }
    if (spec.miss_controls_only && subject.y == 1) {
        throw InvariantViolation("case with missing genotype under controls-only missingness");
    }
    const genetics::FamilyTables tables(eta.theta);
    return incomplete_summand(spec, alpha, eta, delta, tables, subject.y, subject.x,
                              find_row(plan, subject.x), subject.family);
}

Eigen::VectorXd weighted_assoc_score(const Problem& problem, const model::AssocParams& eta,
                                     const Eigen::VectorXd& alpha, const DeltaTable& delta,
                                     double weight_floor) {
    const model::ModelSpec& spec = problem.spec();
    const QStats q = q_stats(spec, eta, delta, problem.plan());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(spec.n_eta());
    for (const CompleteCell& cell : problem.cells().complete) {
        const Eigen::VectorXd& x = problem.data().patterns()[static_cast<std::size_t>(cell.pattern)];
        const double pi = model::miss_prob(spec, alpha, cell.y, x, cell.g);
        if (pi < weight_floor) {
            throw DegenerateWeight("retention probability " + std::to_string(pi) +
                                   " below floor in the score weights");
        }
        sum += (cell.count / pi) * score_at(spec, eta, q, cell.y, x, cell.g);
    }
    return sum / problem.n();
}

Eigen::VectorXd miss_score_equation(const Problem& problem, const Eigen::VectorXd& alpha,
                                    const model::AssocParams& eta, const DeltaTable& delta) {
    const model::ModelSpec& spec = problem.spec();
    const DeltaPlan& plan = problem.plan();
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(spec.n_miss());
    for (const CompleteCell& cell : problem.cells().complete) {
        const Eigen::VectorXd& x = problem.data().patterns()[static_cast<std::size_t>(cell.pattern)];
        const double pi = model::miss_prob(spec, alpha, cell.y, x, cell.g);
        if (pi == 1.0) continue;
        sum += (cell.count * (1.0 - pi)) * model::miss_design(spec, cell.y, x, cell.g);
    }
    if (!problem.cells().incomplete.empty()) {
        const genetics::FamilyTables tables(eta.theta);
        for (const IncompleteCell& cell : problem.cells().incomplete) {
            const int row = plan.row_of_pattern[static_cast<std::size_t>(cell.pattern)];
            if (row < 0) {
                throw PatternNotInDelta("incomplete record pattern absent from the delta support");
            }
            const Eigen::VectorXd& x =
                problem.data().patterns()[static_cast<std::size_t>(cell.pattern)];
            sum += cell.count * incomplete_summand(spec, alpha, eta, delta, tables, cell.y, x,
                                                   row, cell.proxy);
        }
    }
    return sum / problem.n();
}

Eigen::VectorXd stacked_residual(const Problem& problem, const model::AssocParams& eta,
                                 const Eigen::VectorXd& alpha, const FitConfig& config) {
    const DeltaTable delta = delta_weighted(problem, alpha, config.weight_floor);
    const Eigen::VectorXd u = weighted_assoc_score(problem, eta, alpha, delta,
                                                   config.weight_floor);
    const Eigen::VectorXd um = miss_score_equation(problem, alpha, eta, delta);
    Eigen::VectorXd out(u.size() + um.size());
    out << u, um;
    return out;
}

model::AssocParams solve_eta(const Problem& problem, const model::AssocParams& init,
                             const Eigen::VectorXd& alpha, const DeltaTable& delta,
                             const FitConfig& config, int* iterations) {
    detail::NewtonOptions opt;
    opt.tol = config.inner_tol;
    opt.max_iter = config.inner_max_iter;
    opt.fd_step = config.fd_step;
    const int theta_index = problem.spec().n_assoc();
    opt.project = [&config, theta_index](Eigen::VectorXd& v) {
        v(theta_index) = std::clamp(v(theta_index), config.theta_clamp, 1.0 - config.theta_clamp);
    };
    const auto residual = [&](const Eigen::VectorXd& p) {
        return weighted_assoc_score(problem, model::AssocParams::unpack(p), alpha, delta,
                                    config.weight_floor);
    };
    return model::AssocParams::unpack(
        detail::newton_solve(residual, init.packed(), opt, iterations));
}

Eigen::VectorXd solve_alpha(const Problem& problem, const Eigen::VectorXd& init,
                            const model::AssocParams& eta, const FitConfig& config,
                            int* iterations) {
    detail::NewtonOptions opt;
    opt.tol = config.inner_tol;
    opt.max_iter = config.inner_max_iter;
    opt.fd_step = config.fd_step;
    opt.diverge_norm = config.separation_bound;
    const auto residual = [&](const Eigen::VectorXd& a) {
        const DeltaTable delta = delta_weighted(problem, a, config.weight_floor);
        return miss_score_equation(problem, a, eta, delta);
    };
    return detail::newton_solve(residual, init, opt, iterations);
}

namespace {

model::AssocParams initial_eta(const Problem& problem, const FitConfig& config) {
    const model::ModelSpec& spec = problem.spec();
    const data::Dataset& data = problem.data();
    model::AssocParams eta;
    eta.beta = Eigen::VectorXd::Zero(spec.n_assoc());

    long allele_sum = 0;
    long control_count = 0;
    int n_complete = 0;
    for (const data::SubjectRecord& rec : data.records()) {
        if (rec.r != 1) continue;
        ++n_complete;
        if (rec.y == 0) {
            allele_sum += rec.g;
            ++control_count;
        }
    }
    eta.theta = control_count > 0 ? allele_sum / (2.0 * control_count) : 0.5;
    eta.theta = std::clamp(eta.theta, config.theta_clamp, 1.0 - config.theta_clamp);

    if (spec.n_assoc() > 0 && n_complete > 0) {
        Eigen::MatrixXd design(n_complete, spec.n_assoc() + 1);
        Eigen::VectorXd outcome(n_complete);
        int i = 0;
        for (const data::SubjectRecord& rec : data.records()) {
            if (rec.r != 1) continue;
            design(i, 0) = 1.0;
            design.row(i).tail(spec.n_assoc()) = assoc_terms_at(spec, rec.x, rec.g);
            outcome(i) = rec.y;
            ++i;
        }
        try {
            const baselines::LogisticFit fit = baselines::fit_logistic(
                design, outcome, Eigen::VectorXd::Ones(n_complete));
            eta.beta = fit.coef.tail(spec.n_assoc());
        } catch (const Error&) {
            // naive start unavailable; zero start is still valid
        }
    }
    return eta;
}

}  // namespace

FitResult fit_fswel(const data::Dataset& data, const model::ModelSpec& spec,
                    const FitConfig& config) {
    const Problem problem(data, spec);
    FitResult result;
    result.names = spec.parameter_names();

    model::AssocParams eta = initial_eta(problem, config);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(spec.n_miss());
    DeltaTable delta = delta_weighted(problem, alpha, config.weight_floor);

    bool settled = false;
    int eta_iters = 0;
    int alpha_iters = 0;
    int sweeps = 0;
    while (sweeps < config.outer_max_iter) {
        ++sweeps;
        int it = 0;
        const Eigen::VectorXd alpha_new = solve_alpha(problem, alpha, eta, config, &it);
        alpha_iters += it;
        delta = delta_weighted(problem, alpha_new, config.weight_floor);
        const model::AssocParams eta_new = solve_eta(problem, eta, alpha_new, delta, config, &it);
        eta_iters += it;
        const double change =
            std::max(detail::inf_norm(eta_new.packed() - eta.packed()),
                     detail::inf_norm(alpha_new - alpha));
        eta = eta_new;
        alpha = alpha_new;
        if (change < config.outer_tol) {
            settled = true;
            break;
        }
    }

    result.eta = eta;
    result.alpha = alpha;
    result.delta = delta;
    result.estimates.resize(spec.n_eta() + spec.n_miss());
    result.estimates << eta.packed(), alpha;
    result.iterations = sweeps;
    result.final_residual_norm = detail::inf_norm(stacked_residual(problem, eta, alpha, config));
    result.converged = settled && result.final_residual_norm < config.residual_tol;

    Diagnostics& diag = result.diagnostics;
    diag.n = problem.n();
    diag.n_cases = data.n_cases();
    diag.n_complete = problem.cells().n_complete;
    diag.n_incomplete = problem.n() - diag.n_complete;
    diag.n_incomplete_no_proxy = problem.cells().n_incomplete_no_proxy;
    diag.n_patterns = data.n_patterns();
    diag.n_support = problem.plan().n_rows();
    diag.n_extended = problem.plan().n_extended();
    diag.eta_iterations = eta_iters;
    diag.alpha_iterations = alpha_iters;

    if (config.compute_cov && result.converged) {
        const variance::SandwichComponents parts =
            variance::compute_components(problem, result, config);
        result.cov = variance::sandwich_cov(parts.M, variance::compute_V(parts, problem),
                                            problem.n());
        result.se = result.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    }
    return result;
}

}  // namespace fswel::estimator
