// End-to-end acceptance checks. Each numbered check prints one PASS/FAIL
// line; the process exits nonzero if any check fails.
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fswel/estimator.hpp"
#include "fswel/genetics.hpp"
#include "fswel/io.hpp"
#include "fswel/simulation.hpp"
#include "fswel/variance.hpp"

using namespace fswel;

namespace {

bool g_all_pass = true;

void report(int id, bool ok, const std::string& detail) {
    std::printf("%s %d: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    if (!ok) g_all_pass = false;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

const simulation::ParamSummary& pick(const std::vector<simulation::ParamSummary>& summaries,
                                     const std::string& method, const std::string& parameter) {
    for (const simulation::ParamSummary& s : summaries) {
        if (s.method == method && s.parameter == parameter) return s;
    }
    std::printf("FAIL 0: missing summary row %s/%s\n", method.c_str(), parameter.c_str());
    std::exit(1);
}

int worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return std::max(1, std::min(4, static_cast<int>(hw)));
}

// ---------------------------------------------------------------------------
// Independent genetics oracle: founder enumeration over HWE mating pairs.
// ---------------------------------------------------------------------------

const std::array<std::array<int, 2>, 3> kAlleles{{{0, 0}, {1, 0}, {1, 1}}};

double oracle_transmission(int gm, int gf, int gc) {
    double p = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            if (kAlleles[static_cast<std::size_t>(gm)][static_cast<std::size_t>(i)] +
                    kAlleles[static_cast<std::size_t>(gf)][static_cast<std::size_t>(j)] ==
                gc) {
                p += 0.25;
            }
        }
    }
    return p;
}

std::array<double, 3> oracle_hwe(double theta) {
    return {(1 - theta) * (1 - theta), 2 * theta * (1 - theta), theta * theta};
}

double oracle_joint(double theta, const genetics::FamilyProxy& proxy, int g) {
    const std::array<double, 3> hwe = oracle_hwe(theta);
    switch (proxy.kind) {
        case genetics::ProxyKind::SpouseChild:
            return hwe[static_cast<std::size_t>(g)] * hwe[static_cast<std::size_t>(proxy.a)] *
                   oracle_transmission(g, proxy.a, proxy.b);
        case genetics::ProxyKind::TwoParents:
            return hwe[static_cast<std::size_t>(proxy.a)] *
                   hwe[static_cast<std::size_t>(proxy.b)] *
                   oracle_transmission(proxy.a, proxy.b, g);
        case genetics::ProxyKind::OneParent: {
            double p = 0.0;
            for (int q = 0; q < 3; ++q) {
                p += hwe[static_cast<std::size_t>(q)] * oracle_transmission(proxy.a, q, g);
            }
            return hwe[static_cast<std::size_t>(proxy.a)] * p;
        }
        case genetics::ProxyKind::ChildOnly: {
            double p = 0.0;
            for (int s = 0; s < 3; ++s) {
                p += hwe[static_cast<std::size_t>(s)] * oracle_transmission(g, s, proxy.a);
            }
            return hwe[static_cast<std::size_t>(g)] * p;
        }
        case genetics::ProxyKind::None:
            return hwe[static_cast<std::size_t>(g)];
    }
    return 0.0;
}

std::vector<genetics::FamilyProxy> all_proxies() {
    std::vector<genetics::FamilyProxy> out;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            out.push_back(genetics::FamilyProxy::spouse_child(a, b));
            out.push_back(genetics::FamilyProxy::two_parents(a, b));
        }
        out.push_back(genetics::FamilyProxy::one_parent(a));
        out.push_back(genetics::FamilyProxy::child_only(a));
    }
    return out;
}

void check_genetics() {
    double worst = 0.0;
    bool incompatible_ok = true;
    for (const double theta : {0.01, 0.2, 0.5, 0.99}) {
        for (const genetics::FamilyProxy& proxy : all_proxies()) {
            double marginal = 0.0;
            for (int g = 0; g < 3; ++g) {
                const double want = oracle_joint(theta, proxy, g);
                marginal += want;
                const double got =
                    genetics::family_joint(theta, proxy.kind).at(g, proxy);
                worst = std::max(worst, std::abs(got - want));
            }
            worst = std::max(
                worst, std::abs(genetics::family_marginal(theta, proxy) - marginal));
            if (marginal == 0.0) {
                try {
                    (void)genetics::conditional_given_family(theta, proxy);
                    incompatible_ok = false;
                } catch (const IncompatibleProxy&) {
                }
            } else {
                const genetics::GenotypeDist cond =
                    genetics::conditional_given_family(theta, proxy);
                for (int g = 0; g < 3; ++g) {
                    worst = std::max(
                        worst,
                        std::abs(cond[g] - oracle_joint(theta, proxy, g) / marginal));
                }
            }
        }
    }
    report(7, worst < 1e-12 && incompatible_ok,
           "family genetics vs founder enumeration, max abs error " + fmt(worst * 1e13) +
               "e-13, impossible configurations rejected: " +
               (incompatible_ok ? "yes" : "no"));
}

// ---------------------------------------------------------------------------
// Score checks: finite differences of the per-subject log empirical
// likelihood, and exhaustive-enumeration unbiasedness of both equations.
// ---------------------------------------------------------------------------

estimator::DeltaPlan explicit_plan(const std::vector<Eigen::VectorXd>& support) {
    estimator::DeltaPlan plan;
    plan.support_x = support;
    plan.n_base = static_cast<int>(support.size());
    plan.row_of_pattern.resize(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) {
        plan.row_of_pattern[i] = static_cast<int>(i);
    }
    return plan;
}

void check_scores() {
    struct Shape {
        model::ModelSpec spec;
        std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&, int)> f;
        int dim_x;
    };
    std::vector<Shape> shapes;
    shapes.push_back({model::make_model_spec({"x"}, {"x", "g"}, {"1"}, false),
                      [](const Eigen::VectorXd& b, const Eigen::VectorXd& x, int g) {
                          return b(0) * x(0) + b(1) * g;
                      },
                      1});
    shapes.push_back({model::make_model_spec({"x"}, {"x", "g", "x*g"}, {"1"}, false),
                      [](const Eigen::VectorXd& b, const Eigen::VectorXd& x, int g) {
                          return b(0) * x(0) + b(1) * g + b(2) * x(0) * g;
                      },
                      1});
    shapes.push_back(
        {model::make_model_spec({"u", "v"}, {"u", "v", "g", "v*g"}, {"1"}, false),
         [](const Eigen::VectorXd& b, const Eigen::VectorXd& x, int g) {
             return b(0) * x(0) + b(1) * x(1) + b(2) * g + b(3) * x(1) * g;
         },
         2});

    simulation::Rng rng(1234);
    double worst_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Shape& shape = shapes[static_cast<std::size_t>(trial % 3)];
        const int n_patterns = 2 + static_cast<int>(rng.below(3));
        std::vector<Eigen::VectorXd> support;
        for (int p = 0; p < n_patterns; ++p) {
            Eigen::VectorXd x(shape.dim_x);
            for (int k = 0; k < shape.dim_x; ++k) x(k) = p + 0.25 * k + 3.0 * rng.uniform();
            support.push_back(x);
        }
        Eigen::MatrixXd delta(n_patterns, 3);
        for (int g = 0; g < 3; ++g) {
            double total = 0.0;
            for (int row = 0; row < n_patterns; ++row) {
                delta(row, g) = 0.1 + rng.uniform();
                total += delta(row, g);
            }
            delta.col(g) /= total;
        }
        const estimator::DeltaPlan plan = explicit_plan(support);
        model::AssocParams eta;
        eta.beta = Eigen::VectorXd(shape.spec.n_assoc());
        for (int k = 0; k < eta.beta.size(); ++k) eta.beta(k) = 2.0 * rng.uniform() - 1.0;
        eta.theta = 0.08 + 0.77 * rng.uniform();

        data::SubjectRecord subject;
        subject.id = "t";
        subject.y = rng.bernoulli(0.5);
        subject.x = support[rng.below(static_cast<std::uint64_t>(n_patterns))];
        subject.r = 1;
        subject.g = static_cast<int>(rng.below(3));

        const auto log_el = [&](const Eigen::VectorXd& packed) {
            const int nb = static_cast<int>(packed.size()) - 1;
            const Eigen::VectorXd beta = packed.head(nb);
            const double theta = packed(nb);
            const std::array<double, 3> hwe = oracle_hwe(theta);
            int row = -1;
            for (std::size_t i = 0; i < support.size(); ++i) {
                if (support[i] == subject.x) row = static_cast<int>(i);
            }
            double l = std::log(delta(row, subject.g)) +
                       std::log(hwe[static_cast<std::size_t>(subject.g)]);
            if (subject.y == 1) {
                double s = 0.0;
                for (std::size_t i = 0; i < support.size(); ++i) {
                    for (int gg = 0; gg < 3; ++gg) {
                        s += delta(static_cast<int>(i), gg) *
                             hwe[static_cast<std::size_t>(gg)] *
                             std::exp(shape.f(beta, support[i], gg));
                    }
                }
                l += shape.f(beta, subject.x, subject.g) - std::log(s);
            }
            return l;
        };

        const Eigen::VectorXd score =
            estimator::assoc_score(shape.spec, eta, delta, plan, subject);
        const Eigen::VectorXd packed = eta.packed();
        for (int k = 0; k < packed.size(); ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(packed(k)));
            Eigen::VectorXd up = packed, down = packed;
            up(k) += h;
            down(k) -= h;
            const double fd = (log_el(up) - log_el(down)) / (2.0 * h);
            worst_rel = std::max(worst_rel,
                                 std::abs(score(k) - fd) / std::max(1.0, std::abs(fd)));
        }
    }

    // enumerable toy population: binary covariate, spouse-child proxies
    const model::ModelSpec spec =
        model::make_model_spec({"x"}, {"x", "g"}, {"1", "y", "x", "g", "y*x", "y*g"}, false);
    std::vector<Eigen::VectorXd> support{Eigen::VectorXd::Constant(1, 0.0),
                                         Eigen::VectorXd::Constant(1, 1.0)};
    Eigen::MatrixXd delta(2, 3);
    delta << 0.6, 0.5, 0.45, 0.4, 0.5, 0.55;
    model::AssocParams eta;
    eta.beta = Eigen::VectorXd(2);
    eta.beta << std::log(1.3), std::log(1.6);
    eta.theta = 0.3;
    Eigen::VectorXd alpha(6);
    alpha << 1.1, -0.4, 0.3, 0.25, -0.2, 0.15;
    const double p_case = 0.35;
    const estimator::DeltaPlan plan = explicit_plan(support);
    const std::array<double, 3> hwe = oracle_hwe(eta.theta);

    const auto joint_given_y = [&](int y) {
        Eigen::MatrixXd p(2, 3);
        for (int row = 0; row < 2; ++row) {
            for (int g = 0; g < 3; ++g) {
                p(row, g) = delta(row, g) * hwe[static_cast<std::size_t>(g)];
                if (y == 1) p(row, g) *= std::exp(eta.beta(0) * row + eta.beta(1) * g);
            }
        }
        return Eigen::MatrixXd(p / p.sum());
    };

    Eigen::VectorXd mean_u = Eigen::VectorXd::Zero(3);
    Eigen::VectorXd mean_b = Eigen::VectorXd::Zero(6);
    for (int y = 0; y < 2; ++y) {
        const double py = y == 1 ? p_case : 1.0 - p_case;
        const Eigen::MatrixXd joint = joint_given_y(y);
        for (int row = 0; row < 2; ++row) {
            for (int g = 0; g < 3; ++g) {
                const double base = py * joint(row, g);
                const double pi = model::miss_prob(spec, alpha, y, support[
                    static_cast<std::size_t>(row)], g);
                data::SubjectRecord subject;
                subject.id = "e";
                subject.y = y;
                subject.x = support[static_cast<std::size_t>(row)];
                subject.r = 1;
                subject.g = g;
                mean_u += base * estimator::assoc_score(spec, eta, delta, plan, subject);
                mean_b += base * pi *
                          estimator::miss_score_subject(spec, alpha, eta, delta, plan, subject);
                for (int s = 0; s < 3; ++s) {
                    for (int c = 0; c < 3; ++c) {
                        const double p_family = hwe[static_cast<std::size_t>(s)] *
                                                oracle_transmission(g, s, c);
                        if (p_family == 0.0) continue;
                        data::SubjectRecord missing;
                        missing.id = "m";
                        missing.y = y;
                        missing.x = support[static_cast<std::size_t>(row)];
                        missing.r = 0;
                        missing.g = -1;
                        missing.family = genetics::FamilyProxy::spouse_child(s, c);
                        mean_b += base * (1.0 - pi) * p_family *
                                  estimator::miss_score_subject(spec, alpha, eta, delta, plan,
                                                                missing);
                    }
                }
            }
        }
    }
    const double enum_err =
        std::max(mean_u.cwiseAbs().maxCoeff(), mean_b.cwiseAbs().maxCoeff());

    report(8, worst_rel < 1e-6 && enum_err < 1e-12,
           "score vs likelihood differences, worst relative error " + fmt(worst_rel * 1e8) +
               "e-8; enumeration expectation " + fmt(enum_err * 1e14) + "e-14");
}

// ---------------------------------------------------------------------------
// Solver contract: residual audit on fresh fits plus worker-count invariance.
// ---------------------------------------------------------------------------

void check_solver_contract() {
    simulation::SimConfig config;
    config.cohort_size = 30000;
    config.n_cases = 500;
    config.n_controls = 500;
    const simulation::Truth truth = simulation::calibrate_truth(config);
    const model::ModelSpec spec =
        model::make_model_spec({"x"}, {"x", "g"}, {"1", "y", "x", "g", "y*x", "y*g"}, false);

    int audited = 0;
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        simulation::Rng rng(simulation::splitmix64(777 + static_cast<std::uint64_t>(k)));
        const simulation::Cohort cohort = simulation::gen_cohort(config, truth, rng);
        const data::Dataset ds =
            simulation::sample_case_control(cohort, 500, 500, rng, {"x"});
        const estimator::FitResult fit = estimator::fit_fswel(ds, spec);
        if (!fit.converged) continue;
        ++audited;
        const estimator::Problem problem(ds, spec);
        const estimator::DeltaTable delta = estimator::delta_weighted(problem, fit.alpha);
        const double ra = estimator::weighted_assoc_score(problem, fit.eta, fit.alpha, delta)
                              .cwiseAbs()
                              .maxCoeff();
        const double rm = estimator::miss_score_equation(problem, fit.alpha, fit.eta, delta)
                              .cwiseAbs()
                              .maxCoeff();
        worst = std::max({worst, ra, rm, fit.final_residual_norm});
    }

    simulation::SimConfig small;
    small.cohort_size = 12000;
    small.n_cases = 200;
    small.n_controls = 200;
    small.reps = 20;
    small.seed = 4242;
    small.threads = 1;
    const simulation::SimResult one = simulation::run_replications(small);
    small.threads = 3;
    const simulation::SimResult three = simulation::run_replications(small);
    io::RunMeta meta;
    meta.version = "check";
    meta.config_hash = "check";
    meta.seed = small.seed;
    const bool identical =
        io::rep_rows_to_csv(one.rows, meta) == io::rep_rows_to_csv(three.rows, meta) &&
        one.reps_failed == three.reps_failed;

    report(9, audited >= 8 && worst < 1e-8 && identical,
           "residual infinity norm over " + std::to_string(audited) +
               " audited fits at most " + fmt(worst * 1e9) + "e-9; outputs across worker " +
               "counts identical: " + (identical ? "yes" : "no"));
}

void check_wald() {
    const variance::WaldSummary a = variance::wald_row("a", 0.369, 0.244);
    const variance::WaldSummary b = variance::wald_row("b", 0.722, 0.420);
    const bool ok = std::abs(a.p_one_sided - 0.065) < 0.001 &&
                    std::abs(b.p_one_sided - 0.043) < 0.001;
    report(10, ok,
           "one-sided Wald p-values " + fmt(a.p_one_sided) + " (target 0.065 +- 0.001) and " +
               fmt(b.p_one_sided) + " (target 0.043 +- 0.001)");
}

}  // namespace

int main() {
    const int threads = worker_count();
    const double kBeta1 = 0.182, kBeta2 = 0.405, kTheta = 0.200;

    // Scenario A: strong differential missingness at the study design point.
    simulation::SimConfig strong;
    strong.threads = threads;
    const simulation::SimResult run_a = simulation::run_replications(strong);
    const std::vector<simulation::ParamSummary> sa = simulation::summarize(run_a.rows);
    const bool budget_a = run_a.reps_failed <= 0.02 * run_a.reps_run;

    const simulation::ParamSummary& a_b1 = pick(sa, "fswel", "beta_x");
    const simulation::ParamSummary& a_b2 = pick(sa, "fswel", "beta_g");
    const simulation::ParamSummary& a_th = pick(sa, "fswel", "theta");
    report(1,
           budget_a && std::abs(a_b1.mean - kBeta1) < 0.02 &&
               std::abs(a_b2.mean - kBeta2) < 0.02 && std::abs(a_th.mean - kTheta) < 0.003,
           "strong-missingness means beta_x " + fmt(a_b1.mean) + " (target 0.182 +- 0.020), "
               "beta_g " + fmt(a_b2.mean) + " (0.405 +- 0.020), theta " + fmt(a_th.mean) +
               " (0.200 +- 0.003); failed replicates " + std::to_string(run_a.reps_failed) +
               "/" + std::to_string(run_a.reps_run));

    const auto in_band = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    report(2,
           budget_a && in_band(a_b1.coverage, 0.91, 0.98) &&
               in_band(a_b2.coverage, 0.91, 0.98) && in_band(a_th.coverage, 0.91, 0.98),
           "coverage beta_x " + fmt(a_b1.coverage) + ", beta_g " + fmt(a_b2.coverage) +
               ", theta " + fmt(a_th.coverage) + " (band 0.91..0.98)");

    const double r1 = a_b1.mean_se / a_b1.emp_sd;
    const double r2 = a_b2.mean_se / a_b2.emp_sd;
    const double r3 = a_th.mean_se / a_th.emp_sd;
    report(3, budget_a && in_band(r1, 0.85, 1.15) && in_band(r2, 0.85, 1.15) &&
                   in_band(r3, 0.85, 1.15),
           "mean SE over empirical SD: beta_x " + fmt(r1) + ", beta_g " + fmt(r2) +
               ", theta " + fmt(r3) + " (band 0.85..1.15)");

    const simulation::ParamSummary& a_m1 = pick(sa, "mcar", "beta_x");
    const simulation::ParamSummary& a_m2 = pick(sa, "mcar", "beta_g");
    const double mse_ratio = a_m1.mse / a_b1.mse;
    report(4,
           budget_a && std::abs(a_m1.bias - 0.089) < 0.02 &&
               std::abs(a_m2.bias - 0.074) < 0.02 && std::abs(a_b1.bias) < 0.015 &&
               std::abs(a_b2.bias) < 0.015 && mse_ratio > 2.0,
           "naive bias beta_x " + fmt(a_m1.bias) + " (0.089 +- 0.020), beta_g " +
               fmt(a_m2.bias) + " (0.074 +- 0.020); fswel bias " + fmt(a_b1.bias) + " / " +
               fmt(a_b2.bias) + " (|.| < 0.015); MSE ratio " + fmt(mse_ratio) + " (> 2)");

    // Scenario B: non-differential missingness, weaker genetic effect.
    simulation::SimConfig nd;
    nd.threads = threads;
    nd.beta2 = std::log(1.2);
    nd.alpha4 = 0.0;
    nd.alpha5 = 0.0;
    const simulation::SimResult run_b = simulation::run_replications(nd);
    const std::vector<simulation::ParamSummary> sb = simulation::summarize(run_b.rows);
    const bool budget_b = run_b.reps_failed <= 0.02 * run_b.reps_run;
    const simulation::ParamSummary& b_m2 = pick(sb, "mcar", "beta_g");
    const simulation::ParamSummary& b_f2 = pick(sb, "fswel", "beta_g");
    report(5,
           budget_b && std::abs(b_m2.bias - 0.036) < 0.015 && std::abs(b_f2.bias) < 0.012,
           "non-differential naive bias beta_g " + fmt(b_m2.bias) +
               " (0.036 +- 0.015); fswel bias " + fmt(b_f2.bias) + " (|.| < 0.012)");

    // Scenario C: missingness completely at random.
    simulation::SimConfig mcar;
    mcar.threads = threads;
    mcar.alpha1 = 0.0;
    mcar.alpha2 = 0.0;
    mcar.alpha3 = 0.0;
    mcar.alpha4 = 0.0;
    mcar.alpha5 = 0.0;
    const simulation::SimResult run_c = simulation::run_replications(mcar);
    const std::vector<simulation::ParamSummary> sc = simulation::summarize(run_c.rows);
    const bool budget_c = run_c.reps_failed <= 0.02 * run_c.reps_run;
    bool agree = budget_c;
    std::string c_detail = "fswel vs naive means under MCAR:";
    for (const std::string& p : {std::string("beta_x"), std::string("beta_g")}) {
        const simulation::ParamSummary& f = pick(sc, "fswel", p);
        const simulation::ParamSummary& n = pick(sc, "mcar", p);
        const double gap = std::abs(f.mean - n.mean);
        const double mc = 3.0 * std::sqrt(f.emp_sd * f.emp_sd / f.n_used +
                                          n.emp_sd * n.emp_sd / n.n_used);
        agree = agree && gap < mc;
        c_detail += " " + p + " gap " + fmt(gap) + " (limit " + fmt(mc) + ")";
    }
    report(6, agree, c_detail);

    check_genetics();
    check_scores();
    check_solver_contract();
    check_wald();

    std::printf("%s\n", g_all_pass ? "ALL CHECKS PASSED" : "SOME CHECKS FAILED");
    return g_all_pass ? 0 : 1;
}
