#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fswel/baselines.hpp"
#include "fswel/simulation.hpp"

using namespace fswel;

namespace {

data::SubjectRecord rec(const std::string& id, int y, double x, int r, int g) {
    data::SubjectRecord out;
    out.id = id;
    out.y = y;
    out.x = Eigen::VectorXd::Constant(1, x);
    out.r = r;
    out.g = g;
    return out;
}

double weighted_loglik(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                       const Eigen::VectorXd& weights, const Eigen::VectorXd& coef) {
    double total = 0.0;
    for (int i = 0; i < design.rows(); ++i) {
        const double xb = design.row(i).dot(coef);
        total += weights(i) * (outcome(i) * xb - std::log1p(std::exp(xb)));
    }
    return total;
}

Eigen::VectorXd golden_max(const std::function<double(const Eigen::VectorXd&)>& f,
                           Eigen::VectorXd p) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int sweep = 0; sweep < 80; ++sweep) {
        for (int k = 0; k < p.size(); ++k) {
            double a = -4.0, b = 4.0;
            const auto eval = [&](double v) {
                Eigen::VectorXd q = p;
                q(k) = v;
                return f(q);
            };
            double c = b - gr * (b - a), d = a + gr * (b - a);
            double fc = eval(c), fd = eval(d);
            while (b - a > 1e-12) {
                if (fc > fd) {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - gr * (b - a);
                    fc = eval(c);
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + gr * (b - a);
                    fd = eval(d);
                }
            }
            p(k) = 0.5 * (a + b);
        }
    }
    return p;
}

}  // namespace

TEST_CASE("saturated two-by-two logistic fit has the closed form") {
    // x = 0: 10 cases, 20 controls; x = 1: 20 cases, 10 controls.
    const int n = 60;
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd outcome(n);
    int i = 0;
    const auto fill = [&](double x, double y, int copies) {
        for (int c = 0; c < copies; ++c, ++i) {
            design.row(i) << 1.0, x;
            outcome(i) = y;
        }
    };
    fill(0, 1, 10);
    fill(0, 0, 20);
    fill(1, 1, 20);
    fill(1, 0, 10);
    const baselines::LogisticFit fit =
        baselines::fit_logistic(design, outcome, Eigen::VectorXd::Ones(n));
    CHECK(fit.coef(0) == doctest::Approx(std::log(0.5)).epsilon(1e-9));
    CHECK(fit.coef(1) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    // inverse information at the optimum: 1/a + 1/b cell sums
    CHECK(fit.cov(0, 0) == doctest::Approx(0.15).epsilon(1e-8));
    CHECK(fit.cov(1, 1) == doctest::Approx(0.30).epsilon(1e-8));
    CHECK(fit.cov(0, 1) == doctest::Approx(-0.15).epsilon(1e-8));
}

TEST_CASE("weighted logistic fit maximizes the weighted likelihood") {
    simulation::Rng rng(808);
    const int n = 40;
    Eigen::MatrixXd design(n, 3);
    Eigen::VectorXd outcome(n), weights(n);
    for (int i = 0; i < n; ++i) {
        design.row(i) << 1.0, 2.0 * rng.uniform() - 1.0, static_cast<double>(rng.below(3));
        const double lin = 0.3 + 0.8 * design(i, 1) - 0.5 * design(i, 2);
        outcome(i) = rng.bernoulli(model::logistic(lin));
        weights(i) = 0.5 + rng.uniform();
    }
    const baselines::LogisticFit fit = baselines::fit_logistic(design, outcome, weights);
    const Eigen::VectorXd best = golden_max(
        [&](const Eigen::VectorXd& c) { return weighted_loglik(design, outcome, weights, c); },
        Eigen::VectorXd::Zero(3));
    CHECK((fit.coef - best).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("logistic fit failure modes") {
    Eigen::MatrixXd design(4, 2);
    design << 1, 0, 1, 0, 1, 1, 1, 1;
    Eigen::VectorXd sep(4);
    sep << 0, 0, 1, 1;  // perfectly separated in x
    CHECK_THROWS_AS(baselines::fit_logistic(design, sep, Eigen::VectorXd::Ones(4)),
                    CompleteSeparation);

    Eigen::VectorXd bad(3);
    bad << 0, 1, 0;
    CHECK_THROWS_AS(baselines::fit_logistic(design, bad, Eigen::VectorXd::Ones(4)),
                    InvariantViolation);

    Eigen::MatrixXd collinear(4, 2);
    collinear << 1, 1, 1, 1, 1, 1, 1, 1;  // duplicate columns
    Eigen::VectorXd y(4);
    y << 0, 1, 1, 0;
    CHECK_THROWS_AS(baselines::fit_logistic(collinear, y, Eigen::VectorXd::Ones(4)),
                    SingularJacobian);
}

TEST_CASE("naive allele frequency over complete controls") {
    std::vector<data::SubjectRecord> rows;
    int id = 0;
    const auto add = [&](int y, int r, int g, int copies) {
        for (int c = 0; c < copies; ++c) {
            data::SubjectRecord s = rec("r" + std::to_string(id++), y, 0.0, r, g);
            if (r == 0) s.family = genetics::FamilyProxy::child_only(1);
            rows.push_back(s);
        }
    };
    add(0, 1, 0, 75);
    add(0, 1, 1, 20);
    add(0, 1, 2, 5);
    add(1, 1, 2, 30);   // cases do not count
    add(0, 0, -1, 10);  // incomplete controls do not count
    const data::Dataset ds(rows, {"x"});
    const baselines::MafEstimate maf = baselines::maf_naive(ds);
    CHECK(maf.theta == doctest::Approx(0.15));
    CHECK(maf.std_error == doctest::Approx(std::sqrt(0.15 * 0.85 / 200.0)).epsilon(1e-12));

    SUBCASE("degenerate stratum") {
        std::vector<data::SubjectRecord> fixed{rec("a", 0, 0.0, 1, 2), rec("b", 0, 1.0, 1, 2),
                                               rec("c", 1, 0.0, 1, 0)};
        const data::Dataset d2(fixed, {"x"});
        const baselines::MafEstimate m2 = baselines::maf_naive(d2);
        CHECK(m2.theta == doctest::Approx(1.0));
        CHECK(m2.std_error == doctest::Approx(0.0));
    }
    SUBCASE("no complete controls") {
        std::vector<data::SubjectRecord> none{rec("a", 1, 0.0, 1, 1)};
        const data::Dataset d3(none, {"x"});
        CHECK_THROWS_AS(baselines::maf_naive(d3), EmptyControls);
    }
}

TEST_CASE("weighted allele frequency") {
    std::vector<data::SubjectRecord> rows{rec("a", 0, 0.0, 1, 0), rec("b", 0, 0.0, 1, 1),
                                          rec("c", 0, 1.0, 1, 2), rec("d", 1, 0.0, 1, 2)};
    const data::Dataset ds(rows, {"x"});

    Eigen::VectorXd w(4);
    w << 1.0, 2.0, 3.0, 9.0;  // the case weight must be ignored
    CHECK(baselines::maf_mar(ds, w) == doctest::Approx(8.0 / 12.0));

    // constant weights reduce to the naive estimate
    CHECK(baselines::maf_mar(ds, Eigen::VectorXd::Constant(4, 2.0)) ==
          doctest::Approx(baselines::maf_naive(ds).theta));

    CHECK_THROWS_AS(baselines::maf_mar(ds, Eigen::VectorXd::Ones(3)), InvariantViolation);
    CHECK_THROWS_AS(baselines::maf_mar(ds, Eigen::VectorXd::Zero(4)), DegenerateWeight);
}

TEST_CASE("complete-case baseline stitches the logistic fit and the allele frequency") {
    simulation::Rng rng(617);
    std::vector<data::SubjectRecord> rows;
    for (int i = 0; i < 120; ++i) {
        const int y = rng.bernoulli(0.45);
        const double x = rng.bernoulli(0.5);
        const int g = static_cast<int>(rng.below(3));
        if (rng.bernoulli(0.8) == 1) {
            rows.push_back(rec("r" + std::to_string(i), y, x, 1, g));
        } else {
            data::SubjectRecord s = rec("r" + std::to_string(i), y, x, 0, -1);
            s.family = genetics::FamilyProxy::spouse_child(1, 1);
            rows.push_back(s);
        }
    }
    const data::Dataset ds(rows, {"x"});
    const model::ModelSpec spec =
        model::make_model_spec({"x"}, {"x", "g"}, {"1", "y", "x", "g"}, false);

    const baselines::BaselineResult out = baselines::fit_mcar_naive(spec, ds);
    CHECK(out.method == baselines::BaselineMethod::MCAR);
    CHECK(out.names == std::vector<std::string>{"beta_0", "beta_x", "beta_g", "theta"});
    CHECK_FALSE(out.weights_used);
    REQUIRE(out.estimates.size() == 4);

    // complete cases only, rebuilt here
    std::vector<int> keep;
    for (int i = 0; i < ds.n(); ++i) {
        if (ds.records()[static_cast<std::size_t>(i)].r == 1) keep.push_back(i);
    }
    Eigen::MatrixXd design(keep.size(), 3);
    Eigen::VectorXd outcome(keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const data::SubjectRecord& r = ds.records()[static_cast<std::size_t>(keep[j])];
        design.row(static_cast<int>(j)) << 1.0, r.x(0), static_cast<double>(r.g);
        outcome(static_cast<int>(j)) = r.y;
    }
    const baselines::LogisticFit direct = baselines::fit_logistic(
        design, outcome, Eigen::VectorXd::Ones(static_cast<int>(keep.size())));
    CHECK((out.estimates.head(3) - direct.coef).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((out.std_errors.head(3) - direct.cov.diagonal().cwiseSqrt()).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK(out.estimates(3) == doctest::Approx(baselines::maf_naive(ds).theta));
    CHECK(out.std_errors(3) == doctest::Approx(baselines::maf_naive(ds).std_error));
}

TEST_CASE("inverse-probability baseline on an exactly fitted availability model") {
    // availability depends on x alone and matches the model exactly:
    // P(R=1 | x=0) = 3/4, P(R=1 | x=1) = 1/2, no y effect.
    std::vector<data::SubjectRecord> rows;
    int id = 0;
    const auto add = [&](int y, double x, int r, int copies) {
        for (int c = 0; c < copies; ++c) {
            data::SubjectRecord s = rec("r" + std::to_string(id), y, x, r, r == 1 ? id % 3 : -1);
            ++id;
            rows.push_back(s);
        }
    };
    add(0, 0.0, 1, 12);
    add(0, 0.0, 0, 4);
    add(1, 0.0, 1, 6);
    add(1, 0.0, 0, 2);
    add(0, 1.0, 1, 5);
    add(0, 1.0, 0, 5);
    add(1, 1.0, 1, 10);
    add(1, 1.0, 0, 10);
    const data::Dataset ds(rows, {"x"});
    const model::ModelSpec spec =
        model::make_model_spec({"x"}, {"x", "g"}, {"1", "y", "x", "g"}, false);

    const baselines::BaselineResult out = baselines::fit_mar_ipw(spec, ds);
    CHECK(out.method == baselines::BaselineMethod::MAR);
    CHECK(out.weights_used);
    REQUIRE(out.estimates.size() == 4);
    CHECK(std::isnan(out.std_errors(3)));

    // weights implied by the exact availability root
    Eigen::VectorXd w = Eigen::VectorXd::Zero(ds.n());
    std::vector<int> keep;
    for (int i = 0; i < ds.n(); ++i) {
        const data::SubjectRecord& r = ds.records()[static_cast<std::size_t>(i)];
        if (r.r != 1) continue;
        w(i) = r.x(0) == 0.0 ? 4.0 / 3.0 : 2.0;
        keep.push_back(i);
    }
    CHECK(out.estimates(3) == doctest::Approx(baselines::maf_mar(ds, w)).epsilon(1e-9));

    Eigen::MatrixXd design(keep.size(), 3);
    Eigen::VectorXd outcome(keep.size()), wk(keep.size());
    for (std::size_t j = 0; j < keep.size(); ++j) {
        const data::SubjectRecord& r = ds.records()[static_cast<std::size_t>(keep[j])];
        design.row(static_cast<int>(j)) << 1.0, r.x(0), static_cast<double>(r.g);
        outcome(static_cast<int>(j)) = r.y;
        wk(static_cast<int>(j)) = w(keep[j]);
    }
    const baselines::LogisticFit direct = baselines::fit_logistic(design, outcome, wk);
    CHECK((out.estimates.head(3) - direct.coef).cwiseAbs().maxCoeff() < 1e-8);

    // a floor above the smallest fitted availability trips the guard
    CHECK_THROWS_AS(baselines::fit_mar_ipw(spec, ds, 0.6), DegenerateWeight);
}
