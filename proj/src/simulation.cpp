#include "fswel/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include "fswel/baselines.hpp"
#include "fswel/estimator.hpp"
#include "fswel/genetics.hpp"
#include "fswel/model.hpp"

namespace fswel::simulation {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

double check_prob(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        throw ConfigError(std::string(what) + " must lie strictly inside (0,1)");
    }
    return p;
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
    x += kGolden;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : state_(seed) {}

std::uint64_t Rng::next_raw() {
    state_ += kGolden;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double Rng::uniform() { return static_cast<double>(next_raw() >> 11) * 0x1.0p-53; }

int Rng::bernoulli(double p) { return uniform() < p ? 1 : 0; }

int Rng::categorical3(const std::array<double, 3>& probs) {
    const double u = uniform();
    if (u < probs[0]) return 0;
    if (u < probs[0] + probs[1]) return 1;
    return 2;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw InvariantViolation("empty sampling range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x = next_raw();
    while (x >= limit) x = next_raw();
    return x % n;
}

void SimConfig::validate() const {
    check_prob(theta, "theta");
    for (double p : p_x_given_g) check_prob(p, "p_x_given_g");
    check_prob(target_prevalence, "target_prevalence");
    check_prob(target_availability, "target_availability");
    if (n_cases < 0 || n_controls < 0 || n_cases + n_controls <= 0) {
        throw ConfigError("sample sizes must be nonnegative with a nonempty total");
    }
    if (cohort_size <= 0) throw ConfigError("cohort_size must be positive");
    if (reps <= 0) throw ConfigError("reps must be positive");
    if (threads <= 0) throw ConfigError("threads must be positive");
}

double calibrate_intercept(double target, const std::function<double(double)>& expected_prob) {
    check_prob(target, "calibration target");
    double lo = -60.0, hi = 60.0;
    double mid = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        const double p = expected_prob(mid);
        if (std::abs(p - target) <= 1e-10) return mid;
        (p < target ? lo : hi) = mid;
    }
    return mid;
}

namespace {

double outcome_prob(const SimConfig& c, double beta0, int x, int g) {
    return model::logistic(beta0 + c.beta1 * x + c.beta2 * g);
}

double retention_prob(const SimConfig& c, double alpha0, int y, int x, int g) {
    if (c.controls_only_missingness) {
        if (y == 1) return 1.0;
        return model::logistic(alpha0 + c.alpha2 * x + c.alpha3 * g);
    }
    return model::logistic(alpha0 + c.alpha1 * y + c.alpha2 * x + c.alpha3 * g +
                           c.alpha4 * y * x + c.alpha5 * y * g);
}

}  // namespace

double expected_prevalence(const SimConfig& config, double beta0) {
    const genetics::GenotypeDist hwe = genetics::hwe_probs(config.theta);
    double total = 0.0;
    for (int g = 0; g < 3; ++g) {
        const double px = config.p_x_given_g[static_cast<std::size_t>(g)];
        for (int x = 0; x < 2; ++x) {
            total += hwe[g] * (x == 1 ? px : 1.0 - px) * outcome_prob(config, beta0, x, g);
        }
    }
    return total;
}

double expected_availability(const SimConfig& config, double beta0, double alpha0) {
    const genetics::GenotypeDist hwe = genetics::hwe_probs(config.theta);
    double num = 0.0;
    double den = 0.0;
    for (int g = 0; g < 3; ++g) {
        const double px = config.p_x_given_g[static_cast<std::size_t>(g)];
        for (int x = 0; x < 2; ++x) {
            const double pxg = hwe[g] * (x == 1 ? px : 1.0 - px);
            const double py = outcome_prob(config, beta0, x, g);
            for (int y = 0; y < 2; ++y) {
                const double mass = pxg * (y == 1 ? py : 1.0 - py);
                if (config.controls_only_missingness && y == 1) continue;
                num += mass * retention_prob(config, alpha0, y, x, g);
                den += mass;
            }
        }
    }
    // Under control-restricted missingness the target is conditional on Y=0.
    return config.controls_only_missingness ? num / den : num;
}

Truth calibrate_truth(const SimConfig& config) {
    Truth t;
    t.beta1 = config.beta1;
    t.beta2 = config.beta2;
    t.theta = config.theta;
    t.beta0 = calibrate_intercept(config.target_prevalence, [&config](double b0) {
        return expected_prevalence(config, b0);
    });
    t.alpha0 = calibrate_intercept(config.target_availability, [&config, &t](double a0) {
        return expected_availability(config, t.beta0, a0);
    });
    t.alpha = {t.alpha0, config.alpha1, config.alpha2, config.alpha3, config.alpha4,
               config.alpha5};
    return t;
}

Cohort gen_cohort(const SimConfig& config, const Truth& truth, Rng& rng) {
    const genetics::GenotypeDist hwe = genetics::hwe_probs(config.theta);
    const std::array<double, 3> hwe_arr{hwe[0], hwe[1], hwe[2]};
    Cohort cohort;
    cohort.records.resize(static_cast<std::size_t>(config.cohort_size));
    cohort.true_g.resize(static_cast<std::size_t>(config.cohort_size));
    for (int i = 0; i < config.cohort_size; ++i) {
        const int g = rng.categorical3(hwe_arr);
        const int gs = rng.categorical3(hwe_arr);
        // one allele from each member of the couple
        const int gc = rng.bernoulli(g / 2.0) + rng.bernoulli(gs / 2.0);
        const int x = rng.bernoulli(config.p_x_given_g[static_cast<std::size_t>(g)]);
        const int y = rng.bernoulli(outcome_prob(config, truth.beta0, x, g));
        const int r = rng.bernoulli(retention_prob(config, truth.alpha0, y, x, g));
        data::SubjectRecord& rec = cohort.records[static_cast<std::size_t>(i)];
        rec.id = "s" + std::to_string(i);
        rec.y = y;
        rec.x = Eigen::VectorXd::Constant(1, static_cast<double>(x));
        rec.r = r;
        rec.g = r == 1 ? g : -1;
        rec.family = genetics::FamilyProxy::spouse_child(gs, gc);
        cohort.true_g[static_cast<std::size_t>(i)] = g;
        cohort.n_cases += y;
    }
    return cohort;
}

data::Dataset sample_case_control(const Cohort& cohort, int n_cases, int n_controls, Rng& rng,
                                  const std::vector<std::string>& x_names) {
    std::vector<int> cases;
    std::vector<int> controls;
    cases.reserve(static_cast<std::size_t>(cohort.n_cases));
    controls.reserve(cohort.records.size() - static_cast<std::size_t>(cohort.n_cases));
    for (int i = 0; i < static_cast<int>(cohort.records.size()); ++i) {
        (cohort.records[static_cast<std::size_t>(i)].y == 1 ? cases : controls).push_back(i);
    }
    const auto draw = [&rng](std::vector<int>& pool, int want, const char* stratum) {
        if (static_cast<int>(pool.size()) < want) {
            throw InsufficientStratum(std::string(stratum) + " stratum smaller than the sample");
        }
        for (int k = 0; k < want; ++k) {
            const std::uint64_t j =
                static_cast<std::uint64_t>(k) + rng.below(pool.size() - static_cast<std::size_t>(k));
            std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
        }
        pool.resize(static_cast<std::size_t>(want));
    };
    draw(cases, n_cases, "case");
    draw(controls, n_controls, "control");

    std::vector<data::SubjectRecord> records;
    records.reserve(static_cast<std::size_t>(n_cases + n_controls));
    for (int i : cases) records.push_back(cohort.records[static_cast<std::size_t>(i)]);
    for (int i : controls) records.push_back(cohort.records[static_cast<std::size_t>(i)]);
    return data::Dataset(std::move(records), x_names);
}

namespace {

std::map<std::string, double> truth_by_name(const SimConfig& config, const Truth& truth) {
    std::map<std::string, double> t;
    t["beta_0"] = truth.beta0;
    t["beta_x"] = truth.beta1;
    t["beta_g"] = truth.beta2;
    t["theta"] = truth.theta;
    t["alpha_0"] = truth.alpha0;
    t["alpha_y"] = config.alpha1;
    t["alpha_x"] = config.alpha2;
    t["alpha_g"] = config.alpha3;
    t["alpha_y*x"] = config.alpha4;
    t["alpha_y*g"] = config.alpha5;
    return t;
}

void one_replicate(const SimConfig& config, const Truth& truth, const model::ModelSpec& spec,
                   const std::map<std::string, double>& truths, int rep,
                   std::vector<RepRow>& rows, bool& fswel_ok) {
    Rng rng(splitmix64(config.seed ^ (static_cast<std::uint64_t>(rep) + 1) * kGolden));
    const Cohort cohort = gen_cohort(config, truth, rng);
    const data::Dataset sample =
        sample_case_control(cohort, config.n_cases, config.n_controls, rng, spec.x_names);

    const auto push = [&rows, rep, &truths](const std::string& method, const std::string& name,
                                            double est, double se, bool ok) {
        const auto it = truths.find(name);
        rows.push_back({rep, method, name, est, se,
                        it == truths.end() ? std::numeric_limits<double>::quiet_NaN()
                                           : it->second,
                        ok});
    };

    fswel_ok = false;
    try {
        const estimator::FitResult fit = estimator::fit_fswel(sample, spec);
        for (int i = 0; i < fit.estimates.size(); ++i) {
            const double se = fit.se.size() == fit.estimates.size()
                                  ? fit.se(i)
                                  : std::numeric_limits<double>::quiet_NaN();
            push("fswel", fit.names[static_cast<std::size_t>(i)], fit.estimates(i), se,
                 fit.converged);
        }
        fswel_ok = fit.converged;
    } catch (const Error&) {
        for (const std::string& name : spec.parameter_names()) {
            push("fswel", name, std::numeric_limits<double>::quiet_NaN(),
                 std::numeric_limits<double>::quiet_NaN(), false);
        }
    }

    const auto run_baseline = [&](const char* method, auto&& fitter) {
        try {
            const baselines::BaselineResult b = fitter();
            for (int i = 0; i < b.estimates.size(); ++i) {
                push(method, b.names[static_cast<std::size_t>(i)], b.estimates(i),
                     b.std_errors(i), true);
            }
        } catch (const Error&) {
            // baseline failures leave no rows for this replicate
        }
    };
    run_baseline("mcar", [&] { return baselines::fit_mcar_naive(spec, sample); });
    run_baseline("mar", [&] { return baselines::fit_mar_ipw(spec, sample); });
}

}  // namespace

SimResult run_replications(const SimConfig& config) {
    config.validate();
    const Truth truth = calibrate_truth(config);
    const std::vector<std::string> x_names{"x"};
    const std::vector<std::string> assoc{"x", "g"};
    const std::vector<std::string> miss =
        config.controls_only_missingness
            ? std::vector<std::string>{"1", "x", "g"}
            : std::vector<std::string>{"1", "y", "x", "g", "y*x", "y*g"};
    const model::ModelSpec spec =
        model::make_model_spec(x_names, assoc, miss, config.controls_only_missingness);
    const std::map<std::string, double> truths = truth_by_name(config, truth);

    std::vector<std::vector<RepRow>> slots(static_cast<std::size_t>(config.reps));
    std::vector<char> ok(static_cast<std::size_t>(config.reps), 0);
    std::atomic<int> next{0};
    const auto worker = [&] {
        for (;;) {
            const int rep = next.fetch_add(1);
            if (rep >= config.reps) return;
            bool converged = false;
            one_replicate(config, truth, spec, truths, rep,
                          slots[static_cast<std::size_t>(rep)], converged);
            ok[static_cast<std::size_t>(rep)] = converged ? 1 : 0;
        }
    };
    const int n_threads = std::min(config.threads, config.reps);
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    SimResult result;
    result.truth = truth;
    result.reps_run = config.reps;
    for (int rep = 0; rep < config.reps; ++rep) {
        result.reps_failed += ok[static_cast<std::size_t>(rep)] ? 0 : 1;
        auto& rows = slots[static_cast<std::size_t>(rep)];
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
    return result;
}

std::vector<ParamSummary> summarize(const std::vector<RepRow>& rows) {
    std::vector<std::pair<std::string, std::string>> order;
    std::map<std::pair<std::string, std::string>, std::vector<const RepRow*>> groups;
    for (const RepRow& row : rows) {
        const std::pair<std::string, std::string> key{row.method, row.parameter};
        auto [it, fresh] = groups.try_emplace(key);
        if (fresh) order.push_back(key);
        if (row.converged && std::isfinite(row.estimate)) it->second.push_back(&row);
    }

    std::vector<ParamSummary> out;
    out.reserve(order.size());
    for (const auto& key : order) {
        const auto& group = groups.at(key);
        ParamSummary s;
        s.method = key.first;
        s.parameter = key.second;
        s.n_used = static_cast<int>(group.size());
        if (group.empty()) {
            out.push_back(s);
            continue;
        }
        s.truth = group.front()->truth;
        double sum = 0.0;
        for (const RepRow* r : group) sum += r->estimate;
        s.mean = sum / s.n_used;
        s.bias = s.mean - s.truth;
        double sq_dev = 0.0;
        double sq_err = 0.0;
        for (const RepRow* r : group) {
            sq_dev += (r->estimate - s.mean) * (r->estimate - s.mean);
            sq_err += (r->estimate - s.truth) * (r->estimate - s.truth);
        }
        s.mse = sq_err / s.n_used;
        s.emp_sd = s.n_used > 1 ? std::sqrt(sq_dev / (s.n_used - 1)) : 0.0;
        s.degenerate = s.emp_sd == 0.0;
        int n_se = 0;
        double se_sum = 0.0;
        int covered = 0;
        for (const RepRow* r : group) {
            if (!std::isfinite(r->std_error)) continue;
            ++n_se;
            se_sum += r->std_error;
            if (std::abs(r->estimate - s.truth) <= 1.959963984540054 * r->std_error) ++covered;
        }
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.mean_se = n_se > 0 ? se_sum / n_se : nan;
        s.coverage = n_se > 0 ? static_cast<double>(covered) / n_se : nan;
        out.push_back(s);
    }
    return out;
}

}  // namespace fswel::simulation
