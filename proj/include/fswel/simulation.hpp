#ifndef FSWEL_SIMULATION_HPP
#define FSWEL_SIMULATION_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fswel/data.hpp"
#include "fswel/errors.hpp"

namespace fswel::simulation {

// Counter-mixed generator: independent streams come from mixing the run
// seed with the replicate index, so replicate draws never depend on worker
// scheduling.
std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
    explicit Rng(std::uint64_t seed);

    double uniform();                  // [0, 1) with 53-bit resolution
    int bernoulli(double p);
    int categorical3(const std::array<double, 3>& probs);
    // Uniform over [0, n), rejection sampled; n > 0.
    std::uint64_t below(std::uint64_t n);

private:
    std::uint64_t next_raw();
    std::uint64_t state_;
};

struct SimConfig {
    double theta = 0.2;
    std::array<double, 3> p_x_given_g{0.3, 0.5, 0.35};
    double beta1 = std::log(1.2);
    double beta2 = std::log(1.5);
    double target_prevalence = 0.03;
    double alpha1 = std::log(0.6);
    double alpha2 = std::log(1.2);
    double alpha3 = std::log(1.5);
    double alpha4 = std::log(1.5);
    double alpha5 = std::log(1.5);
    double target_availability = 0.8;
    // Missingness restricted to controls (cases always observed); the
    // y-coefficients are ignored and availability is calibrated among
    // controls.
    bool controls_only_missingness = false;
    int n_cases = 2000;
    int n_controls = 2000;
    int cohort_size = 100000;
    int reps = 200;
    std::uint64_t seed = 20260814;
    int threads = 1;

    void validate() const;  // throws ConfigError
};

// Bisection on the intercept until expected_prob(intercept) hits the target
// within 1e-10. expected_prob must be continuous and increasing.
double calibrate_intercept(double target, const std::function<double(double)>& expected_prob);

// Analytic cohort prevalence / availability as functions of the intercepts,
// marginalized over the exact joint law of (X, G) (and Y).
double expected_prevalence(const SimConfig& config, double beta0);
double expected_availability(const SimConfig& config, double beta0, double alpha0);

struct Truth {
    double beta0 = 0.0;   // calibrated
    double alpha0 = 0.0;  // calibrated
    double beta1 = 0.0;
    double beta2 = 0.0;
    double theta = 0.0;
    std::array<double, 6> alpha{};  // alpha0..alpha5
};

Truth calibrate_truth(const SimConfig& config);

struct Cohort {
    std::vector<data::SubjectRecord> records;
    std::vector<int> true_g;  // retained for every subject
    int n_cases = 0;
};

// G ~ HWE(theta); spouse ~ HWE(theta); child by Mendelian transmission;
// X | G Bernoulli; Y logistic in (X, G); R logistic in (Y, X, G, YX, YG).
// Spouse-child proxies are attached to every record.
Cohort gen_cohort(const SimConfig& config, const Truth& truth, Rng& rng);

// Uniform without-replacement sampling within outcome strata; cases first.
data::Dataset sample_case_control(const Cohort& cohort, int n_cases, int n_controls,
                                  Rng& rng, const std::vector<std::string>& x_names);

struct RepRow {
    int rep = 0;
    std::string method;     // fswel | mcar | mar
    std::string parameter;
    double estimate = 0.0;
    double std_error = 0.0;
    double truth = 0.0;
    bool converged = true;
};

struct SimResult {
    std::vector<RepRow> rows;
    Truth truth;
    int reps_run = 0;
    int reps_failed = 0;
};

// Per replicate: fresh cohort, case-control sample, the full fit plus both
// baselines. Replicate r draws from stream splitmix64(seed ^ (r+1)*phi);
// failed replicates keep their rows marked converged = false.
SimResult run_replications(const SimConfig& config);

struct ParamSummary {
    std::string method;
    std::string parameter;
    int n_used = 0;
    double truth = 0.0;
    double mean = 0.0;
    double bias = 0.0;
    double mse = 0.0;
    double emp_sd = 0.0;
    double mean_se = 0.0;
    double coverage = 0.0;   // NaN when no standard errors
    bool degenerate = false; // zero spread
};

// Rows with converged = false are dropped (per method and replicate).
std::vector<ParamSummary> summarize(const std::vector<RepRow>& rows);

}  // namespace fswel::simulation

#endif
