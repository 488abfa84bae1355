#ifndef FSWEL_ESTIMATOR_HPP
#define FSWEL_ESTIMATOR_HPP

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "fswel/data.hpp"
#include "fswel/errors.hpp"
#include "fswel/genetics.hpp"
#include "fswel/model.hpp"

namespace fswel::estimator {

// Rows index the covariate patterns of a DeltaPlan, columns index genotypes.
// Each column is a probability vector: delta(x, g) estimates
// P(X = x | G = g, Y = 0) and sums to 1 over x.
using DeltaTable = Eigen::MatrixXd;

// Support of the empirical covariate-pattern distribution. The first n_base
// rows are the patterns of complete control records (canonical order);
// patterns seen only elsewhere in the data are appended and take half the
// mass of the nearest base pattern (Euclidean distance, ties to the lowest
// base row), applied in row order.
struct DeltaPlan {
    std::vector<Eigen::VectorXd> support_x;
    int n_base = 0;
    std::vector<int> donor_of_extended;  // extended row k -> base row donor
    std::vector<int> row_of_pattern;     // dataset pattern id -> row, -1 if absent

    int n_rows() const { return static_cast<int>(support_x.size()); }
    int n_extended() const { return n_rows() - n_base; }

    // Throws NoAdjacentPattern when the data has no complete controls.
    static DeltaPlan build(const data::Dataset& data);
};

// Complete records with equal (y, pattern, g) share every per-record
// quantity, as do incomplete records with equal (y, pattern, proxy), so all
// sums over subjects collapse to sums over these cells.
struct CompleteCell {
    int y;
    int pattern;
    int g;
    int count;
};

struct IncompleteCell {
    int y;
    int pattern;
    genetics::FamilyProxy proxy;
    int count;
};

struct CellIndex {
    std::vector<CompleteCell> complete;
    std::vector<IncompleteCell> incomplete;
    int n_total = 0;
    int n_cases = 0;
    int n_complete = 0;
    int n_incomplete_no_proxy = 0;
};

CellIndex build_cells(const data::Dataset& data);

struct FitConfig {
    double inner_tol = 1e-10;
    int inner_max_iter = 50;
    double outer_tol = 1e-8;
    int outer_max_iter = 100;
    double residual_tol = 1e-8;
    double weight_floor = 1e-6;   // smallest tolerated retention probability
    double theta_clamp = 1e-6;    // theta kept inside [clamp, 1 - clamp]
    double fd_step = 1e-6;        // relative step for difference quotients
    double separation_bound = 15; // |alpha|_inf beyond which the solve is separable
    bool compute_cov = true;
};

// One estimation problem: data, model, and the delta support. The two-arg
// form derives the plan from the data; tests may supply an explicit plan
// (e.g. a known population support).
class Problem {
public:
    Problem(const data::Dataset& data, const model::ModelSpec& spec);
    Problem(const data::Dataset& data, const model::ModelSpec& spec, DeltaPlan plan);

    const data::Dataset& data() const { return *data_; }
    const model::ModelSpec& spec() const { return *spec_; }
    const DeltaPlan& plan() const { return plan_; }
    const CellIndex& cells() const { return cells_; }

    int n() const { return cells_.n_total; }

private:
    const data::Dataset* data_;
    const model::ModelSpec* spec_;
    DeltaPlan plan_;
    CellIndex cells_;
};

// Unweighted empirical estimate of P(X | G, Y = 0) over the base rows from
// complete control records, extension rows filled by mass splitting. Throws
// EmptyGenotypeStratum when some genotype has no complete control.
DeltaTable delta_unweighted(const Problem& problem);

// Inverse-probability-weighted version: each complete control counts with
// weight 1 / P(R = 1 | Y = 0, x, g; alpha). Throws DegenerateWeight when a
// retention probability falls below the floor.
DeltaTable delta_weighted(const Problem& problem, const Eigen::VectorXd& alpha,
                          double weight_floor = 1e-6);

// Base rows only, without the extension step (variance machinery perturbs
// these before re-extending).
DeltaTable delta_weighted_base(const Problem& problem, const Eigen::VectorXd& alpha,
                               double weight_floor = 1e-6);

// Appends one row per new pattern, giving it half the mass of the nearest
// control pattern and leaving that donor the other half; column sums are
// preserved. Rows are appended in the order given.
DeltaTable extend_delta_support(const DeltaTable& delta,
                                const std::vector<Eigen::VectorXd>& control_patterns,
                                const std::vector<Eigen::VectorXd>& new_patterns);

// Applies the plan's recorded extension map to a base table.
DeltaTable apply_extension(const DeltaPlan& plan, const DeltaTable& base);

// Per-subject empirical-likelihood score U_i in eta = (beta, theta) for a
// complete record. Expectations run over the plan's support patterns and
// genotypes under Q(x, g) proportional to
// delta(x, g) theta^g (1-theta)^(2-g) (1 + 1{g=1}) exp(f_beta(x, g)).
Eigen::VectorXd assoc_score(const model::ModelSpec& spec, const model::AssocParams& eta,
                            const DeltaTable& delta, const DeltaPlan& plan,
                            const data::SubjectRecord& subject);

// Per-subject summand of the missingness estimating function: complete
// records give d (1 - pi); incomplete records with a proxy give minus the
// posterior expectation of d(g) pi(g) under weights
// T(g) = (1 - pi(g)) exp(y f(x, g)) delta(x, g) P_theta(g, proxy).
Eigen::VectorXd miss_score_subject(const model::ModelSpec& spec, const Eigen::VectorXd& alpha,
                                   const model::AssocParams& eta, const DeltaTable& delta,
                                   const DeltaPlan& plan, const data::SubjectRecord& subject);

// Mean over all n subjects of (R_i / pi_i) U_i.
Eigen::VectorXd weighted_assoc_score(const Problem& problem, const model::AssocParams& eta,
                                     const Eigen::VectorXd& alpha, const DeltaTable& delta,
                                     double weight_floor = 1e-6);

// Mean over all n subjects of the missingness estimating function.
// Incomplete records without a family proxy contribute nothing.
Eigen::VectorXd miss_score_equation(const Problem& problem, const Eigen::VectorXd& alpha,
                                    const model::AssocParams& eta, const DeltaTable& delta);

// Stacked mean estimating function in (eta, alpha) with delta recomputed
// from alpha, so derivatives in alpha carry the delta dependence.
Eigen::VectorXd stacked_residual(const Problem& problem, const model::AssocParams& eta,
                                 const Eigen::VectorXd& alpha,
                                 const FitConfig& config = {});

// Damped Newton solve of weighted_assoc_score = 0 at fixed (alpha, delta).
model::AssocParams solve_eta(const Problem& problem, const model::AssocParams& init,
                             const Eigen::VectorXd& alpha, const DeltaTable& delta,
                             const FitConfig& config = {}, int* iterations = nullptr);

// Damped Newton solve of miss_score_equation = 0 at fixed eta; delta is
// recomputed from the trial alpha at every evaluation. Throws
// CompleteSeparation when the iterates run away (all-complete data).
Eigen::VectorXd solve_alpha(const Problem& problem, const Eigen::VectorXd& init,
                            const model::AssocParams& eta, const FitConfig& config = {},
                            int* iterations = nullptr);

struct Diagnostics {
    int n = 0;
    int n_cases = 0;
    int n_complete = 0;
    int n_incomplete = 0;
    int n_incomplete_no_proxy = 0;
    int n_patterns = 0;
    int n_support = 0;
    int n_extended = 0;
    int eta_iterations = 0;
    int alpha_iterations = 0;
};

struct FitResult {
    model::AssocParams eta;
    Eigen::VectorXd alpha;
    DeltaTable delta;
    std::vector<std::string> names;  // beta..., theta, alpha...
    Eigen::VectorXd estimates;       // packed in the same order
    Eigen::MatrixXd cov;             // sandwich covariance, 0x0 when skipped
    Eigen::VectorXd se;
    bool converged = false;
    int iterations = 0;              // outer sweeps
    double final_residual_norm = std::numeric_limits<double>::quiet_NaN();
    Diagnostics diagnostics;
};

// Full alternating fit: beta starts at the complete-case logistic estimate,
// theta at the complete-control allele frequency, alpha at zero; each sweep
// solves alpha (delta tracking alpha), refreshes delta, then solves eta,
// until the joint parameter change falls below outer_tol. The fit is
// declared converged only if the stacked residual meets residual_tol.
FitResult fit_fswel(const data::Dataset& data, const model::ModelSpec& spec,
                    const FitConfig& config = {});

}  // namespace fswel::estimator

#endif
