#ifndef FSWEL_MODEL_HPP
#define FSWEL_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fswel/errors.hpp"

namespace fswel::model {

// One multiplicative term of a linear predictor: optional outcome factor,
// optional genotype factor, optional single covariate factor. "1" is the
// intercept (no factors).
struct Term {
    bool has_y = false;
    bool has_g = false;
    int x_col = -1;  // index into ModelSpec::x_names, -1 if absent

    bool operator==(const Term&) const = default;
};

// Parses "1", or '*'-joined factors from {"y", "g", <covariate name>}.
// Each factor may appear at most once.
Term parse_term(const std::string& text, const std::vector<std::string>& x_names);

std::string term_label(const Term& term, const std::vector<std::string>& x_names);

// Association model:   logit P(Y=1|X,G) = beta0 + f(X, G; beta)
// where f is a sum over assoc_terms (no intercept, no y factors; beta0 is
// absorbed by the retrospective normalization and never estimated).
// Missingness model:   logit P(R=1|Y,X,G) = alpha' d(Y, X, G)
// over miss_terms; the first miss term must be the intercept.
struct ModelSpec {
    std::vector<std::string> x_names;
    std::vector<Term> assoc_terms;
    std::vector<Term> miss_terms;
    // Cases are always observed; the missingness model applies to controls
    // only and miss_terms may not involve y.
    bool miss_controls_only = false;

    int n_assoc() const { return static_cast<int>(assoc_terms.size()); }
    int n_miss() const { return static_cast<int>(miss_terms.size()); }
    // eta = (beta, theta)
    int n_eta() const { return n_assoc() + 1; }

    std::vector<std::string> assoc_labels() const;
    std::vector<std::string> miss_labels() const;
    // beta_<label>..., theta, alpha_<label>...
    std::vector<std::string> parameter_names() const;
};

// Builds a spec from term strings and validates the grammar rules above.
ModelSpec make_model_spec(std::vector<std::string> x_names,
                          const std::vector<std::string>& assoc_terms,
                          const std::vector<std::string>& miss_terms,
                          bool miss_controls_only);

// Association parameters eta = (beta, theta).
struct AssocParams {
    Eigen::VectorXd beta;
    double theta = 0.0;

    Eigen::VectorXd packed() const;
    static AssocParams unpack(const Eigen::VectorXd& v);
};

struct MissParams {
    Eigen::VectorXd alpha;
};

// Value of one term at (y, x, g); x indexed by ModelSpec::x_names.
double term_value(const Term& term, double y, const Eigen::VectorXd& x, int g);

// f(x, g; beta) = sum_k beta_k * assoc_terms[k](x, g)  (y factors absent).
double assoc_predictor(const ModelSpec& spec, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& x, int g);

// Missingness design row d(y, x, g).
Eigen::VectorXd miss_design(const ModelSpec& spec, double y, const Eigen::VectorXd& x, int g);

// logistic(alpha' d(y, x, g))
double miss_prob(const ModelSpec& spec, const Eigen::VectorXd& alpha, double y,
                 const Eigen::VectorXd& x, int g);

double logistic(double t);

}  // namespace fswel::model

#endif
