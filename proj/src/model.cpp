#include "fswel/model.hpp"

#include <algorithm>
#include <cmath>

namespace fswel::model {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Term parse_term(const std::string& text, const std::vector<std::string>& x_names) {
    if (text.empty()) throw ConfigError("empty model term");
    Term term;
    if (text == "1") return term;
    for (const std::string& factor : split(text, '*')) {
        if (factor == "1") {
            throw ConfigError("term '" + text + "': '1' cannot be combined with factors");
        } else if (factor == "y") {
            if (term.has_y) throw ConfigError("term '" + text + "': repeated factor y");
            term.has_y = true;
        } else if (factor == "g") {
            if (term.has_g) throw ConfigError("term '" + text + "': repeated factor g");
            term.has_g = true;
        } else {
            const auto it = std::find(x_names.begin(), x_names.end(), factor);
            if (it == x_names.end()) {
                throw ConfigError("term '" + text + "': unknown covariate '" + factor + "'");
            }
            if (term.x_col >= 0) {
                throw ConfigError("term '" + text + "': at most one covariate factor");
            }
            term.x_col = static_cast<int>(it - x_names.begin());
        }
    }
    return term;
}

std::string term_label(const Term& term, const std::vector<std::string>& x_names) {
    std::string label;
    const auto add = [&label](const std::string& f) {
        if (!label.empty()) label += '*';
        label += f;
    };
    if (term.has_y) add("y");
    if (term.x_col >= 0) add(x_names[static_cast<std::size_t>(term.x_col)]);
    if (term.has_g) add("g");
    return label.empty() ? "1" : label;
}

std::vector<std::string> ModelSpec::assoc_labels() const {
    std::vector<std::string> out;
    out.reserve(assoc_terms.size());
    for (const Term& t : assoc_terms) out.push_back(term_label(t, x_names));
    return out;
}

std::vector<std::string> ModelSpec::miss_labels() const {
    std::vector<std::string> out;
    out.reserve(miss_terms.size());
    for (const Term& t : miss_terms) out.push_back(term_label(t, x_names));
    return out;
}

std::vector<std::string> ModelSpec::parameter_names() const {
    std::vector<std::string> out;
    for (const std::string& l : assoc_labels()) out.push_back("beta_" + l);
    out.push_back("theta");
    for (const std::string& l : miss_labels()) {
        out.push_back(l == "1" ? "alpha_0" : "alpha_" + l);
    }
    return out;
}

ModelSpec make_model_spec(std::vector<std::string> x_names,
                          const std::vector<std::string>& assoc_terms,
                          const std::vector<std::string>& miss_terms,
                          bool miss_controls_only) {
    ModelSpec spec;
    spec.x_names = std::move(x_names);
    spec.miss_controls_only = miss_controls_only;
    for (const std::string& t : assoc_terms) {
        const Term term = parse_term(t, spec.x_names);
        if (term.has_y) {
            throw ConfigError("association term '" + t + "' may not involve y");
        }
        if (!term.has_g && term.x_col < 0) {
            throw ConfigError("association terms may not include an intercept");
        }
        for (const Term& seen : spec.assoc_terms) {
            if (seen == term) throw ConfigError("duplicate association term '" + t + "'");
        }
        spec.assoc_terms.push_back(term);
    }
    if (miss_terms.empty()) throw ConfigError("missingness model needs at least the intercept");
    for (const std::string& t : miss_terms) {
        const Term term = parse_term(t, spec.x_names);
        if (miss_controls_only && term.has_y) {
            throw ConfigError("missingness term '" + t +
                              "' involves y but missingness is restricted to controls");
        }
        for (const Term& seen : spec.miss_terms) {
            if (seen == term) throw ConfigError("duplicate missingness term '" + t + "'");
        }
        spec.miss_terms.push_back(term);
    }
    if (spec.miss_terms.front() != Term{}) {
        throw ConfigError("the first missingness term must be the intercept");
    }
    for (std::size_t i = 0; i < spec.x_names.size(); ++i) {
        const std::string& n = spec.x_names[i];
        if (n.empty() || n == "1" || n == "y" || n == "g") {
            throw ConfigError("reserved or empty covariate name '" + n + "'");
        }
        for (std::size_t j = i + 1; j < spec.x_names.size(); ++j) {
            if (spec.x_names[j] == n) throw ConfigError("duplicate covariate name '" + n + "'");
        }
    }
    return spec;
}

Eigen::VectorXd AssocParams::packed() const {
    Eigen::VectorXd v(beta.size() + 1);
    v.head(beta.size()) = beta;
    v(beta.size()) = theta;
    return v;
}

AssocParams AssocParams::unpack(const Eigen::VectorXd& v) {
    AssocParams p;
    p.beta = v.head(v.size() - 1);
    p.theta = v(v.size() - 1);
    return p;
}

double term_value(const Term& term, double y, const Eigen::VectorXd& x, int g) {
    double v = 1.0;
    if (term.has_y) v *= y;
    if (term.has_g) v *= g;
    if (term.x_col >= 0) v *= x(term.x_col);
    return v;
}

double assoc_predictor(const ModelSpec& spec, const Eigen::VectorXd& beta,
                       const Eigen::VectorXd& x, int g) {
    if (beta.size() != spec.n_assoc()) {
        throw InvariantViolation("beta dimension does not match the association terms");
    }
    double f = 0.0;
    for (int k = 0; k < spec.n_assoc(); ++k) {
        f += beta(k) * term_value(spec.assoc_terms[static_cast<std::size_t>(k)], 0.0, x, g);
    }
    return f;
}

Eigen::VectorXd miss_design(const ModelSpec& spec, double y, const Eigen::VectorXd& x, int g) {
    Eigen::VectorXd d(spec.n_miss());
    for (int k = 0; k < spec.n_miss(); ++k) {
        d(k) = term_value(spec.miss_terms[static_cast<std::size_t>(k)], y, x, g);
    }
    return d;
}

double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double miss_prob(const ModelSpec& spec, const Eigen::VectorXd& alpha, double y,
                 const Eigen::VectorXd& x, int g) {
    if (alpha.size() != spec.n_miss()) {
        throw InvariantViolation("alpha dimension does not match the missingness terms");
    }
    if (spec.miss_controls_only && y == 1.0) return 1.0;
    return logistic(alpha.dot(miss_design(spec, y, x, g)));
}

}  // namespace fswel::model
