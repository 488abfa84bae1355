#include "fswel/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fswel/version.hpp"

namespace fswel::io {

using nlohmann::json;

std::string format_full(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_milli(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v * 1000.0);
    return buf;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

model::ModelSpec RunConfig::model() const {
    return model::make_model_spec(x_names, assoc_terms, miss_terms, miss_controls_only);
}

namespace {

void check_keys(const json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(ctx + " must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& item : obj.items()) {
        if (ok.find(item.key()) == ok.end()) {
            throw ConfigError("unknown configuration key '" + ctx + item.key() + "'");
        }
    }
}

void get_double(const json& obj, const char* key, double& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number()) throw ConfigError(std::string(key) + " must be a number");
    out = it->get<double>();
}

void get_positive(const json& obj, const char* key, double& out) {
    get_double(obj, key, out);
    if (!(out > 0.0)) throw ConfigError(std::string(key) + " must be positive");
}

void get_int(const json& obj, const char* key, int& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    out = it->get<int>();
}

void get_u64(const json& obj, const char* key, std::uint64_t& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number_unsigned() && !it->is_number_integer()) {
        throw ConfigError(std::string(key) + " must be an integer");
    }
    out = it->get<std::uint64_t>();
}

void get_bool(const json& obj, const char* key, bool& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
    out = it->get<bool>();
}

void get_strings(const json& obj, const char* key, std::vector<std::string>& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_array()) throw ConfigError(std::string(key) + " must be an array of strings");
    std::vector<std::string> parsed;
    for (const auto& v : *it) {
        if (!v.is_string()) throw ConfigError(std::string(key) + " must be an array of strings");
        parsed.push_back(v.get<std::string>());
    }
    out = std::move(parsed);
}

json solver_to_json(const estimator::FitConfig& s) {
    json j;
    j["inner_tol"] = s.inner_tol;
    j["inner_max_iter"] = s.inner_max_iter;
    j["outer_tol"] = s.outer_tol;
    j["outer_max_iter"] = s.outer_max_iter;
    j["residual_tol"] = s.residual_tol;
    j["weight_floor"] = s.weight_floor;
    j["theta_clamp"] = s.theta_clamp;
    j["fd_step"] = s.fd_step;
    j["separation_bound"] = s.separation_bound;
    j["compute_cov"] = s.compute_cov;
    return j;
}

// threads deliberately excluded: worker count must not change identity
json sim_to_json(const simulation::SimConfig& s) {
    json j;
    j["theta"] = s.theta;
    j["p_x_given_g"] = {s.p_x_given_g[0], s.p_x_given_g[1], s.p_x_given_g[2]};
    j["beta1"] = s.beta1;
    j["beta2"] = s.beta2;
    j["target_prevalence"] = s.target_prevalence;
    j["alpha1"] = s.alpha1;
    j["alpha2"] = s.alpha2;
    j["alpha3"] = s.alpha3;
    j["alpha4"] = s.alpha4;
    j["alpha5"] = s.alpha5;
    j["target_availability"] = s.target_availability;
    j["controls_only_missingness"] = s.controls_only_missingness;
    j["n_cases"] = s.n_cases;
    j["n_controls"] = s.n_controls;
    j["cohort_size"] = s.cohort_size;
    j["reps"] = s.reps;
    j["seed"] = s.seed;
    return j;
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + ex.what());
    }
    check_keys(root, "", {"model", "solver", "sim", "seed"});

    RunConfig config;
    get_u64(root, "seed", config.seed);
    config.sim.seed = config.seed;

    if (const auto it = root.find("model"); it != root.end()) {
        check_keys(*it, "model.", {"x", "assoc_terms", "miss_terms", "miss_controls_only"});
        get_strings(*it, "x", config.x_names);
        get_strings(*it, "assoc_terms", config.assoc_terms);
        get_strings(*it, "miss_terms", config.miss_terms);
        get_bool(*it, "miss_controls_only", config.miss_controls_only);
    }
    if (const auto it = root.find("solver"); it != root.end()) {
        check_keys(*it, "solver.",
                   {"inner_tol", "inner_max_iter", "outer_tol", "outer_max_iter",
                    "residual_tol", "weight_floor", "theta_clamp", "fd_step",
                    "separation_bound", "compute_cov"});
        estimator::FitConfig& s = config.solver;
        get_positive(*it, "inner_tol", s.inner_tol);
        get_int(*it, "inner_max_iter", s.inner_max_iter);
        get_positive(*it, "outer_tol", s.outer_tol);
        get_int(*it, "outer_max_iter", s.outer_max_iter);
        get_positive(*it, "residual_tol", s.residual_tol);
        get_positive(*it, "weight_floor", s.weight_floor);
        get_positive(*it, "theta_clamp", s.theta_clamp);
        get_positive(*it, "fd_step", s.fd_step);
        get_positive(*it, "separation_bound", s.separation_bound);
        get_bool(*it, "compute_cov", s.compute_cov);
        if (s.inner_max_iter <= 0 || s.outer_max_iter <= 0) {
            throw ConfigError("iteration caps must be positive");
        }
        if (!(s.theta_clamp < 0.5)) throw ConfigError("theta_clamp must be below 0.5");
    }
    if (const auto it = root.find("sim"); it != root.end()) {
        check_keys(*it, "sim.",
                   {"theta", "p_x_given_g", "beta1", "beta2", "target_prevalence", "alpha1",
                    "alpha2", "alpha3", "alpha4", "alpha5", "target_availability",
                    "controls_only_missingness", "n_cases", "n_controls", "cohort_size",
                    "reps", "seed", "threads"});
        simulation::SimConfig& s = config.sim;
        get_double(*it, "theta", s.theta);
        if (const auto pit = it->find("p_x_given_g"); pit != it->end()) {
            if (!pit->is_array() || pit->size() != 3) {
                throw ConfigError("p_x_given_g must be an array of three numbers");
            }
            for (int g = 0; g < 3; ++g) {
                const json& v = (*pit)[static_cast<std::size_t>(g)];
                if (!v.is_number()) {
                    throw ConfigError("p_x_given_g must be an array of three numbers");
                }
                s.p_x_given_g[static_cast<std::size_t>(g)] = v.get<double>();
            }
        }
        get_double(*it, "beta1", s.beta1);
        get_double(*it, "beta2", s.beta2);
        get_double(*it, "target_prevalence", s.target_prevalence);
        get_double(*it, "alpha1", s.alpha1);
        get_double(*it, "alpha2", s.alpha2);
        get_double(*it, "alpha3", s.alpha3);
        get_double(*it, "alpha4", s.alpha4);
        get_double(*it, "alpha5", s.alpha5);
        get_double(*it, "target_availability", s.target_availability);
        get_bool(*it, "controls_only_missingness", s.controls_only_missingness);
        get_int(*it, "n_cases", s.n_cases);
        get_int(*it, "n_controls", s.n_controls);
        get_int(*it, "cohort_size", s.cohort_size);
        get_int(*it, "reps", s.reps);
        get_u64(*it, "seed", s.seed);
        get_int(*it, "threads", s.threads);
        s.validate();
    }
    config.model();  // surfaces model grammar errors at load time
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path));
}

std::string run_config_hash(const RunConfig& config) {
    json j;
    json m;
    m["x"] = config.x_names;
    m["assoc_terms"] = config.assoc_terms;
    m["miss_terms"] = config.miss_terms;
    m["miss_controls_only"] = config.miss_controls_only;
    j["model"] = m;
    j["solver"] = solver_to_json(config.solver);
    j["sim"] = sim_to_json(config.sim);
    j["seed"] = config.seed;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(j.dump())));
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

int parse_binary(const std::string& field, const char* what, const std::string& row) {
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw SchemaError("row " + row + ": " + what + " must be 0 or 1, got '" + field + "'");
}

int parse_genotype_field(const std::string& field, const char* what, const std::string& row) {
    if (field == "0" || field == "1" || field == "2") return field[0] - '0';
    throw SchemaError("row " + row + ": " + what + " must be 0, 1, or 2, got '" + field + "'");
}

double parse_double_field(const std::string& field, const std::string& col,
                          const std::string& row) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw SchemaError("row " + row + ": column " + col + " is not numeric: '" + field + "'");
    }
    return value;
}

struct ProxyColumns {
    std::string gs, gc, gm, gf;
};

genetics::FamilyProxy parse_proxy(const std::string& kind, const ProxyColumns& cols,
                                  const std::string& row) {
    const auto require = [&row, &kind](const std::string& field, const char* name,
                                       bool wanted) -> int {
        if (!wanted) {
            if (!field.empty()) {
                throw SchemaError("row " + row + ": " + name + " must be empty for proxy_kind " +
                                  kind);
            }
            return -1;
        }
        if (field.empty()) {
            throw SchemaError("row " + row + ": " + name + " required for proxy_kind " + kind);
        }
        return parse_genotype_field(field, name, row);
    };
    if (kind == "none") {
        require(cols.gs, "gs", false);
        require(cols.gc, "gc", false);
        require(cols.gm, "gm", false);
        require(cols.gf, "gf", false);
        return genetics::FamilyProxy::none();
    }
    if (kind == "spouse_child") {
        const int gs = require(cols.gs, "gs", true);
        const int gc = require(cols.gc, "gc", true);
        require(cols.gm, "gm", false);
        require(cols.gf, "gf", false);
        return genetics::FamilyProxy::spouse_child(gs, gc);
    }
    if (kind == "one_parent") {
        require(cols.gs, "gs", false);
        require(cols.gc, "gc", false);
        const int gm = require(cols.gm, "gm", true);
        require(cols.gf, "gf", false);
        return genetics::FamilyProxy::one_parent(gm);
    }
    if (kind == "two_parents") {
        require(cols.gs, "gs", false);
        require(cols.gc, "gc", false);
        const int gm = require(cols.gm, "gm", true);
        const int gf = require(cols.gf, "gf", true);
        return genetics::FamilyProxy::two_parents(gm, gf);
    }
    if (kind == "child_only") {
        require(cols.gs, "gs", false);
        const int gc = require(cols.gc, "gc", true);
        require(cols.gm, "gm", false);
        require(cols.gf, "gf", false);
        return genetics::FamilyProxy::child_only(gc);
    }
    throw SchemaError("row " + row + ": unknown proxy_kind '" + kind + "'");
}

std::string proxy_field(const genetics::FamilyProxy& family, const char* name) {
    using genetics::ProxyKind;
    switch (family.kind) {
        case ProxyKind::None:
            return "";
        case ProxyKind::SpouseChild:
            if (std::string(name) == "gs") return std::to_string(family.a);
            if (std::string(name) == "gc") return std::to_string(family.b);
            return "";
        case ProxyKind::OneParent:
            if (std::string(name) == "gm") return std::to_string(family.a);
            return "";
        case ProxyKind::TwoParents:
            if (std::string(name) == "gm") return std::to_string(family.a);
            if (std::string(name) == "gf") return std::to_string(family.b);
            return "";
        case ProxyKind::ChildOnly:
            if (std::string(name) == "gc") return std::to_string(family.a);
            return "";
    }
    return "";
}

}  // namespace

data::Dataset parse_dataset_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        header = split_csv_line(line);
        break;
    }
    if (header.empty()) throw SchemaError("no header line");
    if (header.size() < 10 || header[0] != "id" || header[1] != "y") {
        throw SchemaError("header must start with id,y and carry at least one covariate");
    }
    const std::size_t cols = header.size();
    static const std::array<const char*, 6> kTail{"g", "proxy_kind", "gs", "gc", "gm", "gf"};
    for (std::size_t k = 0; k < kTail.size(); ++k) {
        const std::size_t at = cols - kTail.size() + k;
        if (header[at] != kTail[k]) {
            throw SchemaError(std::string("header column ") + std::to_string(at + 1) +
                              " must be " + kTail[k] + ", got '" + header[at] + "'");
        }
    }
    const std::size_t r_col = cols - kTail.size() - 1;
    if (header[r_col] != "r") {
        throw SchemaError("header column " + std::to_string(r_col + 1) + " must be r, got '" +
                          header[r_col] + "'");
    }
    std::vector<std::string> x_names(header.begin() + 2,
                                     header.begin() + static_cast<std::ptrdiff_t>(r_col));
    if (x_names.empty()) throw SchemaError("no covariate columns between y and r");

    std::vector<data::SubjectRecord> records;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != cols) {
            throw SchemaError("row " + std::to_string(records.size() + 1) + ": expected " +
                              std::to_string(cols) + " columns, got " +
                              std::to_string(fields.size()));
        }
        data::SubjectRecord rec;
        rec.id = fields[0];
        const std::string& row = rec.id;
        rec.y = parse_binary(fields[1], "y", row);
        rec.x = Eigen::VectorXd(static_cast<Eigen::Index>(x_names.size()));
        for (std::size_t k = 0; k < x_names.size(); ++k) {
            rec.x(static_cast<Eigen::Index>(k)) =
                parse_double_field(fields[2 + k], x_names[k], row);
        }
        rec.r = parse_binary(fields[r_col], "r", row);
        const std::string& g_field = fields[r_col + 1];
        if (g_field.empty()) {
            rec.g = -1;
        } else {
            rec.g = parse_genotype_field(g_field, "g", row);
        }
        rec.family = parse_proxy(fields[r_col + 2],
                                 ProxyColumns{fields[r_col + 3], fields[r_col + 4],
                                              fields[r_col + 5], fields[r_col + 6]},
                                 row);
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw SchemaError("no records");
    return data::Dataset(std::move(records), std::move(x_names));
}

data::Dataset load_dataset(const std::string& path) {
    return parse_dataset_csv(read_text_file(path));
}

std::string dataset_to_csv(const data::Dataset& data) {
    std::string out = "id,y";
    for (const std::string& name : data.x_names()) {
        out += ',';
        out += name;
    }
    out += ",r,g,proxy_kind,gs,gc,gm,gf\n";
    for (const data::SubjectRecord& rec : data.records()) {
        out += rec.id;
        out += ',';
        out += std::to_string(rec.y);
        for (Eigen::Index k = 0; k < rec.x.size(); ++k) {
            out += ',';
            out += format_full(rec.x(k));
        }
        out += ',';
        out += std::to_string(rec.r);
        out += ',';
        if (rec.r == 1) out += std::to_string(rec.g);
        out += ',';
        out += genetics::proxy_kind_name(rec.family.kind);
        for (const char* name : {"gs", "gc", "gm", "gf"}) {
            out += ',';
            out += proxy_field(rec.family, name);
        }
        out += '\n';
    }
    return out;
}

void write_dataset(const std::string& path, const data::Dataset& data) {
    write_text_file(path, dataset_to_csv(data));
}

IngestReport ingest_report(const data::Dataset& data) {
    IngestReport report;
    report.n = data.n();
    report.n_cases = data.n_cases();
    report.n_controls = data.n_controls();
    for (const data::SubjectRecord& rec : data.records()) {
        if (rec.r == 1) {
            ++report.n_complete;
            if (rec.y == 0) ++report.n_complete_controls;
        } else {
            ++report.n_missing;
            ++report.proxy_counts[genetics::proxy_kind_name(rec.family.kind)];
        }
    }
    return report;
}

std::string render_ingest_report(const IngestReport& report) {
    std::string out;
    out += "subjects: " + std::to_string(report.n) + " (" + std::to_string(report.n_cases) +
           " cases, " + std::to_string(report.n_controls) + " controls)\n";
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%.1f",
                  report.n > 0 ? 100.0 * report.n_missing / report.n : 0.0);
    out += "genotyped: " + std::to_string(report.n_complete) + ", missing: " +
           std::to_string(report.n_missing) + " (" + rate + "%)\n";
    out += "complete controls: " + std::to_string(report.n_complete_controls) + "\n";
    if (!report.proxy_counts.empty()) {
        out += "proxies among missing:";
        for (const auto& [kind, count] : report.proxy_counts) {
            out += " " + kind + "=" + std::to_string(count);
        }
        out += "\n";
    }
    return out;
}

namespace {

json meta_to_json(const RunMeta& meta) {
    json j;
    j["version"] = meta.version;
    j["config_hash"] = meta.config_hash;
    j["seed"] = meta.seed;
    return j;
}

json parameter_entry(const std::string& name, double estimate, double se) {
    json p;
    p["name"] = name;
    p["estimate"] = estimate;
    if (std::isfinite(se)) {
        const variance::WaldSummary w = variance::wald_row(name, estimate, se);
        p["std_error"] = se;
        p["z"] = w.z;
        p["p_one_sided"] = w.p_one_sided;
        p["p_two_sided"] = w.p_two_sided;
        p["ci_lower"] = w.ci_lower;
        p["ci_upper"] = w.ci_upper;
    } else {
        p["std_error"] = nullptr;
    }
    return p;
}

const char* method_name(baselines::BaselineMethod method) {
    return method == baselines::BaselineMethod::MCAR ? "mcar" : "mar";
}

}  // namespace

std::string fit_result_to_json(const estimator::FitResult& fit,
                               const std::vector<baselines::BaselineResult>& baseline_fits,
                               const data::Dataset& data, const RunMeta& meta) {
    json root;
    root["meta"] = meta_to_json(meta);

    json d;
    d["n"] = data.n();
    d["n_cases"] = data.n_cases();
    d["n_controls"] = data.n_controls();
    d["n_complete"] = fit.diagnostics.n_complete;
    d["n_incomplete"] = fit.diagnostics.n_incomplete;
    d["n_patterns"] = data.n_patterns();
    root["data"] = d;

    json f;
    f["converged"] = fit.converged;
    f["iterations"] = fit.iterations;
    f["final_residual_norm"] = fit.final_residual_norm;
    json params = json::array();
    const bool has_se = fit.se.size() == fit.estimates.size();
    for (Eigen::Index i = 0; i < fit.estimates.size(); ++i) {
        const double se = has_se ? fit.se(i) : std::numeric_limits<double>::quiet_NaN();
        params.push_back(
            parameter_entry(fit.names[static_cast<std::size_t>(i)], fit.estimates(i), se));
    }
    f["parameters"] = params;
    json diag;
    diag["n_support"] = fit.diagnostics.n_support;
    diag["n_extended"] = fit.diagnostics.n_extended;
    diag["n_incomplete_no_proxy"] = fit.diagnostics.n_incomplete_no_proxy;
    diag["eta_iterations"] = fit.diagnostics.eta_iterations;
    diag["alpha_iterations"] = fit.diagnostics.alpha_iterations;
    f["diagnostics"] = diag;
    root["fswel"] = f;

    json bl = json::array();
    for (const baselines::BaselineResult& b : baseline_fits) {
        json entry;
        entry["method"] = method_name(b.method);
        json bp = json::array();
        for (Eigen::Index i = 0; i < b.estimates.size(); ++i) {
            bp.push_back(parameter_entry(b.names[static_cast<std::size_t>(i)], b.estimates(i),
                                         b.std_errors(i)));
        }
        entry["parameters"] = bp;
        bl.push_back(entry);
    }
    root["baselines"] = bl;
    return root.dump(2) + "\n";
}

namespace {

std::string meta_comment_lines(const RunMeta& meta) {
    std::string out;
    out += "# fswel_version=" + meta.version + "\n";
    out += "# config_hash=" + meta.config_hash + "\n";
    out += "# seed=" + std::to_string(meta.seed) + "\n";
    return out;
}

void append_table_row(std::string& out, const std::vector<std::string>& cells,
                      const std::vector<int>& widths) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k > 0) out += "  ";
        const int width = widths[k];
        const std::string& cell = cells[k];
        if (static_cast<int>(cell.size()) < width) {
            out += std::string(static_cast<std::size_t>(width) - cell.size(), ' ');
        }
        out += cell;
    }
    out += '\n';
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<int> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t k = 0; k < row.size(); ++k) {
            widths[k] = std::max(widths[k], static_cast<int>(row[k].size()));
        }
    }
    std::string out;
    for (const auto& row : rows) append_table_row(out, row, widths);
    return out;
}

std::string format_p(double p) {
    if (!std::isfinite(p)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", p);
    return buf;
}

}  // namespace

std::string render_fit_table(const estimator::FitResult& fit,
                             const std::vector<baselines::BaselineResult>& baseline_fits,
                             const RunMeta& meta) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "parameter", "estimate", "(se)", "p_one_sided"});
    const auto push = [&rows](const char* method, const std::string& name, double est,
                              double se) {
        std::vector<std::string> row{method, name, format_milli(est)};
        if (std::isfinite(se)) {
            row.push_back("(" + format_milli(se) + ")");
            row.push_back(format_p(variance::wald_row(name, est, se).p_one_sided));
        } else {
            row.push_back("(--)");
            row.push_back("--");
        }
        rows.push_back(std::move(row));
    };
    const bool has_se = fit.se.size() == fit.estimates.size();
    for (Eigen::Index i = 0; i < fit.estimates.size(); ++i) {
        push("fswel", fit.names[static_cast<std::size_t>(i)], fit.estimates(i),
             has_se ? fit.se(i) : std::numeric_limits<double>::quiet_NaN());
    }
    for (const baselines::BaselineResult& b : baseline_fits) {
        for (Eigen::Index i = 0; i < b.estimates.size(); ++i) {
            push(method_name(b.method), b.names[static_cast<std::size_t>(i)], b.estimates(i),
                 b.std_errors(i));
        }
    }
    std::string out = meta_comment_lines(meta);
    out += "# estimates and standard errors in units of 1e-3\n";
    out += render_table(rows);
    if (!fit.converged) out += "warning: fit did not converge\n";
    return out;
}

std::string rep_rows_to_csv(const std::vector<simulation::RepRow>& rows, const RunMeta& meta) {
    std::string out = meta_comment_lines(meta);
    out += "rep,method,parameter,estimate,std_error,truth,converged\n";
    for (const simulation::RepRow& row : rows) {
        out += std::to_string(row.rep);
        out += ',';
        out += row.method;
        out += ',';
        out += row.parameter;
        out += ',';
        out += format_full(row.estimate);
        out += ',';
        out += format_full(row.std_error);
        out += ',';
        out += format_full(row.truth);
        out += ',';
        out += row.converged ? '1' : '0';
        out += '\n';
    }
    return out;
}

namespace {

double parse_rep_double(const std::string& field, const char* what, std::size_t line_no) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last) {
        throw SchemaError("line " + std::to_string(line_no) + ": " + what +
                          " is not numeric: '" + field + "'");
    }
    return value;
}

}  // namespace

std::vector<simulation::RepRow> parse_rep_rows_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<simulation::RepRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != "rep,method,parameter,estimate,std_error,truth,converged") {
                throw SchemaError("line " + std::to_string(line_no) +
                                  ": unexpected replicate header '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 7) {
            throw SchemaError("line " + std::to_string(line_no) + ": expected 7 columns, got " +
                              std::to_string(fields.size()));
        }
        simulation::RepRow row;
        row.rep = static_cast<int>(parse_rep_double(fields[0], "rep", line_no));
        row.method = fields[1];
        row.parameter = fields[2];
        row.estimate = parse_rep_double(fields[3], "estimate", line_no);
        row.std_error = parse_rep_double(fields[4], "std_error", line_no);
        row.truth = parse_rep_double(fields[5], "truth", line_no);
        if (fields[6] == "1") {
            row.converged = true;
        } else if (fields[6] == "0") {
            row.converged = false;
        } else {
            throw SchemaError("line " + std::to_string(line_no) + ": converged must be 0 or 1");
        }
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw SchemaError("no replicate header line");
    return rows;
}

std::vector<simulation::RepRow> load_rep_rows(const std::string& path) {
    return parse_rep_rows_csv(read_text_file(path));
}

std::string render_summary_table(const std::vector<simulation::ParamSummary>& summaries,
                                 const RunMeta& meta) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", "parameter", "n", "truth", "mean", "bias", "mse", "emp_sd",
                    "mean_se", "coverage"});
    for (const simulation::ParamSummary& s : summaries) {
        rows.push_back({s.method, s.parameter, std::to_string(s.n_used), format_milli(s.truth),
                        format_milli(s.mean), format_milli(s.bias), format_milli(s.mse),
                        format_milli(s.emp_sd), format_milli(s.mean_se),
                        format_milli(s.coverage)});
    }
    std::string out = meta_comment_lines(meta);
    out += "# all values in units of 1e-3\n";
    out += render_table(rows);
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (!in.good() && !in.eof()) throw ConfigError("failed while reading file: " + path);
    return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << text;
    out.flush();
    if (!out.good()) throw ConfigError("failed while writing file: " + path);
}

}  // namespace fswel::io
