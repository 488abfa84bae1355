#ifndef FSWEL_IO_HPP
#define FSWEL_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fswel/baselines.hpp"
#include "fswel/data.hpp"
#include "fswel/errors.hpp"
#include "fswel/estimator.hpp"
#include "fswel/model.hpp"
#include "fswel/simulation.hpp"
#include "fswel/variance.hpp"

namespace fswel::io {

// Full-precision decimal round-trip for machine-readable files.
std::string format_full(double v);
// Fixed 3-decimal rendering in units of 1e-3 for human tables.
std::string format_milli(double v);

std::uint64_t fnv1a(const std::string& text);

struct RunConfig {
    std::vector<std::string> x_names{"x"};
    std::vector<std::string> assoc_terms{"x", "g"};
    std::vector<std::string> miss_terms{"1", "y", "x", "g", "y*x", "y*g"};
    bool miss_controls_only = false;
    estimator::FitConfig solver;
    simulation::SimConfig sim;
    std::uint64_t seed = 20260814;

    model::ModelSpec model() const;
};

// JSON configuration; unknown keys rejected. Throws ConfigError.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& text);
std::string run_config_hash(const RunConfig& config);  // hex FNV-1a of canonical form

// Subject CSV schema: id,y,<x columns>,r,g,proxy_kind,gs,gc,gm,gf with empty
// fields for inapplicable values. Covariate columns are those between y and
// r in the header. Throws SchemaError / InvariantViolation with row ids.
data::Dataset load_dataset(const std::string& path);
data::Dataset parse_dataset_csv(const std::string& text);
std::string dataset_to_csv(const data::Dataset& data);
void write_dataset(const std::string& path, const data::Dataset& data);

struct IngestReport {
    int n = 0;
    int n_cases = 0;
    int n_controls = 0;
    int n_complete = 0;
    int n_missing = 0;
    int n_complete_controls = 0;
    std::map<std::string, int> proxy_counts;  // among missing records
};

IngestReport ingest_report(const data::Dataset& data);
std::string render_ingest_report(const IngestReport& report);

struct RunMeta {
    std::string version;
    std::string config_hash;
    std::uint64_t seed = 0;
};

// Structured fit output (JSON): parameters with estimates, standard errors,
// Wald inference, baselines, diagnostics, and run metadata.
std::string fit_result_to_json(const estimator::FitResult& fit,
                               const std::vector<baselines::BaselineResult>& baseline_fits,
                               const data::Dataset& data, const RunMeta& meta);

// Human-readable companion table: estimate (SE) and one-sided p per method.
std::string render_fit_table(const estimator::FitResult& fit,
                             const std::vector<baselines::BaselineResult>& baseline_fits,
                             const RunMeta& meta);

// Per-replicate estimates as CSV (full precision), with run-metadata comment
// lines (# key=value) ahead of the header.
std::string rep_rows_to_csv(const std::vector<simulation::RepRow>& rows, const RunMeta& meta);
std::vector<simulation::RepRow> parse_rep_rows_csv(const std::string& text);
std::vector<simulation::RepRow> load_rep_rows(const std::string& path);

// Summary table in the simulation-study layout: per method and parameter,
// mean estimate, asymptotic/empirical SE, coverage, bias and MSE in 1e-3
// units.
std::string render_summary_table(const std::vector<simulation::ParamSummary>& summaries,
                                 const RunMeta& meta);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fswel::io

#endif
