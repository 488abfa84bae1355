#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <string>
#include <vector>

#include "fswel/baselines.hpp"
#include "fswel/estimator.hpp"
#include "fswel/genetics.hpp"
#include "fswel/io.hpp"
#include "fswel/variance.hpp"
#include "fswel/version.hpp"

namespace py = pybind11;

namespace {

std::array<double, 3> hwe_probs_py(double theta) {
    const fswel::genetics::GenotypeDist dist = fswel::genetics::hwe_probs(theta);
    return {dist[0], dist[1], dist[2]};
}

py::dict wald_py(double estimate, double std_error) {
    const fswel::variance::WaldSummary w =
        fswel::variance::wald_row("", estimate, std_error);
    py::dict out;
    out["estimate"] = w.estimate;
    out["std_error"] = w.std_error;
    out["z"] = w.z;
    out["p_one_sided"] = w.p_one_sided;
    out["p_two_sided"] = w.p_two_sided;
    out["ci_lower"] = w.ci_lower;
    out["ci_upper"] = w.ci_upper;
    return out;
}

std::string fit_file_py(const std::string& data_path, const std::string& config_text) {
    const fswel::io::RunConfig config = config_text.empty()
                                            ? fswel::io::RunConfig{}
                                            : fswel::io::parse_run_config(config_text);
    const fswel::data::Dataset dataset = fswel::io::load_dataset(data_path);
    const fswel::model::ModelSpec spec = config.model();
    const fswel::estimator::FitResult fit =
        fswel::estimator::fit_fswel(dataset, spec, config.solver);
    std::vector<fswel::baselines::BaselineResult> baseline_fits;
    try {
        baseline_fits.push_back(fswel::baselines::fit_mcar_naive(spec, dataset));
    } catch (const fswel::Error&) {
    }
    try {
        baseline_fits.push_back(fswel::baselines::fit_mar_ipw(spec, dataset));
    } catch (const fswel::Error&) {
    }
    const fswel::io::RunMeta meta{fswel::kVersion, fswel::io::run_config_hash(config),
                                  config.seed};
    return fswel::io::fit_result_to_json(fit, baseline_fits, dataset, meta);
}

}  // namespace

PYBIND11_MODULE(_fswel, m) {
    m.doc() = "family-supplemented weighted empirical likelihood estimation";
    m.def("version", [] { return std::string(fswel::kVersion); });
    m.def("hwe_probs", &hwe_probs_py, py::arg("theta"),
          "Hardy-Weinberg genotype probabilities (P(G=0), P(G=1), P(G=2))");
    m.def("wald_p", &wald_py, py::arg("estimate"), py::arg("std_error"),
          "Wald z, one- and two-sided p-values, and the 95% confidence interval");
    m.def("fit_file", &fit_file_py, py::arg("data_path"), py::arg("config_text") = "",
          "Fit the estimator to a subject CSV; returns the structured JSON result");
    py::register_exception<fswel::Error>(m, "FswelError");
}
