#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fswel/baselines.hpp"
#include "fswel/errors.hpp"
#include "fswel/estimator.hpp"
#include "fswel/io.hpp"
#include "fswel/simulation.hpp"
#include "fswel/version.hpp"

namespace {

using namespace fswel;

io::RunMeta meta_for(const io::RunConfig& config) {
    return io::RunMeta{kVersion, io::run_config_hash(config), config.seed};
}

int run_fit(const std::string& data_path, const std::string& config_path,
            const std::string& out_path, bool seed_set, std::uint64_t seed) {
    io::RunConfig config =
        config_path.empty() ? io::RunConfig{} : io::load_run_config(config_path);
    if (seed_set) {
        config.seed = seed;
        config.sim.seed = seed;
    }
    const io::RunMeta meta = meta_for(config);
    const data::Dataset dataset = io::load_dataset(data_path);
    std::fputs(io::render_ingest_report(io::ingest_report(dataset)).c_str(), stdout);

    const model::ModelSpec spec = config.model();
    const estimator::FitResult fit = estimator::fit_fswel(dataset, spec, config.solver);

    std::vector<baselines::BaselineResult> baseline_fits;
    const auto try_baseline = [&baseline_fits](const char* label, auto&& fitter) {
        try {
            baseline_fits.push_back(fitter());
        } catch (const Error& ex) {
            std::fprintf(stderr, "warning: %s baseline failed: %s\n", label, ex.what());
        }
    };
    try_baseline("mcar", [&] { return baselines::fit_mcar_naive(spec, dataset); });
    try_baseline("mar", [&] { return baselines::fit_mar_ipw(spec, dataset); });

    io::write_text_file(out_path, io::fit_result_to_json(fit, baseline_fits, dataset, meta));
    const std::string table = io::render_fit_table(fit, baseline_fits, meta);
    io::write_text_file(out_path + ".table.txt", table);
    std::fputs(table.c_str(), stdout);
    std::fprintf(stdout, "wrote %s\n", out_path.c_str());
    return fit.converged ? 0 : 5;
}

int run_simulate(const std::string& config_path, const std::string& out_path, int reps,
                 bool seed_set, std::uint64_t seed, int threads) {
    io::RunConfig config =
        config_path.empty() ? io::RunConfig{} : io::load_run_config(config_path);
    if (reps > 0) config.sim.reps = reps;
    if (seed_set) {
        config.seed = seed;
        config.sim.seed = seed;
    }
    if (threads > 0) config.sim.threads = threads;
    const io::RunMeta meta{kVersion, io::run_config_hash(config), config.sim.seed};

    const simulation::SimResult result = simulation::run_replications(config.sim);
    io::write_text_file(out_path, io::rep_rows_to_csv(result.rows, meta));
    const std::string table =
        io::render_summary_table(simulation::summarize(result.rows), meta);
    io::write_text_file(out_path + ".summary.txt", table);
    std::fputs(table.c_str(), stdout);
    std::fprintf(stdout, "wrote %s (%d replicates, %d without convergence)\n",
                 out_path.c_str(), result.reps_run, result.reps_failed);
    return 0;
}

io::RunMeta meta_from_comments(const std::string& text) {
    io::RunMeta meta{fswel::kVersion, "", 0};
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty() || line[0] != '#') break;
        const auto take = [&line](const char* prefix) -> std::string {
            const std::string p(prefix);
            return line.rfind(p, 0) == 0 ? line.substr(p.size()) : std::string();
        };
        if (std::string v = take("# fswel_version="); !v.empty()) meta.version = v;
        if (std::string v = take("# config_hash="); !v.empty()) meta.config_hash = v;
        if (std::string v = take("# seed="); !v.empty()) meta.seed = std::stoull(v);
    }
    return meta;
}

int run_report(const std::string& in_path, const std::string& out_path) {
    const std::string text = io::read_text_file(in_path);
    const io::RunMeta meta = meta_from_comments(text);
    const std::vector<simulation::RepRow> rows = io::parse_rep_rows_csv(text);
    const std::string table = io::render_summary_table(simulation::summarize(rows), meta);
    if (!out_path.empty()) {
        io::write_text_file(out_path, table);
    }
    std::fputs(table.c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"family-supplemented weighted empirical likelihood estimation"};
    app.require_subcommand(1);

    std::string data_path, config_path, out_path, in_path;
    std::uint64_t seed = 0;
    int reps = 0;
    int threads = 0;

    CLI::App* fit = app.add_subcommand("fit", "fit one dataset");
    fit->add_option("--data", data_path, "subject CSV")->required();
    fit->add_option("--config", config_path, "run configuration (JSON)");
    fit->add_option("--out", out_path, "result file (JSON; sidecar table alongside)")
        ->required();
    CLI::Option* fit_seed = fit->add_option("--seed", seed, "override the config seed");

    CLI::App* simulate = app.add_subcommand("simulate", "replicate study");
    simulate->add_option("--config", config_path, "run configuration (JSON)");
    simulate->add_option("--out", out_path, "per-replicate CSV (summary sidecar alongside)")
        ->required();
    simulate->add_option("--reps", reps, "override replicate count");
    CLI::Option* sim_seed = simulate->add_option("--seed", seed, "override the config seed");
    simulate->add_option("--threads", threads, "override worker count");

    CLI::App* report = app.add_subcommand("report", "summarize a per-replicate CSV");
    report->add_option("--in", in_path, "per-replicate CSV")->required();
    report->add_option("--out", out_path, "summary table destination (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return 2;
    }

    try {
        if (app.got_subcommand(fit)) {
            return run_fit(data_path, config_path, out_path, fit_seed->count() > 0, seed);
        }
        if (app.got_subcommand(simulate)) {
            return run_simulate(config_path, out_path, reps, sim_seed->count() > 0, seed,
                                threads);
        }
        return run_report(in_path, out_path);
    } catch (const ConfigError& ex) {
        std::fprintf(stderr, "configuration error: %s\n", ex.what());
        return 3;
    } catch (const SchemaError& ex) {
        std::fprintf(stderr, "data error: %s\n", ex.what());
        return 4;
    } catch (const InvariantViolation& ex) {
        std::fprintf(stderr, "data error: %s\n", ex.what());
        return 4;
    } catch (const Error& ex) {
        std::fprintf(stderr, "estimation error: %s\n", ex.what());
        return 5;
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
}
