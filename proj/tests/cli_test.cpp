#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

namespace {

std::string bin() {
    const char* path = std::getenv("FSWEL_BIN");
    REQUIRE(path != nullptr);
    return path;
}

std::string data_dir() {
    const char* path = std::getenv("FSWEL_DATA_DIR");
    REQUIRE(path != nullptr);
    return path;
}

int run(const std::string& cmd) {
    const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

std::string capture(const std::string& cmd) {
    const std::string out = "/tmp/fswel_cli_capture.txt";
    const int status = std::system((cmd + " > " + out + " 2>&1").c_str());
    REQUIRE(status != -1);
    std::ifstream in(out);
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream body;
    body << in.rdbuf();
    return body.str();
}

void spit(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
}

}  // namespace

TEST_CASE("fit runs end to end and is reproducible") {
    const std::string toy = data_dir() + "/toy.csv";
    const std::string out1 = "/tmp/fswel_cli_fit1.json";
    const std::string out2 = "/tmp/fswel_cli_fit2.json";
    CHECK(run(bin() + " fit --data " + toy + " --out " + out1) == 0);
    CHECK(run(bin() + " fit --data " + toy + " --out " + out2) == 0);
    const std::string j1 = slurp(out1);
    CHECK(j1 == slurp(out2));
    CHECK(j1.find("\"converged\": true") != std::string::npos);
    CHECK(j1.find("\"beta_x\"") != std::string::npos);
    CHECK(j1.find("\"mcar\"") != std::string::npos);

    const std::string table = slurp(out1 + ".table.txt");
    CHECK(table.find("fswel") != std::string::npos);
    CHECK(table.find("units of 1e-3") != std::string::npos);

    const std::string console =
        capture(bin() + " fit --data " + toy + " --out " + out1);
    CHECK(console.find("subjects") != std::string::npos);
    CHECK(console.find("theta") != std::string::npos);
}

TEST_CASE("config file controls the fit and hashes into the output") {
    const std::string toy = data_dir() + "/toy.csv";
    const std::string config_path = data_dir() + "/toy_config.json";
    const std::string out = "/tmp/fswel_cli_fit_cfg.json";
    CHECK(run(bin() + " fit --data " + toy + " --config " + config_path + " --out " + out) ==
          0);
    const std::string j = slurp(out);
    CHECK(j.find("\"config_hash\"") != std::string::npos);
    CHECK(j.find("\"seed\"") != std::string::npos);
}

TEST_CASE("simulate then report reproduces the summary byte for byte") {
    const std::string config_path = "/tmp/fswel_cli_sim_config.json";
    spit(config_path, R"({"sim": {"cohort_size": 6000, "n_cases": 100,
        "n_controls": 100, "reps": 3, "seed": 11}})");
    const std::string out1 = "/tmp/fswel_cli_sim1.csv";
    const std::string out2 = "/tmp/fswel_cli_sim2.csv";
    CHECK(run(bin() + " simulate --config " + config_path + " --out " + out1) == 0);
    CHECK(run(bin() + " simulate --config " + config_path + " --out " + out2 +
              " --threads 3") == 0);
    const std::string csv = slurp(out1);
    CHECK(csv == slurp(out2));  // worker count cannot change the rows
    CHECK(csv.find("rep,method,parameter,estimate,std_error,truth,converged") !=
          std::string::npos);
    CHECK(csv.find("# seed=11") != std::string::npos);

    const std::string report_out = "/tmp/fswel_cli_report.txt";
    CHECK(run(bin() + " report --in " + out1 + " --out " + report_out) == 0);
    CHECK(slurp(report_out) == slurp(out1 + ".summary.txt"));

    const std::string console = capture(bin() + " report --in " + out1);
    CHECK(console.find("beta_x") != std::string::npos);
    CHECK(console.find("units of 1e-3") != std::string::npos);
}

TEST_CASE("command-line and input failures map to distinct exit codes") {
    CHECK(run(bin()) == 2);
    CHECK(run(bin() + " fit") == 2);
    CHECK(run(bin() + " frobnicate") == 2);
    CHECK(run(bin() + " fit --data /tmp/x.csv") == 2);  // missing --out

    const std::string bad_config = "/tmp/fswel_cli_bad_config.json";
    spit(bad_config, "{broken");
    CHECK(run(bin() + " fit --data " + data_dir() + "/toy.csv --config " + bad_config +
              " --out /tmp/fswel_cli_nope.json") == 3);
    spit(bad_config, R"({"unknown_key": 1})");
    CHECK(run(bin() + " fit --data " + data_dir() + "/toy.csv --config " + bad_config +
              " --out /tmp/fswel_cli_nope.json") == 3);

    CHECK(run(bin() + " fit --data /tmp/fswel_cli_missing.csv --out /tmp/n.json") == 3);

    const std::string bad_data = "/tmp/fswel_cli_bad_data.csv";
    spit(bad_data, "id,y,x,r,g,proxy_kind,gs,gc,gm,gf\n");
    CHECK(run(bin() + " fit --data " + bad_data + " --out /tmp/n.json") == 4);
    spit(bad_data, "id,y,x,r,g,proxy_kind,gs,gc,gm,gf\na,0,0.5,0,1,none,,,,\n");
    CHECK(run(bin() + " fit --data " + bad_data + " --out /tmp/n.json") == 4);

    CHECK(run(bin() + " report --in /tmp/fswel_cli_missing.csv") == 3);
    CHECK(run(bin() + " --help") == 0);
}

TEST_CASE("seed flag overrides the configured stream") {
    const std::string config_path = "/tmp/fswel_cli_seed_config.json";
    spit(config_path, R"({"sim": {"cohort_size": 6000, "n_cases": 80,
        "n_controls": 80, "reps": 2, "seed": 11}})");
    const std::string a = "/tmp/fswel_cli_seed_a.csv";
    const std::string b = "/tmp/fswel_cli_seed_b.csv";
    CHECK(run(bin() + " simulate --config " + config_path + " --out " + a +
              " --seed 77") == 0);
    CHECK(run(bin() + " simulate --config " + config_path + " --out " + b) == 0);
    const std::string csv_a = slurp(a);
    CHECK(csv_a.find("# seed=77") != std::string::npos);
    CHECK(csv_a != slurp(b));
}
