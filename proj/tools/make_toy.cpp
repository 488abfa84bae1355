// Regenerates data/toy.csv: a small sample whose missing records cycle
// through every proxy kind, each family drawn jointly with the subject's
// genotype so the proxies follow the true conditional law.
#include <cstdio>
#include <string>
#include <vector>

#include "fswel/genetics.hpp"
#include "fswel/io.hpp"
#include "fswel/simulation.hpp"

using namespace fswel;

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "data/toy.csv";

    simulation::SimConfig config;
    config.theta = 0.3;
    config.target_prevalence = 0.05;
    config.target_availability = 0.7;
    config.n_cases = 150;
    config.n_controls = 150;
    config.cohort_size = 20000;
    const simulation::Truth truth = simulation::calibrate_truth(config);

    simulation::Rng rng(simulation::splitmix64(424242));
    simulation::Cohort cohort = simulation::gen_cohort(config, truth, rng);

    // Parents consistent with each subject's genotype, by rejection.
    const genetics::GenotypeDist hwe = genetics::hwe_probs(config.theta);
    const std::array<double, 3> hwe_arr{hwe[0], hwe[1], hwe[2]};
    int cycle = 0;
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        data::SubjectRecord& rec = cohort.records[i];
        if (rec.r == 1) {
            rec.family = genetics::FamilyProxy::none();
            continue;
        }
        const int g = cohort.true_g[i];
        int gm = 0, gf = 0;
        for (;;) {
            gm = rng.categorical3(hwe_arr);
            gf = rng.categorical3(hwe_arr);
            const int child = rng.bernoulli(gm / 2.0) + rng.bernoulli(gf / 2.0);
            if (child == g) break;
        }
        const genetics::FamilyProxy generated = rec.family;  // spouse + child
        switch (cycle++ % 5) {
            case 0: rec.family = generated; break;
            case 1: rec.family = genetics::FamilyProxy::two_parents(gm, gf); break;
            case 2: rec.family = genetics::FamilyProxy::one_parent(gm); break;
            case 3: rec.family = genetics::FamilyProxy::child_only(generated.b); break;
            default: rec.family = genetics::FamilyProxy::none(); break;
        }
    }

    const data::Dataset sample = simulation::sample_case_control(
        cohort, config.n_cases, config.n_controls, rng, {"x"});
    io::write_dataset(out, sample);
    std::printf("wrote %s (%d subjects)\n", out.c_str(), sample.n());
    return 0;
}
