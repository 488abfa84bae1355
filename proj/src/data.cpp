#include "fswel/data.hpp"

#include <map>

namespace fswel::data {

namespace {

using genetics::ProxyKind;

void check_proxy(const SubjectRecord& rec) {
    const genetics::FamilyProxy& f = rec.family;
    const auto bad = [&rec](const char* why) {
        throw InvariantViolation("record " + rec.id + ": " + why);
    };
    switch (f.kind) {
        case ProxyKind::None:
            if (f.a != -1 || f.b != -1) bad("proxy genotypes present without a proxy kind");
            break;
        case ProxyKind::SpouseChild:
        case ProxyKind::TwoParents:
            if (!genetics::valid_genotype(f.a) || !genetics::valid_genotype(f.b)) {
                bad("two-relative proxy needs both genotypes in {0,1,2}");
            }
            break;
        case ProxyKind::OneParent:
        case ProxyKind::ChildOnly:
            if (!genetics::valid_genotype(f.a)) bad("relative genotype outside {0,1,2}");
            if (f.b != -1) bad("single-relative proxy carries a second genotype");
            break;
    }
}

}  // namespace

void validate_records(const std::vector<SubjectRecord>& records, int dim_x) {
    for (const SubjectRecord& rec : records) {
        const auto bad = [&rec](const char* why) {
            throw InvariantViolation("record " + rec.id + ": " + why);
        };
        if (rec.y != 0 && rec.y != 1) bad("y must be 0 or 1");
        if (rec.r != 0 && rec.r != 1) bad("r must be 0 or 1");
        if (rec.r == 1 && !genetics::valid_genotype(rec.g)) bad("r=1 but g is not in {0,1,2}");
        if (rec.r == 0 && rec.g != -1) bad("g present although r=0");
        if (rec.x.size() != dim_x) bad("covariate dimension mismatch");
        for (int k = 0; k < rec.x.size(); ++k) {
            if (!std::isfinite(rec.x(k))) bad("non-finite covariate");
        }
        check_proxy(rec);
    }
}

Dataset::Dataset(std::vector<SubjectRecord> records, std::vector<std::string> x_names)
    : records_(std::move(records)), x_names_(std::move(x_names)) {
    if (records_.empty()) throw SchemaError("no records");
    validate_records(records_, dim_x());

    // Canonical pattern ids: lexicographic order over coordinates.
    std::map<std::vector<double>, int> seen;
    for (const SubjectRecord& rec : records_) {
        std::vector<double> key(rec.x.data(), rec.x.data() + rec.x.size());
        seen.emplace(std::move(key), 0);
    }
    int next = 0;
    for (auto& [key, id] : seen) id = next++;
    patterns_.resize(seen.size());
    for (const auto& [key, id] : seen) {
        patterns_[static_cast<std::size_t>(id)] =
            Eigen::Map<const Eigen::VectorXd>(key.data(), static_cast<int>(key.size()));
    }
    pattern_ids_.reserve(records_.size());
    for (const SubjectRecord& rec : records_) {
        std::vector<double> key(rec.x.data(), rec.x.data() + rec.x.size());
        pattern_ids_.push_back(seen.at(key));
        n_cases_ += rec.y;
    }
}

}  // namespace fswel::data
