#ifndef FSWEL_DATA_HPP
#define FSWEL_DATA_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "fswel/errors.hpp"
#include "fswel/genetics.hpp"

namespace fswel::data {

// One study subject. g is the genotype when observed (r = 1) and -1 when
// missing; family is the proxy configuration (kind None when unavailable).
struct SubjectRecord {
    std::string id;
    int y = 0;
    Eigen::VectorXd x;
    int r = 1;
    int g = -1;
    genetics::FamilyProxy family;
};

// Case-control sample with the distinct covariate patterns enumerated.
// Patterns are stored in canonical order (lexicographic over coordinates)
// and every record carries its pattern index.
class Dataset {
public:
    Dataset(std::vector<SubjectRecord> records, std::vector<std::string> x_names);

    const std::vector<SubjectRecord>& records() const { return records_; }
    const std::vector<std::string>& x_names() const { return x_names_; }
    const std::vector<Eigen::VectorXd>& patterns() const { return patterns_; }
    int pattern_id(std::size_t record_index) const { return pattern_ids_[record_index]; }
    const std::vector<int>& pattern_ids() const { return pattern_ids_; }

    int n() const { return static_cast<int>(records_.size()); }
    int n_cases() const { return n_cases_; }
    int n_controls() const { return n() - n_cases_; }
    int n_patterns() const { return static_cast<int>(patterns_.size()); }
    int dim_x() const { return static_cast<int>(x_names_.size()); }

private:
    std::vector<SubjectRecord> records_;
    std::vector<std::string> x_names_;
    std::vector<Eigen::VectorXd> patterns_;
    std::vector<int> pattern_ids_;
    int n_cases_ = 0;
};

// Validates y/r/g ranges, family proxy fields, and covariate dimensions.
// Throws InvariantViolation naming the offending record.
void validate_records(const std::vector<SubjectRecord>& records, int dim_x);

}  // namespace fswel::data

#endif
