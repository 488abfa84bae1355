#ifndef FSWEL_ERRORS_HPP
#define FSWEL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fswel {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A family genotype configuration carries zero probability mass for every
// subject genotype (e.g. spouse 0 with child 2).
class IncompatibleProxy : public Error {
public:
    using Error::Error;
};

// A genotype value has no complete control observations, so the empirical
// covariate distribution cannot be formed for that stratum.
class EmptyGenotypeStratum : public Error {
public:
    using Error::Error;
};

// An inverse-probability weight fell below the configured floor.
class DegenerateWeight : public Error {
public:
    using Error::Error;
};

// A Newton or IRLS solve exhausted its iteration budget.
class NonConvergence : public Error {
public:
    using Error::Error;
};

// The Newton system is numerically rank-deficient.
class SingularJacobian : public Error {
public:
    using Error::Error;
};

// The bread matrix of the sandwich is numerically singular.
class SingularM : public Error {
public:
    using Error::Error;
};

// A logistic fit diverged (monotone likelihood).
class CompleteSeparation : public Error {
public:
    using Error::Error;
};

// A subject's covariate pattern has no cell in the delta table.
class PatternNotInDelta : public Error {
public:
    using Error::Error;
};

// No control pattern is available to donate mass to a case-only pattern.
class NoAdjacentPattern : public Error {
public:
    using Error::Error;
};

// A weighted estimate over controls has no control records to draw on.
class EmptyControls : public Error {
public:
    using Error::Error;
};

// A sampling stratum is smaller than the requested sample.
class InsufficientStratum : public Error {
public:
    using Error::Error;
};

// Malformed input file (wrong header, bad field, missing column).
class SchemaError : public Error {
public:
    using Error::Error;
};

// A record violates a data invariant (e.g. genotype present with r = 0).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

// Bad run configuration (unknown term, missing field, bad tolerance).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace fswel

#endif
