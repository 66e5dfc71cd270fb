#pragma once

#include <stdexcept>
#include <string>

namespace cindex {

// Base class for all estimation-level failures. Input/usage problems
// (bad dimensions, malformed files) derive from it as well so callers
// can catch a single type at the boundary.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// The Cox first stage needs at least one censored observation; with
// delta == 1 everywhere the partial likelihood has no event terms.
class NoCensoredObservations : public Error {
public:
    explicit NoCensoredObservations(const std::string& msg) : Error(msg) {}
};

// Newton step unsolvable: covariates are collinear within risk sets.
class SingularHessian : public Error {
public:
    explicit SingularHessian(const std::string& msg) : Error(msg) {}
};

// All kernel weights vanish at the requested index value: bandwidth too
// small or conditioning point outside the data range.
class EmptyWindow : public Error {
public:
    explicit EmptyWindow(const std::string& msg) : Error(msg) {}
};

class DimensionMismatch : public Error {
public:
    explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

// Nadaraya-Watson denominator is zero at the evaluation point.
class EmptyNeighborhood : public Error {
public:
    explicit EmptyNeighborhood(const std::string& msg) : Error(msg) {}
};

// Trimming keeps too few points for the least-squares criterion.
class IllConditionedTrim : public Error {
public:
    explicit IllConditionedTrim(const std::string& msg) : Error(msg) {}
};

class UnsupportedOrder : public Error {
public:
    explicit UnsupportedOrder(const std::string& msg) : Error(msg) {}
};

// Censoring-rate calibration could not bracket the target.
class BracketFailure : public Error {
public:
    explicit BracketFailure(const std::string& msg) : Error(msg) {}
};

// Too many bootstrap replicates failed to produce an estimate.
class ReplicateFailure : public Error {
public:
    explicit ReplicateFailure(const std::string& msg) : Error(msg) {}
};

// Malformed CSV or configuration input.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

}  // namespace cindex
