#pragma once

#include <stdexcept>
#include <string>

namespace jumpgreeks {

/// Invalid argument or unsupported configuration.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of the queried object (e.g. a time past the horizon).
class DomainError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Evaluation exactly at a support endpoint or interior singularity of a weight.
class SingularityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Covariance of a functional vanishes, so no integration-by-parts weight exists.
class DegeneracyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Integrator or quadrature failure.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One-sided limit that does not settle to a finite value.
class LimitError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Estimator requested outside the jump counts it covers.
class NotApplicableError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace jumpgreeks
