#pragma once

#include <stdexcept>
#include <string>

namespace wavemodel {

/// Bad user input: grid sizes, config keys, expression syntax, CFL above limit.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation could not be carried out (bracketing failed, blow-up, singular system).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The potential does not give a positive definite operator.
class AdmissibilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The gauge function or basis of the kernel is unusable.
class GaugeError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Evaluation requested where the model coefficients are not defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A caller broke an API precondition (missing derivative fields, mismatched grids).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Internal self-consistency check tripped.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace wavemodel
