#pragma once

#include <stdexcept>
#include <string>

namespace wsb {

/// Input outside the documented domain of an operation.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// State within the collision guard of a primary.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adaptive step size fell below h_min with the error still too large.
class StepUnderflowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative solver (differential correction, continuation) failed.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace wsb
