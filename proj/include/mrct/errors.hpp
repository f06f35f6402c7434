#pragma once

#include <stdexcept>
#include <string>

namespace mrct {

// Invalid arguments / violated preconditions.
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

// Design cannot be realized: tau/(delta+M) at or beyond sqrt(R)/(z_{1-a}+z_{1-b}).
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// No sign change over the supplied bracket.
class bracketing_error : public std::runtime_error {
public:
    explicit bracketing_error(const std::string& what) : std::runtime_error(what) {}
};

// Quadrature refinement or iteration budget exhausted.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Requested treatment-effect target lies outside the achievable range.
class calibration_error : public std::runtime_error {
public:
    explicit calibration_error(const std::string& what) : std::runtime_error(what) {}
};

// Closed-form CP proviso violated (the paper's "n.a." cells).
class not_available_error : public std::runtime_error {
public:
    explicit not_available_error(const std::string& what) : std::runtime_error(what) {}
};

// Iterative fit failed to converge (e.g. monotone Cox partial likelihood).
class nonconvergence_error : public std::runtime_error {
public:
    explicit nonconvergence_error(const std::string& what) : std::runtime_error(what) {}
};

// Censoring support does not cover the requested horizon.
class support_error : public std::runtime_error {
public:
    explicit support_error(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable, unparseable, or schema-invalid configuration input.
class schema_error : public std::runtime_error {
public:
    explicit schema_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mrct
