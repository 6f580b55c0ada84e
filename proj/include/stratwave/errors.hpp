#pragma once

#include <stdexcept>
#include <string>

namespace stratwave {

// Thrown when an input violates one of the standing model assumptions
// (positivity, constant tail, inf N < tail value, monotonicity where required).
class AssumptionError : public std::runtime_error {
public:
    explicit AssumptionError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iteration fails to converge or a reconstruction leaves its
// region of validity (e.g. non-monotone depth map beyond the clip tolerance).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown on malformed files, unreadable paths, or bad CSV/JSON structure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace stratwave
