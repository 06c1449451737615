#ifndef QCAT_ERRORS_HPP
#define QCAT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qcat {

// Raised when an argument lies outside the documented domain of an operation.
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when an iterative numerical procedure fails to converge.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace qcat

#endif // QCAT_ERRORS_HPP
