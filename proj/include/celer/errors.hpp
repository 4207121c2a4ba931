#pragma once
#include <cstddef>
#include <stdexcept>
#include <string>

namespace celer {

// Raised by the LIBSVM / dense-matrix readers. Carries the 1-based line number.
class ParseError : public std::runtime_error
{
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what)
        , line_(line)
    {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A caller broke a documented precondition (e.g. infeasible dual point).
class ContractViolation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

// Operation is not defined for the requested model kind.
class UnsupportedOperation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

} // namespace celer
