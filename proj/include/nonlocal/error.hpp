#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nonlocal {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A quadrature needed by a kernel audit did not converge within its budget.
/// Distinct from an audit that ran and found a violated hypothesis.
class AuditInconclusive : public Error {
public:
    using Error::Error;
};

/// Evaluation requested at a point where the quantity is singular.
class SingularEvaluation : public Error {
public:
    using Error::Error;
};

/// Estimated quadrature error of an assembled entry exceeds the tolerance.
class AssemblyAccuracyError : public Error {
public:
    AssemblyAccuracyError(std::size_t row, std::size_t col, double estimate, double tol)
        : Error("assembly accuracy: entry (" + std::to_string(row) + "," + std::to_string(col) +
                ") has estimated error " + std::to_string(estimate) + " > " + std::to_string(tol)),
          row_(row), col_(col), estimate_(estimate) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }
    double estimate() const noexcept { return estimate_; }

private:
    std::size_t row_;
    std::size_t col_;
    double estimate_;
};

/// The assembled matrices violate a structural property (e.g. M not SPD).
class AssemblyCorruption : public Error {
public:
    using Error::Error;
};

/// Generic numerical failure (eigensolver, quadrature of a custom primitive, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

/// A coefficient touches an eigenvalue where strict nonresonance is required.
class ResonanceError : public Error {
public:
    using Error::Error;
};

/// Raised when a system that is provably nonsingular turns out singular.
/// Always signals a bug upstream (assembly or spectrum), never bad input.
class InconsistencyError : public Error {
public:
    using Error::Error;
};

/// Hypothesis cannot be audited with the information provided.
class Unauditable : public Error {
public:
    using Error::Error;
};

/// A solver refused to run because the problem is outside the supported cases.
class HypothesisRefused : public Error {
public:
    using Error::Error;
};

/// Iterative solver hit its iteration cap.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> residual_trace)
        : Error(what), trace_(std::move(residual_trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

/// Configuration validation failure, carrying a JSON-pointer path.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& message)
        : Error(path.empty() ? message : path + ": " + message), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Output could not be written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace nonlocal
