#ifndef FARLAB_ERROR_HPP
#define FARLAB_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace farlab {

/// Base class of every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class dimension_mismatch : public error {
public:
    dimension_mismatch(std::size_t expected, std::size_t got)
        : error("dimension mismatch: expected " + std::to_string(expected) +
                ", got " + std::to_string(got)) {}
};

class invalid_argument : public error {
public:
    using error::error;
};

class not_symmetric : public error {
public:
    using error::error;
};

class not_psd : public error {
public:
    using error::error;
};

/// Raised when a spectral cutoff would divide by a numerically null eigenvalue.
/// `index` is 1-based, matching the usual λ₁ ≥ λ₂ ≥ … labelling.
class degenerate_spectrum : public error {
public:
    degenerate_spectrum(std::size_t index, double value, double threshold)
        : error("degenerate spectrum: eigenvalue #" + std::to_string(index) +
                " = " + std::to_string(value) + " is below pivot threshold " +
                std::to_string(threshold)),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// The requested (Γ, ρ) pair does not produce a positive innovation covariance.
class infeasible_model : public error {
public:
    using error::error;
};

/// Configuration / schema validation failure; `field` is a dotted path.
/// A file could not be opened, read or written.
class io_error : public error {
public:
    using error::error;
};

/// Malformed file content; line is 1-based.
class parse_error : public error {
public:
    parse_error(std::size_t line, const std::string& what)
        : error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class schema_error : public error {
public:
    schema_error(std::string field, const std::string& what)
        : error(field + ": " + what), field_(std::move(field)), reason_(what) {}

    const std::string& field() const noexcept { return field_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

} // namespace farlab

#endif // FARLAB_ERROR_HPP
