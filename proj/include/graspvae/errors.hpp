#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graspvae {

/// Base for every error raised by the library. `kind()` is a short stable
/// token used by the command-line front end for machine-parsable output.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit FormatError(const std::string& what) : Error(what), line_(0) {}
    std::size_t line() const noexcept { return line_; }
    const char* kind() const noexcept override { return "format"; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation"; }
};

class DegenerateDatasetError : public Error {
public:
    DegenerateDatasetError(const std::string& what, std::string dimension)
        : Error(what), dimension_(std::move(dimension)) {}
    const std::string& dimension() const noexcept { return dimension_; }
    const char* kind() const noexcept override { return "degenerate-dataset"; }

private:
    std::string dimension_;
};

class DegenerateOrientationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "degenerate-orientation"; }
};

class ShapeError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "shape"; }
};

class UsageError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "usage"; }
};

/// Non-finite values showed up in a computation (gradients, losses, kernels).
class NumericError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "numeric"; }
};

}  // namespace graspvae
