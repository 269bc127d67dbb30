#pragma once

#include <stdexcept>
#include <string>

namespace ksnh {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Evaluation left the domain of an operation (log of a negative, 1/0, ...).
class DomainError : public Error {
public:
    DomainError(const std::string& what, double value)
        : Error(what + " (value " + std::to_string(value) + ")"), value_(value) {}
    double value() const noexcept { return value_; }

private:
    double value_;
};

class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, const std::string& message)
        : Error("error at offset " + std::to_string(offset) + ": " + message),
          offset_(offset), message_(message) {}
    std::size_t offset() const noexcept { return offset_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t offset_;
    std::string message_;
};

// Input files or builder arguments that do not fit the model schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

class BindError : public Error {
public:
    using Error::Error;
};

// Singular systems, failed Newton iterations, drift beyond tolerance.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double condition = 0.0)
        : Error(what), condition_(condition) {}
    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

}  // namespace ksnh
