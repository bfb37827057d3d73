#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace formflow {

// Base of every error raised by the library. The CLI maps all of these to
// exit status 2 (operational error).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}
    // Same error, prefixed with where the text came from.
    ParseError(const std::string& context, const ParseError& inner)
        : Error(context + ": " + inner.what()), offset_(inner.offset()) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class UnboundVariableError : public Error {
public:
    explicit UnboundVariableError(const std::string& name)
        : Error("unbound variable '" + name + "'"), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

// Division by zero, ln/sqrt outside the real domain, or any non-finite result.
class SingularEvaluation : public Error {
public:
    using Error::Error;
};

// Violated precondition or malformed argument (degree, dimension, chart mismatch...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace formflow
