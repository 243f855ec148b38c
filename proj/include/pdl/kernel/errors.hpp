#pragma once

#include <stdexcept>
#include <string>

namespace pdl {

// Base of every error raised by the core library. The C API maps each
// subclass to a status code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class IllegalToppling : public Error {
public:
    using Error::Error;
};

class InvariantViolation : public Error {
public:
    InvariantViolation(const std::string& what, std::string dump);
    const std::string& dump() const { return dump_; }

private:
    std::string dump_;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class AbsorbedError : public Error {
public:
    using Error::Error;
};

class TruncationError : public Error {
public:
    using Error::Error;
};

class UndefinedView : public Error {
public:
    using Error::Error;
};

class NoWalker : public Error {
public:
    using Error::Error;
};

} // namespace pdl
