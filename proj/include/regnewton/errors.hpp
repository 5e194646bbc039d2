#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace regnewton {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Linear algebra
class SingularSystem : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Problem construction
class BadLabel : public Error {
public:
    using Error::Error;
};

// Solvers
class LineSearchStalled : public Error {
public:
    using Error::Error;
};

class DegenerateStep : public Error {
public:
    using Error::Error;
};

class NoDescent : public Error {
public:
    using Error::Error;
};

class StallNoStep : public Error {
public:
    using Error::Error;
};

class BisectFail : public Error {
public:
    using Error::Error;
};

// I/O
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class NonBinaryLabel : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (unknown names, incompatible choices, missing files).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Analysis
class DegenerateWindow : public Error {
public:
    using Error::Error;
};

} // namespace regnewton
