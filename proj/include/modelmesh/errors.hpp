#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace modelmesh {

// Base error. `code()` is a stable machine-readable token; the CLI maps it
// onto its single-line stderr error format, the service onto error responses.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& m) : Error("shape", m) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error("config", m) {}
};

struct PreconditionError : Error {
    explicit PreconditionError(const std::string& m) : Error("precondition", m) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& m) : Error("format", m) {}
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error("io", m) {}
};

struct ArchError : Error {
    explicit ArchError(const std::string& m) : Error("arch", m) {}
};

struct AggregationError : Error {
    explicit AggregationError(const std::string& m) : Error("aggregation", m) {}
};

struct NotFoundError : Error {
    explicit NotFoundError(const std::string& m) : Error("not-found", m) {}
};

struct IntegrityError : Error {
    explicit IntegrityError(const std::string& m) : Error("integrity", m) {}
};

// Query text that does not parse. `offset` is the byte position of the
// offending character in the input.
struct QuerySyntaxError : Error {
    QuerySyntaxError(std::size_t offset, const std::string& m)
        : Error("query-syntax", "syntax error at byte " + std::to_string(offset) + ": " + m),
          offset(offset) {}
    std::size_t offset;
};

struct QueryRangeError : Error {
    explicit QueryRangeError(const std::string& m) : Error("query-range", m) {}
};

struct QueryError : Error {
    explicit QueryError(const std::string& m) : Error("query", m) {}
};

}  // namespace modelmesh
