#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace alphalogics {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (CSV rows, panels, split definitions).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg, std::size_t line = 0)
        : Error(line ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EmptyUniverseError : public DataError {
public:
    using DataError::DataError;
};

/// Expression syntax or validation failure. `position` is a 0-based offset
/// into the source text, or npos when the error is not tied to one.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t position = std::string::npos)
        : Error(position == std::string::npos
                    ? msg
                    : msg + " at position " + std::to_string(position)),
          position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// A persisted record or agent payload does not conform to its schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

class CompileError : public Error {
public:
    CompileError(const std::string& predicate_id, const std::string& msg)
        : Error("predicate '" + predicate_id + "': " + msg), predicate_id_(predicate_id) {}
    const std::string& predicate_id() const noexcept { return predicate_id_; }

private:
    std::string predicate_id_;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Raised whenever optimization-phase code tries to read held-out test data.
class LeakageError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

/// An agent exchange could not complete: transport failure, missing fixture,
/// exhausted budget or a broken cross-stage invariant.
class AgentError : public Error {
public:
    AgentError(const std::string& agent, const std::string& msg)
        : Error(agent + ": " + msg), agent_(agent) {}
    const std::string& agent() const noexcept { return agent_; }

private:
    std::string agent_;
};

} // namespace alphalogics
