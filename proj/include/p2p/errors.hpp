#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace p2p {

/// Two series (or a series and a schedule) disagree in horizon or step length.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value object was constructed with parameters that break its invariants.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Negotiation was driven outside its legal round range.
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Bad scenario configuration: missing files, unknown keys, unmapped prosumers.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the 1-based line number of the offending row.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input is well-formed but cannot produce a meaningful result
/// (no retained days, all-zero aggregate demand, ...).
class DegenerateInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A bounded search ran out of attempts before reaching its target.
class SearchExhaustedError : public std::runtime_error {
public:
    SearchExhaustedError(const std::string& what, double best)
        : std::runtime_error(what), best_(best) {}

    double best_achieved() const noexcept { return best_; }

private:
    double best_;
};

}  // namespace p2p
