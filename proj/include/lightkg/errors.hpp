#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <string>

namespace lightkg {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input bytes. `offset` is a byte offset into the input when known,
// `line` a 1-based line number for line-oriented formats (0 when unknown).
class ParseError : public Error {
public:
    ParseError(std::string reason, std::size_t offset, std::size_t line = 0)
        : Error(format(reason, offset, line)), reason_(std::move(reason)), offset_(offset), line_(line) {}

    const std::string& reason() const noexcept { return reason_; }
    std::size_t offset() const noexcept { return offset_; }
    std::size_t line() const noexcept { return line_; }

private:
    static std::string format(const std::string& reason, std::size_t offset, std::size_t line) {
        std::string msg = "parse error";
        if (line > 0) msg += " at line " + std::to_string(line);
        msg += " (byte " + std::to_string(offset) + "): " + reason;
        return msg;
    }

    std::string reason_;
    std::size_t offset_;
    std::size_t line_;
};

// Graph invariant violated (dangling edge endpoint, duplicate id, ...).
class IntegrityError : public Error {
public:
    using Error::Error;
};

class UnknownNodeError : public Error {
public:
    explicit UnknownNodeError(const std::string& id) : Error("unknown node: '" + id + "'"), id_(id) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

// A label normalized to the empty string.
class EmptyLabelError : public Error {
public:
    explicit EmptyLabelError(const std::string& raw)
        : Error("label is empty after normalization: '" + raw + "'"), raw_(raw) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace lightkg
