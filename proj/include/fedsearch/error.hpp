#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedsearch {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, std::string reason);

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string source_;
    std::size_t line_;
    std::string reason_;
};

/// A mutation or load would break referential integrity or ID uniqueness.
class IntegrityError : public Error {
public:
    explicit IntegrityError(std::vector<std::string> problems);

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class RequestError : public Error {
public:
    using Error::Error;
};

/// Expression syntax error. `position` is a 0-based byte offset.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t position, std::vector<std::string> expected, std::string found);

    std::size_t position() const noexcept { return position_; }
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

} // namespace fedsearch
