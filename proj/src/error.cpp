#include "fedsearch/error.hpp"

namespace fedsearch {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string out = "integrity error";
    for (const auto& p : problems) {
        out += "; ";
        out += p;
    }
    return out;
}

std::string describe_syntax(std::size_t position, const std::vector<std::string>& expected,
                            const std::string& found) {
    std::string out = "syntax error at offset " + std::to_string(position) + ": expected ";
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i > 0) out += " | ";
        out += expected[i];
    }
    out += ", found " + found;
    return out;
}

} // namespace

ParseError::ParseError(std::string source, std::size_t line, std::string reason)
    : Error(source + ":" + std::to_string(line) + ": " + reason),
      source_(std::move(source)), line_(line), reason_(std::move(reason)) {}

IntegrityError::IntegrityError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected,
                         std::string found)
    : Error(describe_syntax(position, expected, found)), position_(position),
      expected_(std::move(expected)) {}

} // namespace fedsearch
