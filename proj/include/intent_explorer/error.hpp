#pragma once

#include <stdexcept>
#include <string>

namespace intent_explorer {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text. Carries a 1-based location when one is known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, int column = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " +
                               std::to_string(column) + ")"
                         : what),
          line_(line),
          column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace intent_explorer
