#pragma once

#include <stdexcept>
#include <string>

namespace pcwlad {

// I/O failures: unreadable files, truncated streams.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Recognized file but unsupported or malformed encoding.
class FormatError : public IoError {
public:
    explicit FormatError(const std::string& msg) : IoError(msg) {}
};

// Invalid configuration or out-of-bounds parameter values.
class ParamError : public std::invalid_argument {
public:
    explicit ParamError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Normal matrix singular / design matrix rank deficient.
class RankError : public std::runtime_error {
public:
    explicit RankError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Empty or degenerate result sets (no keypoints, too few matches, ...).
class DegenerateError : public std::runtime_error {
public:
    explicit DegenerateError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace pcwlad
