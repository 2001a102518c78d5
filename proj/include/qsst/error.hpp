#pragma once

#include <stdexcept>
#include <string>

namespace qsst {

/// Invalid parameters or inputs that violate an operation's preconditions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed serialized data (bad magic, truncated payload, bad header).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation produced or met non-finite values it cannot recover from.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InputError(what);
}

}  // namespace detail
}  // namespace qsst
