#ifndef TREEAUTO_ERRORS_HPP
#define TREEAUTO_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace treeauto {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed text input.  `position` is a 0-based byte offset for term
// syntax, or a 1-based line number for sectioned model files.
struct ParseError : Error {
    ParseError(const std::string& msg, std::size_t pos)
        : Error(msg + " (at " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

// Structurally or semantically invalid model: arity mismatch, unknown
// symbol or state, wrong semiring, invalid PTA where a valid one is
// required.
struct ModelError : Error {
    using Error::Error;
};

// Numeric failure: fixed-point divergence, unstable rank decision,
// enumeration guard exceeded.
struct NumericError : Error {
    using Error::Error;
};

// A sampling draw walked past the depth bound without terminating.
struct DepthExceeded : Error {
    using Error::Error;
};

}  // namespace treeauto

#endif
