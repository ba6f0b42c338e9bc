#pragma once

#include <stdexcept>
#include <string>

namespace ordent {

// A caller violated a documented precondition (bad dimension, out-of-range
// argument, non-finite input, ...).
class invalid_input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// File and serialization failures. The kind distinguishes the failure class
// so callers (and the CLI exit-code mapping) can react without string
// matching.
class data_error : public std::runtime_error {
public:
    enum class kind {
        io_failure,
        malformed_file,
        version_mismatch,
        inconsistent,
    };

    data_error(kind k, const std::string& msg) : std::runtime_error(msg), kind_(k) {}

    kind error_kind() const noexcept { return kind_; }

private:
    kind kind_;
};

// Numerical breakdown: factorization failure, singular system, non-finite
// intermediate values.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ordent
