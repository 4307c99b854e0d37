#pragma once

#include <stdexcept>

namespace wf {

/// Invalid input: bad shapes, out-of-range parameters, unparseable files.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The input is well-formed but the computation is numerically degenerate
/// (rank deficiency, nonpositive variance estimate, singular Gram matrix).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace wf
