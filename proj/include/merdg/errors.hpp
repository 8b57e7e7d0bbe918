#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace merdg {

// Caller broke a precondition: bad dimensions, invalid flags, malformed requests.
// CLI maps this family to exit code 1.
class ContractError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input was numerically unusable: degenerate batches, collapsed matrices,
// loss of positive definiteness. CLI maps this family to exit code 2.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// On-disk data did not match the expected layout. Exit code 1.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotPositiveDefiniteError : public NumericError {
public:
    NotPositiveDefiniteError(std::size_t pivot_index, const std::string& msg)
        : NumericError(msg), pivot_(pivot_index) {}

    std::size_t pivot_index() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

}  // namespace merdg
