#pragma once

#include <stdexcept>
#include <string>

namespace ptl {

// Bad or inconsistent data: malformed files, shape mismatches, I/O failures.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Degenerate geometry or a failed numerical tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Point lies on (or numerically at) the horizon line of a homography.
class HorizonError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace ptl
