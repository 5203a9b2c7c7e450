#pragma once

#include <stdexcept>
#include <string>

namespace sfcast {

/// Malformed or inconsistent input data (files, calendars, missing values).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical estimation step could not produce a model.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Every kernel weight vanished for a query curve; the bandwidth is too small.
class DegenerateWeights : public FitError {
public:
    using FitError::FitError;
};

}  // namespace sfcast
