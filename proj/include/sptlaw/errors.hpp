#pragma once

#include <stdexcept>
#include <string>

namespace sptlaw {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An argument lies outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Input bytes do not match the expected file schema.
struct FormatError : Error {
  using Error::Error;
};

// Same (run, split, tokens) appears twice with conflicting loss values.
struct DuplicatePointError : Error {
  using Error::Error;
};

// Train and test curves share no token abscissae.
struct NoOverlapError : Error {
  using Error::Error;
};

// A value breaks a documented data invariant.
struct InvariantViolation : Error {
  using Error::Error;
};

// Not enough points / curves to determine the requested parameters.
struct InsufficientData : Error {
  using Error::Error;
};

// Profiles differ in n, bin count, or hash seed.
struct MismatchedProfiles : Error {
  using Error::Error;
};

struct EmptyProfile : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// A cross-validation fold would contain a single class.
struct TooFewSamples : Error {
  using Error::Error;
};

// A curve never attains the requested target value.
struct NotReached : Error {
  using Error::Error;
};

// No genuine small-vs-large model gap exists.
struct DegenerateGap : Error {
  using Error::Error;
};

// A run configuration is internally inconsistent.
struct InvalidConfig : Error {
  using Error::Error;
};

}  // namespace sptlaw
