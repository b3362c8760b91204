#pragma once

#include <stdexcept>
#include <string>

namespace chromacode {

/// Argument outside the mathematical domain of an operation
/// (non-positive wavelength, negative noise level, zero-mass image, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Structurally invalid input (overlapping rings, wrong code length, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The pupil carries no energy, so no PSF can be normalized.
class DegeneratePupilError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Unreadable or inconsistent files on disk.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chromacode
