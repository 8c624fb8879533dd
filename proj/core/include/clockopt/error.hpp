#pragma once

#include <stdexcept>
#include <string>

namespace clockopt {

// Invalid input: wrong dimensions, violated invariants, malformed protocols.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// A state or protocol that cannot be normalized (zero vector, zero probe period).
class DegenerateError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InsufficientData : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A checkpoint that cannot be resumed, either corrupt or written by another config.
class ResumeConflict : public std::runtime_error {
public:
    ResumeConflict(const std::string& what, long long offset)
        : std::runtime_error(what), offset_(offset) {}

    long long offset() const noexcept { return offset_; }

private:
    long long offset_;
};

}  // namespace clockopt
