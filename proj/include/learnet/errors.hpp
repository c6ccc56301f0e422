#pragma once

#include <stdexcept>
#include <string>

namespace learnet {

// Base of every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Tensor or layer shape disagreement.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid argument value: hyperparameter out of range, bad label, too few frames.
class ValueError : public Error {
public:
    using Error::Error;
};

// Layer-graph construction or validation failure.
class GraphError : public Error {
public:
    using Error::Error;
};

// Filesystem, decode, or serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

// Checkpoint failures, one subclass per failure kind so callers can
// distinguish them.
class CheckpointError : public IoError {
public:
    using IoError::IoError;
};

class BadMagicError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class BadVersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class TruncatedError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class DigestMismatchError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

}  // namespace learnet
