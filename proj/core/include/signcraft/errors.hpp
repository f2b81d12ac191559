#pragma once

#include <stdexcept>
#include <string>

namespace signcraft {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A scalar argument is outside its documented domain (range, rate, stddev, step index).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An index (label, layer selector) is out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Input is not in the expected file format (bad magic, wrong version).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Input is well-formed but uses a feature this library does not handle.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// Input claims the right format but its payload is damaged.
class CorruptError : public Error {
public:
    using Error::Error;
};

/// Checkpoint CRC32 does not match its contents.
class ChecksumError : public CorruptError {
public:
    using CorruptError::CorruptError;
};

class IoError : public Error {
public:
    using Error::Error;
};

class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

/// The model does not have the layer layout an operation requires.
class InvalidArchitecture : public Error {
public:
    using Error::Error;
};

}  // namespace signcraft
