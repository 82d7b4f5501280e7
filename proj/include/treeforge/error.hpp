#pragma once

#include <stdexcept>
#include <string>

namespace treeforge {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed tree or a tree that cannot be applied to a dataset.
class StructuralError : public Error {
public:
    using Error::Error;
};

// Invalid argument or configuration value.
class ValidationError : public Error {
public:
    using Error::Error;
};

// The generator produced a degenerate sample; callers resample.
class GenerationError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ChecksumError : public Error {
public:
    using Error::Error;
};

}  // namespace treeforge
