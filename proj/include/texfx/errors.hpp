#pragma once

#include <stdexcept>
#include <string>

namespace texfx {

// Base type for everything this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class FileNotFoundError : public Error {
public:
    using Error::Error;
};

class DecodeError : public Error {
public:
    using Error::Error;
};

class UnsupportedFormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

class DimensionMismatchError : public Error {
public:
    using Error::Error;
};

// Binarization produced an all-inside or all-outside mask.
class DegenerateMaskError : public Error {
public:
    using Error::Error;
};

} // namespace texfx
