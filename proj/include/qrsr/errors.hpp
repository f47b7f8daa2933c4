#pragma once

#include <stdexcept>
#include <string>

namespace qrsr {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class CapacityExceeded : public Error {
public:
    using Error::Error;
};

class ExtentMismatch : public Error {
public:
    using Error::Error;
};

class FormatInfoUnreadable : public Error {
public:
    using Error::Error;
};

class RsUncorrectable : public Error {
public:
    using Error::Error;
};

class NoFreeBits : public Error {
public:
    using Error::Error;
};

class DegenerateProjection : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace qrsr
