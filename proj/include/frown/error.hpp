#pragma once

#include <stdexcept>
#include <string>

namespace frown {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error
{
public:
    using Error::Error;
};

class ShapeError : public Error
{
public:
    using Error::Error;
};

/// A request the engine declines by design (e.g. an LP over an l2 ball).
class UnsupportedError : public Error
{
public:
    using Error::Error;
};

class SolverError : public Error
{
public:
    using Error::Error;
};

} // namespace frown
