#pragma once

#include <stdexcept>
#include <string>

namespace tato {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a mathematical function.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Invalid or degenerate acquisition geometry.
class GeometryError : public Error {
public:
  using Error::Error;
};

/// Malformed file, bad magic, unsupported version.
class FormatError : public Error {
public:
  using Error::Error;
};

/// Two objects that must share a geometry (or grid) do not.
class MismatchError : public Error {
public:
  using Error::Error;
};

}  // namespace tato
