#pragma once

#include <stdexcept>
#include <string>

namespace sheetloc {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class TooFewPoints : public Error {
 public:
  using Error::Error;
};

class MissingChannel : public Error {
 public:
  using Error::Error;
};

class EmptyCloud : public Error {
 public:
  using Error::Error;
};

class EmptyScene : public Error {
 public:
  using Error::Error;
};

class WrongImageKind : public Error {
 public:
  using Error::Error;
};

class DegeneratePolygon : public Error {
 public:
  using Error::Error;
};

class DegenerateNeighborhood : public Error {
 public:
  using Error::Error;
};

class NoCorrespondences : public Error {
 public:
  using Error::Error;
};

class InsufficientDepthPixels : public Error {
 public:
  using Error::Error;
};

class BeaconCountMismatch : public Error {
 public:
  using Error::Error;
};

class AmbiguousLabelling : public Error {
 public:
  using Error::Error;
};

class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

class InsufficientMotion : public Error {
 public:
  using Error::Error;
};

class TooFewSamples : public Error {
 public:
  using Error::Error;
};

class InvalidTransform : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// File parse failure; carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line = -1)
      : Error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

class MissingCoordinateProperty : public ParseError {
 public:
  using ParseError::ParseError;
};

}  // namespace sheetloc
