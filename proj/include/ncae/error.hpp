#pragma once

#include <stdexcept>
#include <string>

namespace ncae {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller violated an operation's precondition (bad shape, bad config value).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// A value became NaN/Inf during numeric work.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ncae
