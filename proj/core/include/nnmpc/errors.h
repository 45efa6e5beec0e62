#pragma once

#include <stdexcept>
#include <string>

namespace nnmpc {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class FileError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class IntegrationFailure : public Error {
 public:
  using Error::Error;
};

class EquilibriumNotFound : public Error {
 public:
  using Error::Error;
};

class InfeasibleEquilibrium : public Error {
 public:
  using Error::Error;
};

// The DC gain C (I - A)^-1 B is singular.
class InvalidPlant : public Error {
 public:
  using Error::Error;
};

class SynthesisFailure : public Error {
 public:
  using Error::Error;
};

class TrainingFailure : public Error {
 public:
  TrainingFailure(const std::string& what, int epoch)
      : Error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace nnmpc
