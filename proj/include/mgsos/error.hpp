#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mgsos {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sizes of matrices, vectors or variable lists disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A polynomial was evaluated at a point that does not assign all its
/// variables.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Malformed SDP or SOS program.
class ProblemError : public Error {
 public:
  using Error::Error;
};

/// Feasible verdict whose witness did not survive re-validation.
class CertificateError : public Error {
 public:
  using Error::Error;
};

/// Config file violates the schema; the message carries the field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// The network model needs lossless branches.
class LosslessRequiredError : public Error {
 public:
  using Error::Error;
};

/// Removing buses split the network.
class TopologyError : public Error {
 public:
  TopologyError(const std::string& what, std::vector<std::vector<int>> components)
      : Error(what), components_(std::move(components)) {}
  const std::vector<std::vector<int>>& components() const { return components_; }

 private:
  std::vector<std::vector<int>> components_;
};

class PowerFlowError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgsos
