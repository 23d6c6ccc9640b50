#pragma once

#include <stdexcept>
#include <string>

namespace krylov_td {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or length mismatch between inputs.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Loss of orthogonality, eigensolver failure, invalid square roots.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::string snapshot = {})
      : Error(what), snapshot_(std::move(snapshot)) {}
  const std::string& snapshot() const { return snapshot_; }

 private:
  std::string snapshot_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string path = {})
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, int node) : Error(what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

}  // namespace krylov_td
