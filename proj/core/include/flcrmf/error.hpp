#pragma once

#include <stdexcept>
#include <string>

namespace flcrmf {

/// Malformed or inconsistent user input (files, configuration, dimensions).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical routine could not produce a usable result
/// (singular system, non-finite objective, degenerate spectrum).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace flcrmf
