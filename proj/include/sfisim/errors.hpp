#pragma once

#include <stdexcept>
#include <string>

namespace sfisim {

/// Invalid model/case setup (bad sizes, out-of-range parameters, ...).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input data (CSV fields, config files).
class IngestionError : public std::runtime_error {
 public:
  explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

/// A simulation that cannot proceed (time-step cuts exhausted, solver breakdown).
class SimulationError : public std::runtime_error {
 public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sfisim
