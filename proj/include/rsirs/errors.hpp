#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsirs {

enum class ErrorKind {
  invalid_incidence,
  domain,
  invalid_rate,
  invalid_generator,
  reducible,
  numeric,
  stiffness,
  no_endemic_equilibrium,
  not_persistent,
  unsupported,
  cannot_seed_gamma,
  incompatible_histograms,
  config,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_incidence: return "invalid-incidence";
    case ErrorKind::domain: return "domain";
    case ErrorKind::invalid_rate: return "invalid-rate";
    case ErrorKind::invalid_generator: return "invalid-generator";
    case ErrorKind::reducible: return "reducible";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::stiffness: return "stiffness";
    case ErrorKind::no_endemic_equilibrium: return "no-endemic-equilibrium";
    case ErrorKind::not_persistent: return "not-persistent";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::cannot_seed_gamma: return "cannot-seed-gamma";
    case ErrorKind::incompatible_histograms: return "incompatible-histograms";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  /// `location` is a JSON pointer into the offending input, e.g. "/generator/rates/1".
  Error(ErrorKind kind, const std::string& what, std::string location)
      : std::runtime_error(what), kind_(kind), location_(std::move(location)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& location() const noexcept { return location_; }

 private:
  ErrorKind kind_;
  std::string location_;
};

}  // namespace rsirs
