#pragma once

#include <stdexcept>
#include <string>

namespace evf {

/// Library error carrying a stable machine-readable code. The code is what the
/// CLI writes into failures.jsonl; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

namespace errc {
inline constexpr const char* invalid_constitutive = "invalid-constitutive-parameters";
inline constexpr const char* singular_metric = "singular-metric";
inline constexpr const char* nonpositive_density = "nonpositive-density";
inline constexpr const char* nonpositive_temperature = "nonpositive-temperature";
inline constexpr const char* divergence_drift = "divergence-drift";
inline constexpr const char* non_finite = "non-finite-state";
inline constexpr const char* grid_mismatch = "grid-mismatch";
inline constexpr const char* invalid_grid = "invalid-grid";
inline constexpr const char* invalid_argument = "invalid-argument";
inline constexpr const char* parse_error = "parse-error";
inline constexpr const char* validation_error = "validation-error";
inline constexpr const char* io_error = "io-error";
}  // namespace errc

}  // namespace evf
