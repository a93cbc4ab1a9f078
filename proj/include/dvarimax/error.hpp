#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace dvarimax {

enum class ErrorKind {
  Dimension,
  Parameter,
  Domain,
  RankDeficient,
  CorrectionInfeasible,
  Divergence,
  DegenerateSolutions,
  DegenerateProjector,
  DegenerateSlicing,
  NoSignal,
  Io,
  Parse,
  Config,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the library. `index` carries the offending
/// eigenvalue, column or iteration index when the failure has one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<long> index = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<long> index() const noexcept { return index_; }

 private:
  ErrorKind kind_;
  std::optional<long> index_;
};

}  // namespace dvarimax
