#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tubalreg {

/// Failure categories raised by the library. Each value names one
/// contract violation; callers switch on code() rather than parse text.
enum class Errc {
  DimMismatch,
  SymmetryViolation,
  SvdFailure,
  NegativeWeight,
  NegativeInput,
  NegativeSingularValue,
  WeightOrderViolation,
  DomainError,
  NonBinaryLabel,
  EmptyGrid,
  FoldTooSmall,
  RankTooLarge,
  BadParameter,
  TooSmall,
  NonFinite,
  IoError,
  ParseError,
  BadConfig,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace tubalreg
