#include "tubalreg/error.hpp"

namespace tubalreg {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::DimMismatch: return "DimMismatch";
    case Errc::SymmetryViolation: return "SymmetryViolation";
    case Errc::SvdFailure: return "SvdFailure";
    case Errc::NegativeWeight: return "NegativeWeight";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::NegativeSingularValue: return "NegativeSingularValue";
    case Errc::WeightOrderViolation: return "WeightOrderViolation";
    case Errc::DomainError: return "DomainError";
    case Errc::NonBinaryLabel: return "NonBinaryLabel";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::FoldTooSmall: return "FoldTooSmall";
    case Errc::RankTooLarge: return "RankTooLarge";
    case Errc::BadParameter: return "BadParameter";
    case Errc::TooSmall: return "TooSmall";
    case Errc::NonFinite: return "NonFinite";
    case Errc::IoError: return "IoError";
    case Errc::ParseError: return "ParseError";
    case Errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace tubalreg
