#include "gmra/types.hpp"

namespace gmra {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimensionExceedsCell: return "DimensionExceedsCell";
    case ErrorCode::NodeNotFound: return "NodeNotFound";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ModelMismatch: return "ModelMismatch";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::CostModelViolation: return "CostModelViolation";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string to_string(const NodeId& id) {
  return std::to_string(id.j) + "," + std::to_string(id.k);
}

}  // namespace gmra
