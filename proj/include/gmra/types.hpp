#pragma once

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gmra {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Points are stored one per row.
using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ErrorCode {
  EmptyCell,
  AsymmetricInput,
  EmptyInput,
  DimensionExceedsCell,
  NodeNotFound,
  DimMismatch,
  ModelMismatch,
  NotApplicable,
  CostModelViolation,
  SpecError,
  ParseError,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

class GmraError : public std::runtime_error {
 public:
  GmraError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Cell address (scale j, key k).
struct NodeId {
  int j = 0;
  int k = 0;
  auto operator<=>(const NodeId&) const = default;
};

std::string to_string(const NodeId& id);

}  // namespace gmra
