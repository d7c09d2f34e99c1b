#pragma once

#include "gmra/gmra.hpp"
#include "gmra/ortho.hpp"

#include <cstdint>
#include <string>

namespace gmra {

// Policy text form: "<kind>:<eps or d>[;leaf=<kind>:<eps>]", kind in {fixed, relative, absolute}.
// A threshold may be a per-scale schedule written as values joined by '/'.
//   fixed:2   relative:0.5;leaf=relative:0.05   absolute:0.1/0.05/0.01
std::string format_policy(const DimensionPolicy& p);
DimensionPolicy parse_policy(const std::string& text);

// Model container, all integers uint64 and all reals float64, little-endian:
//   magic "GMRAMDL1" | format version | variant | model id | header length | header JSON
//   | payload count | payload
// The header holds the tree, policy and per-node shapes; the payload holds node arrays in
// tree order (matrices column-major). A JSON sidecar "<path>.json" summarises the model.
enum class ModelVariant : std::uint64_t { Gmra = 1, Orthogonal = 2 };

inline constexpr char kModelMagic[9] = "GMRAMDL1";
inline constexpr std::uint64_t kModelFormatVersion = 1;

void save_model(const GmraModel& model, const std::string& path);
GmraModel load_model(const std::string& path);
void save_model(const OrthoGmraModel& model, const std::string& path);
OrthoGmraModel load_ortho_model(const std::string& path);
ModelVariant peek_model_variant(const std::string& path);

std::string model_sidecar_json(const GmraModel& model);
std::string model_sidecar_json(const OrthoGmraModel& model);

}  // namespace gmra
