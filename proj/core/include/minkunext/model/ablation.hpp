#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "minkunext/model/arch_config.hpp"

namespace minkunext {

/// One step of the design progress from MinkUNet34C to MinkUNeXt.
struct AblationStep {
  std::string id;
  std::string description;
  /// Step this one modifies; empty for the starting point.
  std::string parent;
  ArchConfig config;
  /// Sign of parameter-count change relative to the parent (-1, 0, +1).
  int expected_param_direction = 0;
};

/// All steps in roadmap order: G1.1-G1.3, G2.1, G2.2, G3.1, G3.2, G4, R1, R2,
/// R3.1, R3.2, R4, R5.1-R5.3. R5.3 is the final architecture.
const std::vector<AblationStep>& ablation_steps();

/// Throws std::invalid_argument for an unknown id.
const AblationStep& ablation_step(std::string_view id);

}  // namespace minkunext
