#pragma once

#include <string>

#include "sheetloc/core/transform.hpp"

namespace sheetloc {

/// Candidate object pose with its matching score in [0, 1] (fraction of
/// model points covered by the scene) and the wall time that produced it.
struct MatchResult {
  std::string model_id;
  RigidTransform pose;  // model frame -> scene/camera frame
  double score = 0.0;
  double duration_s = 0.0;
};

}  // namespace sheetloc
