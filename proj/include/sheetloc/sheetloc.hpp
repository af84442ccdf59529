#pragma once

// Umbrella header: 6D localisation of sheet-metal parts from depth-camera
// data — point-cloud refinement, surface-based (PPF) and depth-image shape
// matching, beacon-plate referencing, hand-eye calibration, and the
// synthetic scene generator used as ground-truth oracle.

#include "sheetloc/calib/beacon_plate.hpp"
#include "sheetloc/calib/hand_eye.hpp"
#include "sheetloc/calib/plate_pose.hpp"
#include "sheetloc/calib/session_io.hpp"
#include "sheetloc/core/camera.hpp"
#include "sheetloc/core/cloud_ops.hpp"
#include "sheetloc/core/depth_image.hpp"
#include "sheetloc/core/error.hpp"
#include "sheetloc/core/kdtree.hpp"
#include "sheetloc/core/match_result.hpp"
#include "sheetloc/core/pgm_io.hpp"
#include "sheetloc/core/ply_io.hpp"
#include "sheetloc/core/point_cloud.hpp"
#include "sheetloc/core/transform.hpp"
#include "sheetloc/match2d/contrast_image.hpp"
#include "sheetloc/match2d/lift.hpp"
#include "sheetloc/match2d/shape_match.hpp"
#include "sheetloc/match2d/template_pyramid.hpp"
#include "sheetloc/match3d/icp.hpp"
#include "sheetloc/match3d/matcher.hpp"
#include "sheetloc/match3d/ppf.hpp"
#include "sheetloc/match3d/workpiece.hpp"
#include "sheetloc/pipeline/bench.hpp"
#include "sheetloc/pipeline/config.hpp"
#include "sheetloc/pipeline/model_registry.hpp"
#include "sheetloc/pipeline/runner.hpp"
#include "sheetloc/refine/depth_edges.hpp"
#include "sheetloc/refine/filters.hpp"
#include "sheetloc/refine/plane.hpp"
#include "sheetloc/synth/render.hpp"
#include "sheetloc/synth/scan_report.hpp"
#include "sheetloc/synth/scene_spec.hpp"
