#pragma once

#include <optional>
#include <string>

#include "revbend/fieldcheck.hpp"
#include "revbend/io.hpp"
#include "revbend/modesolve.hpp"
#include "revbend/perturb.hpp"

namespace revbend {

struct PipelineConfig {
  std::string profile_path;
  std::string output_dir = "out";
  SupportBox box{0.0, 0.0, 0.0, 0.0};
  bool box_set = false;  // when false, a box is derived from the trace
  double theta_max = 1.5707963267948966;
  double delta1_fraction = 0.2;
  double delta2_fraction = 0.1;
  int mode_k = 0;  // 0 = auto from the pocket Sturm bounds
  double ode_tol = 1e-10;
  double shoot_tol = 1e-8;
  double closure_tol = 1e-6;
  double residual_threshold = 1e-8;
  int grid_s = 256;
  int grid_t = 128;
  double epsilon = 0.05;
  int frames = 0;  // 0 disables frame export
  bool gram_check = true;
  int obj_grid_s = 64;
  int obj_grid_t = 64;
  PocketParams pocket;

  static PipelineConfig from_file(const std::string& path);
  void validate() const;
  ModeOptions mode_options() const;
};

enum class PipelineStage {
  Config,
  Admissibility,
  Perturb,
  Solve,
  Verify,
  Export,
  Done,
};

const char* to_string(PipelineStage stage);

struct PipelineResult {
  bool success = false;
  PipelineStage failed_stage = PipelineStage::Done;
  std::string error;

  double theta = 0.0;
  int k = 0;
  std::optional<CapSegmentProfile> perturbed;
  std::optional<ModeSolution> mode;
  std::optional<ModeSolution> mode_next;  // k + 1, for the independence check
  std::optional<ResidualReport> residuals;
  std::optional<IsometryReport> isometry;
  std::optional<TrivialFit> triviality;
  std::optional<SmoothnessReport> smoothness;
  std::optional<AdmissibilityReport> admissibility;
  double gram_ratio = 0.0;
  double displacement_budget_spent = 0.0;
  double runtime_seconds = 0.0;

  // Per-criterion verification verdicts (filled during the verify stage).
  bool residuals_ok = false;
  bool isometry_ok = false;
  bool triviality_ok = false;
  bool closure_ok = false;
  bool shooting_ok = false;
  bool admissible_ok = false;
  bool gram_ok = true;
};

// Full construction: rotate to Morse, cap, pocket, solve one mode, verify,
// and write every artifact into config.output_dir. A result is produced
// even on partial failure, with the failed stage marked.
PipelineResult run_pipeline(const PipelineConfig& config);

// Watertight quad mesh of the surface of revolution (seam welded).
void export_surface_obj(const SurfaceGrid& grid, const std::string& path);

// Meshes of F + (j eps / n) Z for j = 0..n. Frame 0 is bit-identical to
// the base mesh. The motion is the linearization, not a bending; a README
// in the output directory says so.
void export_frames(const SurfaceGrid& grid, const DeformationField& field,
                   double eps, int n_frames, const std::string& dir);

void write_report(const PipelineResult& result, const PipelineConfig& config,
                  const std::string& path);

}  // namespace revbend
