#include "revbend/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace revbend {

namespace fs = std::filesystem;

const char* to_string(PipelineStage stage) {
  switch (stage) {
    case PipelineStage::Config: return "config";
    case PipelineStage::Admissibility: return "admissibility";
    case PipelineStage::Perturb: return "perturb";
    case PipelineStage::Solve: return "solve";
    case PipelineStage::Verify: return "verify";
    case PipelineStage::Export: return "export";
    case PipelineStage::Done: return "done";
  }
  return "unknown";
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config " + path);
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        fail(ErrorCode::ConfigError,
             path + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  auto get_d = [&](const char* key, double* out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    *out = std::strtod(it->second.c_str(), nullptr);
    kv.erase(it);
  };
  auto get_i = [&](const char* key, int* out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    *out = std::atoi(it->second.c_str());
    kv.erase(it);
  };
  auto get_s = [&](const char* key, std::string* out) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    *out = it->second;
    kv.erase(it);
  };

  get_s("profile", &cfg.profile_path);
  get_s("output_dir", &cfg.output_dir);
  if (auto it = kv.find("box"); it != kv.end()) {
    std::istringstream ss(it->second);
    char comma;
    std::vector<double> v;
    double x;
    while (ss >> x) {
      v.push_back(x);
      ss >> comma;
    }
    if (v.size() != 4)
      fail(ErrorCode::ConfigError, "box needs 4 comma-separated numbers");
    cfg.box = {v[0], v[1], v[2], v[3]};
    cfg.box_set = true;
    kv.erase(it);
  }
  if (auto it = kv.find("mode"); it != kv.end()) {
    if (it->second == "auto") cfg.mode_k = 0;
    else cfg.mode_k = std::atoi(it->second.c_str());
    kv.erase(it);
  }
  get_d("theta_max", &cfg.theta_max);
  get_d("delta1_fraction", &cfg.delta1_fraction);
  get_d("delta2_fraction", &cfg.delta2_fraction);
  get_d("ode_tol", &cfg.ode_tol);
  get_d("shoot_tol", &cfg.shoot_tol);
  get_d("closure_tol", &cfg.closure_tol);
  get_d("residual_threshold", &cfg.residual_threshold);
  get_i("grid_s", &cfg.grid_s);
  get_i("grid_t", &cfg.grid_t);
  get_d("epsilon", &cfg.epsilon);
  get_i("frames", &cfg.frames);
  get_i("obj_grid_s", &cfg.obj_grid_s);
  get_i("obj_grid_t", &cfg.obj_grid_t);
  get_d("pocket_concavity", &cfg.pocket.concavity);
  get_d("pocket_shape", &cfg.pocket.shape);
  if (auto it = kv.find("gram_check"); it != kv.end()) {
    cfg.gram_check = it->second == "1" || it->second == "true";
    kv.erase(it);
  }
  if (!kv.empty())
    fail(ErrorCode::ConfigError, "unknown config key '" + kv.begin()->first +
                                     "' in " + path);
  cfg.validate();
  return cfg;
}

void PipelineConfig::validate() const {
  if (profile_path.empty())
    fail(ErrorCode::ConfigError, "config needs a profile path");
  for (double tol : {ode_tol, shoot_tol, closure_tol, residual_threshold})
    if (!(tol > 0.0))
      fail(ErrorCode::ConfigError, "tolerances must be positive");
  if (!(theta_max > 0.0))
    fail(ErrorCode::ConfigError, "theta_max must be positive");
  if (grid_s < 2 || grid_t < 2)
    fail(ErrorCode::ConfigError, "verification grid must be at least 2 x 2");
  if (mode_k != 0 && mode_k < 2)
    fail(ErrorCode::ConfigError, "fixed mode number must satisfy k >= 2");
  if (box_set && !(box.x_min > 0.0))
    fail(ErrorCode::ConfigError, "support box must satisfy x_min > 0");
}

ModeOptions PipelineConfig::mode_options() const {
  ModeOptions mo;
  mo.ode_tol = ode_tol;
  mo.shoot_tol = shoot_tol;
  mo.closure_tol = closure_tol;
  mo.delta2_fraction = delta2_fraction;
  mo.pocket = pocket;
  return mo;
}

void export_surface_obj(const SurfaceGrid& grid, const std::string& path) {
  if (grid.n_s < 2 || grid.n_t < 2)
    fail(ErrorCode::IOError, "mesh export needs a grid of at least 2 x 2");
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IOError, "cannot write " + path);
  for (int is = 0; is < grid.n_s; ++is)
    for (int it = 0; it < grid.n_t; ++it) {
      const Vec3 p = grid.F(is, it);
      out << "v " << format_double(p.x) << " " << format_double(p.y) << " "
          << format_double(p.z) << "\n";
    }
  auto vid = [&](int is, int it) {
    return (is % grid.n_s) * grid.n_t + (it % grid.n_t) + 1;
  };
  for (int is = 0; is < grid.n_s; ++is)
    for (int it = 0; it < grid.n_t; ++it)
      out << "f " << vid(is, it) << " " << vid(is + 1, it) << " "
          << vid(is + 1, it + 1) << " " << vid(is, it + 1) << "\n";
}

void export_frames(const SurfaceGrid& grid, const DeformationField& field,
                   double eps, int n_frames, const std::string& dir) {
  if (field.n_s != grid.n_s || field.n_t != grid.n_t)
    fail(ErrorCode::GridMismatch, "frame export needs a shared grid");
  if (n_frames < 1) fail(ErrorCode::IOError, "need at least one frame");
  fs::create_directories(dir);
  {
    std::ofstream readme(dir + "/README.txt");
    readme << "Frames sample F + (j*eps/n)*Z for j = 0..n.\n"
           << "This is the first-order (linearized) motion of the field Z,\n"
           << "not a metric-preserving family: edge lengths drift like\n"
           << "eps^2 when Z passes verification.\n";
  }
  for (int j = 0; j <= n_frames; ++j) {
    const double factor = eps * j / n_frames;
    char name[64];
    std::snprintf(name, sizeof(name), "/frame_%03d.obj", j);
    std::ofstream out(dir + name);
    if (!out) fail(ErrorCode::IOError, "cannot write frame " + std::string(name));
    for (int is = 0; is < grid.n_s; ++is)
      for (int it = 0; it < grid.n_t; ++it) {
        const Vec3 p = grid.F(is, it) + factor * field.Z[field.idx(is, it)];
        out << "v " << format_double(p.x) << " " << format_double(p.y) << " "
            << format_double(p.z) << "\n";
      }
    auto vid = [&](int is, int it) {
      return (is % grid.n_s) * grid.n_t + (it % grid.n_t) + 1;
    };
    for (int is = 0; is < grid.n_s; ++is)
      for (int it = 0; it < grid.n_t; ++it)
        out << "f " << vid(is, it) << " " << vid(is + 1, it) << " "
            << vid(is + 1, it + 1) << " " << vid(is, it + 1) << "\n";
  }
}

void write_report(const PipelineResult& result, const PipelineConfig& config,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IOError, "cannot write " + path);
  auto d = [&](double v) { return format_double(v); };
  out << "revbend-report v1\n";
  out << "[pipeline]\n";
  out << "success = " << (result.success ? 1 : 0) << "\n";
  out << "failed_stage = " << to_string(result.failed_stage) << "\n";
  if (!result.error.empty()) out << "error = " << result.error << "\n";
  out << "theta = " << d(result.theta) << "\n";
  out << "k = " << result.k << "\n";
  out << "displacement_budget_spent = " << d(result.displacement_budget_spent)
      << "\n";
  if (result.perturbed) {
    out << "caps = " << result.perturbed->caps.size() << "\n";
    out << "segments = " << result.perturbed->segments.size() << "\n";
  }
  if (result.mode) {
    out << "[shooting]\n";
    for (std::size_t i = 0; i < result.mode->pockets.size(); ++i) {
      const auto& shot = result.mode->pockets[i];
      out << "pocket_" << i << "_t_hat = " << d(shot.t_hat) << "\n";
      out << "pocket_" << i << "_residual = " << d(shot.residual) << "\n";
      out << "pocket_" << i << "_count_jump = " << shot.count_jump << "\n";
      out << "pocket_" << i << "_k_min = " << shot.k_min << "\n";
    }
    out << "closure_sigma = " << d(result.mode->closure_sigma) << "\n";
    out << "closure_psi2_defect = " << d(result.mode->closure_defect_psi2)
        << "\n";
    out << "closure_psi3_jump = " << d(result.mode->closure_defect_psi3)
        << "\n";
    out << "closure_amp = " << d(result.mode->closure_amp) << "\n";
  }
  if (result.residuals) {
    const auto& rr = *result.residuals;
    out << "[residuals]\n";
    out << "res_ss_sup = " << d(rr.res_ss_sup) << "\n";
    out << "res_ss_rms = " << d(rr.res_ss_rms) << "\n";
    out << "res_tt_sup = " << d(rr.res_tt_sup) << "\n";
    out << "res_tt_rms = " << d(rr.res_tt_rms) << "\n";
    out << "res_mixed_sup = " << d(rr.res_mixed_sup) << "\n";
    out << "res_mixed_rms = " << d(rr.res_mixed_rms) << "\n";
    out << "scale = " << d(rr.scale) << "\n";
    out << "rel_sup = " << d(rr.rel_sup) << "\n";
    out << "scheme = " << rr.scheme << "\n";
  }
  if (result.isometry) {
    out << "[isometry]\n";
    out << "slope = " << d(result.isometry->slope) << "\n";
    out << "degenerate = " << (result.isometry->degenerate ? 1 : 0) << "\n";
    for (std::size_t i = 0; i < result.isometry->eps.size(); ++i)
      out << "defect_" << d(result.isometry->eps[i]) << " = "
          << d(result.isometry->defect[i]) << "\n";
  }
  if (result.triviality) {
    out << "[triviality]\n";
    out << "mu = " << d(result.triviality->mu.x) << " "
        << d(result.triviality->mu.y) << " " << d(result.triviality->mu.z)
        << "\n";
    out << "omega = " << d(result.triviality->omega.x) << " "
        << d(result.triviality->omega.y) << " "
        << d(result.triviality->omega.z) << "\n";
    out << "relative_residual = " << d(result.triviality->relative_residual)
        << "\n";
    out << "normal_residual = " << d(result.triviality->normal_residual)
        << "\n";
  }
  if (result.smoothness) {
    out << "[smoothness]\n";
    for (const auto& jj : result.smoothness->junctions) {
      out << "junction_cap" << jj.cap << "_side" << (jj.xside > 0 ? "R" : "L")
          << (jj.closure ? "_closure" : "") << " = " << d(jj.jump[0]) << " "
          << d(jj.jump[1]) << " " << d(jj.jump[2]) << " " << d(jj.jump[3])
          << "\n";
    }
    out << "closure_psi2_rel = " << d(result.smoothness->closure_psi2_rel)
        << "\n";
    out << "closure_psi3 = " << d(result.smoothness->closure_psi3) << "\n";
  }
  if (result.admissibility) {
    out << "[admissibility]\n";
    out << "admissible = " << (result.admissibility->admissible ? 1 : 0)
        << "\n";
    out << "min_x = " << d(result.admissibility->min_x) << "\n";
    out << "clearance = " << d(result.admissibility->clearance) << "\n";
  }
  if (config.gram_check && result.mode_next) {
    out << "[mode_independence]\n";
    out << "gram_min_singular_ratio = " << d(result.gram_ratio) << "\n";
  }
  out << "[verdicts]\n";
  out << "residuals_ok = " << (result.residuals_ok ? 1 : 0) << "\n";
  out << "isometry_ok = " << (result.isometry_ok ? 1 : 0) << "\n";
  out << "triviality_ok = " << (result.triviality_ok ? 1 : 0) << "\n";
  out << "closure_ok = " << (result.closure_ok ? 1 : 0) << "\n";
  out << "shooting_ok = " << (result.shooting_ok ? 1 : 0) << "\n";
  out << "admissible_ok = " << (result.admissible_ok ? 1 : 0) << "\n";
  out << "gram_ok = " << (result.gram_ok ? 1 : 0) << "\n";
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  PipelineResult result;
  const auto t_start = std::chrono::steady_clock::now();
  auto finish = [&](PipelineResult& res) -> PipelineResult& {
    res.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    return res;
  };

  fs::create_directories(config.output_dir);

  // ---- Load + admissibility gate (before any solver work).
  std::optional<ProfileCurve> curve;
  SupportBox box = config.box;
  try {
    config.validate();
  } catch (const Error& e) {
    result.failed_stage = PipelineStage::Config;
    result.error = e.what();
    write_report(result, config, config.output_dir + "/report.txt");
    return finish(result);
  }
  try {
    curve = load_profile(config.profile_path);
    if (!config.box_set) {
      const SupportBox tb = curve->trace_bounds();
      const double mx = 0.25 * (tb.x_max - tb.x_min) + 0.1;
      const double mz = 0.25 * (tb.z_max - tb.z_min) + 0.1;
      box = {std::max(0.5 * tb.x_min, tb.x_min - mx), tb.x_max + mx,
             tb.z_min - mz, tb.z_max + mz};
    }
    const SupportBox tb = curve->trace_bounds();
    if (!(box.x_min > 0.0) || !box.contains(tb) || !(tb.x_min > 0.0))
      fail(ErrorCode::AdmissibilityViolation,
           "profile trace is not strictly inside box intersect {x > 0}");
  } catch (const Error& e) {
    result.failed_stage = e.code() == ErrorCode::ParseError ||
                                  e.code() == ErrorCode::IOError ||
                                  e.code() == ErrorCode::ConfigError
                              ? PipelineStage::Config
                              : PipelineStage::Admissibility;
    result.error = e.what();
    write_report(result, config, config.output_dir + "/report.txt");
    return finish(result);
  }

  // ---- Perturbations: rotation, caps, pockets.
  try {
    auto [rotated, rot_step] = rotate_to_morse(*curve, box, config.theta_max);
    result.theta = rot_step.theta;
    CapSegmentProfile capped = cap_critical_points(
        rotated, config.delta1_fraction, config.delta2_fraction, box);
    capped.provenance.insert(capped.provenance.begin(), rot_step);
    for (int i = 0; i < static_cast<int>(capped.segments.size()); ++i) {
      const Segment& sg = capped.segments[i];
      const double z0 = 0.5 * (sg.zwin_lo + sg.zwin_hi);
      const double d2 = default_pocket_delta2(capped, i,
                                              config.delta2_fraction);
      capped = insert_pocket(capped, i, z0, d2, 0.0, config.pocket);
    }
    double budget = 0.0;
    for (const auto& st : capped.provenance)
      budget = std::max(budget, st.max_displacement);
    result.displacement_budget_spent = budget;
    result.perturbed = std::move(capped);
    save_capseg(*result.perturbed, config.output_dir + "/perturbed.capseg");
    {
      std::ofstream steps(config.output_dir + "/steps.txt");
      for (const auto& st : result.perturbed->provenance) {
        const char* kind = st.kind == PerturbationStep::Kind::Rotation
                               ? "rotation"
                               : st.kind == PerturbationStep::Kind::Cap
                                     ? "cap"
                                     : "pocket";
        steps << kind << " theta=" << format_double(st.theta)
              << " cap=" << st.cap_index << " seg=" << st.seg_index
              << " max_displacement=" << format_double(st.max_displacement)
              << " admissible=" << (st.admissible ? 1 : 0) << "\n";
      }
    }
  } catch (const Error& e) {
    result.failed_stage = e.code() == ErrorCode::AdmissibilityViolation ||
                                  e.code() == ErrorCode::CapCollision ||
                                  e.code() == ErrorCode::PocketOutOfBounds
                              ? PipelineStage::Admissibility
                              : PipelineStage::Perturb;
    result.error = e.what();
    write_report(result, config, config.output_dir + "/report.txt");
    return finish(result);
  }

  // ---- Mode solve with auto-k retry.
  const ModeOptions mo = config.mode_options();
  try {
    int k = config.mode_k;
    if (k == 0) {
      k = 2;
      for (int i = 0; i < static_cast<int>(result.perturbed->segments.size());
           ++i)
        k = std::max(k, pocket_k_min(*result.perturbed, i));
    }
    ModeSolution mode;
    bool solved = false;
    std::string last_error;
    for (int attempt = 0; attempt < 6 && !solved; ++attempt) {
      try {
        mode = continue_mode(*result.perturbed, k, mo);
        solved = true;
      } catch (const Error& e) {
        last_error = e.what();
        if (e.code() == ErrorCode::NoCountJump && k < 64) {
          ++k;  // the error text carries the estimate; step conservatively
          continue;
        }
        throw;
      }
    }
    if (!solved) fail(ErrorCode::NoCountJump, last_error);
    result.k = k;
    result.mode = std::move(mode);
    save_mode_dump(*result.mode,
                   config.output_dir + "/mode_k" + std::to_string(k) + ".txt");
  } catch (const Error& e) {
    result.failed_stage = PipelineStage::Solve;
    result.error = e.what();
    write_report(result, config, config.output_dir + "/report.txt");
    return finish(result);
  }

  // ---- Field assembly + verification.
  try {
    const DeformationField field =
        assemble_field(*result.mode, config.grid_s, config.grid_t);
    save_field_csv(field, config.output_dir + "/field_k" +
                              std::to_string(result.k) + ".csv");
    const SurfaceGrid grid = SurfaceGrid::from_capseg(
        result.mode->profile, config.grid_s, config.grid_t);
    result.residuals = deformation_residuals(field, grid);
    result.isometry =
        isometry_order(field, grid, {1e-2, 1e-3, 1e-4, 1e-5});
    result.triviality = triviality_fit(field, grid);
    result.smoothness = smoothness_report(*result.mode);
    result.admissibility =
        check_admissible(result.mode->profile, result.mode->profile.box);

    if (config.gram_check) {
      result.mode_next = continue_mode(*result.perturbed, result.k + 1, mo);
      DeformationField f2 =
          assemble_field(*result.mode_next, config.grid_s, config.grid_t);
      // Compare unit-normalized fields so pure scale cannot mask the angle.
      double n1 = 0.0, n2 = 0.0;
      for (std::size_t i = 0; i < field.Z.size(); ++i) {
        n1 += field.Z[i].dot(field.Z[i]);
        n2 += f2.Z[i].dot(f2.Z[i]);
      }
      DeformationField fa = field;
      const double s1 = 1.0 / std::sqrt(std::max(n1, 1e-300));
      const double s2 = 1.0 / std::sqrt(std::max(n2, 1e-300));
      for (std::size_t i = 0; i < fa.Z.size(); ++i) {
        fa.Z[i] = fa.Z[i] * s1;
        f2.Z[i] = f2.Z[i] * s2;
      }
      result.gram_ratio = gram_min_singular_ratio(fa, f2);
      result.gram_ok = result.gram_ratio >= 0.1;
    }

    result.residuals_ok = result.residuals->rel_sup <= config.residual_threshold;
    result.isometry_ok = !result.isometry->degenerate &&
                         std::abs(result.isometry->slope - 2.0) <= 0.1;
    result.triviality_ok = result.triviality->relative_residual >= 0.1;
    result.closure_ok =
        result.mode->closure_defect_psi2 <= config.closure_tol;
    result.shooting_ok = true;
    for (const auto& shot : result.mode->pockets)
      result.shooting_ok =
          result.shooting_ok && shot.residual <= config.shoot_tol;
    result.admissible_ok =
        result.admissibility->admissible && result.admissibility->min_x > 0.0;

    const SurfaceGrid mesh_grid = SurfaceGrid::from_capseg(
        result.mode->profile, config.obj_grid_s, config.obj_grid_t);
    export_surface_obj(mesh_grid, config.output_dir + "/surface.obj");
    if (config.frames > 0) {
      const DeformationField mesh_field = assemble_field(
          *result.mode, config.obj_grid_s, config.obj_grid_t);
      export_frames(mesh_grid, mesh_field, config.epsilon, config.frames,
                    config.output_dir + "/frames");
    }
  } catch (const Error& e) {
    result.failed_stage = PipelineStage::Verify;
    result.error = e.what();
    write_report(result, config, config.output_dir + "/report.txt");
    return finish(result);
  }

  result.success = result.residuals_ok && result.isometry_ok &&
                   result.triviality_ok && result.closure_ok &&
                   result.shooting_ok && result.admissible_ok &&
                   result.gram_ok;
  if (!result.success) result.failed_stage = PipelineStage::Verify;
  write_report(result, config, config.output_dir + "/report.txt");
  return finish(result);
}

}  // namespace revbend
