// Command-line front end for the perturbation + infinitesimal-deformation
// pipeline. Exit codes: 0 success, 2 config error, 3 admissibility failure,
// 4 solver failure, 5 verification failure.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "revbend/fieldcheck.hpp"
#include "revbend/io.hpp"
#include "revbend/modesolve.hpp"
#include "revbend/perturb.hpp"
#include "revbend/pipeline.hpp"
#include "revbend/profile.hpp"

namespace {

using namespace revbend;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ConfigError:
    case ErrorCode::IOError:
      return 2;
    case ErrorCode::AdmissibilityViolation:
    case ErrorCode::NoMorseAngleFound:
    case ErrorCode::CapCollision:
    case ErrorCode::MonotonicityLoss:
    case ErrorCode::PocketOutOfBounds:
    case ErrorCode::RootClusterError:
      return 3;
    default:
      return 4;
  }
}

SupportBox parse_box(const std::string& text) {
  std::vector<double> v;
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::strtod(item.c_str(), nullptr));
  if (v.size() != 4)
    fail(ErrorCode::ConfigError, "--box needs x0,x1,z0,z1");
  return {v[0], v[1], v[2], v[3]};
}

void parse_grid(const std::string& text, int* ns, int* nt) {
  const auto x = text.find('x');
  if (x == std::string::npos)
    fail(ErrorCode::ConfigError, "--grid needs SxT, e.g. 256x128");
  *ns = std::atoi(text.substr(0, x).c_str());
  *nt = std::atoi(text.substr(x + 1).c_str());
}

int cmd_analyze(const std::string& path) {
  const ProfileCurve curve = load_profile(path);
  const MorseReport rep = morse_report(curve);
  std::cout << "profile: " << path << "\n";
  std::cout << "min_radius = " << format_double(curve.min_radius()) << "\n";
  const SupportBox tb = curve.trace_bounds();
  std::cout << "trace_bounds = [" << format_double(tb.x_min) << ", "
            << format_double(tb.x_max) << "] x [" << format_double(tb.z_min)
            << ", " << format_double(tb.z_max) << "]\n";
  std::cout << "critical_points = " << rep.critical_points.size() << "\n";
  for (const auto& cp : rep.critical_points) {
    std::cout << "  s = " << format_double(cp.s) << "  (x, z) = ("
              << format_double(cp.point.x) << ", " << format_double(cp.point.z)
              << ")  h'' = " << format_double(cp.second_deriv) << "  kappa = "
              << format_double(cp.curvature) << "  "
              << (cp.degenerate ? "degenerate"
                                : (cp.index_sign > 0 ? "minimum" : "maximum"))
              << "\n";
  }
  std::cout << "is_morse = " << (rep.is_morse ? 1 : 0) << "\n";
  std::cout << "morse_margin = " << format_double(rep.margin) << "\n";
  return 0;
}

int cmd_perturb(const std::string& path, double theta_max, double d1,
                double d2, const std::string& box_text,
                const std::string& out_path) {
  const ProfileCurve curve = load_profile(path);
  SupportBox box;
  if (!box_text.empty()) {
    box = parse_box(box_text);
  } else {
    const SupportBox tb = curve.trace_bounds();
    const double mx = 0.25 * (tb.x_max - tb.x_min) + 0.1;
    const double mz = 0.25 * (tb.z_max - tb.z_min) + 0.1;
    box = {std::max(0.5 * tb.x_min, tb.x_min - mx), tb.x_max + mx,
           tb.z_min - mz, tb.z_max + mz};
  }
  auto [rotated, step] = rotate_to_morse(curve, box, theta_max);
  std::cout << "rotation theta = " << format_double(step.theta) << "\n";
  CapSegmentProfile capped = cap_critical_points(rotated, d1, d2, box);
  capped.provenance.insert(capped.provenance.begin(), step);
  std::cout << "caps = " << capped.caps.size()
            << ", segments = " << capped.segments.size() << "\n";
  for (const auto& st : capped.provenance)
    if (st.kind == PerturbationStep::Kind::Cap)
      std::cout << "  cap " << st.cap_index << " max_displacement = "
                << format_double(st.max_displacement) << "\n";
  save_capseg(capped, out_path);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_solve(const std::string& path, int k, bool auto_k,
              const std::string& dump_path, const std::string& field_path,
              int ns, int nt) {
  CapSegmentProfile profile = load_capseg(path);
  ModeOptions mo;
  // Pockets on demand so k_min is well defined before the solve.
  for (int i = 0; i < static_cast<int>(profile.segments.size()); ++i) {
    if (!profile.segments[i].pocket) {
      const Segment& sg = profile.segments[i];
      profile = insert_pocket(profile, i, 0.5 * (sg.zwin_lo + sg.zwin_hi),
                              default_pocket_delta2(profile, i,
                                                    mo.delta2_fraction),
                              0.0, mo.pocket);
    }
  }
  if (auto_k || k <= 0) {
    k = 2;
    for (int i = 0; i < static_cast<int>(profile.segments.size()); ++i)
      k = std::max(k, pocket_k_min(profile, i));
  }
  std::cout << "k = " << k << "\n";
  const ModeSolution mode = continue_mode(profile, k, mo);
  std::cout << "closure_sigma = " << format_double(mode.closure_sigma) << "\n";
  std::cout << "closure_psi2_defect = "
            << format_double(mode.closure_defect_psi2) << "\n";
  for (std::size_t i = 0; i < mode.pockets.size(); ++i)
    std::cout << "pocket " << i << ": t_hat = "
              << format_double(mode.pockets[i].t_hat) << " residual = "
              << format_double(mode.pockets[i].residual) << "\n";
  if (!dump_path.empty()) {
    save_mode_dump(mode, dump_path);
    std::cout << "wrote " << dump_path << "\n";
  }
  if (!field_path.empty()) {
    const DeformationField field = assemble_field(mode, ns, nt);
    save_field_csv(field, field_path);
    std::cout << "wrote " << field_path << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& capseg_path, const std::string& field_path,
               const std::string& grid_text, const std::string& eps_text,
               int k_opt) {
  const CapSegmentProfile profile = load_capseg(capseg_path);

  // Infer the grid from the CSV.
  std::ifstream in(field_path);
  if (!in) fail(ErrorCode::IOError, "cannot open " + field_path);
  std::string header;
  std::getline(in, header);
  if (header != "s,t,a,b,c,Zx,Zy,Zz")
    fail(ErrorCode::ParseError, field_path + ":1: unexpected field header");
  std::vector<std::array<double, 8>> rows;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<double, 8> row{};
    std::istringstream ss(line);
    std::string item;
    int col = 0;
    while (std::getline(ss, item, ',') && col < 8)
      row[col++] = std::strtod(item.c_str(), nullptr);
    if (col != 8)
      fail(ErrorCode::ParseError,
           field_path + ":" + std::to_string(line_no) + ": bad row");
    rows.push_back(row);
  }
  int nt_file = 0;
  while (nt_file < static_cast<int>(rows.size()) &&
         rows[nt_file][0] == rows[0][0])
    ++nt_file;
  if (nt_file == 0 || rows.size() % nt_file != 0)
    fail(ErrorCode::ParseError, "field CSV is not a full grid");
  const int ns_file = static_cast<int>(rows.size()) / nt_file;

  int ns = ns_file, nt = nt_file;
  if (!grid_text.empty()) parse_grid(grid_text, &ns, &nt);

  int k = k_opt;
  if (k <= 0) {
    CapSegmentProfile pp = profile;
    ModeOptions mo;
    for (int i = 0; i < static_cast<int>(pp.segments.size()); ++i)
      if (!pp.segments[i].pocket)
        fail(ErrorCode::ConfigError,
             "capseg has un-pocketed segments; pass --k or run solve first");
    k = 2;
    for (int i = 0; i < static_cast<int>(pp.segments.size()); ++i)
      k = std::max(k, pocket_k_min(pp, i));
  }

  const ModeOptions mo;
  const ModeSolution mode = continue_mode(profile, k, mo);
  const DeformationField recomputed = assemble_field(mode, ns_file, nt_file);

  // Cross-check the file samples against the recomputed field.
  double drift = 0.0;
  for (int is = 0; is < ns_file; ++is)
    for (int it = 0; it < nt_file; ++it) {
      const std::size_t id = recomputed.idx(is, it);
      const auto& row = rows[id];
      drift = std::max(drift, std::abs(row[2] - recomputed.a[id]));
      drift = std::max(drift, std::abs(row[3] - recomputed.b[id]));
      drift = std::max(drift, std::abs(row[4] - recomputed.c[id]));
      drift = std::max(drift, std::abs(row[5] - recomputed.Z[id].x));
      drift = std::max(drift, std::abs(row[6] - recomputed.Z[id].y));
      drift = std::max(drift, std::abs(row[7] - recomputed.Z[id].z));
    }

  std::vector<double> eps_list = {1e-2, 1e-3, 1e-4, 1e-5};
  if (!eps_text.empty()) {
    eps_list.clear();
    std::istringstream ss(eps_text);
    std::string item;
    while (std::getline(ss, item, ','))
      eps_list.push_back(std::strtod(item.c_str(), nullptr));
  }

  const DeformationField field = assemble_field(mode, ns, nt);
  const SurfaceGrid grid = SurfaceGrid::from_capseg(mode.profile, ns, nt);
  const ResidualReport rr = deformation_residuals(field, grid);
  const IsometryReport ir = isometry_order(field, grid, eps_list);
  const TrivialFit tf = triviality_fit(field, grid);
  const SmoothnessReport sr = smoothness_report(mode);
  const AdmissibilityReport ar = check_admissible(mode.profile,
                                                  mode.profile.box);

  std::cout << "k = " << k << "\n";
  std::cout << "file_drift = " << format_double(drift) << "\n";
  std::cout << "residual_rel_sup = " << format_double(rr.rel_sup) << "\n";
  std::cout << "isometry_slope = " << format_double(ir.slope) << "\n";
  std::cout << "triviality_residual = "
            << format_double(tf.relative_residual) << "\n";
  std::cout << "closure_psi2_rel = " << format_double(sr.closure_psi2_rel)
            << "\n";
  std::cout << "closure_psi3 = " << format_double(sr.closure_psi3)
            << " (reported only)\n";
  std::cout << "admissible = " << (ar.admissible ? 1 : 0)
            << " min_x = " << format_double(ar.min_x) << "\n";

  const bool ok = drift <= 1e-9 && rr.rel_sup <= 1e-8 &&
                  std::abs(ir.slope - 2.0) <= 0.1 &&
                  tf.relative_residual >= 0.1 &&
                  sr.closure_psi2_rel <= 1e-6 && ar.admissible;
  std::cout << (ok ? "VERIFY PASS" : "VERIFY FAIL") << "\n";
  return ok ? 0 : 5;
}

int cmd_export(const std::string& path, const std::string& obj_path,
               int frames, double epsilon, int k, const std::string& grid_text) {
  int ns = 64, nt = 64;
  if (!grid_text.empty()) parse_grid(grid_text, &ns, &nt);

  // Accept either a Fourier profile or a capseg file.
  std::ifstream probe(path);
  if (!probe) fail(ErrorCode::IOError, "cannot open " + path);
  std::string first;
  std::getline(probe, first);
  probe.close();

  if (first.find("revbend-profile") != std::string::npos) {
    const ProfileCurve curve = load_profile(path);
    const SurfaceGrid grid = SurfaceGrid::from_curve(curve, ns, nt);
    if (frames > 0)
      fail(ErrorCode::ConfigError,
           "frame export needs a capseg profile with a solvable mode");
    export_surface_obj(grid, obj_path);
    std::cout << "wrote " << obj_path << "\n";
    return 0;
  }

  CapSegmentProfile profile = load_capseg(path);
  const SurfaceGrid grid = SurfaceGrid::from_capseg(profile, ns, nt);
  if (frames <= 0) {
    export_surface_obj(grid, obj_path);
    std::cout << "wrote " << obj_path << "\n";
    return 0;
  }
  ModeOptions mo;
  for (int i = 0; i < static_cast<int>(profile.segments.size()); ++i)
    if (!profile.segments[i].pocket) {
      const Segment& sg = profile.segments[i];
      profile = insert_pocket(profile, i, 0.5 * (sg.zwin_lo + sg.zwin_hi),
                              default_pocket_delta2(profile, i,
                                                    mo.delta2_fraction),
                              0.0, mo.pocket);
    }
  if (k <= 0) {
    k = 2;
    for (int i = 0; i < static_cast<int>(profile.segments.size()); ++i)
      k = std::max(k, pocket_k_min(profile, i));
  }
  const ModeSolution mode = continue_mode(profile, k, mo);
  const SurfaceGrid tuned_grid = SurfaceGrid::from_capseg(mode.profile, ns, nt);
  const DeformationField field = assemble_field(mode, ns, nt);
  export_frames(tuned_grid, field, epsilon, frames, obj_path);
  std::cout << "wrote " << frames + 1 << " frames into " << obj_path << "\n";
  return 0;
}

int cmd_pipeline(const std::string& config_path) {
  const PipelineConfig config = PipelineConfig::from_file(config_path);
  const PipelineResult result = run_pipeline(config);
  std::cout << "stage = " << to_string(result.failed_stage) << "\n";
  if (!result.error.empty()) std::cout << "error = " << result.error << "\n";
  std::cout << "theta = " << format_double(result.theta) << "\n";
  if (result.perturbed)
    std::cout << "caps = " << result.perturbed->caps.size()
              << " segments = " << result.perturbed->segments.size() << "\n";
  std::cout << "k = " << result.k << "\n";
  if (result.residuals)
    std::cout << "residual_rel_sup = " << format_double(result.residuals->rel_sup)
              << "\n";
  if (result.isometry)
    std::cout << "isometry_slope = " << format_double(result.isometry->slope)
              << "\n";
  if (result.triviality)
    std::cout << "triviality_residual = "
              << format_double(result.triviality->relative_residual) << "\n";
  if (result.mode)
    std::cout << "closure_psi2_defect = "
              << format_double(result.mode->closure_defect_psi2) << "\n";
  std::cout << "runtime_seconds = " << format_double(result.runtime_seconds)
            << "\n";
  std::cout << (result.success ? "PIPELINE PASS" : "PIPELINE FAIL") << "\n";
  if (result.success) return 0;
  switch (result.failed_stage) {
    case PipelineStage::Config: return 2;
    case PipelineStage::Admissibility: return 3;
    case PipelineStage::Perturb:
    case PipelineStage::Solve: return 4;
    default: return 5;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surface-of-revolution perturbation and deformation pipeline"};
  app.require_subcommand(1);

  std::string profile_path, capseg_path, field_path, out_path, box_text,
      grid_text, eps_text, config_path;
  double theta_max = 1.5707963267948966, d1 = 0.2, d2 = 0.1, epsilon = 0.05;
  int k = 0, frames = 0;
  bool auto_k = false;

  auto* analyze = app.add_subcommand("analyze", "profile diagnostics");
  analyze->add_option("profile", profile_path)->required();

  auto* perturb = app.add_subcommand("perturb", "rotate to Morse and cap");
  perturb->add_option("profile", profile_path)->required();
  perturb->add_option("--theta-max", theta_max);
  perturb->add_option("--d1", d1);
  perturb->add_option("--d2", d2);
  perturb->add_option("--box", box_text);
  perturb->add_option("-o,--output", out_path)->default_val("perturbed.capseg");

  auto* solve = app.add_subcommand("solve", "solve one mode around the loop");
  solve->add_option("capseg", capseg_path)->required();
  solve->add_option("--k", k);
  solve->add_flag("--auto-k", auto_k);
  solve->add_option("-o,--output", out_path)->default_val("mode.txt");
  solve->add_option("--field", field_path);
  solve->add_option("--grid", grid_text)->default_val("256x128");

  auto* verify = app.add_subcommand("verify", "verify a field against a capseg");
  verify->add_option("capseg", capseg_path)->required();
  verify->add_option("field", field_path)->required();
  verify->add_option("--grid", grid_text);
  verify->add_option("--eps-list", eps_text);
  verify->add_option("--k", k);

  auto* exporter = app.add_subcommand("export", "export meshes or frames");
  exporter->add_option("input", capseg_path)->required();
  exporter->add_option("--obj", out_path);
  exporter->add_option("--frames", frames);
  exporter->add_option("--epsilon", epsilon);
  exporter->add_option("--k", k);
  exporter->add_option("--grid", grid_text);

  auto* pipeline = app.add_subcommand("pipeline", "run the full construction");
  pipeline->add_option("config", config_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(analyze)) return cmd_analyze(profile_path);
    if (app.got_subcommand(perturb))
      return cmd_perturb(profile_path, theta_max, d1, d2, box_text, out_path);
    if (app.got_subcommand(solve)) {
      int ns = 256, nt = 128;
      if (!grid_text.empty()) parse_grid(grid_text, &ns, &nt);
      return cmd_solve(capseg_path, k, auto_k, out_path, field_path, ns, nt);
    }
    if (app.got_subcommand(verify))
      return cmd_verify(capseg_path, field_path, grid_text, eps_text, k);
    if (app.got_subcommand(exporter)) {
      if (out_path.empty())
        fail(ErrorCode::ConfigError, "export needs --obj PATH");
      return cmd_export(capseg_path, out_path, frames, epsilon, k, grid_text);
    }
    if (app.got_subcommand(pipeline)) return cmd_pipeline(config_path);
  } catch (const revbend::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}
