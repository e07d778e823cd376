// inhand: synth / reconstruct / eval driver.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "inhand/inhand.hpp"

namespace {

using namespace inhand;

enum Exit { kOk = 0, kUsage = 2, kInput = 3, kRegistration = 4, kMeshing = 5 };

constexpr double kSpanLow = 0.9;
constexpr double kSpanHigh = 1.1;
constexpr double kCollapseRotationDeg = 1.0;

struct Common {
  std::uint64_t seed = 1;
  int threads = 1;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads")->check(CLI::Range(1, 256))->capture_default_str();
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kIo:
    case ErrorCode::kParse:
    case ErrorCode::kEmptyInput:
    case ErrorCode::kInsufficientPoints: return kInput;
    case ErrorCode::kEmptyMesh:
    case ErrorCode::kOpenMesh: return kMeshing;
    case ErrorCode::kUnderConstrained:
    case ErrorCode::kDegenerateConfiguration:
    case ErrorCode::kNoContact:
    case ErrorCode::kDivergence: return kRegistration;
    default: return kUsage;
  }
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  Common common;
  std::string shape = "sphere";
  std::string preset;
  std::string name;
  std::optional<double> diameter, height, head_diameter, body_diameter;
  double density = 0.5;
  int dimples = 0;
  int frames = 24;
  double deg_per_frame = 6.0;
  double noise = 0.5;
  double tilt = 0.0;
  double tracking_noise = 0.0;
  bool ascii = false;
  std::string out;
};

SyntheticObjectSpec object_from_args(const SynthArgs& a) {
  SyntheticObjectSpec obj;
  if (!a.preset.empty()) {
    bool found = false;
    for (const auto& r : reference_objects())
      if (r.name == a.preset) obj = r, found = true;
    if (!found) throw UsageError("unknown preset '" + a.preset + "'");
  } else if (a.shape == "sphere") {
    obj = SyntheticObjectSpec::sphere(70.0);
  } else if (a.shape == "capsule") {
    obj = SyntheticObjectSpec::capsule_bottle("capsule-bottle", 73.0, 218.0);
  } else if (a.shape == "bowling-pin") {
    obj = SyntheticObjectSpec::bowling_pin(50.0, 82.0, 268.0);
  } else {
    throw UsageError("--shape must be sphere, capsule or bowling-pin");
  }
  if (a.diameter) obj.diameter = *a.diameter;
  if (a.height) obj.height = *a.height;
  if (a.head_diameter) obj.head_diameter = *a.head_diameter;
  if (a.body_diameter) obj.body_diameter = *a.body_diameter;
  if (!a.name.empty()) obj.name = a.name;
  obj.density = a.density;
  obj.dimples = a.dimples;
  obj.dimple_seed = a.common.seed;
  obj.validate();
  return obj;
}

int cmd_synth(const SynthArgs& a) {
  SyntheticObjectSpec obj;
  MotionScript motion;
  try {
    obj = object_from_args(a);
    if (!(a.noise >= 0)) throw Error(ErrorCode::kInvalidArgument, "noise must be >= 0");
    if (!(a.tracking_noise >= 0)) throw Error(ErrorCode::kInvalidArgument, "tracking-noise must be >= 0");
    motion = turning_motion(a.frames, a.deg_per_frame, a.noise, {0.0, 40.0, 650.0}, a.tilt);
  } catch (const Error& e) {
    std::cerr << "synth: " << e.what() << "\n";
    return kUsage;
  }
  HandSpec hand;
  hand.tracking_noise = a.tracking_noise;
  const Sequence seq = generate_sequence(obj, motion, hand, a.common.seed);
  ReconstructOptions options;
  options.registration.threads = a.common.threads;
  const auto manifest =
      write_sequence(a.out, seq, options, a.ascii ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian);
  std::cout << "wrote " << seq.frames.size() << " frames of " << obj.name << " to " << a.out << "/manifest.json\n";
  log::info("probes: ", seq.probes.size(), ", annotated pairs: ", seq.annotations.size());
  (void)manifest;
  return kOk;
}

// ---------------------------------------------------------------------------
// reconstruct

struct ReconstructArgs {
  Common common;
  std::string manifest;
  std::optional<double> gamma_t;
  bool no_contact = false;
  bool use_detector = false;
  bool no_icp = false;
  bool dump_tsdf = false;
  bool ascii = false;
  std::string out;
};

Json mesh_json(const TriangleMesh& mesh) {
  return Json{{"vertices", mesh.vertices.size()},
              {"triangles", mesh.triangles.size()},
              {"closed", is_closed(mesh)},
              {"euler_characteristic", euler_characteristic(mesh)}};
}

Json report_json(const SequenceManifest& m, const Sequence& seq, const ReconstructionResult& rec,
                 const ReconstructArgs& a) {
  Json report{{"version", 1}, {"sequence", m.name}, {"seed", a.common.seed}};
  report["config"] = to_json(m.options.registration);
  report["frames"] = rec.trajectory.size();
  report["skipped_frames"] = rec.skipped_frames;
  report["last_good_frame"] = rec.last_good_frame;
  report["metascan_points"] = rec.metascan_points;

  double sparse = 0.0, icp = 0.0;
  std::size_t registered = 0;
  std::map<std::string, std::size_t> totals;
  for (std::size_t i = 1; i < rec.trajectory.size(); ++i) {
    const auto& p = rec.trajectory[i];
    for (const auto& [k, v] : p.correspondence_counts) totals[k] += v;
    if (p.skipped) continue;
    sparse += p.sparse_residual;
    icp += p.icp_residual;
    ++registered;
  }
  report["mean_sparse_residual"] = registered ? sparse / registered : 0.0;
  report["mean_icp_residual"] = registered ? icp / registered : 0.0;
  report["correspondence_totals"] = totals;

  if (rec.mesh_error.empty()) {
    report["mesh"] = mesh_json(rec.mesh);
  } else {
    report["mesh"] = Json{{"error", rec.mesh_error}};
  }

  if (!seq.probes.empty()) {
    Json dims = Json::array();
    for (const auto& e : evaluate_probes(seq.name, rec.mesh, seq.probes, rec.mesh_error)) {
      Json d{{"name", e.probe}, {"kind", to_string(e.kind)}, {"ground_truth", e.ground_truth}};
      if (e.failed) {
        d["error"] = e.failure;
      } else {
        d["estimate"] = e.estimate;
        d["abs_error"] = e.abs_error();
        d["normalized_error"] = e.normalized_error();
      }
      dims.push_back(std::move(d));
    }
    report["dimensions"] = dims;
  }

  if (seq.gt_object_poses.size() >= rec.trajectory.size() && rec.trajectory.size() > 1) {
    const auto summary = summarize(per_pair_pose_errors(seq, rec.trajectory));
    const double span = rotation_span(seq, rec.trajectory);
    report["pose_error"] = Json{{"mean_rotation_deg", summary.mean_rotation_deg},
                                {"mean_translation_mm", summary.mean_translation_mm},
                                {"max_rotation_deg", summary.max_rotation_deg},
                                {"max_translation_mm", summary.max_translation_mm}};
    const bool span_bad = span < kSpanLow || span > kSpanHigh;
    const bool drift_bad = summary.mean_rotation_deg > kCollapseRotationDeg;
    report["collapse"] = Json{{"rotation_span", span},
                              {"rotation_span_range", {kSpanLow, kSpanHigh}},
                              {"mean_rotation_error_limit_deg", kCollapseRotationDeg},
                              {"rotation_span_out_of_range", span_bad},
                              {"suspected", span_bad || drift_bad}};
  }
  return report;
}

int cmd_reconstruct(const ReconstructArgs& a) {
  SequenceManifest m;
  Sequence seq;
  try {
    m = read_manifest(a.manifest);
    auto& reg = m.options.registration;
    if (a.gamma_t) reg.gamma_t = *a.gamma_t;
    if (a.no_contact) {
      reg.use_contact = false;
      reg.gamma_t = 0.0;
    }
    if (a.use_detector) reg.use_detector = true;
    if (a.no_icp) reg.use_icp = false;
    reg.threads = a.common.threads;
    m.options.validate();
    seq = load_sequence(m);
  } catch (const Error& e) {
    std::cerr << "reconstruct: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kUsage : kInput;
  }
  if (m.options.registration.use_contact && m.options.registration.gamma_t > 0 && !m.options.registration.use_detector) {
    for (const auto& f : seq.frames)
      if (f.hand_pose.vertices.empty()) {
        std::cerr << "reconstruct: frame " << f.frame_index << " has no hand pose input but gamma_t > 0\n";
        return kInput;
      }
  }

  ReconstructionResult rec;
  try {
    rec = reconstruct(seq, m.options);
  } catch (const Error& e) {
    std::cerr << "reconstruct: " << e.what() << "\n";
    return exit_code_for(e);
  }
  for (const auto& p : rec.trajectory)
    if (p.skipped) log::warn("frame ", p.frame_index, " skipped: ", p.status);

  auto out_path = [&](const std::string& manifest_rel, const char* name) {
    return a.out.empty() ? m.resolve(manifest_rel) : fs::path(a.out) / name;
  };
  const PlyFormat format = a.ascii ? PlyFormat::kAscii : PlyFormat::kBinaryLittleEndian;
  const Json report = report_json(m, seq, rec, a);
  write_file_atomic(out_path(m.outputs.trajectory, "trajectory.jsonl"), trajectory_jsonl(rec.trajectory));
  write_json_atomic(out_path(m.outputs.report, "report.json"), report);
  if (rec.mesh_error.empty()) {
    write_ply_atomic(out_path(m.outputs.mesh, "mesh.ply"), rec.mesh, format);
    write_obj_atomic(out_path(m.outputs.mesh_obj, "mesh.obj"), rec.mesh);
  }
  if (a.dump_tsdf && rec.volume) write_tsdf_dump(out_path(m.outputs.tsdf, "tsdf"), *rec.volume);

  std::cout << m.name << ": " << rec.trajectory.size() << " frames, " << rec.skipped_frames << " skipped";
  if (report.contains("pose_error"))
    std::cout << ", mean pair error " << report["pose_error"]["mean_rotation_deg"].get<double>() << " deg / "
              << report["pose_error"]["mean_translation_mm"].get<double>() << " mm";
  std::cout << "\n";
  if (report.contains("dimensions"))
    for (const auto& d : report["dimensions"])
      if (d.contains("estimate"))
        std::cout << "  " << d["name"].get<std::string>() << ": " << d["estimate"].get<double>() << " (truth "
                  << d["ground_truth"].get<double>() << ")\n";
  if (report.contains("collapse") && report["collapse"]["suspected"].get<bool>())
    std::cout << "  collapse suspected: rotation span " << report["collapse"]["rotation_span"].get<double>() << "\n";

  if (!rec.registered_any_pair()) {
    std::cerr << "reconstruct: registration failed for every frame; last good frame " << rec.last_good_frame << "\n";
    return kRegistration;
  }
  if (!rec.mesh_error.empty()) {
    std::cerr << "reconstruct: meshing failed: " << rec.mesh_error << "\n";
    return kMeshing;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  Common common;
  std::vector<std::string> manifests;
  std::optional<std::string> sweep_gammas;
  bool compare = false;
  std::string out = "eval";
};

std::vector<double> parse_gammas(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("bad gamma value '" + tok + "'");
    }
  }
  if (out.empty()) throw UsageError("--sweep-gammas needs at least one value");
  try {
    validate_gammas(out);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  if (!a.sweep_gammas && !a.compare) {
    std::cerr << "eval: pass --sweep-gammas and/or --compare-energies\n";
    return kUsage;
  }
  std::vector<double> gammas;
  if (a.sweep_gammas) {
    try {
      gammas = parse_gammas(*a.sweep_gammas);
    } catch (const UsageError& e) {
      std::cerr << "eval: " << e.what() << "\n";
      return kUsage;
    }
  }
  std::vector<SequenceManifest> manifests;
  std::vector<Sequence> sequences;
  try {
    for (const auto& path : a.manifests) {
      manifests.push_back(read_manifest(path));
      manifests.back().options.registration.threads = a.common.threads;
      sequences.push_back(load_sequence(manifests.back()));
    }
  } catch (const Error& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return kInput;
  }

  Json summary{{"version", 1}, {"seed", a.common.seed}};
  const fs::path out(a.out);
  try {
    if (a.sweep_gammas) {
      const SweepResult sweep = run_gamma_sweep(sequences, gammas, manifests.front().options);
      std::ostringstream rows, totals;
      write_sweep_csv(rows, sweep);
      write_sweep_summary_csv(totals, sweep);
      write_file_atomic(out / "sweep.csv", rows.str());
      write_file_atomic(out / "sweep_summary.csv", totals.str());
      Json s = Json::array();
      for (std::size_t g = 0; g < gammas.size(); ++g) {
        const double err = sweep.error_at(g);
        s.push_back({{"gamma", gammas[g]},
                     {"normalized_error", std::isnan(err) ? Json(nullptr) : Json(err)},
                     {"failed_probes", sweep.failures_at(g)}});
        std::cout << "gamma " << gammas[g] << ": normalized error " << err << " (" << sweep.failures_at(g)
                  << " failed probes)\n";
      }
      summary["sweep"] = s;
    }
    if (a.compare) {
      std::vector<std::pair<std::string, std::vector<EnergyRow>>> tables;
      Json e = Json::object();
      for (std::size_t i = 0; i < sequences.size(); ++i) {
        auto rows = compare_energies(sequences[i], manifests[i].options.registration);
        Json rj = Json::array();
        for (const auto& r : rows) {
          Json x{{"config", to_string(r.config)}, {"available", r.available}};
          if (r.available && r.pairs > 0) {
            x["mean"] = r.mean;
            x["stdev"] = r.stdev;
          }
          x["pairs"] = r.pairs;
          x["failed_frames"] = r.failed_frames;
          rj.push_back(std::move(x));
          std::cout << sequences[i].name << " " << to_string(r.config) << ": "
                    << (r.available ? std::to_string(r.mean) + " +- " + std::to_string(r.stdev) + " mm"
                                    : std::string("unavailable"))
                    << "\n";
        }
        e[sequences[i].name] = rj;
        tables.emplace_back(sequences[i].name, std::move(rows));
      }
      std::ostringstream csv;
      write_energies_csv(csv, tables);
      write_file_atomic(out / "energies.csv", csv.str());
      summary["energies"] = e;
    }
  } catch (const Error& e) {
    std::cerr << "eval: " << e.what() << "\n";
    return exit_code_for(e);
  }
  write_json_atomic(out / "eval.json", summary);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-hand scanning: synthetic data, contact-augmented registration, evaluation"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic sequence directory");
  add_common(s, synth.common);
  s->add_option("--shape", synth.shape, "sphere | capsule | bowling-pin")->capture_default_str();
  s->add_option("--preset", synth.preset, "water-bottle | bowling-pin | small-bottle | sphere");
  s->add_option("--name", synth.name, "Object name");
  s->add_option("--diameter", synth.diameter, "Sphere / capsule diameter, mm");
  s->add_option("--height", synth.height, "Capsule / pin height, mm");
  s->add_option("--head-diameter", synth.head_diameter, "Pin head diameter, mm");
  s->add_option("--body-diameter", synth.body_diameter, "Pin body diameter, mm");
  s->add_option("--density", synth.density, "Surface samples per mm^2")->capture_default_str();
  s->add_option("--dimples", synth.dimples, "Texture dimples")->capture_default_str();
  s->add_option("--frames", synth.frames, "Frame count")->capture_default_str();
  s->add_option("--deg-per-frame", synth.deg_per_frame, "Rotation per frame, degrees")->capture_default_str();
  s->add_option("--noise", synth.noise, "Sensor noise sigma, mm")->capture_default_str();
  s->add_option("--tilt", synth.tilt, "Turning axis tilt, degrees")->capture_default_str();
  s->add_option("--tracking-noise", synth.tracking_noise, "Fingertip tracking jitter, mm")->capture_default_str();
  s->add_flag("--ascii", synth.ascii, "Write ASCII PLY");
  s->add_option("--out", synth.out, "Output directory")->required();

  ReconstructArgs rec;
  auto* r = app.add_subcommand("reconstruct", "Register, fuse and mesh a sequence");
  add_common(r, rec.common);
  r->add_option("manifest", rec.manifest, "Sequence manifest")->required();
  r->add_option("--gamma-t", rec.gamma_t, "Contact weight");
  r->add_flag("--no-contact", rec.no_contact, "Drop the contact term (gamma_t = 0)");
  r->add_flag("--use-detector", rec.use_detector, "Replace contact pairs with detector-box pairs");
  r->add_flag("--no-icp", rec.no_icp, "Skip ICP refinement");
  r->add_flag("--dump-tsdf", rec.dump_tsdf, "Write the TSDF grid");
  r->add_flag("--ascii", rec.ascii, "Write ASCII PLY");
  r->add_option("--out", rec.out, "Output directory (default: manifest outputs)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Gamma sweep and energy comparison reports");
  add_common(e, ev.common);
  e->add_option("manifests", ev.manifests, "Sequence manifests")->required();
  e->add_option("--sweep-gammas", ev.sweep_gammas, "Comma-separated, strictly increasing");
  e->add_flag("--compare-energies", ev.compare, "Pairwise annotation error per energy configuration");
  e->add_option("--out", ev.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*r) return cmd_reconstruct(rec);
    if (*e) return cmd_eval(ev);
  } catch (const UsageError& err) {
    std::cerr << err.what() << "\n";
    return kUsage;
  } catch (const Error& err) {
    std::cerr << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kInput;
  }
  return kUsage;
}
