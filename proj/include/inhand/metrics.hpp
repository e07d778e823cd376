#ifndef INHAND_METRICS_HPP
#define INHAND_METRICS_HPP

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "inhand/pipeline.hpp"

namespace inhand {

struct ProbeError {
  std::string object;
  std::string probe;
  ProbeKind kind = ProbeKind::kDiameter;
  double ground_truth = 0.0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string failure;

  double abs_error() const { return std::abs(estimate - ground_truth); }
  double normalized_error() const { return abs_error() / ground_truth; }
};

/// (1/P) * sum_p |p_est - p_gt| / p_gt over the successful length probes.
/// Volume probes are reported but left out of the average. NaN when no
/// probe qualifies.
inline double normalized_error(const std::vector<ProbeError>& probes) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : probes) {
    if (p.failed || p.kind == ProbeKind::kVolume) continue;
    sum += p.normalized_error();
    ++n;
  }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

inline std::vector<ProbeError> evaluate_probes(const std::string& object, const TriangleMesh& mesh,
                                               const std::vector<DimensionProbe>& probes,
                                               const std::string& mesh_error = {}) {
  std::vector<ProbeError> out;
  for (const auto& p : probes) {
    ProbeError e;
    e.object = object;
    e.probe = p.name;
    e.kind = p.kind;
    e.ground_truth = p.ground_truth;
    if (!mesh_error.empty()) {
      e.failed = true;
      e.failure = mesh_error;
    } else {
      try {
        e.estimate = measure_probe(mesh, p);
      } catch (const Error& err) {
        e.failed = true;
        e.failure = err.what();
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

struct SweepResult {
  std::vector<double> gammas;
  /// Per gamma, the raw probe table over all sequences.
  std::vector<std::vector<ProbeError>> probes;

  double error_at(std::size_t g) const { return normalized_error(probes.at(g)); }

  std::size_t failures_at(std::size_t g) const {
    std::size_t n = 0;
    for (const auto& p : probes.at(g)) n += p.failed;
    return n;
  }

  friend bool operator==(const SweepResult& a, const SweepResult& b) {
    if (a.gammas != b.gammas || a.probes.size() != b.probes.size()) return false;
    for (std::size_t g = 0; g < a.probes.size(); ++g) {
      if (a.probes[g].size() != b.probes[g].size()) return false;
      for (std::size_t i = 0; i < a.probes[g].size(); ++i) {
        const auto& x = a.probes[g][i];
        const auto& y = b.probes[g][i];
        const bool same_estimate = (std::isnan(x.estimate) && std::isnan(y.estimate)) || x.estimate == y.estimate;
        if (x.probe != y.probe || x.failed != y.failed || !same_estimate) return false;
      }
    }
    return true;
  }
};

inline void validate_gammas(const std::vector<double>& gammas) {
  if (gammas.empty()) throw Error(ErrorCode::kInvalidArgument, "gamma list is empty");
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] >= 0) || !std::isfinite(gammas[i]))
      throw Error(ErrorCode::kInvalidArgument, "gamma values must be finite and >= 0");
    if (i > 0 && !(gammas[i] > gammas[i - 1]))
      throw Error(ErrorCode::kInvalidArgument, "gamma values must be strictly increasing");
  }
}

/// Full reconstruction of every sequence at every gamma. A reconstruction or
/// measurement failure marks the affected probes as failed and the sweep
/// carries on; failed probes stay out of the normalized average.
inline SweepResult run_gamma_sweep(const std::vector<Sequence>& sequences, const std::vector<double>& gammas,
                                   const ReconstructOptions& base = {}) {
  validate_gammas(gammas);
  for (const auto& s : sequences)
    if (s.probes.empty()) throw Error(ErrorCode::kInvalidArgument, "sequence '" + s.name + "' has no probes");
  SweepResult result;
  result.gammas = gammas;
  const std::size_t cells = gammas.size() * sequences.size();
  std::vector<std::vector<ProbeError>> cell_probes(cells);
  // Cells run concurrently, each single-threaded inside, so the outcome does
  // not depend on the thread count.
  parallel_for(cells, base.registration.threads, [&](std::size_t c) {
    const std::size_t g = c / sequences.size(), s = c % sequences.size();
    ReconstructOptions options = base;
    options.registration.gamma_t = gammas[g];
    options.registration.threads = 1;
    try {
      const auto rec = reconstruct(sequences[s], options);
      cell_probes[c] = evaluate_probes(sequences[s].name, rec.mesh, sequences[s].probes, rec.mesh_error);
    } catch (const Error& e) {
      cell_probes[c] = evaluate_probes(sequences[s].name, {}, sequences[s].probes, e.what());
    }
  }, 2);
  result.probes.resize(gammas.size());
  for (std::size_t c = 0; c < cells; ++c)
    for (auto& p : cell_probes[c]) result.probes[c / sequences.size()].push_back(std::move(p));
  return result;
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& r) {
  out << "gamma,object,probe,kind,ground_truth,estimate,abs_error,normalized_error,failed\n";
  out.precision(10);
  for (std::size_t g = 0; g < r.gammas.size(); ++g)
    for (const auto& p : r.probes[g]) {
      out << r.gammas[g] << ',' << p.object << ',' << p.probe << ',' << to_string(p.kind) << ',' << p.ground_truth
          << ',';
      if (p.failed)
        out << ",,,1\n";
      else
        out << p.estimate << ',' << p.abs_error() << ',' << p.normalized_error() << ",0\n";
    }
}

inline void write_sweep_summary_csv(std::ostream& out, const SweepResult& r) {
  out << "gamma,normalized_error,failed_probes\n";
  out.precision(10);
  for (std::size_t g = 0; g < r.gammas.size(); ++g)
    out << r.gammas[g] << ',' << r.error_at(g) << ',' << r.failures_at(g) << '\n';
}

enum class EnergyConfig { kContactVisual, kContact, kDetectorVisual, kDetector };

inline const char* to_string(EnergyConfig c) {
  switch (c) {
    case EnergyConfig::kContactVisual: return "contact+visual";
    case EnergyConfig::kContact: return "contact";
    case EnergyConfig::kDetectorVisual: return "detector+visual";
    case EnergyConfig::kDetector: return "detector";
  }
  return "unknown";
}

struct EnergyRow {
  EnergyConfig config = EnergyConfig::kContactVisual;
  bool available = true;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stdev = std::numeric_limits<double>::quiet_NaN();
  std::size_t pairs = 0;          // annotated pairs evaluated
  std::size_t failed_frames = 0;  // annotated frames whose alignment failed
  std::string note;
};

/// Pairwise registration of each annotated frame k+1 onto frame k with the
/// sparse energy only, once per energy configuration, scored by the
/// annotation error over all annotated pairs. Frames whose alignment fails
/// are counted and left out.
inline std::vector<EnergyRow> compare_energies(const Sequence& seq, const RegistrationConfig& base = {}) {
  if (seq.annotations.empty()) throw Error(ErrorCode::kEmptyInput, "sequence has no annotated pairs");
  std::map<int, std::vector<std::pair<Point3, Point3>>> by_frame;
  for (const auto& a : seq.annotations) {
    if (a.frame < 0 || static_cast<std::size_t>(a.frame) + 1 >= seq.frames.size())
      throw Error(ErrorCode::kInvalidArgument, "annotation refers to a frame without a successor");
    by_frame[a.frame].push_back({a.source, a.target});
  }

  std::map<int, PreparedFrame> prepared;
  auto frame = [&](int k) -> const PreparedFrame& {
    auto it = prepared.find(k);
    if (it == prepared.end()) it = prepared.emplace(k, prepare_frame(seq.frames[k], seq.intrinsics, base)).first;
    return it->second;
  };

  std::vector<EnergyRow> rows;
  for (auto config : {EnergyConfig::kContactVisual, EnergyConfig::kContact, EnergyConfig::kDetectorVisual,
                      EnergyConfig::kDetector}) {
    EnergyRow row;
    row.config = config;
    const bool detector = config == EnergyConfig::kDetectorVisual || config == EnergyConfig::kDetector;
    const bool visual = config == EnergyConfig::kContactVisual || config == EnergyConfig::kDetectorVisual;
    std::vector<double> errors;
    for (const auto& [k, pairs] : by_frame) {
      const PreparedFrame& target = frame(k);
      const PreparedFrame& source = frame(k + 1);
      if (detector && (!source.detector_boxes || !target.detector_boxes)) {
        row.available = false;
        break;
      }
      std::vector<CorrespondenceSet> sets;
      if (visual) {
        if (source.feat2d_matches) sets.push_back(load_feat2d(*source.feat2d_matches, seq.intrinsics));
        sets.push_back(match_feat3d(source.object_cloud, target.object_cloud, base.feat3d, base.threads));
      }
      if (detector) {
        sets.push_back(detector_correspondences(source, target, seq.intrinsics));
      } else if (source.contacts && target.contacts) {
        sets.push_back(contact_correspondences(source.hand_pose, target.hand_pose, *source.contacts, *target.contacts));
      } else {
        sets.emplace_back(CorrespondenceTag::kContact);
      }
      try {
        const RigidTransform t = align_sparse(sets, base);
        for (const auto& [x, xp] : pairs) errors.push_back((xp - t(x)).norm());
      } catch (const Error& e) {
        ++row.failed_frames;
        row.note = e.what();
      }
    }
    if (!row.available) {
      row.note = "detector boxes missing";
    } else if (!errors.empty()) {
      double mean = 0.0;
      for (double e : errors) mean += e;
      mean /= errors.size();
      double var = 0.0;
      for (double e : errors) var += (e - mean) * (e - mean);
      row.mean = mean;
      row.stdev = std::sqrt(var / errors.size());
      row.pairs = errors.size();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// One block of rows per named sequence.
inline void write_energies_csv(std::ostream& out,
                               const std::vector<std::pair<std::string, std::vector<EnergyRow>>>& tables) {
  out << "sequence,config,statistic,value\n";
  out.precision(10);
  for (const auto& [name, rows] : tables)
    for (const auto& r : rows) {
      const std::string prefix = name + ',' + to_string(r.config) + ',';
      if (!r.available) {
        out << prefix << "available,0\n";
        continue;
      }
      out << prefix << "mean," << r.mean << '\n';
      out << prefix << "stdev," << r.stdev << '\n';
      out << prefix << "pairs," << r.pairs << '\n';
      out << prefix << "failed_frames," << r.failed_frames << '\n';
    }
}

}  // namespace inhand

#endif  // INHAND_METRICS_HPP
