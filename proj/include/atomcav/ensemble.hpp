#pragma once

#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "atomcav/integrate.hpp"
#include "atomcav/rng.hpp"
#include "atomcav/spectrum.hpp"
#include "atomcav/state.hpp"

namespace atomcav {

// Samples initial states from the Wigner distribution of coherent states:
// every complex mode amplitude (and the cavity) gets (z1 + i z2)/2 of noise,
// i.e. quadrature std 1/2 and <|dphi|^2> = 1/2 per mode. Technical atom-number
// noise widens the condensate occupation to a Gaussian of std sigma_Na.
struct WignerSampler {
  SystemState mean;
  double technical_number_std = 0.0;  // sigma_Na; 0 for the ideal case
  int redraws = 0;                    // truncated-Gaussian redraw counter

  SystemState sample(std::uint64_t seed) {
    Rng rng(seed);
    SystemState out = mean;
    if (technical_number_std > 0.0) {
      // Rescale the condensate-mode modulus so its occupation is Gaussian
      // about the mean occupation (phase untouched); redraw negatives.
      cplx c0 = mean.modes.at(0, 0);
      double n0 = std::norm(c0);
      double n_drawn = -1.0;
      while (n_drawn <= 0.0) {
        n_drawn = n0 + technical_number_std * rng.gaussian();
        if (n_drawn <= 0.0) ++redraws;
      }
      out.modes.at(0, 0) = c0 * std::sqrt(n_drawn / n0);
    }
    cplx* amps = out.modes.data();
    for (std::size_t i = 0; i < out.modes.size(); ++i)
      amps[i] += 0.5 * rng.gaussian_pair();
    out.cavity += 0.5 * rng.gaussian_pair();
    return out;
  }
};

struct EnsembleSettings {
  int n_traj = 100;
  SimMode mode = SimMode::Twa;
  std::uint64_t master_seed = 0;
  int workers = 0;  // 0: hardware concurrency
};

struct AbortedTrajectory {
  int index = 0;
  std::string reason;
  double time = 0.0;
  int segment_index = -1;
};

struct EnsembleResult {
  std::vector<TrajectoryRecord> trajectories;  // completed, by index
  std::vector<int> indices;                    // original trajectory indices
  std::vector<AbortedTrajectory> aborted;
  SimMode mode = SimMode::Twa;
  std::uint64_t master_seed = 0;

  bool complete() const { return aborted.empty(); }
  std::size_t size() const { return trajectories.size(); }

  // Ensemble mean of one observable column across completed trajectories.
  std::vector<double> mean_column(
      const std::vector<double> TrajectoryRecord::* column) const {
    std::vector<double> acc;
    if (trajectories.empty()) return acc;
    acc.assign((trajectories.front().*column).size(), 0.0);
    for (const TrajectoryRecord& rec : trajectories) {
      const std::vector<double>& col = rec.*column;
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += col[i];
    }
    for (double& v : acc) v /= static_cast<double>(trajectories.size());
    return acc;
  }
};

inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs n indexed jobs on a small worker pool. Results are stored by index, so
// the outcome is independent of scheduling order.
template <typename Fn>
void parallel_for_indexed(int n, int workers, Fn&& fn) {
  workers = std::min(resolve_workers(workers), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

// Integrates n_traj independent trajectories with per-trajectory derived
// seeds. Mean-field mode uses the unsampled mean state, a single trajectory
// and no stochastic noise; TWA samples initial states and switches the cavity
// noise on. Aborting trajectories are collected, not fatal.
inline EnsembleResult run_ensemble(const WignerSampler& sampler,
                                   const DriveProgram& program,
                                   const IntegratorConfig& config,
                                   const SystemParams& params,
                                   const EnsembleSettings& settings) {
  if (settings.n_traj < 1)
    throw std::invalid_argument("ensemble needs n_traj >= 1");

  const bool mean_field = settings.mode == SimMode::MeanField;
  const int n = mean_field ? 1 : settings.n_traj;

  std::vector<std::optional<TrajectoryRecord>> slots(static_cast<std::size_t>(n));
  std::vector<std::optional<AbortedTrajectory>> faults(static_cast<std::size_t>(n));

  parallel_for_indexed(n, settings.workers, [&](int i) {
    IntegratorConfig cfg = config;
    cfg.rng_seed = derive_seed(settings.master_seed, 0x7261ull,
                               static_cast<std::uint64_t>(i));
    cfg.scheme = mean_field ? Scheme::Deterministic : Scheme::Stochastic;
    try {
      WignerSampler local = sampler;
      SystemState init = mean_field
                             ? sampler.mean
                             : local.sample(derive_seed(
                                   settings.master_seed, 0x696eull,
                                   static_cast<std::uint64_t>(i)));
      slots[static_cast<std::size_t>(i)] =
          integrate(init, program, cfg, params, settings.mode);
    } catch (const NumericalFault& f) {
      AbortedTrajectory a;
      a.index = i;
      a.reason = f.what();
      a.time = f.time;
      a.segment_index = f.segment_index;
      faults[static_cast<std::size_t>(i)] = a;
    }
  });

  EnsembleResult out;
  out.mode = settings.mode;
  out.master_seed = settings.master_seed;
  for (int i = 0; i < n; ++i) {
    if (slots[static_cast<std::size_t>(i)]) {
      out.trajectories.push_back(std::move(*slots[static_cast<std::size_t>(i)]));
      out.indices.push_back(i);
    } else if (faults[static_cast<std::size_t>(i)]) {
      out.aborted.push_back(*faults[static_cast<std::size_t>(i)]);
    }
  }
  return out;
}

// --- circular statistics -----------------------------------------------

inline double circular_mean(std::span<const double> phases) {
  double c = 0.0, s = 0.0;
  for (double p : phases) {
    c += std::cos(p);
    s += std::sin(p);
  }
  return std::atan2(s, c);
}

// Mean resultant length of {k * phase_i}.
inline double resultant_length(std::span<const double> phases, int k = 1) {
  if (phases.empty()) return 0.0;
  double c = 0.0, s = 0.0;
  for (double p : phases) {
    c += std::cos(k * p);
    s += std::sin(k * p);
  }
  return std::hypot(c, s) / static_cast<double>(phases.size());
}

// Rayleigh uniformity test p-value (Wilkie approximation); small p rejects
// the hypothesis of a uniform distribution on the circle.
inline double rayleigh_p_value(std::span<const double> phases, int k = 1) {
  const double n = static_cast<double>(phases.size());
  if (n < 2) return 1.0;
  const double r = resultant_length(phases, k);
  const double z = n * r * r;
  double p = std::exp(-z) *
             (1.0 + (2.0 * z - z * z) / (4.0 * n) -
              (24.0 * z - 132.0 * z * z + 76.0 * z * z * z - 9.0 * z * z * z * z) /
                  (288.0 * n * n));
  return std::clamp(p, 0.0, 1.0);
}

struct BranchSplit {
  bool valid = false;
  std::string failure_reason;
  double centers[2] = {0.0, 0.0};      // circular branch centers
  std::vector<int> branch_of;          // per-phase branch label (0/1)
  std::size_t occupancy[2] = {0, 0};
  double center_separation = 0.0;      // |wrap(c1 - c0)|
  double rayleigh_p_raw = 1.0;         // uniformity on the raw phases
  double rayleigh_p_doubled = 1.0;     // uniformity on doubled angles
};

// Two-means clustering on the circle with deterministic antipodal
// initialization from the doubled-angle mean direction. Succeeds only when
// the phases are genuinely bimodal with centers ~pi apart.
inline BranchSplit split_phases(std::span<const double> phases,
                                double tolerance = 0.5) {
  BranchSplit out;
  out.rayleigh_p_raw = rayleigh_p_value(phases, 1);
  out.rayleigh_p_doubled = rayleigh_p_value(phases, 2);
  if (phases.size() < 4) {
    out.failure_reason = "too few phases";
    return out;
  }

  const double r2 = resultant_length(phases, 2);
  if (r2 < 0.5 || out.rayleigh_p_doubled > 0.01) {
    out.failure_reason = "phases not bimodal (circular variance too high)";
    return out;
  }

  // Antipodal candidates from the doubled-angle mean.
  double c_s = 0.0, s_s = 0.0;
  for (double p : phases) {
    c_s += std::cos(2.0 * p);
    s_s += std::sin(2.0 * p);
  }
  double c0 = 0.5 * std::atan2(s_s, c_s);
  double c1 = wrap_phase(c0 + M_PI);

  out.branch_of.assign(phases.size(), 0);
  for (int iter = 0; iter < 32; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < phases.size(); ++i) {
      double d0 = std::abs(wrap_phase(phases[i] - c0));
      double d1 = std::abs(wrap_phase(phases[i] - c1));
      int label = d1 < d0 ? 1 : 0;
      if (label != out.branch_of[i]) {
        out.branch_of[i] = label;
        changed = true;
      }
    }
    double cs0 = 0.0, ss0 = 0.0, cs1 = 0.0, ss1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < phases.size(); ++i) {
      if (out.branch_of[i] == 0) {
        cs0 += std::cos(phases[i]);
        ss0 += std::sin(phases[i]);
        ++n0;
      } else {
        cs1 += std::cos(phases[i]);
        ss1 += std::sin(phases[i]);
        ++n1;
      }
    }
    if (n0 == 0 || n1 == 0) {
      out.failure_reason = "one branch is empty";
      return out;
    }
    c0 = std::atan2(ss0, cs0);
    c1 = std::atan2(ss1, cs1);
    out.occupancy[0] = n0;
    out.occupancy[1] = n1;
    if (!changed) break;
  }

  out.centers[0] = c0;
  out.centers[1] = c1;
  out.center_separation = std::abs(wrap_phase(c1 - c0));
  if (std::abs(out.center_separation - M_PI) > tolerance) {
    out.failure_reason = "branch centers are not pi apart";
    return out;
  }
  out.valid = true;
  return out;
}

struct PostSelection {
  BranchSplit split;
  std::vector<double> phases;            // per completed trajectory
  std::vector<double> mean_np[2];        // branch-averaged N_P(t)
  std::vector<double> mean_n11[2];       // branch-averaged N_11(t)
  std::size_t larger_branch() const {
    return split.occupancy[1] > split.occupancy[0] ? 1 : 0;
  }
};

// Extracts each trajectory's oscillation phase at `reference_frequency` over
// the analysis window, partitions into the two symmetry-broken branches and
// returns branch-averaged photon and momentum traces.
inline PostSelection post_select_by_phase(const EnsembleResult& ensemble,
                                          const DriveProgram& program,
                                          double reference_frequency,
                                          double tolerance = 0.5) {
  PostSelection out;
  for (const TrajectoryRecord& rec : ensemble.trajectories)
    out.phases.push_back(
        extract_phase(rec, program, reference_frequency).phase);
  out.split = split_phases(out.phases, tolerance);
  if (!out.split.valid) return out;

  const std::size_t len =
      ensemble.trajectories.empty() ? 0 : ensemble.trajectories.front().size();
  for (int b = 0; b < 2; ++b) {
    out.mean_np[b].assign(len, 0.0);
    out.mean_n11[b].assign(len, 0.0);
  }
  for (std::size_t i = 0; i < ensemble.trajectories.size(); ++i) {
    int b = out.split.branch_of[i];
    const TrajectoryRecord& rec = ensemble.trajectories[i];
    for (std::size_t j = 0; j < len; ++j) {
      out.mean_np[b][j] += rec.n_photon[j];
      out.mean_n11[b][j] += rec.n11[j];
    }
  }
  for (int b = 0; b < 2; ++b) {
    double n = static_cast<double>(out.split.occupancy[b]);
    for (std::size_t j = 0; j < len; ++j) {
      out.mean_np[b][j] /= n;
      out.mean_n11[b][j] /= n;
    }
  }
  return out;
}

}  // namespace atomcav
