#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "atomcav/ensemble.hpp"
#include "atomcav/spectrum.hpp"

namespace atomcav {

// Common knobs of a batch experiment; cells override params/protocol fields.
struct SweepConfig {
  SystemParams params;
  ProtocolConstants protocol;
  IntegratorConfig integrator;
  SimMode mode = SimMode::MeanField;
  int repetitions = 1;
  std::uint64_t master_seed = 1;
  int workers = 0;
  double symmetry_seed = 1e-4;         // mean-field branch seed
  double technical_number_std = 0.0;   // sigma_Na for TWA sampling
};

struct AxisSpec {
  std::string name;
  std::vector<double> values;
};

// Everything needed to simulate and analyze one grid cell.
struct CellSetup {
  SystemParams params;
  DriveProgram program;
  double technical_number_std = 0.0;
  double band_lo = 0.0, band_hi = 0.0;  // peak search band [rad/s]
  double target_ratio = 0.5;            // locked when omega_peak/omega_dr ~ this
};

struct CellAggregate {
  double s_raw_mean = 0.0, s_raw_std = 0.0;
  double ratio_mean = 0.0, ratio_std = 0.0;
  double amp_mean = 0.0, amp_std = 0.0;
  double phase = 0.0;           // circular mean over repetitions
  int n_completed = 0;
  int n_aborted = 0;
  int n_quasiperiodic = 0;
  bool locked = false;
};

struct CellResult {
  std::vector<double> coords;
  std::uint64_t seed = 0;
  CellAggregate agg;
  double s_rel = 0.0;  // batch-normalized subharmonic response
};

struct SweepResult {
  std::vector<AxisSpec> axes;
  std::vector<CellResult> cells;  // row-major over the axes
  std::size_t cell_count() const { return cells.size(); }

  const CellResult& at(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes.size(); ++d)
      flat = flat * axes[d].values.size() + idx[d];
    return cells[flat];
  }
};

namespace detail {

struct RepOutcome {
  bool ok = false;
  double s_raw = 0.0;
  double ratio = 0.0;
  double amp = 0.0;
  double phase = 0.0;
  bool quasiperiodic = false;
};

inline RepOutcome analyze_record(const TrajectoryRecord& rec,
                                 const CellSetup& setup) {
  RepOutcome out;
  const double omega_dr = setup.program.drive_frequency();
  Spectrum spec = photon_spectrum(rec);
  out.s_raw = omega_dr > 0.0 ? subharmonic_response(spec, omega_dr) : 0.0;
  PeakFit peak = fit_dominant_peak(spec, setup.band_lo, setup.band_hi);
  out.ratio = omega_dr > 0.0 ? peak.center / omega_dr : peak.center;
  out.amp = peak.amplitude;
  if (omega_dr > 0.0)
    out.phase = extract_phase(rec, setup.program, 0.5 * omega_dr).phase;
  SidebandReport sb = detect_sidebands(spec, peak.center, omega_dr);
  out.quasiperiodic = sb.classification == SpectralClass::Quasiperiodic;
  out.ok = true;
  return out;
}

inline std::uint64_t cell_seed(std::uint64_t master,
                               std::span<const double> coords) {
  std::uint64_t acc = master;
  for (double c : coords) acc = mix_word(acc, seed_word(c));
  return acc;
}

inline CellAggregate aggregate(std::span<const RepOutcome> reps,
                               const CellSetup& setup) {
  CellAggregate agg;
  std::vector<double> phases;
  double s1 = 0, s2 = 0, r1 = 0, r2 = 0, a1 = 0, a2 = 0;
  for (const RepOutcome& r : reps) {
    if (!r.ok) {
      ++agg.n_aborted;
      continue;
    }
    ++agg.n_completed;
    s1 += r.s_raw;
    s2 += r.s_raw * r.s_raw;
    r1 += r.ratio;
    r2 += r.ratio * r.ratio;
    a1 += r.amp;
    a2 += r.amp * r.amp;
    phases.push_back(r.phase);
    if (r.quasiperiodic) ++agg.n_quasiperiodic;
  }
  if (agg.n_completed == 0) return agg;
  const double n = agg.n_completed;
  agg.s_raw_mean = s1 / n;
  agg.ratio_mean = r1 / n;
  agg.amp_mean = a1 / n;
  if (agg.n_completed > 1) {
    agg.s_raw_std = std::sqrt(std::max(0.0, (s2 - n * agg.s_raw_mean * agg.s_raw_mean) / (n - 1)));
    agg.ratio_std = std::sqrt(std::max(0.0, (r2 - n * agg.ratio_mean * agg.ratio_mean) / (n - 1)));
    agg.amp_std = std::sqrt(std::max(0.0, (a2 - n * agg.amp_mean * agg.amp_mean) / (n - 1)));
  }
  agg.phase = circular_mean(phases);

  const double omega_dr = setup.program.drive_frequency();
  if (omega_dr > 0.0 && setup.program.analysis) {
    double bin_rad = kTwoPi / setup.program.analysis->length;
    agg.locked = std::abs(agg.ratio_mean - setup.target_ratio) * omega_dr <= bin_rad;
  }
  return agg;
}

}  // namespace detail

using CellBuilder = std::function<CellSetup(std::span<const double> coords)>;

// Runs a full grid: every (cell, repetition) pair is an independent job with
// a value-derived seed, so removing or adding cells never disturbs the
// others. Results are aggregated per cell and S is normalized over the batch.
inline SweepResult run_sweep(const SweepConfig& cfg,
                             std::vector<AxisSpec> axes,
                             const CellBuilder& builder) {
  for (const AxisSpec& ax : axes) {
    if (ax.values.empty()) throw std::invalid_argument("empty sweep axis");
    for (std::size_t i = 0; i + 1 < ax.values.size(); ++i)
      if (!(ax.values[i] < ax.values[i + 1]))
        throw std::invalid_argument("sweep axis must be strictly increasing");
  }
  if (cfg.repetitions < 1) throw std::invalid_argument("repetitions >= 1");

  std::size_t n_cells = 1;
  for (const AxisSpec& ax : axes) n_cells *= ax.values.size();
  const int reps = cfg.mode == SimMode::MeanField ? 1 : cfg.repetitions;

  // Cell coordinates in row-major order.
  std::vector<std::vector<double>> coords(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    std::size_t rem = c;
    coords[c].resize(axes.size());
    for (std::size_t d = axes.size(); d-- > 0;) {
      coords[c][d] = axes[d].values[rem % axes[d].values.size()];
      rem /= axes[d].values.size();
    }
  }

  std::vector<CellSetup> setups(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) setups[c] = builder(coords[c]);

  const std::size_t n_jobs = n_cells * static_cast<std::size_t>(reps);
  std::vector<detail::RepOutcome> outcomes(n_jobs);
  parallel_for_indexed(static_cast<int>(n_jobs), cfg.workers, [&](int j) {
    const std::size_t c = static_cast<std::size_t>(j) / reps;
    const int rep = j % reps;
    const CellSetup& setup = setups[c];
    std::uint64_t base = detail::cell_seed(cfg.master_seed, coords[c]);

    IntegratorConfig icfg = cfg.integrator;
    icfg.rng_seed = derive_seed(base, 0x7261ull, static_cast<std::uint64_t>(rep));
    icfg.scheme = cfg.mode == SimMode::MeanField ? Scheme::Deterministic
                                                 : Scheme::Stochastic;
    try {
      SystemState init = initial_state(setup.params, cfg.symmetry_seed);
      if (cfg.mode == SimMode::Twa) {
        WignerSampler sampler;
        sampler.mean = init;
        sampler.technical_number_std = setup.technical_number_std;
        init = sampler.sample(
            derive_seed(base, 0x696eull, static_cast<std::uint64_t>(rep)));
      }
      TrajectoryRecord rec =
          integrate(init, setup.program, icfg, setup.params, cfg.mode);
      outcomes[static_cast<std::size_t>(j)] = detail::analyze_record(rec, setup);
    } catch (const NumericalFault&) {
      outcomes[static_cast<std::size_t>(j)].ok = false;
    }
  });

  SweepResult result;
  result.axes = std::move(axes);
  result.cells.resize(n_cells);
  double s_max = 0.0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    CellResult& cell = result.cells[c];
    cell.coords = coords[c];
    cell.seed = detail::cell_seed(cfg.master_seed, coords[c]);
    cell.agg = detail::aggregate(
        std::span(outcomes).subspan(c * reps, static_cast<std::size_t>(reps)),
        setups[c]);
    s_max = std::max(s_max, cell.agg.s_raw_mean);
  }
  for (CellResult& cell : result.cells)
    cell.s_rel = s_max > 0.0 ? cell.agg.s_raw_mean / s_max : 0.0;
  return result;
}

// Default subharmonic peak-search band [0.3, 0.7] omega_dr.
inline void subharmonic_band(CellSetup& setup) {
  double omega_dr = setup.program.drive_frequency();
  setup.band_lo = 0.3 * omega_dr;
  setup.band_hi = 0.7 * omega_dr;
}

// --- named experiments ---------------------------------------------------

// Relative subharmonic response S over the (omega_dr, f0) plane.
inline SweepResult arnold_tongue(const SweepConfig& cfg,
                                 std::vector<double> omega_dr_values,
                                 std::vector<double> f0_values) {
  std::vector<AxisSpec> axes = {{"omega_dr", std::move(omega_dr_values)},
                                {"f0", std::move(f0_values)}};
  return run_sweep(cfg, axes, [&](std::span<const double> c) {
    CellSetup setup;
    setup.params = cfg.params;
    ProtocolConstants pc = cfg.protocol;
    pc.omega_dr = c[0];
    pc.f0 = c[1];
    setup.program = standard_protocol(pc);
    setup.technical_number_std = cfg.technical_number_std;
    subharmonic_band(setup);
    return setup;
  });
}

// omega_peak / omega_dr and fitted amplitude versus f0 for each waveform.
// The waveform axis is encoded 0 = sine, 1 = square, 2 = sawtooth.
inline SweepResult locking_curve(const SweepConfig& cfg,
                                 std::vector<double> f0_values,
                                 std::vector<Waveform> waveforms = {
                                     Waveform::Sine}) {
  std::vector<double> wf_ids;
  for (const Waveform& w : waveforms)
    wf_ids.push_back(static_cast<double>(static_cast<int>(w)));
  std::vector<AxisSpec> axes = {{"waveform", std::move(wf_ids)},
                                {"f0", std::move(f0_values)}};
  return run_sweep(cfg, axes, [&](std::span<const double> c) {
    CellSetup setup;
    setup.params = cfg.params;
    ProtocolConstants pc = cfg.protocol;
    pc.waveform = static_cast<Waveform>(static_cast<int>(c[0]));
    pc.f0 = c[1];
    setup.program = standard_protocol(pc);
    setup.technical_number_std = cfg.technical_number_std;
    subharmonic_band(setup);
    return setup;
  });
}

struct DetuningMapResult {
  SweepResult modulated;
  SweepResult unmodulated;
  std::size_t optimum_cell = 0;      // argmax of S over the modulated map
  double modulation_gain = 0.0;      // S_mod / S_unmod at the optimum
};

// S over the (delta_eff, eps_f) plane, with and without modulation.
inline DetuningMapResult detuning_pump_map(const SweepConfig& cfg,
                                           std::vector<double> delta_values,
                                           std::vector<double> eps_values) {
  auto build = [&](bool modulated) {
    SweepConfig c2 = cfg;
    return run_sweep(
        c2,
        {{"delta_eff", delta_values}, {"eps_f", eps_values}},
        [&, modulated](std::span<const double> c) {
          CellSetup setup;
          setup.params = cfg.params;
          setup.params.effective_detuning = c[0];
          ProtocolConstants pc = cfg.protocol;
          pc.epsilon_final = c[1];
          if (!modulated) pc.f0 = 0.0;
          setup.program = standard_protocol(pc);
          setup.technical_number_std = cfg.technical_number_std;
          subharmonic_band(setup);
          return setup;
        });
  };
  DetuningMapResult out;
  out.modulated = build(true);
  out.unmodulated = build(false);
  double best = -1.0;
  for (std::size_t i = 0; i < out.modulated.cells.size(); ++i)
    if (out.modulated.cells[i].agg.s_raw_mean > best) {
      best = out.modulated.cells[i].agg.s_raw_mean;
      out.optimum_cell = i;
    }
  double unmod = out.unmodulated.cells[out.optimum_cell].agg.s_raw_mean;
  out.modulation_gain = unmod > 0.0 ? best / unmod : 0.0;
  return out;
}

// Paper maximum noise amplitudes per target (absolute units).
inline double robustness_max_amplitude(NoiseTarget target, double f0) {
  switch (target) {
    case NoiseTarget::DeltaEff: return kTwoPi * 2.5e3;
    case NoiseTarget::EpsilonF: return 0.5;
    case NoiseTarget::F0: return f0;
    case NoiseTarget::OmegaDr: return kTwoPi * 20e3;
  }
  return 0.0;
}

// S versus relative white-noise strength on one pump parameter.
inline SweepResult robustness_scan(const SweepConfig& cfg, NoiseTarget target,
                                   std::vector<double> rel_strengths,
                                   double bandwidth_hz = 50e3) {
  std::vector<AxisSpec> axes = {{"rel_noise", std::move(rel_strengths)}};
  return run_sweep(cfg, axes, [&, target](std::span<const double> c) {
    CellSetup setup;
    setup.params = cfg.params;
    setup.program = standard_protocol(cfg.protocol);
    if (c[0] > 0.0) {
      NoiseChannel ch;
      ch.target = target;
      ch.amplitude = c[0] * robustness_max_amplitude(target, cfg.protocol.f0);
      ch.bandwidth_hz = bandwidth_hz;
      setup.program.noise.push_back(ch);
    }
    setup.technical_number_std = cfg.technical_number_std;
    subharmonic_band(setup);
    return setup;
  });
}

// Entrainment at omega_dr ~ omega_CTC (target ratio 1) or ~ omega_CTC/2
// (target ratio 2): omega_peak/omega_dr versus f0.
inline SweepResult ratio_scan(const SweepConfig& cfg, double omega_dr,
                              std::vector<double> f0_values,
                              double target_ratio) {
  std::vector<AxisSpec> axes = {{"f0", std::move(f0_values)}};
  return run_sweep(cfg, axes, [&, omega_dr, target_ratio](
                                  std::span<const double> c) {
    CellSetup setup;
    setup.params = cfg.params;
    ProtocolConstants pc = cfg.protocol;
    pc.omega_dr = omega_dr;
    pc.f0 = c[0];
    setup.program = standard_protocol(pc);
    setup.technical_number_std = cfg.technical_number_std;
    setup.band_lo = 0.55 * target_ratio * omega_dr;
    setup.band_hi = 1.45 * target_ratio * omega_dr;
    setup.target_ratio = target_ratio;
    return setup;
  });
}

struct FiniteSizeRow {
  double atom_number = 0.0;
  double xi_driven = 0.0;
  double xi_undriven = 0.0;
  bool driven_defined = false;
  bool undriven_defined = false;
};

// Relative crystalline fraction versus atom number at fixed N_a U_0:
// the TWA ensemble-averaged power-spectrum peak over the mean-field peak.
inline std::vector<FiniteSizeRow> finite_size_scan(
    const SweepConfig& cfg, std::vector<double> atom_numbers, int n_traj,
    double f0_driven = 0.15) {
  const double collective = cfg.params.atom_number * cfg.params.light_shift_per_photon;
  const double omega_dr = cfg.protocol.omega_dr;
  std::vector<FiniteSizeRow> rows;

  for (double n_a : atom_numbers) {
    SystemParams params = cfg.params;
    params.atom_number = n_a;
    params.light_shift_per_photon = collective / n_a;

    FiniteSizeRow row;
    row.atom_number = n_a;
    for (bool driven : {true, false}) {
      ProtocolConstants pc = cfg.protocol;
      pc.f0 = driven ? f0_driven : 0.0;
      DriveProgram program = standard_protocol(pc);

      IntegratorConfig icfg = cfg.integrator;
      icfg.scheme = Scheme::Deterministic;
      icfg.rng_seed = derive_seed(cfg.master_seed, seed_word(n_a), driven ? 1u : 0u);
      SystemState mean = initial_state(params, cfg.symmetry_seed);
      TrajectoryRecord mf_rec =
          integrate(mean, program, icfg, params, SimMode::MeanField);
      Spectrum mf_power = power_spectrum(photon_spectrum(mf_rec));

      WignerSampler sampler;
      sampler.mean = mean;
      sampler.technical_number_std = cfg.technical_number_std;
      EnsembleSettings settings;
      settings.n_traj = n_traj;
      settings.mode = SimMode::Twa;
      settings.master_seed =
          derive_seed(cfg.master_seed, seed_word(n_a), driven ? 3u : 2u);
      settings.workers = cfg.workers;
      EnsembleResult ens = run_ensemble(sampler, program, icfg, params, settings);

      // Ensemble-averaged per-trajectory power spectrum.
      Spectrum twa_power;
      bool first = true;
      for (const TrajectoryRecord& rec : ens.trajectories) {
        Spectrum sp = power_spectrum(photon_spectrum(rec));
        if (first) {
          twa_power = sp;
          first = false;
        } else {
          for (std::size_t k = 0; k < twa_power.amp.size(); ++k)
            twa_power.amp[k] += sp.amp[k];
        }
      }
      if (!first && !ens.trajectories.empty())
        for (cplx& c : twa_power.amp)
          c /= static_cast<double>(ens.trajectories.size());

      CrystallineFraction xi =
          first ? CrystallineFraction{}
                : crystalline_fraction(twa_power, mf_power, 0.25 * omega_dr,
                                       0.75 * omega_dr);
      if (driven) {
        row.xi_driven = xi.xi;
        row.driven_defined = xi.defined;
      } else {
        row.xi_undriven = xi.xi;
        row.undriven_defined = xi.defined;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

struct MomentumPhaseRow {
  double omega_dr = 0.0;
  double phase_np = 0.0;       // phase of N_P at omega_dr/2, drive-referenced
  double phase_n11 = 0.0;      // phase of N_11 at omega_dr/2
  double lag = 0.0;            // wrap(phase_np - phase_n11)
  bool valid = false;
  std::size_t branch_size = 0;
};

struct MomentumDynamicsResult {
  std::vector<MomentumPhaseRow> rows;
  std::vector<double> mean_np;   // branch-averaged traces at the center point
  std::vector<double> mean_n11;
  std::vector<double> trace_t;
  double n11_zero_crossing = 0.0;  // omega_dr where phase_n11 crosses 0
};

// Post-selected TWA ensembles across a drive-frequency scan; extracts the
// oscillation phases of the photon number and the (±1,±1) momentum occupation
// relative to the drive.
inline MomentumDynamicsResult momentum_dynamics(const SweepConfig& cfg,
                                                std::vector<double> omega_dr_values,
                                                int n_traj) {
  MomentumDynamicsResult out;
  const std::size_t center = omega_dr_values.size() / 2;

  for (std::size_t i = 0; i < omega_dr_values.size(); ++i) {
    double omega_dr = omega_dr_values[i];
    ProtocolConstants pc = cfg.protocol;
    pc.omega_dr = omega_dr;
    DriveProgram program = standard_protocol(pc);

    WignerSampler sampler;
    sampler.mean = initial_state(cfg.params, cfg.symmetry_seed);
    sampler.technical_number_std = cfg.technical_number_std;
    EnsembleSettings settings;
    settings.n_traj = n_traj;
    settings.mode = SimMode::Twa;
    settings.master_seed = derive_seed(cfg.master_seed, seed_word(omega_dr));
    settings.workers = cfg.workers;
    IntegratorConfig icfg = cfg.integrator;
    EnsembleResult ens =
        run_ensemble(sampler, program, icfg, cfg.params, settings);

    MomentumPhaseRow row;
    row.omega_dr = omega_dr;
    PostSelection sel =
        post_select_by_phase(ens, program, 0.5 * omega_dr);
    if (sel.split.valid && !ens.trajectories.empty()) {
      std::size_t b = sel.larger_branch();
      row.branch_size = sel.split.occupancy[b];
      const TrajectoryRecord& ref = ens.trajectories.front();
      const AnalysisWindow& win = *program.analysis;
      const double dt = ref.sample_interval;
      std::size_t i0 = static_cast<std::size_t>(std::llround(win.start / dt));
      std::size_t count = static_cast<std::size_t>(std::llround(win.length / dt));
      double theta_w = program.drive_phase_at(ref.t[i0]);

      Spectrum sp_np = compute_spectrum(
          std::span(sel.mean_np[b]).subspan(i0, count), dt, ref.t[i0]);
      Spectrum sp_n11 = compute_spectrum(
          std::span(sel.mean_n11[b]).subspan(i0, count), dt, ref.t[i0]);
      row.phase_np = extract_phase(sp_np, 0.5 * omega_dr, theta_w).phase;
      row.phase_n11 = extract_phase(sp_n11, 0.5 * omega_dr, theta_w).phase;
      row.lag = wrap_phase(row.phase_np - row.phase_n11);
      row.valid = true;

      if (i == center) {
        out.mean_np = sel.mean_np[b];
        out.mean_n11 = sel.mean_n11[b];
        out.trace_t = ref.t;
      }
    }
    out.rows.push_back(row);
  }

  // Zero crossing of the momentum phase (linear interpolation on the
  // pi-unwrapped curve).
  std::vector<double> unwrapped;
  for (const MomentumPhaseRow& r : out.rows)
    if (r.valid) unwrapped.push_back(r.phase_n11);
  for (std::size_t k = 1; k < unwrapped.size(); ++k) {
    while (unwrapped[k] - unwrapped[k - 1] > M_PI / 2) unwrapped[k] -= M_PI;
    while (unwrapped[k] - unwrapped[k - 1] < -M_PI / 2) unwrapped[k] += M_PI;
  }
  for (std::size_t k = 1; k < unwrapped.size(); ++k) {
    double a = unwrapped[k - 1], b = unwrapped[k];
    if ((a >= 0.0 && b <= 0.0) || (a <= 0.0 && b >= 0.0)) {
      double f = a / (a - b);
      out.n11_zero_crossing = out.rows[k - 1].omega_dr +
                              f * (out.rows[k].omega_dr - out.rows[k - 1].omega_dr);
      break;
    }
  }
  return out;
}

// Intrinsic limit-cycle frequency: an unmodulated mean-field run, dominant
// peak over the full band above the slow-drift region.
inline PeakFit measure_ctc_frequency(const SweepConfig& cfg,
                                     double hold_duration = 50e-3) {
  ProtocolConstants pc = cfg.protocol;
  pc.f0 = 0.0;
  pc.modulated = hold_duration;
  DriveProgram program = standard_protocol(pc);
  IntegratorConfig icfg = cfg.integrator;
  icfg.scheme = Scheme::Deterministic;
  SystemState init = initial_state(cfg.params, cfg.symmetry_seed);
  TrajectoryRecord rec =
      integrate(init, program, icfg, cfg.params, SimMode::MeanField);
  Spectrum spec = photon_spectrum(rec);
  return fit_dominant_peak(spec, kTwoPi * 2e3,
                           kTwoPi * spec.freq_hz.back() * 0.9);
}

}  // namespace atomcav
