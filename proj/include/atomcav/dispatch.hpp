#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>

#include "atomcav/io.hpp"

namespace atomcav {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitPartial = 4;

namespace detail {

inline void write_manifest(const RunConfig& cfg,
                           const std::filesystem::path& dir) {
  json j;
  j["version"] = kVersion;
  j["master_seed"] = cfg.seed;
  j["config"] = config_to_json(cfg);
  std::ofstream out(dir / "manifest.json");
  out << j.dump(2) << '\n';
}

inline std::vector<double> hz_axis_to_rad(const std::vector<double>& hz) {
  std::vector<double> out;
  out.reserve(hz.size());
  for (double v : hz) out.push_back(kTwoPi * v);
  return out;
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

inline std::string traj_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "trajectory_%03d.csv", index);
  return buf;
}

}  // namespace detail

// Runs the configured experiment and writes its artifacts under cfg.out.
// Returns a process exit code: 0 ok, 2 config error, 3 numerical fault,
// 4 partial ensemble failure (completed trajectories are still persisted).
inline int dispatch(const RunConfig& cfg, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    log << "config error: cannot create output directory " << dir << '\n';
    return kExitConfig;
  }
  detail::write_manifest(cfg, dir);
  std::ofstream summary(dir / "summary.txt");

  const SweepConfig sweep = cfg.sweep_config();
  const double omega_dr = kTwoPi * cfg.drive_hz;

  try {
    if (cfg.experiment == "simulate") {
      DriveProgram program = standard_protocol(cfg.protocol());
      IntegratorConfig icfg = cfg.integrator();
      SystemState init = initial_state(sweep.params, cfg.symmetry_seed);
      if (cfg.sim_mode() == SimMode::Twa) {
        WignerSampler sampler;
        sampler.mean = init;
        sampler.technical_number_std = cfg.technical_number_std;
        init = sampler.sample(derive_seed(cfg.seed, 0x696eull));
      }
      TrajectoryRecord rec =
          integrate(init, program, icfg, sweep.params, cfg.sim_mode());
      write_trajectory_csv(rec, dir / "trajectory.csv");
      write_trajectory_binary(rec, dir / "trajectory.bin");
      Spectrum spec = photon_spectrum(rec);
      write_spectrum_csv(spec, dir / "spectrum.csv");
      PeakFit peak =
          fit_dominant_peak(spec, kTwoPi * 2e3, kTwoPi * spec.freq_hz.back() * 0.9);
      summary << "samples: " << rec.size() << '\n'
              << "dominant peak: " << peak.center / kTwoPi << " Hz, amplitude "
              << peak.amplitude << '\n'
              << "peak/drive ratio: " << peak.center / omega_dr << '\n'
              << "S(omega_dr/2): " << subharmonic_response(spec, omega_dr) << '\n';
      return kExitOk;
    }

    if (cfg.experiment == "ensemble") {
      DriveProgram program = standard_protocol(cfg.protocol());
      WignerSampler sampler;
      sampler.mean = initial_state(sweep.params, cfg.symmetry_seed);
      sampler.technical_number_std = cfg.technical_number_std;
      EnsembleSettings settings;
      settings.n_traj = cfg.n_traj;
      settings.mode = cfg.sim_mode();
      settings.master_seed = cfg.seed;
      settings.workers = cfg.workers;
      EnsembleResult res =
          run_ensemble(sampler, program, cfg.integrator(), sweep.params, settings);

      for (std::size_t i = 0; i < res.trajectories.size(); ++i)
        write_trajectory_csv(res.trajectories[i],
                             dir / detail::traj_name(res.indices[i]));
      // Ensemble-mean photon trace.
      if (!res.trajectories.empty()) {
        std::ofstream agg(dir / "aggregate.csv");
        agg << "t,N_P_mean,N_11_mean\n";
        auto np = res.mean_column(&TrajectoryRecord::n_photon);
        auto n11 = res.mean_column(&TrajectoryRecord::n11);
        const auto& t = res.trajectories.front().t;
        for (std::size_t i = 0; i < np.size(); ++i)
          agg << detail::fmt_double(t[i]) << ',' << detail::fmt_double(np[i])
              << ',' << detail::fmt_double(n11[i]) << '\n';
      }
      PostSelection sel = post_select_by_phase(res, program, 0.5 * omega_dr);
      {
        std::ofstream ph(dir / "phases.csv");
        ph << "trajectory,phase\n";
        for (std::size_t i = 0; i < sel.phases.size(); ++i)
          ph << res.indices[i] << ',' << detail::fmt_double(sel.phases[i]) << '\n';
      }
      json branches;
      branches["valid"] = sel.split.valid;
      branches["failure_reason"] = sel.split.failure_reason;
      branches["centers"] = {sel.split.centers[0], sel.split.centers[1]};
      branches["occupancy"] = {sel.split.occupancy[0], sel.split.occupancy[1]};
      branches["center_separation"] = sel.split.center_separation;
      branches["rayleigh_p_raw"] = sel.split.rayleigh_p_raw;
      branches["rayleigh_p_doubled"] = sel.split.rayleigh_p_doubled;
      std::ofstream(dir / "branches.json") << branches.dump(2) << '\n';

      summary << "trajectories: " << res.size() << " completed, "
              << res.aborted.size() << " aborted\n"
              << "phase split valid: " << (sel.split.valid ? "yes" : "no") << '\n';
      if (!res.complete()) {
        for (const AbortedTrajectory& a : res.aborted)
          summary << "aborted " << a.index << " at t=" << a.time << ": "
                  << a.reason << '\n';
        return kExitPartial;
      }
      return kExitOk;
    }

    if (cfg.experiment == "tongue") {
      std::vector<double> drive =
          cfg.sweep_drive_hz.empty()
              ? detail::linspace(cfg.drive_hz * 0.85, cfg.drive_hz * 1.15, 15)
              : cfg.sweep_drive_hz;
      std::vector<double> f0s = cfg.sweep_f0.empty()
                                    ? detail::linspace(0.0, 0.51, 18)
                                    : cfg.sweep_f0;
      SweepResult res =
          arnold_tongue(sweep, detail::hz_axis_to_rad(drive), f0s);
      write_sweep_ndjson(res, dir / "cells.ndjson");
      write_sweep_rel_matrix_csv(res, dir / "s_rel.csv");
      write_sweep_matrix_csv(res, &CellAggregate::ratio_mean, dir / "ratio.csv");
      summary << "cells: " << res.cell_count() << '\n';
      return kExitOk;
    }

    if (cfg.experiment == "locking-curve") {
      std::vector<double> f0s =
          cfg.sweep_f0.empty()
              ? std::vector<double>{0.005, 0.01, 0.02, 0.04, 0.07, 0.10,
                                    0.15, 0.22, 0.30, 0.45}
              : cfg.sweep_f0;
      std::vector<Waveform> wfs;
      if (cfg.sweep_waveforms.empty())
        wfs = {waveform_from_name(cfg.waveform)};
      else
        for (const std::string& w : cfg.sweep_waveforms)
          wfs.push_back(waveform_from_name(w));
      SweepResult res = locking_curve(sweep, f0s, wfs);
      write_sweep_ndjson(res, dir / "cells.ndjson");
      std::ofstream curve(dir / "locking.csv");
      curve << "waveform,f0,ratio_mean,ratio_std,amp_mean,amp_std,locked\n";
      for (const CellResult& cell : res.cells)
        curve << waveform_name(static_cast<Waveform>(static_cast<int>(cell.coords[0])))
              << ',' << detail::fmt_double(cell.coords[1]) << ','
              << detail::fmt_double(cell.agg.ratio_mean) << ','
              << detail::fmt_double(cell.agg.ratio_std) << ','
              << detail::fmt_double(cell.agg.amp_mean) << ','
              << detail::fmt_double(cell.agg.amp_std) << ','
              << (cell.agg.locked ? 1 : 0) << '\n';
      summary << "cells: " << res.cell_count() << '\n';
      return kExitOk;
    }

    if (cfg.experiment == "detuning-map") {
      std::vector<double> dets =
          cfg.sweep_detuning_hz.empty()
              ? detail::linspace(-12e3, -3e3, 21)
              : cfg.sweep_detuning_hz;
      std::vector<double> eps = cfg.sweep_epsilon_rec.empty()
                                    ? detail::linspace(0.5, 3.1, 27)
                                    : cfg.sweep_epsilon_rec;
      DetuningMapResult res =
          detuning_pump_map(sweep, detail::hz_axis_to_rad(dets), eps);
      write_sweep_ndjson(res.modulated, dir / "cells_modulated.ndjson");
      write_sweep_ndjson(res.unmodulated, dir / "cells_unmodulated.ndjson");
      write_sweep_rel_matrix_csv(res.modulated, dir / "s_rel_modulated.csv");
      write_sweep_rel_matrix_csv(res.unmodulated, dir / "s_rel_unmodulated.csv");
      const CellResult& best = res.modulated.cells[res.optimum_cell];
      summary << "optimum cell: delta_eff=" << best.coords[0] / kTwoPi
              << " Hz, eps_f=" << best.coords[1] << " E_rec\n"
              << "modulation gain at optimum: " << res.modulation_gain << '\n';
      return kExitOk;
    }

    if (cfg.experiment == "robustness") {
      std::vector<double> rel = cfg.sweep_rel_noise.empty()
                                    ? std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0}
                                    : cfg.sweep_rel_noise;
      NoiseTarget target;
      if (cfg.noise_target == "delta_eff") target = NoiseTarget::DeltaEff;
      else if (cfg.noise_target == "eps_f") target = NoiseTarget::EpsilonF;
      else if (cfg.noise_target == "f0") target = NoiseTarget::F0;
      else if (cfg.noise_target == "omega_dr") target = NoiseTarget::OmegaDr;
      else throw ConfigError("unknown noise_target '" + cfg.noise_target + "'");
      SweepResult res = robustness_scan(sweep, target, rel);
      write_sweep_ndjson(res, dir / "cells.ndjson");
      std::ofstream csv(dir / "robustness.csv");
      csv << "rel_noise,s_raw_mean,s_raw_std,s_rel\n";
      for (const CellResult& cell : res.cells)
        csv << detail::fmt_double(cell.coords[0]) << ','
            << detail::fmt_double(cell.agg.s_raw_mean) << ','
            << detail::fmt_double(cell.agg.s_raw_std) << ','
            << detail::fmt_double(cell.s_rel) << '\n';
      summary << "target: " << cfg.noise_target << ", cells: "
              << res.cell_count() << '\n';
      return kExitOk;
    }

    if (cfg.experiment == "ratio-scan") {
      std::vector<double> f0s = cfg.sweep_f0.empty()
                                    ? std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4}
                                    : cfg.sweep_f0;
      double drive = cfg.ratio_drive_hz > 0 ? kTwoPi * cfg.ratio_drive_hz
                                            : omega_dr;
      SweepResult res = ratio_scan(sweep, drive, f0s, cfg.target_ratio);
      write_sweep_ndjson(res, dir / "cells.ndjson");
      std::ofstream csv(dir / "ratio.csv");
      csv << "f0,ratio_mean,ratio_std,amp_mean,locked\n";
      for (const CellResult& cell : res.cells)
        csv << detail::fmt_double(cell.coords[0]) << ','
            << detail::fmt_double(cell.agg.ratio_mean) << ','
            << detail::fmt_double(cell.agg.ratio_std) << ','
            << detail::fmt_double(cell.agg.amp_mean) << ','
            << (cell.agg.locked ? 1 : 0) << '\n';
      summary << "target ratio: " << cfg.target_ratio << '\n';
      return kExitOk;
    }

    if (cfg.experiment == "finite-size") {
      std::vector<double> n_as = cfg.sweep_atom_numbers.empty()
                                     ? std::vector<double>{1e3, 4e3, 16e3, 40e3}
                                     : cfg.sweep_atom_numbers;
      auto rows = finite_size_scan(sweep, n_as, cfg.n_traj, cfg.f0);
      std::ofstream csv(dir / "finite_size.csv");
      csv << "atom_number,xi_driven,xi_undriven,driven_defined,undriven_defined\n";
      for (const FiniteSizeRow& r : rows)
        csv << detail::fmt_double(r.atom_number) << ','
            << detail::fmt_double(r.xi_driven) << ','
            << detail::fmt_double(r.xi_undriven) << ',' << r.driven_defined
            << ',' << r.undriven_defined << '\n';
      summary << "rows: " << rows.size() << '\n';
      return kExitOk;
    }

    if (cfg.experiment == "momentum-dynamics") {
      std::vector<double> drive =
          cfg.sweep_drive_hz.empty()
              ? detail::linspace(cfg.drive_hz - 1e3, cfg.drive_hz + 1e3, 5)
              : cfg.sweep_drive_hz;
      MomentumDynamicsResult res =
          momentum_dynamics(sweep, detail::hz_axis_to_rad(drive), cfg.n_traj);
      std::ofstream csv(dir / "phases.csv");
      csv << "drive_hz,phase_np,phase_n11,lag,valid,branch_size\n";
      for (const MomentumPhaseRow& r : res.rows)
        csv << detail::fmt_double(r.omega_dr / kTwoPi) << ','
            << detail::fmt_double(r.phase_np) << ','
            << detail::fmt_double(r.phase_n11) << ','
            << detail::fmt_double(r.lag) << ',' << r.valid << ','
            << r.branch_size << '\n';
      if (!res.trace_t.empty()) {
        std::ofstream traces(dir / "branch_traces.csv");
        traces << "t,N_P,N_11\n";
        for (std::size_t i = 0; i < res.trace_t.size(); ++i)
          traces << detail::fmt_double(res.trace_t[i]) << ','
                 << detail::fmt_double(res.mean_np[i]) << ','
                 << detail::fmt_double(res.mean_n11[i]) << '\n';
      }
      summary << "N_11 phase zero crossing: " << res.n11_zero_crossing / kTwoPi
              << " Hz\n";
      return kExitOk;
    }

    if (cfg.experiment == "analyze") {
      fs::path input(cfg.analyze_input);
      TrajectoryRecord rec;
      if (fs::exists(input / "trajectory.bin"))
        rec = read_trajectory_binary(input / "trajectory.bin");
      else if (fs::exists(input / "trajectory.csv")) {
        rec = read_trajectory_csv(input / "trajectory.csv");
        // Window metadata lives in the manifest when only CSV is present.
        std::ifstream mf(input / "manifest.json");
        if (mf) {
          json m = json::parse(mf);
          RunConfig orig = parse_config_json(m.at("config"));
          DriveProgram program = standard_protocol(orig.protocol());
          rec.analysis = program.analysis;
          rec.segment_boundaries = program.segment_boundaries();
        }
      } else {
        throw ConfigError("analyze_input has no trajectory.bin or trajectory.csv");
      }
      Spectrum spec = photon_spectrum(rec);
      write_spectrum_csv(spec, dir / "spectrum.csv");
      PeakFit peak = fit_dominant_peak(spec, kTwoPi * 2e3,
                                       kTwoPi * spec.freq_hz.back() * 0.9);
      summary << "dominant peak: " << peak.center / kTwoPi << " Hz, amplitude "
              << peak.amplitude << '\n'
              << "S(omega_dr/2): " << subharmonic_response(spec, omega_dr) << '\n';
      return kExitOk;
    }

    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalFault& f) {
    log << "numerical fault at t=" << f.time << " (segment "
        << f.segment_index << "): " << f.what() << '\n';
    summary << "numerical fault at t=" << f.time << ": " << f.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace atomcav
