#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "atomcav/experiments.hpp"
#include "atomcav/version.hpp"

namespace atomcav {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// --- trajectory serialization --------------------------------------------

inline constexpr const char* kTrajectoryHeader =
    "t,N_P,Theta_re,Theta_im,B,N_11,epsilon";

inline void write_trajectory_csv(const TrajectoryRecord& rec,
                                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << kTrajectoryHeader << "\n";
  for (std::size_t i = 0; i < rec.size(); ++i)
    out << detail::fmt_double(rec.t[i]) << ','
        << detail::fmt_double(rec.n_photon[i]) << ','
        << detail::fmt_double(rec.theta_re[i]) << ','
        << detail::fmt_double(rec.theta_im[i]) << ','
        << detail::fmt_double(rec.bunching[i]) << ','
        << detail::fmt_double(rec.n11[i]) << ','
        << detail::fmt_double(rec.epsilon[i]) << '\n';
}

inline TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryHeader)
    throw std::runtime_error("bad trajectory header in " + path.string());
  TrajectoryRecord rec;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[7];
    const char* p = line.c_str();
    char* end = nullptr;
    for (int k = 0; k < 7; ++k) {
      v[k] = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("bad row in " + path.string());
      p = (*end == ',') ? end + 1 : end;
    }
    rec.t.push_back(v[0]);
    rec.n_photon.push_back(v[1]);
    rec.theta_re.push_back(v[2]);
    rec.theta_im.push_back(v[3]);
    rec.bunching.push_back(v[4]);
    rec.n11.push_back(v[5]);
    rec.epsilon.push_back(v[6]);
  }
  if (rec.t.size() >= 2) rec.sample_interval = rec.t[1] - rec.t[0];
  return rec;
}

// Binary container: magic, JSON metadata header, then column-major float64.
inline constexpr char kTrajectoryMagic[8] = {'A', 'C', 'T', 'R', 'J', '0', '0', '1'};

inline void write_trajectory_binary(const TrajectoryRecord& rec,
                                    const std::filesystem::path& path) {
  json meta;
  meta["version"] = kVersion;
  meta["seed"] = rec.seed;
  meta["mode"] = rec.mode == SimMode::Twa ? "twa" : "mf";
  meta["sample_interval"] = rec.sample_interval;
  meta["rows"] = rec.size();
  meta["columns"] = {"t", "N_P", "Theta_re", "Theta_im", "B", "N_11", "epsilon"};
  meta["segment_boundaries"] = rec.segment_boundaries;
  if (rec.analysis)
    meta["analysis"] = {{"start", rec.analysis->start},
                        {"length", rec.analysis->length}};
  std::string header = meta.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(kTrajectoryMagic, 8);
  std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&len), 8);
  out.write(header.data(), static_cast<std::streamsize>(len));
  auto col = [&](const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  col(rec.t);
  col(rec.n_photon);
  col(rec.theta_re);
  col(rec.theta_im);
  col(rec.bunching);
  col(rec.n11);
  col(rec.epsilon);
}

inline TrajectoryRecord read_trajectory_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kTrajectoryMagic, 8) != 0)
    throw std::runtime_error("bad magic in " + path.string());
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), 8);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  json meta = json::parse(header);

  TrajectoryRecord rec;
  rec.seed = meta["seed"].get<std::uint64_t>();
  rec.mode = meta["mode"] == "twa" ? SimMode::Twa : SimMode::MeanField;
  rec.sample_interval = meta["sample_interval"].get<double>();
  rec.segment_boundaries = meta["segment_boundaries"].get<std::vector<double>>();
  if (meta.contains("analysis"))
    rec.analysis = AnalysisWindow{meta["analysis"]["start"].get<double>(),
                                  meta["analysis"]["length"].get<double>()};
  std::size_t rows = meta["rows"].get<std::size_t>();
  auto col = [&](std::vector<double>& v) {
    v.resize(rows);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(rows * sizeof(double)));
  };
  col(rec.t);
  col(rec.n_photon);
  col(rec.theta_re);
  col(rec.theta_im);
  col(rec.bunching);
  col(rec.n11);
  col(rec.epsilon);
  if (!in) throw std::runtime_error("truncated trajectory in " + path.string());
  return rec;
}

inline void write_spectrum_csv(const Spectrum& spec,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "frequency_hz,amp_re,amp_im,power\n";
  for (std::size_t k = 0; k < spec.amp.size(); ++k)
    out << detail::fmt_double(spec.freq_hz[k]) << ','
        << detail::fmt_double(spec.amp[k].real()) << ','
        << detail::fmt_double(spec.amp[k].imag()) << ','
        << detail::fmt_double(std::norm(spec.amp[k])) << '\n';
}

// --- sweep persistence -----------------------------------------------------

inline const char* waveform_name(Waveform w) {
  switch (w) {
    case Waveform::Sine: return "sine";
    case Waveform::Square: return "square";
    case Waveform::Sawtooth: return "sawtooth";
  }
  return "sine";
}

inline Waveform waveform_from_name(const std::string& s) {
  if (s == "sine") return Waveform::Sine;
  if (s == "square") return Waveform::Square;
  if (s == "sawtooth") return Waveform::Sawtooth;
  throw ConfigError("unknown waveform '" + s + "'");
}

inline json cell_to_json(const SweepResult& sweep, const CellResult& cell) {
  json coords;
  for (std::size_t d = 0; d < sweep.axes.size(); ++d) {
    if (sweep.axes[d].name == "waveform")
      coords["waveform"] =
          waveform_name(static_cast<Waveform>(static_cast<int>(cell.coords[d])));
    else
      coords[sweep.axes[d].name] = cell.coords[d];
  }
  json j;
  j["coords"] = coords;
  j["seed"] = cell.seed;
  j["s_raw_mean"] = cell.agg.s_raw_mean;
  j["s_raw_std"] = cell.agg.s_raw_std;
  j["s_rel"] = cell.s_rel;
  j["ratio_mean"] = cell.agg.ratio_mean;
  j["ratio_std"] = cell.agg.ratio_std;
  j["amp_mean"] = cell.agg.amp_mean;
  j["amp_std"] = cell.agg.amp_std;
  j["phase"] = cell.agg.phase;
  j["locked"] = cell.agg.locked;
  j["n_quasiperiodic"] = cell.agg.n_quasiperiodic;
  j["n_completed"] = cell.agg.n_completed;
  j["n_aborted"] = cell.agg.n_aborted;
  return j;
}

inline void write_sweep_ndjson(const SweepResult& sweep,
                               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (const CellResult& cell : sweep.cells)
    out << cell_to_json(sweep, cell).dump() << '\n';
}

// One CSV matrix per scalar field; 2D sweeps only (axis0 rows, axis1 cols).
inline void write_sweep_matrix_csv(const SweepResult& sweep,
                                   double CellAggregate::* field,
                                   const std::filesystem::path& path) {
  if (sweep.axes.size() != 2)
    throw std::invalid_argument("matrix output needs a 2-axis sweep");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << sweep.axes[0].name << '\\' << sweep.axes[1].name;
  for (double v : sweep.axes[1].values) out << ',' << detail::fmt_double(v);
  out << '\n';
  const std::size_t n1 = sweep.axes[1].values.size();
  for (std::size_t i = 0; i < sweep.axes[0].values.size(); ++i) {
    out << detail::fmt_double(sweep.axes[0].values[i]);
    for (std::size_t k = 0; k < n1; ++k)
      out << ',' << detail::fmt_double(sweep.cells[i * n1 + k].agg.*field);
    out << '\n';
  }
}

inline void write_sweep_rel_matrix_csv(const SweepResult& sweep,
                                       const std::filesystem::path& path) {
  if (sweep.axes.size() != 2)
    throw std::invalid_argument("matrix output needs a 2-axis sweep");
  std::ofstream out(path);
  out << sweep.axes[0].name << '\\' << sweep.axes[1].name;
  for (double v : sweep.axes[1].values) out << ',' << detail::fmt_double(v);
  out << '\n';
  const std::size_t n1 = sweep.axes[1].values.size();
  for (std::size_t i = 0; i < sweep.axes[0].values.size(); ++i) {
    out << detail::fmt_double(sweep.axes[0].values[i]);
    for (std::size_t k = 0; k < n1; ++k)
      out << ',' << detail::fmt_double(sweep.cells[i * n1 + k].s_rel);
    out << '\n';
  }
}

// --- run configuration -----------------------------------------------------

// Mirrors the config file (frequencies in Hz, durations in ms/ns/us) so a
// parse -> serialize -> parse round trip is lossless; conversions to internal
// units happen in the accessors.
struct RunConfig {
  std::string experiment = "simulate";
  std::string mode = "mf";
  std::uint64_t seed = 1;
  int workers = 0;
  std::string out = "out";

  double atom_number = 4e4;
  double light_shift_hz = 0.7;
  double cavity_decay_hz = 3.2e3;
  double recoil_hz = 3.7e3;
  double detuning_hz = -7e3;
  int mode_cutoff = 6;

  double epsilon_initial_rec = 0.0;
  double epsilon_final_rec = 1.7;
  double f0 = 0.1;
  double drive_hz = 20.5e3;
  std::string waveform = "sine";
  double drive_phase_rad = 0.0;
  double ramp_ms = 10.0;
  double hold_ms = 0.5;
  double f0_ramp_ms = 0.5;
  double modulated_ms = 10.0;

  double step_ns = 20.0;
  double sample_us = 5.0;

  int n_traj = 100;
  double technical_number_std = 0.0;
  double symmetry_seed = 1e-4;
  int repetitions = 10;

  std::string analyze_input;

  std::vector<double> sweep_drive_hz;
  std::vector<double> sweep_f0;
  std::vector<double> sweep_detuning_hz;
  std::vector<double> sweep_epsilon_rec;
  std::vector<double> sweep_rel_noise;
  std::vector<double> sweep_atom_numbers;
  std::vector<std::string> sweep_waveforms;
  std::string noise_target = "f0";
  double target_ratio = 1.0;
  double ratio_drive_hz = 0.0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  SystemParams system_params() const {
    SystemParams p;
    p.atom_number = atom_number;
    p.light_shift_per_photon = kTwoPi * light_shift_hz;
    p.cavity_decay = kTwoPi * cavity_decay_hz;
    p.recoil_frequency = kTwoPi * recoil_hz;
    p.effective_detuning = kTwoPi * detuning_hz;
    p.mode_cutoff = mode_cutoff;
    return p;
  }

  ProtocolConstants protocol() const {
    ProtocolConstants c;
    c.epsilon_initial = epsilon_initial_rec;
    c.epsilon_final = epsilon_final_rec;
    c.f0 = f0;
    c.omega_dr = kTwoPi * drive_hz;
    c.waveform = waveform_from_name(waveform);
    c.drive_phase = drive_phase_rad;
    c.ramp = ramp_ms * 1e-3;
    c.hold = hold_ms * 1e-3;
    c.f0_ramp = f0_ramp_ms * 1e-3;
    c.modulated = modulated_ms * 1e-3;
    return c;
  }

  IntegratorConfig integrator() const {
    IntegratorConfig cfg;
    cfg.step_size = step_ns * 1e-9;
    cfg.sample_interval = sample_us * 1e-6;
    cfg.rng_seed = seed;
    cfg.scheme = sim_mode() == SimMode::Twa ? Scheme::Stochastic
                                            : Scheme::Deterministic;
    return cfg;
  }

  SimMode sim_mode() const {
    if (mode == "mf") return SimMode::MeanField;
    if (mode == "twa") return SimMode::Twa;
    throw ConfigError("mode must be 'mf' or 'twa'");
  }

  SweepConfig sweep_config() const {
    SweepConfig cfg;
    cfg.params = system_params();
    cfg.protocol = protocol();
    cfg.integrator = integrator();
    cfg.mode = sim_mode();
    cfg.repetitions = sim_mode() == SimMode::Twa ? repetitions : 1;
    cfg.master_seed = seed;
    cfg.workers = workers;
    cfg.symmetry_seed = symmetry_seed;
    cfg.technical_number_std = technical_number_std;
    return cfg;
  }

  void validate() const {
    static const std::set<std::string> experiments = {
        "simulate",    "ensemble",  "tongue",           "locking-curve",
        "detuning-map", "robustness", "ratio-scan",      "finite-size",
        "momentum-dynamics", "analyze"};
    if (!experiments.count(experiment))
      throw ConfigError("unknown experiment '" + experiment + "'");
    if (mode != "mf" && mode != "twa")
      throw ConfigError("mode must be 'mf' or 'twa'");
    if (!(atom_number > 0)) throw ConfigError("params.atom_number must be > 0");
    if (!(light_shift_hz > 0)) throw ConfigError("params.light_shift_hz must be > 0");
    if (!(cavity_decay_hz > 0)) throw ConfigError("params.cavity_decay_hz must be > 0");
    if (!(recoil_hz > 0)) throw ConfigError("params.recoil_hz must be > 0");
    if (mode_cutoff < 2) throw ConfigError("params.mode_cutoff must be >= 2");
    if (f0 < 0.0) throw ConfigError("protocol.f0 must be >= 0");
    if (!(drive_hz > 0)) throw ConfigError("protocol.drive_hz must be > 0");
    if (!(epsilon_final_rec >= 0)) throw ConfigError("protocol.epsilon_final_rec must be >= 0");
    if (!(ramp_ms >= 0 && hold_ms >= 0 && f0_ramp_ms >= 0 && modulated_ms > 0))
      throw ConfigError("protocol durations must be non-negative (modulated > 0)");
    if (!(step_ns > 0)) throw ConfigError("integrator.step_ns must be > 0");
    if (!(sample_us > 0)) throw ConfigError("integrator.sample_us must be > 0");
    if (n_traj < 1) throw ConfigError("ensemble.n_traj must be >= 1");
    if (repetitions < 1) throw ConfigError("ensemble.repetitions must be >= 1");
    if (technical_number_std < 0)
      throw ConfigError("ensemble.technical_number_std must be >= 0");
    if (experiment == "analyze" && analyze_input.empty())
      throw ConfigError("analyze needs 'analyze_input'");
    waveform_from_name(waveform);
    for (const std::string& w : sweep_waveforms) waveform_from_name(w);
    for (double v : sweep_f0)
      if (v < 0) throw ConfigError("sweep.f0 values must be >= 0");
    integrator().validate(system_params());
  }
};

inline RunConfig preset_config(const std::string& name) {
  RunConfig cfg;  // defaults are the paper-theory values
  if (name == "paper-theory") {
    return cfg;
  }
  if (name == "paper-experiment") {
    cfg.detuning_hz = -8.2e3;
    cfg.epsilon_final_rec = 2.0;
    cfg.drive_hz = 22.5e3;
    cfg.f0 = 0.45;
    return cfg;
  }
  if (name == "figS5-finite-size") {
    cfg.experiment = "finite-size";
    cfg.mode = "twa";
    cfg.f0 = 0.15;
    cfg.sweep_atom_numbers = {1e3, 4e3, 16e3, 40e3};
    return cfg;
  }
  if (name == "figS11-longtime") {
    cfg.f0 = 0.0;
    cfg.modulated_ms = 50.0;
    return cfg;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

namespace detail {

inline void reject_unknown(const json& j, const std::string& where,
                           const std::set<std::string>& allowed) {
  for (const auto& item : j.items())
    if (!allowed.count(item.key()))
      throw ConfigError("unknown key '" + where + item.key() + "'");
}

template <typename T>
void assign(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("bad value for '") + key + "'");
    }
  }
}

}  // namespace detail

inline RunConfig parse_config_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  detail::reject_unknown(j, "",
                         {"preset", "experiment", "mode", "seed", "workers",
                          "out", "params", "protocol", "integrator",
                          "ensemble", "analyze_input", "sweep"});

  RunConfig cfg;
  if (j.contains("preset")) cfg = preset_config(j.at("preset").get<std::string>());

  detail::assign(j, "experiment", cfg.experiment);
  detail::assign(j, "mode", cfg.mode);
  detail::assign(j, "seed", cfg.seed);
  detail::assign(j, "workers", cfg.workers);
  detail::assign(j, "out", cfg.out);
  detail::assign(j, "analyze_input", cfg.analyze_input);

  if (j.contains("params")) {
    const json& p = j.at("params");
    detail::reject_unknown(p, "params.",
                           {"atom_number", "light_shift_hz", "cavity_decay_hz",
                            "recoil_hz", "detuning_hz", "mode_cutoff"});
    detail::assign(p, "atom_number", cfg.atom_number);
    detail::assign(p, "light_shift_hz", cfg.light_shift_hz);
    detail::assign(p, "cavity_decay_hz", cfg.cavity_decay_hz);
    detail::assign(p, "recoil_hz", cfg.recoil_hz);
    detail::assign(p, "detuning_hz", cfg.detuning_hz);
    detail::assign(p, "mode_cutoff", cfg.mode_cutoff);
  }
  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    detail::reject_unknown(
        p, "protocol.",
        {"epsilon_initial_rec", "epsilon_final_rec", "f0", "drive_hz",
         "waveform", "drive_phase_rad", "ramp_ms", "hold_ms", "f0_ramp_ms",
         "modulated_ms"});
    detail::assign(p, "epsilon_initial_rec", cfg.epsilon_initial_rec);
    detail::assign(p, "epsilon_final_rec", cfg.epsilon_final_rec);
    detail::assign(p, "f0", cfg.f0);
    detail::assign(p, "drive_hz", cfg.drive_hz);
    detail::assign(p, "waveform", cfg.waveform);
    detail::assign(p, "drive_phase_rad", cfg.drive_phase_rad);
    detail::assign(p, "ramp_ms", cfg.ramp_ms);
    detail::assign(p, "hold_ms", cfg.hold_ms);
    detail::assign(p, "f0_ramp_ms", cfg.f0_ramp_ms);
    detail::assign(p, "modulated_ms", cfg.modulated_ms);
  }
  if (j.contains("integrator")) {
    const json& p = j.at("integrator");
    detail::reject_unknown(p, "integrator.", {"step_ns", "sample_us"});
    detail::assign(p, "step_ns", cfg.step_ns);
    detail::assign(p, "sample_us", cfg.sample_us);
  }
  if (j.contains("ensemble")) {
    const json& p = j.at("ensemble");
    detail::reject_unknown(p, "ensemble.",
                           {"n_traj", "technical_number_std", "symmetry_seed",
                            "repetitions"});
    detail::assign(p, "n_traj", cfg.n_traj);
    detail::assign(p, "technical_number_std", cfg.technical_number_std);
    detail::assign(p, "symmetry_seed", cfg.symmetry_seed);
    detail::assign(p, "repetitions", cfg.repetitions);
  }
  if (j.contains("sweep")) {
    const json& p = j.at("sweep");
    detail::reject_unknown(
        p, "sweep.",
        {"drive_hz", "f0", "detuning_hz", "epsilon_rec", "rel_noise",
         "atom_numbers", "waveforms", "noise_target", "target_ratio",
         "ratio_drive_hz"});
    detail::assign(p, "drive_hz", cfg.sweep_drive_hz);
    detail::assign(p, "f0", cfg.sweep_f0);
    detail::assign(p, "detuning_hz", cfg.sweep_detuning_hz);
    detail::assign(p, "epsilon_rec", cfg.sweep_epsilon_rec);
    detail::assign(p, "rel_noise", cfg.sweep_rel_noise);
    detail::assign(p, "atom_numbers", cfg.sweep_atom_numbers);
    detail::assign(p, "waveforms", cfg.sweep_waveforms);
    detail::assign(p, "noise_target", cfg.noise_target);
    detail::assign(p, "target_ratio", cfg.target_ratio);
    detail::assign(p, "ratio_drive_hz", cfg.ratio_drive_hz);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config_json(j);
}

inline json config_to_json(const RunConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["mode"] = cfg.mode;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["out"] = cfg.out;
  if (!cfg.analyze_input.empty()) j["analyze_input"] = cfg.analyze_input;
  j["params"] = {{"atom_number", cfg.atom_number},
                 {"light_shift_hz", cfg.light_shift_hz},
                 {"cavity_decay_hz", cfg.cavity_decay_hz},
                 {"recoil_hz", cfg.recoil_hz},
                 {"detuning_hz", cfg.detuning_hz},
                 {"mode_cutoff", cfg.mode_cutoff}};
  j["protocol"] = {{"epsilon_initial_rec", cfg.epsilon_initial_rec},
                   {"epsilon_final_rec", cfg.epsilon_final_rec},
                   {"f0", cfg.f0},
                   {"drive_hz", cfg.drive_hz},
                   {"waveform", cfg.waveform},
                   {"drive_phase_rad", cfg.drive_phase_rad},
                   {"ramp_ms", cfg.ramp_ms},
                   {"hold_ms", cfg.hold_ms},
                   {"f0_ramp_ms", cfg.f0_ramp_ms},
                   {"modulated_ms", cfg.modulated_ms}};
  j["integrator"] = {{"step_ns", cfg.step_ns}, {"sample_us", cfg.sample_us}};
  j["ensemble"] = {{"n_traj", cfg.n_traj},
                   {"technical_number_std", cfg.technical_number_std},
                   {"symmetry_seed", cfg.symmetry_seed},
                   {"repetitions", cfg.repetitions}};
  json sweep;
  if (!cfg.sweep_drive_hz.empty()) sweep["drive_hz"] = cfg.sweep_drive_hz;
  if (!cfg.sweep_f0.empty()) sweep["f0"] = cfg.sweep_f0;
  if (!cfg.sweep_detuning_hz.empty()) sweep["detuning_hz"] = cfg.sweep_detuning_hz;
  if (!cfg.sweep_epsilon_rec.empty()) sweep["epsilon_rec"] = cfg.sweep_epsilon_rec;
  if (!cfg.sweep_rel_noise.empty()) sweep["rel_noise"] = cfg.sweep_rel_noise;
  if (!cfg.sweep_atom_numbers.empty()) sweep["atom_numbers"] = cfg.sweep_atom_numbers;
  if (!cfg.sweep_waveforms.empty()) sweep["waveforms"] = cfg.sweep_waveforms;
  sweep["noise_target"] = cfg.noise_target;
  sweep["target_ratio"] = cfg.target_ratio;
  sweep["ratio_drive_hz"] = cfg.ratio_drive_hz;
  j["sweep"] = sweep;
  return j;
}

inline std::string serialize_config(const RunConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

}  // namespace atomcav
