#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "atomcav/ensemble.hpp"

using namespace atomcav;

namespace {

DriveProgram short_protocol(double f0) {
  ProtocolConstants c;
  c.ramp = 0.5e-3;
  c.hold = 0.1e-3;
  c.f0_ramp = 0.1e-3;
  c.modulated = 0.5e-3;
  c.f0 = f0;
  return standard_protocol(c);
}

}  // namespace

TEST_CASE("vacuum Wigner width: mean 0, <|dphi|^2> = 1/2") {
  SystemParams p;
  p.mode_cutoff = 2;
  WignerSampler sampler;
  sampler.mean.modes = ModeLattice(2);

  const int n = 10000;
  cplx mean_acc{0.0, 0.0};
  double var_acc = 0.0;
  for (int k = 0; k < n; ++k) {
    SystemState s = sampler.sample(derive_seed(5, k));
    cplx v = s.modes.at(1, -2);  // an empty mode
    mean_acc += v;
    var_acc += std::norm(v);
  }
  double var = var_acc / n;
  // |dphi|^2 is exponential with mean 1/2 -> std 1/2.
  REQUIRE(std::abs(mean_acc) / n < 3.0 * std::sqrt(0.5) / std::sqrt(n));
  REQUIRE(std::abs(var - 0.5) < 3.0 * 0.5 / std::sqrt(n));
}

TEST_CASE("coherent condensate has sqrt(N) occupation fluctuations") {
  SystemParams p;  // N_a = 4e4
  WignerSampler sampler;
  sampler.mean = initial_state(p, 0.0);

  const int n = 10000;
  std::vector<double> occ(n);
  double mean = 0.0;
  for (int k = 0; k < n; ++k) {
    SystemState s = sampler.sample(derive_seed(6, k));
    occ[k] = std::norm(s.modes.at(0, 0));
    mean += occ[k];
  }
  mean /= n;
  double var = 0.0;
  for (double o : occ) var += (o - mean) * (o - mean);
  double std_dev = std::sqrt(var / (n - 1));
  REQUIRE(std_dev == Catch::Approx(std::sqrt(p.atom_number)).epsilon(0.05));
}

TEST_CASE("technical noise widens the occupation to sigma_Na") {
  SystemParams p;
  WignerSampler sampler;
  sampler.mean = initial_state(p, 0.0);
  sampler.technical_number_std = 10.0 * std::sqrt(p.atom_number);  // 2e3

  const int n = 10000;
  std::vector<double> occ(n);
  double mean = 0.0;
  for (int k = 0; k < n; ++k) {
    SystemState s = sampler.sample(derive_seed(7, k));
    occ[k] = std::norm(s.modes.at(0, 0));
    mean += occ[k];
  }
  mean /= n;
  double var = 0.0;
  for (double o : occ) var += (o - mean) * (o - mean);
  double std_dev = std::sqrt(var / (n - 1));
  REQUIRE(std_dev == Catch::Approx(2e3).epsilon(0.05));
  REQUIRE(mean == Catch::Approx(p.atom_number).epsilon(0.01));
}

TEST_CASE("absurd technical noise triggers truncated redraws") {
  SystemParams p;
  p.atom_number = 100.0;
  p.mode_cutoff = 2;
  WignerSampler sampler;
  sampler.mean = initial_state(p, 0.0);
  sampler.technical_number_std = 400.0;  // sigma >> N: negatives likely
  for (int k = 0; k < 200; ++k) {
    SystemState s = sampler.sample(derive_seed(8, k));
    REQUIRE(std::norm(s.modes.at(0, 0)) > 0.0);
  }
  REQUIRE(sampler.redraws > 0);
}

TEST_CASE("mean-field ensemble reproduces a direct integration") {
  SystemParams p;
  DriveProgram prog = short_protocol(0.1);
  IntegratorConfig cfg;
  cfg.step_size = 50e-9;

  WignerSampler sampler;
  sampler.mean = initial_state(p);
  EnsembleSettings settings;
  settings.n_traj = 1;
  settings.mode = SimMode::MeanField;
  settings.master_seed = 123;

  EnsembleResult res = run_ensemble(sampler, prog, cfg, p, settings);
  REQUIRE(res.size() == 1);
  REQUIRE(res.complete());

  IntegratorConfig direct = cfg;
  direct.rng_seed = derive_seed(settings.master_seed, 0x7261ull, 0ull);
  TrajectoryRecord rec =
      integrate(sampler.mean, prog, direct, p, SimMode::MeanField);
  REQUIRE(res.trajectories[0] == rec);
}

TEST_CASE("same master seed gives identical ensembles at any worker count") {
  SystemParams p;
  DriveProgram prog = short_protocol(0.1);
  IntegratorConfig cfg;
  cfg.step_size = 50e-9;

  WignerSampler sampler;
  sampler.mean = initial_state(p);
  EnsembleSettings settings;
  settings.n_traj = 6;
  settings.master_seed = 99;

  settings.workers = 1;
  EnsembleResult serial = run_ensemble(sampler, prog, cfg, p, settings);
  settings.workers = 2;
  EnsembleResult parallel = run_ensemble(sampler, prog, cfg, p, settings);
  REQUIRE(serial.size() == 6);
  REQUIRE(serial.trajectories == parallel.trajectories);

  settings.master_seed = 100;
  EnsembleResult other = run_ensemble(sampler, prog, cfg, p, settings);
  REQUIRE_FALSE(serial.trajectories == other.trajectories);
}

TEST_CASE("faulted trajectories land in the abort list") {
  SystemParams p;
  DriveProgram prog = short_protocol(0.0);
  IntegratorConfig cfg;
  cfg.step_size = 50e-9;

  WignerSampler sampler;
  sampler.mean = initial_state(p);
  sampler.mean.cavity = cplx(std::nan(""), 0.0);
  EnsembleSettings settings;
  settings.n_traj = 3;
  settings.mode = SimMode::Twa;

  EnsembleResult res = run_ensemble(sampler, prog, cfg, p, settings);
  REQUIRE_FALSE(res.complete());
  REQUIRE(res.aborted.size() == 3);
  REQUIRE(res.trajectories.empty());
  REQUIRE(res.aborted[0].segment_index >= 0);
}

TEST_CASE("synthetic antipodal phases split into two clean branches") {
  std::mt19937_64 eng(13);
  std::normal_distribution<double> jitter(0.0, 0.15);
  std::vector<double> phases;
  const double base = 0.8;
  for (int i = 0; i < 50; ++i)
    phases.push_back(wrap_phase(base + jitter(eng)));
  for (int i = 0; i < 46; ++i)
    phases.push_back(wrap_phase(base + M_PI + jitter(eng)));

  BranchSplit split = split_phases(phases);
  REQUIRE(split.valid);
  REQUIRE(split.center_separation == Catch::Approx(M_PI).margin(0.1));
  REQUIRE(split.occupancy[0] + split.occupancy[1] == 96);
  double c_near = std::abs(wrap_phase(split.centers[0] - base)) <
                          std::abs(wrap_phase(split.centers[1] - base))
                      ? split.centers[0]
                      : split.centers[1];
  REQUIRE(std::abs(wrap_phase(c_near - base)) < 0.1);
  // Rayleigh on the doubled angles strongly rejects uniformity.
  REQUIRE(split.rayleigh_p_doubled < 1e-6);
}

TEST_CASE("uniform phases fail the bimodal classification") {
  std::mt19937_64 eng(17);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  std::vector<double> phases;
  for (int i = 0; i < 100; ++i) phases.push_back(u(eng));
  BranchSplit split = split_phases(phases);
  REQUIRE_FALSE(split.valid);
  REQUIRE(split.rayleigh_p_raw > 0.01);
}

TEST_CASE("tight unimodal phases are rejected as non-antipodal") {
  std::mt19937_64 eng(19);
  std::normal_distribution<double> jitter(0.0, 0.1);
  std::vector<double> phases;
  for (int i = 0; i < 60; ++i) phases.push_back(wrap_phase(1.0 + jitter(eng)));
  BranchSplit split = split_phases(phases);
  // Doubled angles concentrate, but the two k-means branches cannot end up
  // pi apart; either failure mode is acceptable, validity is not.
  REQUIRE_FALSE(split.valid);
}

TEST_CASE("ensemble mean of the raw photon observable vanishes at t=0") {
  // Wigner vacuum cavity, zero pump: <N_P> = <|a|^2> - 1/2 = 0.
  SystemParams p;
  p.mode_cutoff = 2;
  p.atom_number = 1.0;

  WignerSampler sampler;
  sampler.mean.modes = ModeLattice(2);
  sampler.mean.cavity = 0.0;

  const int n = 4000;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    SystemState s = sampler.sample(derive_seed(21, k));
    acc += observables(s, SimMode::Twa).n_photon;
  }
  double mean = acc / n;
  REQUIRE(std::abs(mean) < 3.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}
