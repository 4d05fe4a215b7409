#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "atomcav/drive.hpp"
#include "atomcav/model.hpp"
#include "atomcav/params.hpp"
#include "atomcav/rng.hpp"
#include "atomcav/state.hpp"

namespace atomcav {

enum class Scheme { Deterministic, Stochastic };

struct IntegratorConfig {
  double step_size = 20e-9;       // s
  double sample_interval = 5e-6;  // s
  Scheme scheme = Scheme::Deterministic;
  std::uint64_t rng_seed = 0;

  int steps_per_sample() const {
    return static_cast<int>(std::llround(sample_interval / step_size));
  }

  void validate(const SystemParams& p) const {
    if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be > 0");
    if (!(sample_interval > 0.0))
      throw std::invalid_argument("sample_interval must be > 0");
    int n = steps_per_sample();
    if (n < 1 || std::abs(n * step_size - sample_interval) > 1e-9 * sample_interval)
      throw std::invalid_argument("step_size must divide sample_interval");
    if (step_size * p.max_eigenfrequency() >= 0.1)
      throw std::invalid_argument(
          "step_size too large for the fastest mode (needs dt * omega_max < 0.1)");
  }
};

// Uniformly sampled observables of one realization plus its seed.
struct TrajectoryRecord {
  std::uint64_t seed = 0;
  SimMode mode = SimMode::MeanField;
  double sample_interval = 0.0;
  std::vector<double> t;
  std::vector<double> n_photon;   // raw (TWA: |a|^2 - 1/2, unclamped)
  std::vector<double> theta_re;
  std::vector<double> theta_im;
  std::vector<double> bunching;
  std::vector<double> n11;
  std::vector<double> epsilon;    // instantaneous pump depth, with noise
  std::vector<double> segment_boundaries;
  std::optional<AnalysisWindow> analysis;

  std::size_t size() const { return t.size(); }

  friend bool operator==(const TrajectoryRecord&, const TrajectoryRecord&) = default;
};

namespace detail {

struct Rk4Buffers {
  ModeLattice k1, k2, k3, k4, tmp;
  cplx ka1, ka2, ka3, ka4;
};

}  // namespace detail

// Fixed-step propagator: classic RK4 for the drift, plus an additive complex
// noise increment sqrt(kappa dt / 2)(xi1 + i xi2) on the cavity amplitude per
// step in stochastic mode, reproducing <xi*(t) xi(t')> = kappa delta(t - t').
class Stepper {
 public:
  Stepper(SystemState initial, const DriveProgram& program,
          const IntegratorConfig& config, const SystemParams& params)
      : state_(std::move(initial)), params_(params),
        config_(config), drive_(program, derive_seed(config.rng_seed, 0x9eu)),
        rng_(derive_seed(config.rng_seed, 0x51u)),
        noise_scale_(std::sqrt(params.cavity_decay * config.step_size / 2.0)),
        start_time_(state_.time) {
    config.validate(params);
    const int n_max = state_.modes.cutoff();
    buf_.k1 = ModeLattice(n_max);
    buf_.k2 = ModeLattice(n_max);
    buf_.k3 = ModeLattice(n_max);
    buf_.k4 = ModeLattice(n_max);
    buf_.tmp = ModeLattice(n_max);
  }

  const SystemState& state() const { return state_; }

  // Drive value at the current time (idempotent on the noise stream).
  double epsilon_now() { return drive_.at(state_.time).epsilon; }

  void step() {
    const double h = config_.step_size;
    const double t = state_.time;
    SystemState& s = state_;

    DriveSample d1 = drive_.at(t);
    DriveSample d2 = drive_.at(t + 0.5 * h);
    DriveSample d3 = drive_.at(t + h);

    rhs(s.modes, s.cavity, t, d1, buf_.k1, buf_.ka1);
    axpy(s.modes, 0.5 * h, buf_.k1, buf_.tmp);
    rhs(buf_.tmp, s.cavity + 0.5 * h * buf_.ka1, t + 0.5 * h, d2, buf_.k2, buf_.ka2);
    axpy(s.modes, 0.5 * h, buf_.k2, buf_.tmp);
    rhs(buf_.tmp, s.cavity + 0.5 * h * buf_.ka2, t + 0.5 * h, d2, buf_.k3, buf_.ka3);
    axpy(s.modes, h, buf_.k3, buf_.tmp);
    rhs(buf_.tmp, s.cavity + h * buf_.ka3, t + h, d3, buf_.k4, buf_.ka4);

    const double w = h / 6.0;
    cplx* phi = s.modes.data();
    const cplx* k1 = buf_.k1.data();
    const cplx* k2 = buf_.k2.data();
    const cplx* k3 = buf_.k3.data();
    const cplx* k4 = buf_.k4.data();
    for (std::size_t i = 0; i < s.modes.size(); ++i)
      phi[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    s.cavity += w * (buf_.ka1 + 2.0 * (buf_.ka2 + buf_.ka3) + buf_.ka4);

    if (config_.scheme == Scheme::Stochastic)
      s.cavity += noise_scale_ * rng_.gaussian_pair();

    // Multiplication keeps the clock exact over millions of steps; repeated
    // addition would drift past the program end by ~1e-11 s.
    ++steps_taken_;
    state_.time = start_time_ + static_cast<double>(steps_taken_) * h;
  }

 private:
  void rhs(const ModeLattice& phi, cplx a, double t, const DriveSample& d,
           ModeLattice& dphi, cplx& da) {
    SystemParams p = params_;
    p.effective_detuning += d.delta_eff_offset;
    eom_rhs(phi, a, t, pump_from_depth(d.epsilon, p), p, dphi, da);
  }

  static void axpy(const ModeLattice& x, double c, const ModeLattice& k,
                   ModeLattice& out) {
    const cplx* xd = x.data();
    const cplx* kd = k.data();
    cplx* od = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) od[i] = xd[i] + c * kd[i];
  }

  SystemState state_;
  SystemParams params_;
  IntegratorConfig config_;
  DriveEvaluator drive_;
  Rng rng_;
  double noise_scale_;
  double start_time_ = 0.0;
  std::uint64_t steps_taken_ = 0;
  detail::Rk4Buffers buf_;
};

// Integrates a drive program from the initial state, sampling observables on
// the uniform grid t = 0, dt_s, 2 dt_s, ... within the program span. A sample
// callback, when provided, sees the full state at each sample time.
inline TrajectoryRecord integrate(
    const SystemState& initial, const DriveProgram& program,
    const IntegratorConfig& config, const SystemParams& params, SimMode mode,
    const std::function<void(const SystemState&)>& on_sample = {}) {
  config.validate(params);
  params.validate();

  TrajectoryRecord rec;
  rec.seed = config.rng_seed;
  rec.mode = mode;
  rec.sample_interval = config.sample_interval;
  rec.segment_boundaries = program.segment_boundaries();
  rec.analysis = program.analysis;

  const double duration = program.total_duration();
  const std::size_t n_samples =
      static_cast<std::size_t>(std::floor(duration / config.sample_interval + 1e-9)) + 1;
  const int per_sample = config.steps_per_sample();

  Stepper stepper(initial, program, config, params);
  double last_finite = -1.0;

  auto take_sample = [&](double t_nominal) {
    const SystemState& s = stepper.state();
    Observables o = observables(s, mode);
    if (!std::isfinite(o.n_photon) || !std::isfinite(o.norm)) {
      NumericalFault f("non-finite observable at sample time", s.time, 0, 0, true);
      f.segment_index = program.segment_index_at(std::min(s.time, duration));
      f.last_finite_sample = last_finite;
      throw f;
    }
    rec.t.push_back(t_nominal);
    rec.n_photon.push_back(o.n_photon);
    rec.theta_re.push_back(o.theta.real());
    rec.theta_im.push_back(o.theta.imag());
    rec.bunching.push_back(o.bunching);
    rec.n11.push_back(o.n11);
    rec.epsilon.push_back(stepper.epsilon_now());
    last_finite = t_nominal;
    if (on_sample) on_sample(s);
  };

  try {
    take_sample(0.0);
    for (std::size_t k = 1; k < n_samples; ++k) {
      for (int i = 0; i < per_sample; ++i) stepper.step();
      take_sample(static_cast<double>(k) * config.sample_interval);
    }
  } catch (NumericalFault& f) {
    if (f.segment_index < 0)
      f.segment_index = program.segment_index_at(
          std::min(std::max(f.time, 0.0), duration));
    if (f.last_finite_sample < 0.0) f.last_finite_sample = last_finite;
    throw;
  }
  return rec;
}

}  // namespace atomcav
