#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "atomcav/params.hpp"
#include "atomcav/rng.hpp"

namespace atomcav {

// Modulation waveforms g(theta) in [-1, 1], all with the fundamental harmonic
// aligned to cos(theta); fundamental amplitudes are 1 (sine), 4/pi (square),
// 2/pi (sawtooth).
enum class Waveform { Sine, Square, Sawtooth };

inline double waveform_value(Waveform w, double theta) {
  switch (w) {
    case Waveform::Sine:
      return std::cos(theta);
    case Waveform::Square:
      return std::cos(theta) >= 0.0 ? 1.0 : -1.0;
    case Waveform::Sawtooth: {
      // Rising ramp offset by 3/4 period so the fundamental is (2/pi)cos.
      double u = theta / kTwoPi + 0.75;
      u -= std::floor(u);
      return 2.0 * u - 1.0;
    }
  }
  return 0.0;
}

enum class SegmentKind { Ramp, Hold, Modulate };

struct Segment {
  SegmentKind kind = SegmentKind::Hold;
  double duration = 0.0;       // s
  double eps_start = 0.0;      // E_rec (mean pump strength at segment start)
  double eps_end = 0.0;        // E_rec
  Waveform waveform = Waveform::Sine;
  double f0_start = 0.0;       // driving strength, ramps linearly
  double f0_end = 0.0;
  double omega_dr = 0.0;       // rad/s
  double drive_phase = 0.0;    // rad, offset of the modulation clock
};

enum class NoiseTarget { DeltaEff, EpsilonF, F0, OmegaDr };

// White parameter noise: piecewise-constant uniform draws from
// [-amplitude, amplitude], refreshed at the stated bandwidth. Active during
// modulate segments only.
struct NoiseChannel {
  NoiseTarget target = NoiseTarget::EpsilonF;
  double amplitude = 0.0;      // same units as the target
  double bandwidth_hz = 50e3;
};

struct AnalysisWindow {
  double start = 0.0;
  double length = 0.0;
  friend bool operator==(const AnalysisWindow&, const AnalysisWindow&) = default;
};

// Noise-free drive quantities at one instant.
struct DriveInstant {
  double epsilon = 0.0;        // pump depth in E_rec
  bool modulated = false;
  double theta = 0.0;          // modulation phase omega_dr*(t-origin)+phase
  double f0 = 0.0;
  double omega_dr = 0.0;
};

struct DriveProgram {
  std::vector<Segment> segments;
  std::vector<NoiseChannel> noise;
  std::optional<AnalysisWindow> analysis;

  double total_duration() const {
    double t = 0.0;
    for (const Segment& s : segments) t += s.duration;
    return t;
  }

  std::vector<double> segment_boundaries() const {
    std::vector<double> b;
    double t = 0.0;
    for (const Segment& s : segments) {
      t += s.duration;
      b.push_back(t);
    }
    return b;
  }

  // Start time of the first modulate segment; the modulation clock (and the
  // drive-phase reference used by the analysis) is zero there.
  double modulation_origin() const {
    double t = 0.0;
    for (const Segment& s : segments) {
      if (s.kind == SegmentKind::Modulate) return t;
      t += s.duration;
    }
    return 0.0;
  }

  double drive_frequency() const {
    for (const Segment& s : segments)
      if (s.kind == SegmentKind::Modulate) return s.omega_dr;
    return 0.0;
  }

  // Drive phase at absolute time t (no noise), for phase-referenced analysis.
  double drive_phase_at(double t) const {
    for (const Segment& s : segments)
      if (s.kind == SegmentKind::Modulate)
        return s.omega_dr * (t - modulation_origin()) + s.drive_phase;
    return 0.0;
  }

  int segment_index_at(double t) const {
    if (t < 0.0) throw std::out_of_range("drive time before program start");
    double t0 = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      double t1 = t0 + segments[i].duration;
      if (t < t1) return static_cast<int>(i);
      t0 = t1;
    }
    // Allow the exact endpoint (final integration stage lands there).
    if (t <= t0 * (1.0 + 1e-12) + 1e-15) return static_cast<int>(segments.size()) - 1;
    throw std::out_of_range("drive time past program end");
  }

  DriveInstant at(double t) const {
    int idx = segment_index_at(t);
    const Segment& s = segments[static_cast<std::size_t>(idx)];
    double t0 = 0.0;
    for (int i = 0; i < idx; ++i) t0 += segments[static_cast<std::size_t>(i)].duration;
    double local = t - t0;
    double frac = s.duration > 0.0 ? local / s.duration : 0.0;

    DriveInstant out;
    out.epsilon = s.eps_start + (s.eps_end - s.eps_start) * frac;
    if (s.kind == SegmentKind::Modulate) {
      out.modulated = true;
      out.omega_dr = s.omega_dr;
      out.f0 = s.f0_start + (s.f0_end - s.f0_start) * frac;
      out.theta = s.omega_dr * (t - modulation_origin()) + s.drive_phase;
      out.epsilon *= 1.0 + out.f0 * waveform_value(s.waveform, out.theta);
    }
    return out;
  }

  // Pump depth at time t, noise-free.
  double epsilon_at(double t) const { return at(t).epsilon; }
};

// Canonical pump protocol: linear ramp of the pump strength, a short hold, a
// linear ramp of the driving strength, then a modulated hold which doubles as
// the analysis window.
struct ProtocolConstants {
  double epsilon_initial = 0.0;   // E_rec
  double epsilon_final = 1.7;     // E_rec
  double f0 = 0.0;
  double omega_dr = kTwoPi * 20.5e3;
  Waveform waveform = Waveform::Sine;
  double drive_phase = 0.0;
  double ramp = 10e-3;            // s
  double hold = 0.5e-3;
  double f0_ramp = 0.5e-3;
  double modulated = 10e-3;
};

inline DriveProgram standard_protocol(const ProtocolConstants& c) {
  DriveProgram prog;
  Segment ramp;
  ramp.kind = SegmentKind::Ramp;
  ramp.duration = c.ramp;
  ramp.eps_start = c.epsilon_initial;
  ramp.eps_end = c.epsilon_final;
  prog.segments.push_back(ramp);

  Segment hold;
  hold.kind = SegmentKind::Hold;
  hold.duration = c.hold;
  hold.eps_start = hold.eps_end = c.epsilon_final;
  prog.segments.push_back(hold);

  Segment f0_ramp;
  f0_ramp.kind = SegmentKind::Modulate;
  f0_ramp.duration = c.f0_ramp;
  f0_ramp.eps_start = f0_ramp.eps_end = c.epsilon_final;
  f0_ramp.waveform = c.waveform;
  f0_ramp.f0_start = 0.0;
  f0_ramp.f0_end = c.f0;
  f0_ramp.omega_dr = c.omega_dr;
  f0_ramp.drive_phase = c.drive_phase;
  prog.segments.push_back(f0_ramp);

  Segment mod = f0_ramp;
  mod.duration = c.modulated;
  mod.f0_start = mod.f0_end = c.f0;
  prog.segments.push_back(mod);

  prog.analysis = AnalysisWindow{c.ramp + c.hold + c.f0_ramp, c.modulated};
  return prog;
}

// Effective drive values including parameter noise; delta_eff enters the
// cavity equation, so its perturbation is returned alongside epsilon.
struct DriveSample {
  double epsilon = 0.0;
  double delta_eff_offset = 0.0;
};

// Stateful evaluator adding the white-noise channels on top of a program.
// Offsets are piecewise constant, refreshed at the channel bandwidth; the
// omega_dr channel perturbs the instantaneous frequency, so its effect is an
// accumulated modulation phase. Time must be queried non-decreasingly across
// refresh boundaries (integrator stages satisfy this).
class DriveEvaluator {
 public:
  DriveEvaluator(const DriveProgram& program, std::uint64_t noise_seed)
      : prog_(&program), rng_(noise_seed) {
    refresh_dt_ = 0.0;
    for (const NoiseChannel& ch : program.noise)
      if (ch.bandwidth_hz > 0.0)
        refresh_dt_ = refresh_dt_ == 0.0
                          ? 1.0 / ch.bandwidth_hz
                          : std::min(refresh_dt_, 1.0 / ch.bandwidth_hz);
    offsets_.assign(prog_->noise.size(), 0.0);
  }

  DriveSample at(double t) {
    int idx = prog_->segment_index_at(t);
    const Segment& s = prog_->segments[static_cast<std::size_t>(idx)];
    DriveSample out;
    if (s.kind != SegmentKind::Modulate || prog_->noise.empty()) {
      out.epsilon = prog_->epsilon_at(t);
      return out;
    }

    advance_noise(t);

    double t0 = 0.0;
    for (int i = 0; i < idx; ++i) t0 += prog_->segments[static_cast<std::size_t>(i)].duration;
    double frac = s.duration > 0.0 ? (t - t0) / s.duration : 0.0;
    double eps_f = s.eps_start + (s.eps_end - s.eps_start) * frac;
    double f0 = s.f0_start + (s.f0_end - s.f0_start) * frac;
    double theta = s.omega_dr * (t - prog_->modulation_origin()) + s.drive_phase;

    for (std::size_t i = 0; i < prog_->noise.size(); ++i) {
      switch (prog_->noise[i].target) {
        case NoiseTarget::EpsilonF: eps_f += offsets_[i]; break;
        case NoiseTarget::F0: f0 += offsets_[i]; break;
        case NoiseTarget::DeltaEff: out.delta_eff_offset += offsets_[i]; break;
        case NoiseTarget::OmegaDr: break;  // handled through the phase
      }
    }
    theta += phase_extra_ + domega_ * (t - last_refresh_);

    out.epsilon = eps_f * (1.0 + f0 * waveform_value(s.waveform, theta));
    return out;
  }

 private:
  void advance_noise(double t) {
    if (refresh_dt_ <= 0.0) {
      if (!started_) draw(t);
      return;
    }
    if (!started_) {
      last_refresh_ = t;
      draw(t);
      return;
    }
    while (t - last_refresh_ >= refresh_dt_) {
      phase_extra_ += domega_ * refresh_dt_;
      last_refresh_ += refresh_dt_;
      draw(last_refresh_);
    }
  }

  void draw(double) {
    started_ = true;
    domega_ = 0.0;
    for (std::size_t i = 0; i < prog_->noise.size(); ++i) {
      offsets_[i] = prog_->noise[i].amplitude * rng_.symmetric_uniform();
      if (prog_->noise[i].target == NoiseTarget::OmegaDr) domega_ += offsets_[i];
    }
  }

  const DriveProgram* prog_;
  Rng rng_;
  std::vector<double> offsets_;
  double refresh_dt_ = 0.0;
  double last_refresh_ = 0.0;
  double phase_extra_ = 0.0;
  double domega_ = 0.0;
  bool started_ = false;
};

}  // namespace atomcav
