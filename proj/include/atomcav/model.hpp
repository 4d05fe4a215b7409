#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomcav/params.hpp"
#include "atomcav/state.hpp"

namespace atomcav {

enum class SimMode { MeanField, Twa };

// Raised when a non-finite amplitude enters or leaves the flow. The integrator
// augments it with the segment index and last finite sample time.
struct NumericalFault : std::runtime_error {
  NumericalFault(const std::string& msg, double t, int n, int m, bool cavity)
      : std::runtime_error(msg), time(t), mode_n(n), mode_m(m),
        cavity_amplitude(cavity) {}
  double time = 0.0;
  int mode_n = 0, mode_m = 0;
  bool cavity_amplitude = false;
  int segment_index = -1;
  double last_finite_sample = -1.0;
};

namespace detail {

struct PadScratch {
  std::vector<cplx> buf;
  int n_max = -1;
};

inline PadScratch& pad_scratch() {
  thread_local PadScratch s;
  return s;
}

// Copies the lattice into a zero-padded (side+4)^2 buffer so the stencil can
// read neighbors up to distance 2 without bounds checks. Verifies finiteness
// on the way in.
inline const cplx* pad_lattice(const ModeLattice& src, double t, PadScratch& s) {
  const int n_max = src.cutoff();
  const int L = src.side();
  const int W = L + 4;
  if (s.n_max != n_max) {
    s.buf.assign(static_cast<std::size_t>(W) * W, cplx{0.0, 0.0});
    s.n_max = n_max;
  }
  const cplx* in = src.data();
  double acc = 0.0;
  for (int r = 0; r < L; ++r) {
    cplx* dst = s.buf.data() + static_cast<std::size_t>(r + 2) * W + 2;
    const cplx* row = in + static_cast<std::size_t>(r) * L;
    for (int j = 0; j < L; ++j) {
      dst[j] = row[j];
      acc += std::abs(row[j].real()) + std::abs(row[j].imag());
    }
  }
  if (!std::isfinite(acc)) {
    for (int r = 0; r < L; ++r)
      for (int j = 0; j < L; ++j) {
        const cplx v = in[static_cast<std::size_t>(r) * L + j];
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
          throw NumericalFault("non-finite mode amplitude", t, r - n_max,
                               j - n_max, false);
      }
  }
  return s.buf.data();
}

}  // namespace detail

// Deterministic right-hand side of the coupled equations of motion, in one
// pass: dphi (the atomic stencil) and da (cavity drift including -kappa a).
// The couplings per mode (n, m):
//   i dphi = omega_rec (n^2+m^2) phi
//          + (eps/4)(phi_{n-2,m} + phi_{n+2,m} + 2 phi)          [pump axis]
//          + (U0 |a|^2 / 4)(phi_{n,m-2} + phi_{n,m+2} + 2 phi)   [cavity axis]
//          + (eta/4)(a + a*)(four diagonal neighbors)
//   i da   = (-delta_c + U0 B) a + eta Theta - i kappa a
inline void eom_rhs(const ModeLattice& phi, cplx a, double t,
                    const PumpValue& pump, const SystemParams& p,
                    ModeLattice& dphi, cplx& da) {
  if (!dphi.same_shape(phi)) dphi = ModeLattice(phi.cutoff());
  if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
    throw NumericalFault("non-finite cavity amplitude", t, 0, 0, true);

  const int n_max = phi.cutoff();
  const int L = phi.side();
  const int W = L + 4;
  const cplx* pad = detail::pad_lattice(phi, t, detail::pad_scratch());

  const double omega_rec = p.recoil_frequency;
  const double cp = 0.25 * pump.epsilon * omega_rec;
  const double cc = 0.25 * p.light_shift_per_photon * std::norm(a);
  const double ci = 0.25 * pump.eta * 2.0 * a.real();

  double b_diag = 0.0, b_cross = 0.0;
  double theta_re = 0.0, theta_im = 0.0;

  for (int n = -n_max; n <= n_max; ++n) {
    const cplx* row = pad + static_cast<std::size_t>(n + n_max + 2) * W + 2;
    const cplx* row_np = row + W;    // n+1
    const cplx* row_nm = row - W;    // n-1
    const cplx* row_pp = row + 2 * W;
    const cplx* row_mm = row - 2 * W;
    cplx* out = dphi.data() + static_cast<std::size_t>(n + n_max) * L;
    const double kin_n = omega_rec * static_cast<double>(n) * n;
    for (int j = 0; j < L; ++j) {
      const int m = j - n_max;
      const double kin = kin_n + omega_rec * static_cast<double>(m) * m;
      const cplx c = row[j];
      const cplx cav_pair = row[j - 2] + row[j + 2];
      const cplx diag = row_nm[j - 1] + row_nm[j + 1] + row_np[j - 1] + row_np[j + 1];
      const cplx sum = kin * c + cp * (row_mm[j] + row_pp[j] + 2.0 * c) +
                       cc * (cav_pair + 2.0 * c) + ci * diag;
      out[j] = cplx(sum.imag(), -sum.real());  // -i * sum

      b_diag += std::norm(c);
      b_cross += c.real() * cav_pair.real() + c.imag() * cav_pair.imag();
      theta_re += c.real() * diag.real() + c.imag() * diag.imag();
      theta_im += c.real() * diag.imag() - c.imag() * diag.real();
    }
  }

  const double bunching = 0.5 * b_diag + 0.25 * b_cross;
  const cplx theta = 0.25 * cplx(theta_re, theta_im);
  const cplx drift =
      (-p.bare_detuning() + p.light_shift_per_photon * bunching) * a +
      pump.eta * theta;
  da = cplx(drift.imag(), -drift.real()) - p.cavity_decay * a;
}

inline void eom_rhs(const SystemState& state, const PumpValue& pump,
                    const SystemParams& p, ModeLattice& dphi, cplx& da) {
  eom_rhs(state.modes, state.cavity, state.time, pump, p, dphi, da);
}

// Atomic stencil alone: returns dphi/dt.
inline void atom_derivative(const SystemState& state, const PumpValue& pump,
                            const SystemParams& p, ModeLattice& out) {
  cplx da;
  eom_rhs(state, pump, p, out, da);
}

inline ModeLattice atom_derivative(const SystemState& state,
                                   const PumpValue& pump,
                                   const SystemParams& p) {
  ModeLattice out(state.modes.cutoff());
  atom_derivative(state, pump, p, out);
  return out;
}

// Deterministic part of da/dt (stochastic noise is injected by the integrator).
inline cplx cavity_derivative(const SystemState& state, const PumpValue& pump,
                              const SystemParams& p) {
  thread_local ModeLattice scratch;
  cplx da;
  eom_rhs(state, pump, p, scratch, da);
  return da;
}

// Bunching along the cavity axis, B = sum [ |phi|^2/2 + (phi* phi_{n,m+2} +
// phi* phi_{n,m-2})/4 ]; real by conjugate pairing.
inline double bunching_cavity(const ModeLattice& phi) {
  const int n_max = phi.cutoff();
  double acc = 0.0;
  for (int n = -n_max; n <= n_max; ++n)
    for (int m = -n_max; m <= n_max; ++m) {
      const cplx c = phi.at(n, m);
      acc += 0.5 * std::norm(c) +
             0.25 * (std::conj(c) * (phi.get(n, m + 2) + phi.get(n, m - 2))).real();
    }
  return acc;
}

// Same coupling along the pump axis (enters the energy only).
inline double bunching_pump(const ModeLattice& phi) {
  const int n_max = phi.cutoff();
  double acc = 0.0;
  for (int n = -n_max; n <= n_max; ++n)
    for (int m = -n_max; m <= n_max; ++m) {
      const cplx c = phi.at(n, m);
      acc += 0.5 * std::norm(c) +
             0.25 * (std::conj(c) * (phi.get(n + 2, m) + phi.get(n - 2, m))).real();
    }
  return acc;
}

// Density-wave order parameter Theta = (1/4) sum phi* (four diagonal
// neighbors); couples the pump to the cavity.
inline cplx density_wave_order(const ModeLattice& phi) {
  const int n_max = phi.cutoff();
  cplx acc{0.0, 0.0};
  for (int n = -n_max; n <= n_max; ++n)
    for (int m = -n_max; m <= n_max; ++m) {
      const cplx diag = phi.get(n + 1, m + 1) + phi.get(n + 1, m - 1) +
                        phi.get(n - 1, m + 1) + phi.get(n - 1, m - 1);
      acc += std::conj(phi.at(n, m)) * diag;
    }
  return 0.25 * acc;
}

struct Observables {
  double n_photon = 0.0;  // raw; TWA mode subtracts the 1/2 ordering term
  cplx theta{0.0, 0.0};
  double bunching = 0.0;
  double n11 = 0.0;
  double norm = 0.0;
};

// The photon-number observable is stored unclamped so ensemble averages stay
// unbiased around vacuum; clamp at presentation time via photon_number().
inline Observables observables(const SystemState& s, SimMode mode) {
  Observables o;
  o.n_photon = std::norm(s.cavity) - (mode == SimMode::Twa ? 0.5 : 0.0);
  o.theta = density_wave_order(s.modes);
  o.bunching = bunching_cavity(s.modes);
  o.n11 = std::norm(s.modes.get(1, 1)) + std::norm(s.modes.get(1, -1)) +
          std::norm(s.modes.get(-1, 1)) + std::norm(s.modes.get(-1, -1));
  o.norm = s.modes.norm();
  return o;
}

inline double photon_number(const Observables& o) {
  return o.n_photon > 0.0 ? o.n_photon : 0.0;
}

// Total classical Hamiltonian divided by hbar [rad/s * atoms]; conserved by
// the deterministic flow when kappa = 0 and the pump is constant.
inline double hamiltonian_energy(const SystemState& s, const PumpValue& pump,
                                 const SystemParams& p) {
  const ModeLattice& phi = s.modes;
  const int n_max = phi.cutoff();
  double kinetic = 0.0;
  for (int n = -n_max; n <= n_max; ++n)
    for (int m = -n_max; m <= n_max; ++m)
      kinetic += p.recoil_frequency * (n * n + m * m) * std::norm(phi.at(n, m));
  const double photon = std::norm(s.cavity);
  return -p.bare_detuning() * photon + kinetic +
         pump.epsilon * p.recoil_frequency * bunching_pump(phi) +
         p.light_shift_per_photon * photon * bunching_cavity(phi) +
         pump.eta * 2.0 * s.cavity.real() * density_wave_order(phi).real();
}

}  // namespace atomcav
