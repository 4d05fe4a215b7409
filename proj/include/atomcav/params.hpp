#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace atomcav {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Physical constants of the pumped atom-cavity model and the momentum-space
// truncation. Angular frequencies are in rad/s, time in seconds, pump depth
// in recoil units throughout.
struct SystemParams {
  double atom_number = 4.0e4;                      // N_a
  double light_shift_per_photon = kTwoPi * 0.7;    // U_0 [rad/s]
  double cavity_decay = kTwoPi * 3.2e3;            // kappa [rad/s]
  double recoil_frequency = kTwoPi * 3.7e3;        // omega_rec [rad/s]
  double effective_detuning = -kTwoPi * 7.0e3;     // delta_eff [rad/s]
  int mode_cutoff = 6;                             // lattice spans [-n_max, n_max]^2

  // Collective light shift delta_- = N_a U_0 / 2.
  double collective_light_shift() const {
    return 0.5 * atom_number * light_shift_per_photon;
  }
  // Bare pump-cavity detuning delta_c = delta_eff + N_a U_0 / 2 (derived).
  double bare_detuning() const {
    return effective_detuning + collective_light_shift();
  }
  // Fastest eigenfrequency of the truncated model; bounds the usable step.
  double max_eigenfrequency() const {
    return 2.0 * recoil_frequency * mode_cutoff * mode_cutoff +
           std::abs(bare_detuning());
  }

  void validate() const {
    if (!(atom_number > 0.0)) throw std::invalid_argument("atom_number must be > 0");
    if (!(light_shift_per_photon > 0.0)) throw std::invalid_argument("light_shift_per_photon must be > 0");
    if (!(cavity_decay > 0.0)) throw std::invalid_argument("cavity_decay must be > 0");
    if (!(recoil_frequency > 0.0)) throw std::invalid_argument("recoil_frequency must be > 0");
    if (mode_cutoff < 2) throw std::invalid_argument("mode_cutoff must be >= 2 (needed for the (±1,±1) channel)");
  }
};

// Instantaneous pump value: lattice depth epsilon (units of E_rec) and the
// derived two-photon coupling eta = sqrt(epsilon * omega_rec * U_0) [rad/s].
struct PumpValue {
  double epsilon = 0.0;
  double eta = 0.0;
};

inline PumpValue pump_from_depth(double epsilon_rec, const SystemParams& p) {
  double clamped = epsilon_rec > 0.0 ? epsilon_rec : 0.0;
  return {epsilon_rec,
          std::sqrt(clamped * p.recoil_frequency * p.light_shift_per_photon)};
}

}  // namespace atomcav
