#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "atomcav/params.hpp"

namespace atomcav {

using cplx = std::complex<double>;

// Square lattice of complex mode amplitudes phi_{n,m}, n,m in [-n_max, n_max].
// Row index n (pump axis), column index m (cavity axis), m contiguous.
class ModeLattice {
 public:
  ModeLattice() = default;
  explicit ModeLattice(int n_max)
      : n_max_(n_max), side_(2 * n_max + 1),
        amps_(static_cast<std::size_t>(side_) * side_, cplx{0.0, 0.0}) {}

  int cutoff() const { return n_max_; }
  int side() const { return side_; }
  std::size_t size() const { return amps_.size(); }

  bool contains(int n, int m) const {
    return n >= -n_max_ && n <= n_max_ && m >= -n_max_ && m <= n_max_;
  }
  std::size_t index(int n, int m) const {
    return static_cast<std::size_t>(n + n_max_) * side_ + (m + n_max_);
  }
  cplx& at(int n, int m) { return amps_[index(n, m)]; }
  const cplx& at(int n, int m) const { return amps_[index(n, m)]; }
  // Amplitude with hard truncation: zero outside the cutoff.
  cplx get(int n, int m) const {
    return contains(n, m) ? amps_[index(n, m)] : cplx{0.0, 0.0};
  }

  cplx* data() { return amps_.data(); }
  const cplx* data() const { return amps_.data(); }

  double norm() const {
    double s = 0.0;
    for (const cplx& v : amps_) s += std::norm(v);
    return s;
  }

  void fill(cplx v) { std::fill(amps_.begin(), amps_.end(), v); }

  bool same_shape(const ModeLattice& other) const {
    return n_max_ == other.n_max_;
  }

  friend bool operator==(const ModeLattice&, const ModeLattice&) = default;

 private:
  int n_max_ = 0;
  int side_ = 1;
  std::vector<cplx> amps_{cplx{0.0, 0.0}};
};

// Full semiclassical state: atomic mode amplitudes (carrying atom number,
// sum |phi|^2 = N_a), complex cavity amplitude and the current time.
struct SystemState {
  ModeLattice modes;
  cplx cavity{0.0, 0.0};
  double time = 0.0;
};

// Condensate in the zero mode plus a small symmetry-breaking seed in the four
// (±1,±1) modes. The seeded fraction is needed because the bare condensate is
// an exact fixed point of the deterministic flow; seed_fraction is the seeded
// amplitude in units of sqrt(N_a) per mode. Norm is exactly N_a.
inline SystemState initial_state(const SystemParams& p,
                                 double seed_fraction = 1e-4) {
  SystemState s;
  s.modes = ModeLattice(p.mode_cutoff);
  double seed_amp = seed_fraction * std::sqrt(p.atom_number);
  double condensate = p.atom_number - 4.0 * seed_amp * seed_amp;
  if (condensate < 0.0) throw std::invalid_argument("seed_fraction too large");
  s.modes.at(0, 0) = std::sqrt(condensate);
  if (seed_amp != 0.0) {
    s.modes.at(1, 1) = seed_amp;
    s.modes.at(1, -1) = seed_amp;
    s.modes.at(-1, 1) = seed_amp;
    s.modes.at(-1, -1) = seed_amp;
  }
  s.cavity = cplx{0.0, 0.0};
  s.time = 0.0;
  return s;
}

}  // namespace atomcav
