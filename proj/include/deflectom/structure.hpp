#pragma once

// Level scheme of the atom: ground and excited hyperfine manifolds, reduced
// transition amplitudes, and the unit conventions. All rates and energies
// are expressed in units of the natural linewidth Gamma; momenta in units of
// the photon recoil hbar*k.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "deflectom/errors.hpp"

namespace deflectom {

struct Manifold {
  int f = 0;
  double energy = 0.0;  // offset in units of Gamma
};

struct TransitionAmplitude {
  int ground_f = 0;
  int excited_f = 0;
  double value = 0.0;  // dimensionless reduced amplitude, strongest = 1
};

struct AtomicStructure {
  std::vector<Manifold> ground_manifolds;
  std::vector<Manifold> excited_manifolds;
  std::vector<TransitionAmplitude> dipole_factors;
  int reference_ground_f = 2;   // the transition defining detuning zero
  int reference_excited_f = 3;

  // SI constants used only by the beamline to convert lengths and
  // velocities into interaction times and recoil displacements.
  double linewidth_rad_per_s = 6.1542e7;        // 2*pi * 9.795 MHz
  double recoil_velocity_m_per_s = 2.9461e-2;   // hbar*k / M at 589 nm

  double dipole(int fg, int fe) const {
    for (const auto& t : dipole_factors)
      if (t.ground_f == fg && t.excited_f == fe) return t.value;
    return 0.0;
  }

  // Decay amplitude with per-excited-manifold normalisation so that every
  // excited state decays at the total rate Gamma; the squared amplitudes
  // are the branching fractions into the ground manifolds.
  double branch_amplitude(int fg, int fe) const {
    double sum2 = 0.0;
    for (const auto& g : ground_manifolds) {
      const double d = dipole(g.f, fe);
      sum2 += d * d;
    }
    if (sum2 <= 0.0)
      throw config_error("excited manifold F'=" + std::to_string(fe) + " has no decay path");
    return dipole(fg, fe) / std::sqrt(sum2);
  }

  const Manifold& ground(int f) const {
    for (const auto& m : ground_manifolds)
      if (m.f == f) return m;
    throw config_error("no ground manifold with F=" + std::to_string(f));
  }
  const Manifold& excited(int f) const {
    for (const auto& m : excited_manifolds)
      if (m.f == f) return m;
    throw config_error("no excited manifold with F'=" + std::to_string(f));
  }

  void validate() const {
    if (ground_manifolds.empty() || excited_manifolds.empty())
      throw config_error("structure needs at least one ground and one excited manifold");
    for (const auto& m : ground_manifolds)
      if (m.f < 0 || !std::isfinite(m.energy))
        throw config_error("structure.ground_manifolds: invalid manifold entry");
    for (const auto& m : excited_manifolds)
      if (m.f < 0 || !std::isfinite(m.energy))
        throw config_error("structure.excited_manifolds: invalid manifold entry");
    for (const auto& t : dipole_factors)
      if (t.value < 0.0 || !std::isfinite(t.value))
        throw config_error("structure.dipole_factors: amplitudes must be finite and >= 0");
    if (linewidth_rad_per_s <= 0.0) throw config_error("structure.linewidth_rad_per_s must be > 0");
    if (recoil_velocity_m_per_s <= 0.0) throw config_error("structure.recoil_velocity_m_per_s must be > 0");
    ground(reference_ground_f);
    excited(reference_excited_f);
    for (const auto& e : excited_manifolds) branch_amplitude(ground_manifolds.front().f, e.f);
    bool any = false;
    for (const auto& t : dipole_factors) any = any || t.value > 0.0;
    if (!any) throw config_error("structure.dipole_factors: all amplitudes are zero");
  }
};

// Flattened level indexing: ground manifolds first (in listed order, m from
// -f to +f), then excited manifolds.
struct LevelScheme {
  struct Level {
    bool excited = false;
    int f = 0;
    int m = 0;
    double energy = 0.0;  // rotating-frame diagonal element of H
  };

  std::vector<Level> levels;
  int ground_dim = 0;
  int total_dim = 0;

  struct Block {
    int f = 0;
    int offset = 0;
    int dim = 0;
  };
  std::vector<Block> ground_blocks;
  std::vector<Block> excited_blocks;

  int index(bool excited, int f, int m) const {
    const auto& blocks = excited ? excited_blocks : ground_blocks;
    for (const auto& b : blocks)
      if (b.f == f) return b.offset + (m + f);
    throw config_error("no such level");
  }
};

// Builds the rotating-frame level scheme for a laser detuned by `detuning`
// (in Gamma) from the structure's reference transition: ground levels keep
// their hyperfine offsets relative to the reference ground manifold, and
// excited levels sit at their offsets relative to the reference excited
// manifold minus the detuning.
inline LevelScheme make_level_scheme(const AtomicStructure& s, double detuning) {
  LevelScheme scheme;
  const double e_ref_g = s.ground(s.reference_ground_f).energy;
  const double e_ref_e = s.excited(s.reference_excited_f).energy;
  int offset = 0;
  for (const auto& m : s.ground_manifolds) {
    scheme.ground_blocks.push_back({m.f, offset, 2 * m.f + 1});
    for (int mm = -m.f; mm <= m.f; ++mm)
      scheme.levels.push_back({false, m.f, mm, m.energy - e_ref_g});
    offset += 2 * m.f + 1;
  }
  scheme.ground_dim = offset;
  for (const auto& m : s.excited_manifolds) {
    scheme.excited_blocks.push_back({m.f, offset, 2 * m.f + 1});
    for (int mm = -m.f; mm <= m.f; ++mm)
      scheme.levels.push_back({true, m.f, mm, m.energy - e_ref_e - detuning});
    offset += 2 * m.f + 1;
  }
  scheme.total_dim = offset;
  return scheme;
}

// Sodium-D2-like default scheme. Hyperfine intervals and branching derive
// from standard tabulated constants for the 3S_1/2 -> 3P_3/2 line; they are
// external inputs of the model, configurable like everything else.
inline AtomicStructure sodium_structure() {
  AtomicStructure s;
  s.ground_manifolds = {{1, -180.91}, {2, 0.0}};
  s.excited_manifolds = {{0, -11.076}, {1, -9.462}, {2, -5.955}, {3, 0.0}};
  // sqrt of the decay branching fractions F' -> F
  s.dipole_factors = {
      {1, 0, 1.0},
      {1, 1, std::sqrt(5.0 / 6.0)},
      {2, 1, std::sqrt(1.0 / 6.0)},
      {1, 2, std::sqrt(1.0 / 2.0)},
      {2, 2, std::sqrt(1.0 / 2.0)},
      {2, 3, 1.0},
  };
  s.reference_ground_f = 2;
  s.reference_excited_f = 2;
  return s;
}

// Variant with the F=1 ground state removed: decay from every excited
// manifold is redirected entirely into F=2 (branching renormalised), while
// the absorption amplitudes keep their values. Used to switch hyperfine
// losses off without touching anything else.
inline AtomicStructure closed_f2_structure() {
  AtomicStructure s = sodium_structure();
  s.ground_manifolds = {{2, 0.0}};
  s.excited_manifolds = {{1, -9.462}, {2, -5.955}, {3, 0.0}};  // F'=0 is unreachable from F=2
  std::vector<TransitionAmplitude> keep;
  for (const auto& t : s.dipole_factors)
    if (t.ground_f == 2) keep.push_back(t);
  s.dipole_factors = keep;
  return s;
}

// Minimal two-level reduction (F=0 -> F'=1) used by the analytic oracles.
inline AtomicStructure two_level_structure() {
  AtomicStructure s;
  s.ground_manifolds = {{0, 0.0}};
  s.excited_manifolds = {{1, 0.0}};
  s.dipole_factors = {{0, 1, 1.0}};
  s.reference_ground_f = 0;
  s.reference_excited_f = 1;
  return s;
}

}  // namespace deflectom
