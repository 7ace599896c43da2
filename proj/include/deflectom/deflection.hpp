#pragma once

// Deflection parameters and the derived measurement observables.
//
// The deflection parameter D_k^gg(t) is the expected number of photon
// recoils picked up by an atom that enters the deflection beam in the
// laser-frame sublevel |g> under polarisation mode k. The deflected
// momentum of an arbitrary state is the D-weighted sum of its laser-frame
// populations,
//     p_k = sum_g D_k^gg(t) * rho^L_gg(0),
// which is exact for these dynamics: the momentum functional commutes with
// rotations about the laser-frame quantisation axis, so laser-frame
// coherences cannot contribute. The checked variant below measures the
// residual against a full propagation rather than assuming it.
//
// From the momenta of the pure polarisation modes the observables
//     P_o = p_{sigma-} - p_{sigma+}
//     P_a = (p_0 - p_90) + i (p_45 - p_135)
//     P_g = (p_0 + p_90) - (p_45 + p_135)
// are formed. Expanded in natural-frame matrix elements (collinear
// geometry, deflection beam along natural z) they reduce to
//     P_o = K_2 L_perp^2 / (2 sigma_u) + K_1 L_perp^1
//     P_a = (Ka_2 (rho_20 + rho_0-2) + Ka_1 rho_1-1) / sigma_u
//     P_g = Kg_2 Re(rho_2-2) / sigma_u
// with the coefficient definitions in k_coefficients(),
// alignment_coefficients() and coherence_coefficient(). The expansions are
// validated numerically against the momentum route in the test suite.

#include <array>
#include <complex>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "deflectom/geometry.hpp"
#include "deflectom/lindblad.hpp"

namespace deflectom {

struct DeflectionSettings {
  double rabi_frequency = 1.0;   // Omega in Gamma
  double detuning = 0.0;         // from the reference transition, in Gamma
  double interaction_time = 60;  // in 1/Gamma
  double sigma_u = 1.0;          // normalisation constant of the K definitions
  EngineSettings engine;
};

struct DeflectionParameterSet {
  PolarisationMode mode = PolarisationMode::SigmaPlus;
  std::string direction = "z";
  double interaction_time = 0.0;
  std::array<double, 5> d_values{};  // indexed by laser-frame g = -2..2
  double sigma_u = 1.0;

  double d(int g) const { return d_values[size_t(g + 2)]; }
};

// Dynamics classes: the four linear modes share one laser-frame problem
// (pure pi light along the polarisation axis); the circular modes get their
// own. Values are independent of the incident direction as long as the
// beam parameters are shared, which the labelled sets record explicitly.
enum class ModeClass { Pi, SigmaPlus, SigmaMinus };

inline ModeClass mode_class(PolarisationMode m) {
  switch (m) {
    case PolarisationMode::SigmaPlus: return ModeClass::SigmaPlus;
    case PolarisationMode::SigmaMinus: return ModeClass::SigmaMinus;
    case PolarisationMode::Elliptical:
      throw config_error("deflection parameters are defined for pure modes only");
    default: return ModeClass::Pi;
  }
}

// Laser-frame field for a dynamics class: pi light points along the frame
// z-axis and travels along x; circular light travels along z.
inline LaserField laser_frame_field(ModeClass cls, const DeflectionSettings& s) {
  LaserField l;
  switch (cls) {
    case ModeClass::Pi:
      l.polarisation = PolarisationState::pure_mode_in_laser_frame(PolarisationMode::Pi0);
      l.propagation_direction = Eigen::Vector3d::UnitX();
      break;
    case ModeClass::SigmaPlus:
      l.polarisation = PolarisationState::pure_mode_in_laser_frame(PolarisationMode::SigmaPlus);
      l.propagation_direction = Eigen::Vector3d::UnitZ();
      break;
    case ModeClass::SigmaMinus:
      l.polarisation = PolarisationState::pure_mode_in_laser_frame(PolarisationMode::SigmaMinus);
      l.propagation_direction = Eigen::Vector3d::UnitZ();
      break;
  }
  l.rabi_frequency = s.rabi_frequency;
  l.detuning = s.detuning;
  l.interaction_time = s.interaction_time;
  return l;
}

// Computes and caches deflection parameters for one beam configuration.
// With the spectral engine each dynamics class costs one eigendecomposition
// and every further interaction time is nearly free, so velocity averaging
// and time scans stay cheap. Safe for concurrent use.
class DeflectionEngine {
 public:
  DeflectionEngine(const AtomicStructure& structure, const DeflectionSettings& settings)
      : structure_(structure), settings_(settings) {
    structure_.validate();
    upper_f_ = structure_.ground_manifolds.front().f;
    for (const auto& m : structure_.ground_manifolds) upper_f_ = std::max(upper_f_, m.f);
    if (upper_f_ != 2)
      throw config_error("deflection observables expect an F=2 upper ground manifold");
  }

  const DeflectionSettings& settings() const { return settings_; }
  const AtomicStructure& structure() const { return structure_; }

  DeflectionParameterSet parameters(PolarisationMode mode, const std::string& direction,
                                    std::optional<double> time = std::nullopt) const {
    const double t = time.value_or(settings_.interaction_time);
    const ModeClass cls = mode_class(mode);
    DeflectionParameterSet out;
    out.mode = mode;
    out.direction = direction;
    out.interaction_time = t;
    out.sigma_u = settings_.sigma_u;
    for (int g = -2; g <= 2; ++g) {
      double d = photons(cls, g, t);
      if (d < 0.0 && d > -1e-9) d = 0.0;  // numerical noise at t ~ 0
      out.d_values[size_t(g + 2)] = d;
    }
    return out;
  }

  // Full propagation of a laser-frame state under one dynamics class.
  PumpingResult propagate_laser_frame(const DensityMatrix& rho_l, ModeClass cls, double t) const {
    if (rho_l.frame != Frame::Laser)
      throw frame_error("propagate_laser_frame: state must be in the laser frame");
    if (settings_.engine.method == EngineSettings::Method::Spectral) {
      const ClassData& data = class_data(cls);
      auto path = data.prop->path(data.prop->generator().embed_ground(rho_l));
      Eigen::MatrixXcd rho = path.state_at(t);
      double photons = path.photons_by(t);
      detail::settle_excited(data.prop->generator(), rho, photons);
      return detail::extract_result(data.prop->generator(), rho, photons, Frame::Laser);
    }
    Generator gen(structure_, laser_frame_field(cls, settings_));
    return propagate_full(gen, gen.embed_ground(rho_l), t, Frame::Laser, settings_.engine);
  }

 private:
  struct ClassData {
    std::unique_ptr<SpectralPropagator> prop;
    std::vector<SpectralPropagator::Path> basis_paths;  // g = -2..2
  };

  const ClassData& class_data(ModeClass cls) const {
    std::scoped_lock lock(mutex_);
    auto& slot = classes_[cls];
    if (!slot.prop) {
      Generator gen(structure_, laser_frame_field(cls, settings_));
      slot.prop = std::make_unique<SpectralPropagator>(gen);
      for (int g = -upper_f_; g <= upper_f_; ++g)
        slot.basis_paths.push_back(
            slot.prop->path(slot.prop->generator().embed_ground(DensityMatrix::pure(upper_f_, g, Frame::Laser))));
    }
    return slot;
  }

  double photons(ModeClass cls, int g, double t) const {
    if (t == 0.0) return 0.0;
    if (settings_.engine.method == EngineSettings::Method::Spectral) {
      const ClassData& data = class_data(cls);
      // photons_by excludes the residual excited population; add it the
      // same way propagate() does, by settling.
      Eigen::MatrixXcd rho = data.basis_paths[size_t(g + upper_f_)].state_at(t);
      double n = data.basis_paths[size_t(g + upper_f_)].photons_by(t);
      const Generator& gen = data.prop->generator();
      n += gen.excited_population(rho);
      return n;
    }
    DeflectionSettings s = settings_;
    s.interaction_time = t;
    Generator gen(structure_, laser_frame_field(cls, s));
    PumpingResult r = propagate_full(gen, gen.embed_ground(DensityMatrix::pure(upper_f_, g, Frame::Laser)),
                                     t, Frame::Laser, s.engine);
    return r.scattered_photons;
  }

  AtomicStructure structure_;
  DeflectionSettings settings_;
  int upper_f_ = 2;
  mutable std::mutex mutex_;
  mutable std::map<ModeClass, ClassData> classes_;
};

inline DeflectionParameterSet compute_deflection_parameters(const AtomicStructure& structure,
                                                            const DeflectionSettings& settings,
                                                            PolarisationMode mode,
                                                            const std::string& direction) {
  return DeflectionEngine(structure, settings).parameters(mode, direction);
}

// ---------------------------------------------------------------------------
// momenta

// p = sum_g D^gg rho^L_gg on the unnormalised (population-scaled) state.
inline double deflected_momentum(const DensityMatrix& rho_l, const DeflectionParameterSet& dset) {
  if (rho_l.frame != Frame::Laser)
    throw frame_error("deflected_momentum: state must be given in the laser frame (use natural_to_laser)");
  if (rho_l.f != 2) throw config_error("deflected_momentum: expected an F=2 state");
  double p = 0.0;
  for (int g = -2; g <= 2; ++g) p += dset.d(g) * (rho_l.population_scale * rho_l.rho(g, g).real());
  return p;
}

inline LaserGeometry geometry_for(const DeflectionParameterSet& dset) {
  return LaserGeometry(named_direction(dset.direction), dset.mode);
}

// Convenience: rotate a natural-frame state into the set's laser frame and
// apply the linear model.
inline double deflected_momentum_natural(const DensityMatrix& rho_n, const DeflectionParameterSet& dset) {
  return deflected_momentum(natural_to_laser(rho_n, geometry_for(dset)), dset);
}

struct MomentumCheck {
  double linear_model = 0.0;     // D-weighted diagonal sum
  double full_simulation = 0.0;  // direct propagation of the same state
  double deviation = 0.0;
};

// Reports the linear-model momentum together with the full-propagation
// value for the same state; their difference measures what laser-frame
// coherences contribute (zero for these dynamics, but measured, not
// assumed).
inline MomentumCheck deflected_momentum_checked(const DensityMatrix& rho_l,
                                                const DeflectionParameterSet& dset,
                                                const DeflectionEngine& engine) {
  MomentumCheck out;
  out.linear_model = deflected_momentum(rho_l, dset);
  PumpingResult r = engine.propagate_laser_frame(rho_l, mode_class(dset.mode), dset.interaction_time);
  out.full_simulation = r.scattered_photons;
  out.deviation = out.full_simulation - out.linear_model;
  return out;
}

// ---------------------------------------------------------------------------
// observables

inline double orientation_parameter(double p_sigma_minus, double p_sigma_plus) {
  return p_sigma_minus - p_sigma_plus;
}

inline std::complex<double> alignment_parameter(double p0, double p90, double p45, double p135) {
  return {p0 - p90, p45 - p135};
}

inline double coherence_parameter(double p0, double p90, double p45, double p135) {
  return (p0 + p90) - (p45 + p135);
}

struct KCoefficients {
  double k1 = 0.0;  // multiplies L_perp^1 = rho_11 - rho_-1-1
  double k2 = 0.0;  // sigma_u * (D^-2-2 - D^22); enters as K2 L_perp^2 / (2 sigma_u)
};

inline KCoefficients k_coefficients(const DeflectionParameterSet& sigma_plus) {
  if (mode_class(sigma_plus.mode) != ModeClass::SigmaPlus)
    throw config_error("k_coefficients expects the sigma+ parameter set");
  KCoefficients k;
  k.k2 = sigma_plus.sigma_u * (sigma_plus.d(-2) - sigma_plus.d(2));
  k.k1 = sigma_plus.d(-1) - sigma_plus.d(1);
  return k;
}

struct AlignmentCoefficients {
  double ka2 = 0.0;  // multiplies (rho_20 + rho_0-2) / sigma_u
  double ka1 = 0.0;  // multiplies rho_1-1 / sigma_u
};

inline AlignmentCoefficients alignment_coefficients(const DeflectionParameterSet& pi_set) {
  if (mode_class(pi_set.mode) != ModeClass::Pi)
    throw config_error("alignment_coefficients expects a linear-mode parameter set");
  AlignmentCoefficients k;
  k.ka2 = 0.5 * std::sqrt(6.0) * pi_set.sigma_u * (pi_set.d(2) - pi_set.d(0));
  k.ka1 = 2.0 * pi_set.sigma_u * (pi_set.d(2) - pi_set.d(1));
  return k;
}

// Kg_2, multiplying Re(rho_2-2) / sigma_u.
inline double coherence_coefficient(const DeflectionParameterSet& pi_set) {
  if (mode_class(pi_set.mode) != ModeClass::Pi)
    throw config_error("coherence_coefficient expects a linear-mode parameter set");
  return pi_set.sigma_u * (pi_set.d(2) + 3.0 * pi_set.d(0) - 4.0 * pi_set.d(1));
}

// Natural-frame expansions (collinear geometry). Evaluated on the
// population-scaled state so they compare directly with momenta.
inline double orientation_expansion(const DensityMatrix& rho_n, const DeflectionParameterSet& sigma_plus) {
  if (rho_n.frame != Frame::Natural) throw frame_error("orientation_expansion: natural frame required");
  const Eigen::MatrixXcd a = rho_n.scaled();
  const double lperp2 = 2.0 * (a(4, 4).real() - a(0, 0).real());
  const double lperp1 = a(3, 3).real() - a(1, 1).real();
  const KCoefficients k = k_coefficients(sigma_plus);
  return k.k2 * lperp2 / (2.0 * sigma_plus.sigma_u) + k.k1 * lperp1;
}

inline std::complex<double> alignment_expansion(const DensityMatrix& rho_n,
                                                const DeflectionParameterSet& pi_set) {
  if (rho_n.frame != Frame::Natural) throw frame_error("alignment_expansion: natural frame required");
  const Eigen::MatrixXcd a = rho_n.scaled();
  const AlignmentCoefficients k = alignment_coefficients(pi_set);
  // rho_20 + rho_0-2 and rho_1-1, indices m + 2
  const std::complex<double> even = a(4, 2) + a(2, 0);
  const std::complex<double> odd = a(3, 1);
  return (k.ka2 * even + k.ka1 * odd) / pi_set.sigma_u;
}

inline double coherence_expansion(const DensityMatrix& rho_n, const DeflectionParameterSet& pi_set) {
  if (rho_n.frame != Frame::Natural) throw frame_error("coherence_expansion: natural frame required");
  const Eigen::MatrixXcd a = rho_n.scaled();
  return coherence_coefficient(pi_set) * a(4, 0).real() / pi_set.sigma_u;
}

// ---------------------------------------------------------------------------
// charge cloud shape

struct ShapeParameters {
  double l_perp_2 = 0.0;  // 2 (rho_22 - rho_-2-2)
  double l_perp_1 = 0.0;  // rho_11 - rho_-1-1
};

inline ShapeParameters shape_from_density(const DensityMatrix& rho_n) {
  if (rho_n.frame != Frame::Natural) throw frame_error("shape_from_density: natural frame required");
  if (rho_n.f != 2) throw config_error("shape_from_density: expected an F=2 state");
  ShapeParameters s;
  s.l_perp_2 = 2.0 * (rho_n.rho(2, 2).real() - rho_n.rho(-2, -2).real());
  s.l_perp_1 = rho_n.rho(1, 1).real() - rho_n.rho(-1, -1).real();
  return s;
}

// Inverts P_o = K_2 L_perp^2 / (2 sigma_u), neglecting the K_1 term.
inline double l_perp_from_measurement(double p_o, double k2, double sigma_u = 1.0) {
  if (std::abs(k2) < 1e-6)
    throw conditioning_error("l_perp_from_measurement: K_2 is too small to invert");
  return 2.0 * sigma_u * p_o / k2;
}

// ---------------------------------------------------------------------------
// tabular export/import, so downstream analysis can run without re-simulation

inline void write_deflection_table(std::ostream& os, const std::vector<DeflectionParameterSet>& sets) {
  os << "mode\tdirection\tg\td_value\tinteraction_time_gamma\tsigma_u\n";
  char buf[64];
  for (const auto& s : sets)
    for (int g = -2; g <= 2; ++g) {
      os << to_string(s.mode) << '\t' << s.direction << '\t' << g << '\t';
      std::snprintf(buf, sizeof buf, "%.12g\t%.12g\t%.12g\n", s.d(g), s.interaction_time, s.sigma_u);
      os << buf;
    }
}

inline std::vector<DeflectionParameterSet> read_deflection_table(std::istream& is) {
  std::map<std::pair<std::string, std::string>, DeflectionParameterSet> found;
  std::string line;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // column header
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    std::string mode_s, dir;
    int g;
    double d, t, su;
    if (!(ss >> mode_s >> dir >> g >> d >> t >> su))
      throw config_error("malformed deflection parameter table line: " + line);
    auto& set = found[{mode_s, dir}];
    set.mode = polarisation_mode_from_string(mode_s);
    set.direction = dir;
    set.interaction_time = t;
    set.sigma_u = su;
    if (g < -2 || g > 2) throw config_error("deflection table: g out of range");
    set.d_values[size_t(g + 2)] = d;
  }
  std::vector<DeflectionParameterSet> out;
  out.reserve(found.size());
  for (auto& [key, set] : found) out.push_back(std::move(set));
  return out;
}

}  // namespace deflectom
