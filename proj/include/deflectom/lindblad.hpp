#pragma once

// Master-equation propagation of the multilevel atom under a travelling
// wave, with spontaneous emission and scattered-photon (momentum) counting.
//
// The dynamics is the Lindblad equation
//   d rho/dt = -i [H, rho] + sum_j ( C_j rho C_j^+ - 1/2 {C_j^+ C_j, rho} )
// in the frame rotating at the laser frequency. H carries the hyperfine
// offsets and detuning on its diagonal and the rotating-wave dipole coupling
//   -(Omega/2) e_q * dipole(F,F') * <F m; 1 q | F' m+q>
// off the diagonal. The jump operators are indexed by the spherical photon
// component q and the destination ground manifold (decays into different
// ground manifolds are frequency-distinguishable and must not interfere;
// decays through different excited manifolds do interfere and are summed
// coherently). Everything is expressed in units of the linewidth Gamma = 1.
//
// Two propagation engines are provided:
//   * spectral  - eigendecomposition of the (time-independent) generator;
//                 exact for any interaction time, cheap to reuse across
//                 times and initial states. Default.
//   * adaptive  - explicit adaptive Runge-Kutta (odeint, dopri5) with
//                 relative/absolute tolerances; used for cross-checks and
//                 as a fallback when the spectral decomposition is
//                 ill-conditioned.
//
// The expected number of scattered photons equals the integral of Gamma
// times the excited population, plus whatever remains excited at the end of
// the pulse (the atom leaves the beam and decays in the dark; the residual
// excited population is resolved analytically). For a travelling wave the
// expected momentum transfer along the propagation direction is one photon
// recoil per scattering event.

#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>

#include "deflectom/density_matrix.hpp"
#include "deflectom/errors.hpp"
#include "deflectom/geometry.hpp"
#include "deflectom/polarisation.hpp"
#include "deflectom/structure.hpp"

namespace deflectom {

struct LaserField {
  PolarisationState polarisation;
  double rabi_frequency = 0.0;  // Omega in Gamma
  double detuning = 0.0;        // from the structure's reference transition, in Gamma
  Eigen::Vector3d propagation_direction = Eigen::Vector3d::UnitZ();
  double interaction_time = 0.0;  // in 1/Gamma

  void validate() const {
    if (rabi_frequency < 0.0 || !std::isfinite(rabi_frequency))
      throw config_error("laser.rabi_frequency_over_gamma must be finite and >= 0");
    if (interaction_time < 0.0 || !std::isfinite(interaction_time))
      throw config_error("laser.interaction_time must be finite and >= 0");
    if (!std::isfinite(detuning)) throw config_error("laser.detuning_over_gamma must be finite");
    if (std::abs(propagation_direction.norm() - 1.0) > 1e-9)
      throw geometry_error("laser.propagation_direction must be a unit vector");
  }
};

struct EngineSettings {
  enum class Method { Spectral, Adaptive };
  Method method = Method::Spectral;
  double rtol = 1e-8;
  double atol = 1e-10;
};

class Generator {
 public:
  Generator(const AtomicStructure& structure, const LaserField& laser)
      : scheme_(make_level_scheme(structure, laser.detuning)) {
    laser.validate();
    structure.validate();
    if (laser.rabi_frequency > 0.0)
      require_transverse(laser.polarisation, laser.propagation_direction);

    const int n = scheme_.total_dim;
    hamiltonian_ = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i) hamiltonian_(i, i) = scheme_.levels[i].energy;

    for (int q = -1; q <= 1; ++q) {
      const std::complex<double> eq = laser.polarisation.e(q);
      if (laser.rabi_frequency == 0.0 || std::abs(eq) < 1e-15) continue;
      for (const auto& gb : scheme_.ground_blocks)
        for (const auto& eb : scheme_.excited_blocks) {
          const double df = structure.dipole(gb.f, eb.f);
          if (df == 0.0) continue;
          for (int m = -gb.f; m <= gb.f; ++m) {
            const int me = m + q;
            if (std::abs(me) > eb.f) continue;
            const double cg = clebsch_gordan(gb.f, m, 1, q, eb.f, me);
            if (cg == 0.0) continue;
            const std::complex<double> amp = -0.5 * laser.rabi_frequency * eq * df * cg;
            hamiltonian_(scheme_.index(true, eb.f, me), scheme_.index(false, gb.f, m)) += amp;
            hamiltonian_(scheme_.index(false, gb.f, m), scheme_.index(true, eb.f, me)) += std::conj(amp);
          }
        }
    }

    for (const auto& gb : scheme_.ground_blocks)
      for (int q = -1; q <= 1; ++q) {
        Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(n, n);
        bool nonzero = false;
        for (const auto& eb : scheme_.excited_blocks) {
          const double amp = structure.branch_amplitude(gb.f, eb.f);
          if (amp == 0.0) continue;
          for (int me = -eb.f; me <= eb.f; ++me) {
            const int mg = me - q;
            if (std::abs(mg) > gb.f) continue;
            const double cg = clebsch_gordan(gb.f, mg, 1, q, eb.f, me);
            if (cg == 0.0) continue;
            c(scheme_.index(false, gb.f, mg), scheme_.index(true, eb.f, me)) += amp * cg;
            nonzero = true;
          }
        }
        if (nonzero) jumps_.push_back(std::move(c));
      }

    damping_ = Eigen::MatrixXcd::Zero(n, n);
    for (const auto& c : jumps_) damping_ += c.adjoint() * c;
  }

  const LevelScheme& scheme() const { return scheme_; }
  int dim() const { return scheme_.total_dim; }
  const Eigen::MatrixXcd& hamiltonian() const { return hamiltonian_; }
  const std::vector<Eigen::MatrixXcd>& jump_operators() const { return jumps_; }

  // d rho / dt
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
    const std::complex<double> i1(0.0, 1.0);
    Eigen::MatrixXcd out = -i1 * (hamiltonian_ * rho - rho * hamiltonian_);
    out -= 0.5 * (damping_ * rho + rho * damping_);
    for (const auto& c : jumps_) out += c * rho * c.adjoint();
    return out;
  }

  double excited_population(const Eigen::MatrixXcd& rho) const {
    double p = 0.0;
    for (int i = scheme_.ground_dim; i < scheme_.total_dim; ++i) p += rho(i, i).real();
    return p;
  }

 private:
  static Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    const int n = int(a.rows());
    Eigen::MatrixXcd out(n * n, n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out.block(i * n, j * n, n, n) = a(i, j) * b;
    return out;
  }

 public:

  // Matrix of the generator acting on column-major vec(rho).
  Eigen::MatrixXcd liouvillian() const {
    const int n = dim();
    const std::complex<double> i1(0.0, 1.0);
    Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd L = -i1 * (kron(id, hamiltonian_) - kron(hamiltonian_.transpose(), id));
    L -= 0.5 * (kron(id, damping_) + kron(damping_.transpose(), id));
    for (const auto& c : jumps_) L += kron(c.conjugate(), c);
    return L;
  }

  // Matrix of the emission-flux superoperator S(rho) = sum_j C_j rho C_j^+,
  // the source term for photon-count moments.
  Eigen::MatrixXcd flux_superoperator() const {
    const int n = dim();
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n * n, n * n);
    for (const auto& c : jumps_) s += kron(c.conjugate(), c);
    return s;
  }

  // Embeds a single-manifold ground density matrix into the full space,
  // carrying its population scale.
  Eigen::MatrixXcd embed_ground(const DensityMatrix& rho) const {
    for (const auto& b : scheme_.ground_blocks)
      if (b.f == rho.f) {
        Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(dim(), dim());
        full.block(b.offset, b.offset, b.dim, b.dim) = rho.scaled();
        return full;
      }
    throw config_error("initial state is not in a ground manifold of the structure");
  }

 private:
  LevelScheme scheme_;
  Eigen::MatrixXcd hamiltonian_;
  std::vector<Eigen::MatrixXcd> jumps_;
  Eigen::MatrixXcd damping_;  // sum C^+ C
};

struct PumpingResult {
  std::vector<DensityMatrix> ground_states;  // one per ground manifold
  double scattered_photons = 0.0;
  double momentum_transfer = 0.0;  // in hbar k along the propagation direction

  const DensityMatrix& manifold(int f) const {
    for (const auto& g : ground_states)
      if (g.f == f) return g;
    throw config_error("no such ground manifold in result");
  }
  double total_ground_population() const {
    double p = 0.0;
    for (const auto& g : ground_states) p += g.population_scale;
    return p;
  }
};

namespace detail {

// Residual excited population after the pulse: the atom decays field-free.
// Each excited atom emits exactly one photon, and with the excited block of
// H diagonal (energies eps_a) the integrated excited matrix is
// X_ab = rho_ee(a,b) / (Gamma + i(eps_a - eps_b)); the ground blocks receive
// sum_j C_j X C_j^+. Coherences between different ground manifolds keep
// precessing and are not meaningful afterwards; only the per-manifold
// blocks of the returned matrix are used.
inline void settle_excited(const Generator& gen, Eigen::MatrixXcd& rho, double& photons) {
  const auto& scheme = gen.scheme();
  const int n = gen.dim(), ng = scheme.ground_dim;
  const int ne = n - ng;
  if (ne <= 0) return;
  photons += gen.excited_population(rho);
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(n, n);
  const std::complex<double> i1(0.0, 1.0);
  for (int a = 0; a < ne; ++a)
    for (int b = 0; b < ne; ++b) {
      const double de = scheme.levels[ng + a].energy - scheme.levels[ng + b].energy;
      x(ng + a, ng + b) = rho(ng + a, ng + b) / (1.0 + i1 * de);
    }
  Eigen::MatrixXcd ground = rho;
  for (const auto& c : gen.jump_operators()) ground += c * x * c.adjoint();
  rho.setZero();
  rho.topLeftCorner(ng, ng) = ground.topLeftCorner(ng, ng);
}

// Settle variant that also carries the photon-count first moment: the
// residual excited atoms emit one final photon, so the moment matrix gains
// both its own settled flux and the settled state flux (the +1 count of the
// last emission).
inline void settle_excited_with_moment(const Generator& gen, Eigen::MatrixXcd& rho,
                                       Eigen::MatrixXcd& sigma, double& photons) {
  const auto& scheme = gen.scheme();
  const int n = gen.dim(), ng = scheme.ground_dim;
  const int ne = n - ng;
  if (ne <= 0) return;
  const std::complex<double> i1(0.0, 1.0);
  auto integrated = [&](const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(n, n);
    for (int a = 0; a < ne; ++a)
      for (int b = 0; b < ne; ++b) {
        const double de = scheme.levels[ng + a].energy - scheme.levels[ng + b].energy;
        x(ng + a, ng + b) = m(ng + a, ng + b) / (1.0 + i1 * de);
      }
    return x;
  };
  photons += gen.excited_population(rho);
  const Eigen::MatrixXcd x_rho = integrated(rho);
  const Eigen::MatrixXcd x_sigma = integrated(sigma);
  Eigen::MatrixXcd rho_g = rho, sigma_g = sigma;
  for (const auto& c : gen.jump_operators()) {
    rho_g += c * x_rho * c.adjoint();
    sigma_g += c * (x_sigma + x_rho) * c.adjoint();
  }
  rho.setZero();
  sigma.setZero();
  rho.topLeftCorner(ng, ng) = rho_g.topLeftCorner(ng, ng);
  sigma.topLeftCorner(ng, ng) = sigma_g.topLeftCorner(ng, ng);
}

inline PumpingResult extract_result(const Generator& gen, const Eigen::MatrixXcd& rho_full,
                                    double photons, Frame frame) {
  PumpingResult result;
  for (const auto& b : gen.scheme().ground_blocks) {
    DensityMatrix g;
    g.f = b.f;
    g.frame = frame;
    Eigen::MatrixXcd block = rho_full.block(b.offset, b.offset, b.dim, b.dim);
    const double pop = block.trace().real();
    g.population_scale = std::max(pop, 0.0);
    if (g.population_scale > 1e-14) {
      block /= pop;
      block = 0.5 * (block + block.adjoint().eval());  // strip integrator asymmetry
      g.elements = block;
    } else {
      g.population_scale = 0.0;
      g.elements = Eigen::MatrixXcd::Zero(b.dim, b.dim);
    }
    result.ground_states.push_back(std::move(g));
  }
  result.scattered_photons = photons;
  result.momentum_transfer = photons;
  return result;
}

}  // namespace detail

// Exact propagation through the eigendecomposition of the generator.
// Constructing the propagator costs one dense eigendecomposition of the
// n^2 x n^2 Liouvillian; evolving any initial state to any time afterwards
// is a matrix-vector product.
class SpectralPropagator {
 public:
  explicit SpectralPropagator(const Generator& gen) : gen_(gen), n_(gen.dim()) {
    const Eigen::MatrixXcd L = gen_.liouvillian();
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(L);
    if (es.info() != Eigen::Success)
      throw numerical_error("spectral propagator: eigendecomposition failed");
    eigenvalues_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
    lu_.compute(vectors_);
    scale_ = L.cwiseAbs().maxCoeff();

    photon_row_ = Eigen::RowVectorXcd::Zero(n_ * n_);
    for (int i = gen_.scheme().ground_dim; i < n_; ++i) photon_row_(i * n_ + i) = 1.0;
    photon_row_v_ = photon_row_ * vectors_;
  }

  const Generator& generator() const { return gen_; }

  class Path {
   public:
    Eigen::MatrixXcd state_at(double t) const {
      Eigen::VectorXcd phases = (eigenvalues_ * t).array().exp();
      Eigen::VectorXcd v = vectors_ * (phases.asDiagonal() * c0_);
      return Eigen::Map<const Eigen::MatrixXcd>(v.data(), n_, n_);
    }

    // Integral of Gamma * excited population up to t.
    double photons_by(double t) const {
      std::complex<double> total = 0.0;
      for (int k = 0; k < eigenvalues_.size(); ++k) {
        const std::complex<double> lt = eigenvalues_(k) * t;
        std::complex<double> phi;  // (exp(l t) - 1) / l
        if (std::abs(lt) < 1e-5) {
          phi = t * (1.0 + lt / 2.0 + lt * lt / 6.0);
        } else {
          phi = (std::exp(lt) - 1.0) / eigenvalues_(k);
        }
        total += weights_(k) * phi * c0_(k);
      }
      return total.real();
    }

    const Eigen::VectorXcd& coefficients() const { return c0_; }

   private:
    friend class SpectralPropagator;
    Eigen::VectorXcd c0_;
    Eigen::VectorXcd eigenvalues_;
    const Eigen::MatrixXcd& vectors_;
    const Eigen::RowVectorXcd& weights_;
    int n_;
    Path(Eigen::VectorXcd c0, const Eigen::VectorXcd& ev, const Eigen::MatrixXcd& v,
         const Eigen::RowVectorXcd& w, int n)
        : c0_(std::move(c0)), eigenvalues_(ev), vectors_(v), weights_(w), n_(n) {}
  };

  Path path(const Eigen::MatrixXcd& rho0_full) const {
    Eigen::Map<const Eigen::VectorXcd> x0(rho0_full.data(), n_ * n_);
    Eigen::VectorXcd c0 = lu_.solve(x0);
    const double resid = (vectors_ * c0 - x0).cwiseAbs().maxCoeff();
    const double ref = std::max(1e-300, x0.cwiseAbs().maxCoeff());
    if (resid > 1e-7 * ref)
      throw numerical_error(
          "spectral propagator: eigenbasis is ill-conditioned for this generator; "
          "use the adaptive engine");
    return Path(std::move(c0), eigenvalues_, vectors_, photon_row_v_, n_);
  }

  // First moment of the scattered-photon count: sigma(t) = E[n * rho](t),
  // the solution of d sigma/dt = L sigma + S rho(t) with sigma(0) = 0,
  //   vec sigma(t) = V ( M(t) o V^-1 S V ) c0,
  //   M_kl(t) = (exp(l_k t) - exp(l_l t)) / (l_k - l_l).
  // Partial traces of sigma give the mean photon count of the subensemble
  // found in each internal state.
  Eigen::MatrixXcd first_moment(const Path& p, double t) const {
    ensure_flux_in_eigenbasis();
    const int nn = n_ * n_;
    Eigen::VectorXcd expl = (eigenvalues_ * t).array().exp();
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(nn);
    for (int k = 0; k < nn; ++k) {
      std::complex<double> acc = 0.0;
      for (int l = 0; l < nn; ++l) {
        const std::complex<double> s = (*flux_eigen_)(k, l) * p.coefficients()(l);
        if (s == std::complex<double>(0.0, 0.0)) continue;
        const std::complex<double> dl = (eigenvalues_(k) - eigenvalues_(l)) * t;
        std::complex<double> m;
        if (std::abs(dl) < 1e-5) {
          m = expl(l) * t * (1.0 + dl / 2.0 + dl * dl / 6.0);
        } else {
          m = (expl(k) - expl(l)) / (eigenvalues_(k) - eigenvalues_(l));
        }
        acc += m * s;
      }
      rhs(k) = acc;
    }
    Eigen::VectorXcd v = vectors_ * rhs;
    return Eigen::Map<const Eigen::MatrixXcd>(v.data(), n_, n_);
  }

 private:
  void ensure_flux_in_eigenbasis() const {
    std::scoped_lock lock(flux_mutex_);
    if (!flux_eigen_) {
      Eigen::MatrixXcd s = gen_.flux_superoperator();
      flux_eigen_ = std::make_unique<Eigen::MatrixXcd>(lu_.solve(s * vectors_));
    }
  }

  Generator gen_;
  int n_;
  Eigen::VectorXcd eigenvalues_;
  Eigen::MatrixXcd vectors_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  Eigen::RowVectorXcd photon_row_;
  Eigen::RowVectorXcd photon_row_v_;
  double scale_ = 0.0;
  mutable std::mutex flux_mutex_;
  mutable std::unique_ptr<Eigen::MatrixXcd> flux_eigen_;
};

namespace detail {

using AdaptiveState = std::vector<std::complex<double>>;

// Adaptive dense integration of the master equation; the last state entry
// accumulates the photon integral.
inline void integrate_adaptive_rho(const Generator& gen, Eigen::MatrixXcd& rho, double t,
                                   double& photons, const EngineSettings& settings,
                                   const std::function<void(const Eigen::MatrixXcd&, double)>& observer = {}) {
  namespace ode = boost::numeric::odeint;
  const int n = gen.dim();
  AdaptiveState state(n * n + 1);
  Eigen::Map<Eigen::MatrixXcd>(state.data(), n, n) = rho;
  state.back() = photons;

  auto system = [&gen, n](const AdaptiveState& x, AdaptiveState& dxdt, double) {
    Eigen::Map<const Eigen::MatrixXcd> r(x.data(), n, n);
    dxdt.resize(x.size());
    Eigen::Map<Eigen::MatrixXcd>(dxdt.data(), n, n) = gen.apply(r);
    dxdt.back() = gen.excited_population(r);
  };

  auto stepper = ode::make_controlled(settings.atol, settings.rtol,
                                      ode::runge_kutta_dopri5<AdaptiveState>());
  try {
    if (observer) {
      ode::integrate_adaptive(stepper, system, state, 0.0, t, std::min(0.01, t),
                              [&](const AdaptiveState& x, double time) {
                                Eigen::Map<const Eigen::MatrixXcd> r(x.data(), n, n);
                                observer(r, time);
                              });
    } else {
      ode::integrate_adaptive(stepper, system, state, 0.0, t, std::min(0.01, t));
    }
  } catch (const std::exception& e) {
    throw numerical_error(std::string("adaptive integrator failed to reach the requested "
                                      "tolerance (rtol=") +
                          std::to_string(settings.rtol) + "): " + e.what());
  }
  rho = Eigen::Map<const Eigen::MatrixXcd>(state.data(), n, n);
  photons = state.back().real();
}

}  // namespace detail

// Full-matrix propagation: evolve for laser.interaction_time, then let the
// residual excited population decay in the dark.
inline PumpingResult propagate_full(const Generator& gen, const Eigen::MatrixXcd& rho0_full,
                                    double interaction_time, Frame frame,
                                    const EngineSettings& settings = {}) {
  Eigen::MatrixXcd rho = rho0_full;
  double photons = 0.0;
  if (interaction_time > 0.0) {
    if (settings.method == EngineSettings::Method::Spectral) {
      SpectralPropagator prop(gen);
      auto path = prop.path(rho0_full);
      rho = path.state_at(interaction_time);
      photons = path.photons_by(interaction_time);
    } else {
      detail::integrate_adaptive_rho(gen, rho, interaction_time, photons, settings);
    }
  }
  detail::settle_excited(gen, rho, photons);
  return detail::extract_result(gen, rho, photons, frame);
}

// Pumping result augmented with the mean scattered-photon count of the
// subensemble that ends up in each ground manifold (aligned with
// ground_states). Atoms pumped into another manifold mid-pulse keep the
// recoils they collected before the transfer; the detector sees them at
// that partial deflection.
struct MomentumResolved {
  PumpingResult result;
  std::vector<double> manifold_mean_photons;
};

inline MomentumResolved propagate_with_moments(const SpectralPropagator& prop,
                                               const Eigen::MatrixXcd& rho0_full, double t,
                                               Frame frame) {
  const Generator& gen = prop.generator();
  Eigen::MatrixXcd rho = rho0_full;
  Eigen::MatrixXcd sigma = Eigen::MatrixXcd::Zero(gen.dim(), gen.dim());
  double photons = 0.0;
  if (t > 0.0) {
    auto path = prop.path(rho0_full);
    rho = path.state_at(t);
    sigma = prop.first_moment(path, t);
    photons = path.photons_by(t);
  }
  detail::settle_excited_with_moment(gen, rho, sigma, photons);

  MomentumResolved out;
  out.result = detail::extract_result(gen, rho, photons, frame);
  for (const auto& b : gen.scheme().ground_blocks) {
    const double pop = rho.block(b.offset, b.offset, b.dim, b.dim).trace().real();
    const double weighted = sigma.block(b.offset, b.offset, b.dim, b.dim).trace().real();
    out.manifold_mean_photons.push_back(pop > 1e-14 ? weighted / pop : 0.0);
  }
  return out;
}

inline PumpingResult propagate(const DensityMatrix& rho0, const AtomicStructure& structure,
                               const LaserField& laser, const EngineSettings& settings = {}) {
  validate(rho0, "propagate: initial state");
  Generator gen(structure, laser);
  return propagate_full(gen, gen.embed_ground(rho0), laser.interaction_time, rho0.frame, settings);
}

struct PreparationSettings {
  double rabi_frequency = 1.0;
  double detuning = 0.0;
  double interaction_time = 100.0;
  EngineSettings engine;
};

// Optical pumping of the beam in the elliptically polarised preparation
// region. The preparation laser propagates along natural z, so its
// polarisation has no e_0 component and the natural frame is the simulation
// frame. The beam enters with the upper ground manifold unpolarised.
inline PumpingResult simulate_preparation(double waveplate_angle, const AtomicStructure& structure,
                                          const PreparationSettings& prep) {
  int f_upper = structure.ground_manifolds.front().f;
  for (const auto& m : structure.ground_manifolds) f_upper = std::max(f_upper, m.f);

  LaserField laser;
  laser.polarisation = waveplate_polarisation(waveplate_angle);
  laser.rabi_frequency = prep.rabi_frequency;
  laser.detuning = prep.detuning;
  laser.propagation_direction = Eigen::Vector3d::UnitZ();
  laser.interaction_time = prep.interaction_time;

  return propagate(DensityMatrix::maximally_mixed(f_upper, Frame::Natural), structure, laser,
                   prep.engine);
}

}  // namespace deflectom
