#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "deflectom/lindblad.hpp"
#include "oracles.hpp"

using namespace deflectom;
using Catch::Matchers::WithinAbs;

namespace {

LaserField sigma_plus_laser(double rabi, double detuning, double t) {
  LaserField l;
  l.polarisation = PolarisationState::pure_mode_in_laser_frame(PolarisationMode::SigmaPlus);
  l.rabi_frequency = rabi;
  l.detuning = detuning;
  l.propagation_direction = Eigen::Vector3d::UnitZ();
  l.interaction_time = t;
  return l;
}

Eigen::MatrixXcd random_full_ground_state(const Generator& gen, std::mt19937_64& rng) {
  const int ng = gen.scheme().ground_dim;
  Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(gen.dim(), gen.dim());
  full.topLeftCorner(ng, ng) = oracles::random_density(ng, rng);
  return full;
}

}  // namespace

TEST_CASE("generator structure") {
  const AtomicStructure na = sodium_structure();

  SECTION("zero Rabi frequency leaves ground manifolds inert") {
    Generator gen(na, sigma_plus_laser(0.0, 0.0, 1.0));
    for (int f : {1, 2}) {
      Eigen::MatrixXcd rho = gen.embed_ground(DensityMatrix::maximally_mixed(f));
      REQUIRE(gen.apply(rho).cwiseAbs().maxCoeff() < 1e-14);
    }
  }

  SECTION("the generator is trace free") {
    std::mt19937_64 rng(2);
    Generator gen(na, sigma_plus_laser(1.3, -0.7, 1.0));
    for (int t = 0; t < 5; ++t) {
      Eigen::MatrixXcd rho = oracles::random_density(gen.dim(), rng);
      REQUIRE(std::abs(gen.apply(rho).trace()) < 1e-12);
    }
  }

  SECTION("every excited state decays at the total rate Gamma") {
    Generator gen(na, sigma_plus_laser(1.0, 0.0, 1.0));
    Eigen::MatrixXcd total = Eigen::MatrixXcd::Zero(gen.dim(), gen.dim());
    for (const auto& c : gen.jump_operators()) total += c.adjoint() * c;
    const int ng = gen.scheme().ground_dim;
    REQUIRE(total.topLeftCorner(ng, ng).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((total.bottomRightCorner(gen.dim() - ng, gen.dim() - ng) -
             Eigen::MatrixXcd::Identity(gen.dim() - ng, gen.dim() - ng))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }

  SECTION("polarisation along the propagation direction is rejected") {
    LaserField l;
    l.polarisation = PolarisationState::from_components(0, 1, 0);  // field along z
    l.rabi_frequency = 1.0;
    l.propagation_direction = Eigen::Vector3d::UnitZ();
    l.interaction_time = 1.0;
    REQUIRE_THROWS_AS(Generator(na, l), geometry_error);
  }
}

TEST_CASE("two-level reduction reproduces the optical Bloch results") {
  const AtomicStructure two = two_level_structure();

  SECTION("steady-state excited population") {
    for (double rabi : {0.3, 1.0, 2.5})
      for (double detuning : {0.0, 0.8, -2.0}) {
        LaserField l = sigma_plus_laser(rabi, detuning, 400.0);
        Generator gen(two, l);
        SpectralPropagator prop(gen);
        auto path = prop.path(gen.embed_ground(DensityMatrix::pure(0, 0)));
        const double pe = gen.excited_population(path.state_at(400.0));
        REQUIRE_THAT(pe, WithinAbs(oracles::two_level_steady_state(rabi, detuning), 1e-9));
      }
  }

  SECTION("resonant damped Rabi oscillation, spectral engine") {
    const double rabi = 2.0;
    Generator gen(two, sigma_plus_laser(rabi, 0.0, 10.0));
    SpectralPropagator prop(gen);
    auto path = prop.path(gen.embed_ground(DensityMatrix::pure(0, 0)));
    for (double t : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      REQUIRE_THAT(gen.excited_population(path.state_at(t)),
                   WithinAbs(oracles::two_level_resonant_excited(rabi, t), 1e-6));
    }
  }

  SECTION("resonant damped Rabi oscillation, adaptive engine") {
    const double rabi = 1.4;
    Generator gen(two, sigma_plus_laser(rabi, 0.0, 6.0));
    Eigen::MatrixXcd rho = gen.embed_ground(DensityMatrix::pure(0, 0));
    double photons = 0.0;
    EngineSettings settings;
    settings.method = EngineSettings::Method::Adaptive;
    detail::integrate_adaptive_rho(gen, rho, 6.0, photons, settings);
    REQUIRE_THAT(gen.excited_population(rho),
                 WithinAbs(oracles::two_level_resonant_excited(rabi, 6.0), 1e-6));
  }

  SECTION("photon count equals the integral of the scattering rate") {
    // In steady state the scattering rate is Gamma * P_e; for a long pulse
    // photons ~ P_e_ss * T plus an order-one transient.
    const double rabi = 1.0, T = 2000.0;
    LaserField l = sigma_plus_laser(rabi, 0.0, T);
    PumpingResult r = propagate(DensityMatrix::pure(0, 0), two, l);
    const double ss = oracles::two_level_steady_state(rabi, 0.0);
    REQUIRE_THAT(r.scattered_photons / (ss * T), WithinAbs(1.0, 0.01));
    REQUIRE(r.momentum_transfer == r.scattered_photons);
  }
}

TEST_CASE("propagation invariants") {
  const AtomicStructure na = sodium_structure();
  std::mt19937_64 rng(3);

  SECTION("t=0 returns the initial state with no photons") {
    DensityMatrix rho0 = DensityMatrix::maximally_mixed(2);
    PumpingResult r = propagate(rho0, na, sigma_plus_laser(1.0, 0.0, 0.0));
    REQUIRE(r.scattered_photons == 0.0);
    REQUIRE_THAT(r.manifold(2).population_scale, WithinAbs(1.0, 1e-12));
    REQUIRE((r.manifold(2).elements - rho0.elements).cwiseAbs().maxCoeff() < 1e-12);
  }

  SECTION("total population is conserved") {
    LaserField l = sigma_plus_laser(1.2, 1.0, 37.0);
    Generator gen(na, l);
    SpectralPropagator prop(gen);
    for (int trial = 0; trial < 3; ++trial) {
      Eigen::MatrixXcd rho0 = random_full_ground_state(gen, rng);
      auto path = prop.path(rho0);
      for (double t : {1.0, 10.0, 37.0})
        REQUIRE_THAT(path.state_at(t).trace().real(), WithinAbs(1.0, 1e-9));
      PumpingResult r = propagate_full(gen, rho0, l.interaction_time, Frame::Natural);
      REQUIRE_THAT(r.total_ground_population(), WithinAbs(1.0, 1e-9));
    }
  }

  SECTION("hermiticity and positivity hold along the evolution") {
    LaserField l = sigma_plus_laser(1.5, 0.5, 20.0);
    Generator gen(na, l);
    SpectralPropagator prop(gen);
    auto path = prop.path(gen.embed_ground(DensityMatrix::maximally_mixed(2)));
    for (double t : {0.5, 2.0, 7.0, 20.0}) {
      Eigen::MatrixXcd rho = path.state_at(t);
      REQUIRE((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-9);
      REQUIRE(min_eigenvalue(0.5 * (rho + rho.adjoint().eval())) > -1e-8);
    }
  }

  SECTION("adaptive engine preserves positivity at every accepted step") {
    const AtomicStructure two = two_level_structure();
    Generator gen(two, sigma_plus_laser(2.0, 0.0, 8.0));
    Eigen::MatrixXcd rho = gen.embed_ground(DensityMatrix::pure(0, 0));
    double photons = 0.0;
    double min_ev = 1.0;
    EngineSettings settings;
    settings.method = EngineSettings::Method::Adaptive;
    detail::integrate_adaptive_rho(gen, rho, 8.0, photons, settings,
                                   [&](const Eigen::MatrixXcd& r, double) {
                                     min_ev = std::min(min_ev, min_eigenvalue(0.5 * (r + r.adjoint().eval())));
                                   });
    REQUIRE(min_ev > -1e-8);
  }

  SECTION("dynamics is linear in the initial state") {
    LaserField l = sigma_plus_laser(0.9, -0.4, 25.0);
    Generator gen(na, l);
    Eigen::MatrixXcd a = random_full_ground_state(gen, rng);
    Eigen::MatrixXcd b = random_full_ground_state(gen, rng);
    const double w = 0.3;
    PumpingResult ra = propagate_full(gen, a, l.interaction_time, Frame::Natural);
    PumpingResult rb = propagate_full(gen, b, l.interaction_time, Frame::Natural);
    PumpingResult rc = propagate_full(gen, w * a + (1 - w) * b, l.interaction_time, Frame::Natural);
    REQUIRE_THAT(rc.scattered_photons,
                 WithinAbs(w * ra.scattered_photons + (1 - w) * rb.scattered_photons, 1e-9));
    for (int f : {1, 2}) {
      Eigen::MatrixXcd mix = w * ra.manifold(f).scaled() + (1 - w) * rb.manifold(f).scaled();
      REQUIRE((rc.manifold(f).scaled() - mix).cwiseAbs().maxCoeff() < 1e-9);
    }
  }

  SECTION("scattered photons are monotone in the interaction time") {
    Generator gen(na, sigma_plus_laser(1.0, 0.0, 50.0));
    SpectralPropagator prop(gen);
    auto path = prop.path(gen.embed_ground(DensityMatrix::maximally_mixed(2)));
    double last = -1.0;
    for (double t = 0.0; t <= 50.0; t += 2.5) {
      const double n = path.photons_by(t);
      REQUIRE(n >= last - 1e-10);
      last = n;
    }
  }

  SECTION("spectral and adaptive engines agree") {
    LaserField l = sigma_plus_laser(1.1, 0.6, 15.0);
    Generator gen(na, l);
    Eigen::MatrixXcd rho0 = gen.embed_ground(DensityMatrix::maximally_mixed(2));

    SpectralPropagator prop(gen);
    auto path = prop.path(rho0);
    Eigen::MatrixXcd rho_spec = path.state_at(15.0);
    const double photons_spec = path.photons_by(15.0);

    Eigen::MatrixXcd rho_adapt = rho0;
    double photons_adapt = 0.0;
    EngineSettings settings;
    settings.method = EngineSettings::Method::Adaptive;
    detail::integrate_adaptive_rho(gen, rho_adapt, 15.0, photons_adapt, settings);

    REQUIRE((rho_spec - rho_adapt).cwiseAbs().maxCoeff() < 1e-6);
    REQUIRE_THAT(photons_adapt, WithinAbs(photons_spec, 1e-6));
  }
}

TEST_CASE("optical pumping fixed points") {
  SECTION("long sigma+ pumping on the closed transition stacks population in m=+2") {
    AtomicStructure closed = closed_f2_structure();
    closed.reference_excited_f = 3;
    LaserField l = sigma_plus_laser(1.0, 0.0, 400.0);
    for (int m0 : {-2, 0, 1}) {
      PumpingResult r = propagate(DensityMatrix::pure(2, m0), closed, l);
      REQUIRE_THAT(r.manifold(2).population_scale, WithinAbs(1.0, 1e-9));
      REQUIRE(r.manifold(2).rho(2, 2).real() > 0.999);
    }
  }
}

TEST_CASE("preparation region") {
  const AtomicStructure na = sodium_structure();
  PreparationSettings prep;
  prep.rabi_frequency = 0.8;
  prep.detuning = 0.0;  // reference transition F=2 -> F'=2
  prep.interaction_time = 400.0;

  SECTION("circular light prepares the stretched state and empties the coherences") {
    PumpingResult r = simulate_preparation(kPi / 4, na, prep);
    const DensityMatrix& f2 = r.manifold(2);
    REQUIRE(f2.rho(2, 2).real() > 0.999);
    for (int m = -2; m < 2; ++m)
      for (int mp = m + 1; mp <= 2; ++mp)
        if (!(m == 2 && mp == 2)) REQUIRE(std::abs(f2.rho(m, mp)) < 1e-3);
    // losses to F=1 happened on the way
    REQUIRE(r.manifold(1).population_scale > 0.05);
    REQUIRE_THAT(r.total_ground_population(), WithinAbs(1.0, 1e-9));
  }

  SECTION("linear light cannot break the m -> -m symmetry") {
    PumpingResult r = simulate_preparation(0.0, na, prep);
    const DensityMatrix& f2 = r.manifold(2);
    for (int m = -2; m <= 2; ++m)
      REQUIRE_THAT(f2.rho(m, m).real(), WithinAbs(f2.rho(-m, -m).real(), 1e-9));
    // mirrored coherences agree in magnitude
    REQUIRE_THAT(std::abs(f2.rho(2, 0)), WithinAbs(std::abs(f2.rho(0, -2)), 1e-9));
    REQUIRE_THAT(std::abs(f2.rho(2, 1)), WithinAbs(std::abs(f2.rho(-2, -1)), 1e-9));
  }

  SECTION("losses to F=1 peak near circular polarisation") {
    std::vector<double> loss;
    const std::vector<double> thetas{0.0, kPi / 16, kPi / 8, 3 * kPi / 16, kPi / 4};
    for (double theta : thetas) {
      PumpingResult r = simulate_preparation(theta, na, prep);
      loss.push_back(r.manifold(1).population_scale);
    }
    const auto max_it = std::max_element(loss.begin(), loss.end());
    REQUIRE(thetas[size_t(max_it - loss.begin())] >= 3 * kPi / 16 - 1e-12);
    REQUIRE(*max_it > 1.5 * loss.front());
    // populations leave the preparation region with their maximum below 1
    PumpingResult r = simulate_preparation(kPi / 4, na, prep);
    REQUIRE(r.manifold(2).population_scale < 0.95);
  }
}
