#include <doctest.h>

#include <cmath>

#include "wqed/pulses.hpp"
#include "wqed/quadrature.hpp"

using namespace wqed;

namespace {

double gaussian_closed_form(double sigma, double tau) {
  const double arg = (1.0 - 2.0 * sigma * sigma * tau) / (2.0 * sigma);
  return std::sqrt(2.0 * kPi) / (4.0 * sigma) *
         std::exp(1.0 / (2.0 * sigma * sigma) - 2.0 * tau) * std::erfc(arg) *
         std::erfc(arg);
}

}  // namespace

TEST_CASE("pulse spectra are unit-normalized") {
  for (PulseKind kind :
       {PulseKind::Gaussian, PulseKind::DecayingExp, PulseKind::RisingExp}) {
    Pulse pulse;
    pulse.kind = kind;
    pulse.width = 0.8;
    pulse.detuning = 0.4;
    const double W = kind == PulseKind::Gaussian ? 30.0 : 4000.0;
    const Complex norm = integrate(
        [&](double dk) {
          return Complex(std::norm(spectral_amplitude(pulse, dk)), 0.0) /
                 (2.0 * kPi);
        },
        -W, W, {1e-11, 1e-13, 40000, 64, true});
    // The Lorentzian tails of the exponentials converge slowly.
    const double tol = kind == PulseKind::Gaussian ? 1e-10 : 1e-3;
    CHECK(std::abs(norm.real() - 1.0) < tol);
  }
}

TEST_CASE("single qubit: decaying exponential closed form") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(1, 0.9));
  Pulse pulse;
  pulse.kind = PulseKind::DecayingExp;
  pulse.width = 1.0;
  const VectorXd taus = linspace(-1.0, 4.0, 51);
  const VectorXd p = excitation_probability(spec, pulse, 0, taus);
  for (int i = 0; i < taus.size(); ++i) {
    const double tau = taus(i);
    const double want = tau <= 0.0 ? 0.0 : 2.0 * tau * tau * std::exp(-2.0 * tau);
    CHECK(std::abs(p(i) - want) < 1e-12);
  }
  // Maximum 2/e^2 at tau = 1.
  VectorXd tmax(1);
  tmax(0) = 1.0;
  CHECK(excitation_probability(spec, pulse, 0, tmax)(0) ==
        doctest::Approx(2.0 / (kE * kE)).epsilon(1e-12));
}

TEST_CASE("single qubit: rising exponential reaches one half") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(1, 0.9));
  CHECK(rising_exponential_total(spec, 1.0) == doctest::Approx(0.5).epsilon(1e-12));
  // tau = 0 is the maximum; later times decay.
  Pulse pulse;
  pulse.kind = PulseKind::RisingExp;
  pulse.width = 1.0;
  VectorXd taus(3);
  taus << -0.5, 0.0, 0.5;
  const VectorXd p = excitation_probability(spec, pulse, 0, taus);
  CHECK(p(1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(p(0) < p(1));
  CHECK(p(2) < p(1));
}

TEST_CASE("single qubit: Gaussian closed form and quadrature agree") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(1, 0.9));
  Pulse pulse;
  pulse.kind = PulseKind::Gaussian;
  pulse.width = 1.0;
  const VectorXd taus = linspace(-1.0, 3.0, 9);
  const VectorXd p = excitation_probability(spec, pulse, 0, taus);
  for (int i = 0; i < taus.size(); ++i) {
    CHECK(std::abs(p(i) - gaussian_closed_form(1.0, taus(i))) < 1e-10);
    // Independent quadrature of the defining integral.
    const Complex amp = integrate(
        [&](double dk) {
          const Complex e = std::sqrt(1.0) / (Complex(dk, 0.0) + kI);
          return spectral_amplitude(pulse, dk) * e *
                 std::exp(-kI * dk * taus(i)) / (2.0 * kPi);
        },
        -40.0, 40.0, {1e-12, 1e-14, 40000, 64, true});
    CHECK(std::abs(p(i) - std::norm(amp)) < 1e-8);
  }
}

TEST_CASE("three-qubit pulse maxima at quarter wavelength") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(3, kPi / 2.0));
  Pulse pulse;
  pulse.kind = PulseKind::Gaussian;
  pulse.width = 1.0;
  // Left atom peaks near 0.6266 at tau ~ 0.713.
  const VectorXd taus = linspace(0.5, 0.9, 41);
  const VectorXd p = excitation_probability(spec, pulse, 0, taus);
  double best = 0.0, best_tau = 0.0;
  for (int i = 0; i < taus.size(); ++i)
    if (p(i) > best) {
      best = p(i);
      best_tau = taus(i);
    }
  CHECK(best == doctest::Approx(0.6266).epsilon(5e-3));
  CHECK(best_tau == doctest::Approx(0.713).epsilon(0.03));
  // The single-qubit one-sided bound does not apply to the chain.
  CHECK(best > 0.6);
}

TEST_CASE("half-wavelength chain behaves as one bright qubit") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(3, kPi));
  Pulse pulse;
  pulse.kind = PulseKind::DecayingExp;
  pulse.width = 3.0;
  VectorXd tau(1);
  tau(0) = 1.0 / 3.0;
  const VectorXd p = excitation_probabilities_at(spec, pulse, tau(0));
  // Exactly 2/(3 e^2) per atom.
  for (int m = 0; m < 3; ++m)
    CHECK(p(m) == doctest::Approx(2.0 / (3.0 * kE * kE)).epsilon(1e-9));
}

TEST_CASE("optimizer reproduces the reported pulse optima") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(3, kPi / 2.0));
  SUBCASE("decaying exponential") {
    OptimizeBox box;
    box.width_lo = 0.2;
    box.width_hi = 3.0;
    box.tau_lo = 0.0;
    box.tau_hi = 4.0;
    const OptimizeResult res =
        optimize_pulse(spec, PulseKind::DecayingExp, 0, box);
    CHECK(res.value == doctest::Approx(0.454).epsilon(0.01));
    CHECK(res.width == doctest::Approx(0.73).epsilon(0.05));
    CHECK(res.tau == doctest::Approx(1.43).epsilon(0.05));
  }
  SUBCASE("rising exponential") {
    OptimizeBox box;
    box.width_lo = 0.2;
    box.width_hi = 3.0;
    const OptimizeResult res =
        optimize_pulse(spec, PulseKind::RisingExp, 0, box);
    CHECK(res.value == doctest::Approx(0.6808).epsilon(5e-3));
    CHECK(res.width == doctest::Approx(0.97).epsilon(0.05));
  }
  SUBCASE("boundary optimum is an error") {
    OptimizeBox box;
    box.width_lo = 2.5;
    box.width_hi = 3.0;
    CHECK_THROWS_AS(optimize_pulse(spec, PulseKind::RisingExp, 0, box),
                    Error);
  }
}

TEST_CASE("scattered spectra") {
  SUBCASE("far-detuned narrow pulse transmits") {
    const ChainSpec spec = validate(ChainSpec::identical_chain(3, 0.9));
    Pulse pulse;
    pulse.kind = PulseKind::Gaussian;
    pulse.width = 0.05;
    pulse.detuning = 40.0;
    const VectorXd grid = linspace(39.0, 41.0, 101);
    const ScatteredSpectra spectra = scattered_spectra(spec, pulse, grid);
    const double total_t = simpson_uniform(spectra.transmitted, grid(1) - grid(0));
    const double total_r = simpson_uniform(spectra.reflected, grid(1) - grid(0));
    CHECK(total_t > 0.99);
    CHECK(total_r < 0.01);
  }
  SUBCASE("two identical qubits at the Fano point reflect nothing") {
    const double theta = 0.6;
    const ChainSpec spec = validate(ChainSpec::identical_chain(2, theta));
    Pulse pulse;
    pulse.kind = PulseKind::Gaussian;
    pulse.width = 1.0;
    VectorXd grid(1);
    grid(0) = -std::tan(theta);
    const ScatteredSpectra spectra = scattered_spectra(spec, pulse, grid);
    CHECK(spectra.reflected(0) < 1e-20);
  }
  SUBCASE("flux conservation integrates to one") {
    const ChainSpec spec = validate(ChainSpec::identical_chain(2, 1.2));
    Pulse pulse;
    pulse.kind = PulseKind::Gaussian;
    pulse.width = 1.0;
    const VectorXd grid = linspace(-25.0, 25.0, 2001);
    const ScatteredSpectra spectra = scattered_spectra(spec, pulse, grid);
    const double total =
        simpson_uniform(spectra.transmitted + spectra.reflected,
                        grid(1) - grid(0));
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("time-shift covariance in the launch offset") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(2, 1.1, 100.0));
  Pulse a;
  a.kind = PulseKind::Gaussian;
  a.width = 1.0;
  a.x0 = 8.0;
  Pulse b = a;
  b.x0 = 11.0;
  const VectorXd xs = linspace(-6.0, 6.0, 41);
  const FieldSample fa = field_densities(spec, a, 12.0, xs, Regime::Markovian);
  const FieldSample fb = field_densities(spec, b, 15.0, xs, Regime::Markovian);
  for (int i = 0; i < xs.size(); ++i) {
    CHECK(std::abs(fa.density_r(i) - fb.density_r(i)) < 1e-9);
    CHECK(std::abs(fa.density_l(i) - fb.density_l(i)) < 1e-9);
  }
}

TEST_CASE("appendix-H spectral modulation") {
  // The asymptotic transmitted pulse is mode-by-mode modulation by t(k).
  const ChainSpec spec = validate(ChainSpec::identical_chain(2, 1.1, 100.0));
  Pulse pulse;
  pulse.kind = PulseKind::Gaussian;  // smooth pulse: no wavefront jumps
  pulse.width = 1.0;
  pulse.x0 = 12.0;
  const double t = 2.0 * pulse.x0;
  const double h = 0.02;
  const int count = int(60.0 / h) + 1;
  VectorXd xs(count);
  for (int i = 0; i < count; ++i) xs(i) = pulse.x0 - 30.0 + i * h;
  VectorXcd psi_r, psi_l;
  field_amplitudes(spec, pulse, t, xs, psi_r, psi_l, Regime::Markovian);
  for (double q : {-1.5, -0.4, 0.3, 1.1, 2.2}) {
    Complex ft = 0.0;
    for (int i = 0; i < count; ++i)
      ft += psi_r(i) * std::exp(-kI * q * (xs(i) - pulse.x0)) * h;
    const ScatteringSolution sol = solve_chain(spec, q, Regime::Markovian);
    const Complex want_mag =
        sol.transmission() * spectral_amplitude(pulse, q);
    CHECK(std::abs(std::abs(ft) - std::abs(want_mag)) < 1e-6);
  }
}

TEST_CASE("emitted pulse shape is set by the poles") {
  SUBCASE("single qubit emits a pure decaying exponential") {
    const ChainSpec spec = validate(ChainSpec::identical_chain(1, kPi / 2.0));
    const VectorXd xs = linspace(0.5, 9.5, 10);
    const FieldSample shape =
        emitted_pulse_shape(spec, InitialState::single_qubit(1, 0), 10.0, xs);
    for (int i = 0; i < xs.size(); ++i)
      CHECK(shape.density_r(i) ==
            doctest::Approx(std::exp(-2.0 * (10.0 - xs(i)))).epsilon(1e-9));
  }
  SUBCASE("larger chains decay faster early and slower late") {
    const VectorXd xs = linspace(0.25, 9.75, 39);
    auto shape_for = [&](int n) {
      const ChainSpec spec = validate(ChainSpec::identical_chain(n, kPi / 2.0));
      return emitted_pulse_shape(spec, InitialState::uniform_symmetric(n),
                                 10.0, xs);
    };
    const FieldSample one = shape_for(1);
    const FieldSample big = shape_for(21);
    const int last = int(xs.size()) - 1;  // x near t: earliest emission
    CHECK(big.density_r(last) > one.density_r(last));   // faster initial rise
    CHECK(big.density_r(0) > one.density_r(0));         // longer tail
  }
  SUBCASE("total emitted probability approaches one") {
    const ChainSpec spec = validate(ChainSpec::identical_chain(5, kPi / 2.0));
    const ResidueEvolution evo(spec, InitialState::uniform_symmetric(5));
    // What has not radiated is still on the qubits.
    const double leftover = evo.amplitudes(60.0).squaredNorm();
    CHECK(evo.radiated_probability(60.0) ==
          doctest::Approx(1.0 - leftover).epsilon(1e-8));
    CHECK(evo.radiated_probability(300.0) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("non-markovian scattering stays local") {
  // Wide spacing (L = 10): per-qubit excitation respects the one-sided
  // single-qubit bound.
  const ChainSpec spec = validate(ChainSpec::identical_chain(3, 1000.0, 100.0));
  Pulse pulse;
  pulse.kind = PulseKind::Gaussian;
  pulse.width = 1.0;
  pulse.x0 = 15.0;
  const VectorXd taus = linspace(-2.0, 8.0, 41);
  const VectorXd p = excitation_probability(spec, pulse, 0, taus,
                                            Regime::ExactPhase);
  double best = 0.0;
  for (int i = 0; i < taus.size(); ++i) best = std::max(best, p(i));
  CHECK(best <= 0.5 + 1e-6);
  CHECK(best > 0.3);
}

TEST_CASE("echo train in wide-spacing scattering") {
  const ChainSpec spec = validate(ChainSpec::identical_chain(3, 1000.0, 100.0));
  const double L = spec.spacing();
  CHECK(L == doctest::Approx(10.0));
  Pulse pulse;
  pulse.kind = PulseKind::Gaussian;
  pulse.width = 1.0;
  pulse.x0 = 15.0;  // from the chain center
  const double t = 80.0;
  const double h = 0.25;
  const int count = int(75.0 / h) + 1;
  VectorXd xs(count);
  for (int i = 0; i < count; ++i) xs(i) = -90.0 + i * h;
  const FieldSample field =
      field_densities(spec, pulse, t, xs, Regime::ExactPhase);
  // Reflected peaks: the first bounce off the left qubit plus echo groups
  // delayed by 2L round trips. Take the strongest peak per 2L window.
  const double first_want = -(t - pulse.x0) - L;  // bounce reaches x0 at t=x0
  std::vector<double> groups;
  for (int g = 0; g < 3; ++g) {
    double best = 0.0, best_x = 0.0;
    for (int i = 0; i < count; ++i) {
      if (std::abs(xs(i) - (first_want + 2.0 * L * g)) > L) continue;
      if (field.density_l(i) > best) {
        best = field.density_l(i);
        best_x = xs(i);
      }
    }
    REQUIRE(best > 1e-3);
    groups.push_back(best_x);
  }
  CHECK(std::abs(groups[0] - first_want) < 0.5);
  for (size_t k = 0; k + 1 < groups.size(); ++k) {
    const double spacing = groups[k + 1] - groups[k];
    CHECK(std::abs(spacing - 2.0 * L) < 1.5);
  }
  const double first = groups[0];

  // The first reflected peak matches the single-qubit reflection of the
  // same pulse.
  const ChainSpec single = validate(ChainSpec::identical_chain(1, 1000.0, 100.0));
  const FieldSample ref =
      field_densities(single, pulse, t, xs, Regime::ExactPhase);
  double big_peak = 0.0, single_peak = 0.0;
  for (int i = 0; i < count; ++i) {
    if (std::abs(xs(i) - first) < 3.0)
      big_peak = std::max(big_peak, field.density_l(i));
    single_peak = std::max(single_peak, ref.density_l(i));
  }
  CHECK(big_peak == doctest::Approx(single_peak).epsilon(1e-3));
}
