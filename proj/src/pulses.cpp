#include "wqed/pulses.hpp"

#include <algorithm>
#include <cmath>

#include "wqed/quadrature.hpp"

namespace wqed {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

double gaussian_norm(double sigma) {
  // sqrt(2 pi) / sqrt(sigma sqrt(2 pi)) for the Eq.-normalized envelope.
  return std::pow(kTwoPi, 0.25) / std::sqrt(sigma);
}

Complex nudged(const ChainSpec& spec, double dk) {
  for (int j = 0; j < spec.n; ++j)
    if (std::abs(dk + spec.detunings(j)) < 1e-9) return Complex(dk + 2e-9, 0.0);
  return Complex(dk, 0.0);
}

// Integration window for numerical paths.
std::pair<double, double> spectral_window(const Pulse& pulse) {
  if (pulse.kind == PulseKind::Gaussian) {
    const double b = 14.0 * pulse.width + 10.0;
    return {pulse.detuning - b, pulse.detuning + b};
  }
  const double b = std::max(60.0, 40.0 * pulse.width);
  return {pulse.detuning - b, pulse.detuning + b};
}

ChainSpec oriented(const ChainSpec& spec, const Pulse& pulse) {
  return pulse.side == Direction::LeftIncident ? validate(spec)
                                               : validate(spec).reversed();
}

}  // namespace

Complex spectral_amplitude(const Pulse& pulse, Complex delta_k) {
  const Complex y = delta_k - pulse.detuning;
  switch (pulse.kind) {
    case PulseKind::Gaussian: {
      const double s = pulse.width;
      return gaussian_norm(s) * std::exp(-y * y / (4.0 * s * s));
    }
    case PulseKind::DecayingExp: {
      const double xi = pulse.width;
      // sqrt(2 xi) / (xi - i y); pole in the lower half plane.
      return std::sqrt(2.0 * xi) * kI / (y + kI * xi);
    }
    case PulseKind::RisingExp: {
      const double xi = pulse.width;
      return -kI * std::sqrt(2.0 * xi) / (y - kI * xi);
    }
  }
  return 0.0;
}

namespace {

// Markovian pulse amplitudes per qubit.
class MarkovianPulse {
 public:
  MarkovianPulse(const ChainSpec& spec, const Pulse& pulse)
      : spec_(spec), pulse_(pulse), sol_(solve_chain_rational(spec)) {
    if (pulse.kind == PulseKind::Gaussian) {
      e_residues_.reserve(spec.n);
      for (int m = 0; m < spec_.n; ++m)
        e_residues_.push_back(residues(sol_.e[m]));
    } else {
      const double xi = pulse_.width;
      const Complex pole =
          pulse_.kind == PulseKind::DecayingExp
              ? Complex(pulse_.detuning, -xi)
              : Complex(pulse_.detuning, xi);
      const Complex scale = pulse_.kind == PulseKind::DecayingExp
                                ? std::sqrt(2.0 * xi) * kI
                                : -kI * std::sqrt(2.0 * xi);
      const Poly den({-pole, Complex(1.0)});
      const RationalFn envelope(Poly::constant(scale), den);
      pulse_terms_.reserve(spec_.n);
      for (int m = 0; m < spec_.n; ++m) {
        RationalFn f = (sol_.e[m] * envelope).simplified();
        auto terms = residues(f);
        to_time_terms(terms);
        pulse_terms_.push_back(std::move(terms));
      }
    }
  }

  Complex amplitude(int m, double tau) const {
    if (pulse_.kind != PulseKind::Gaussian) {
      // The time terms already carry the 1/(2 pi) of the inverse transform.
      Complex acc = 0.0;
      for (const ResidueTerm& term : pulse_terms_[m]) {
        const bool lhp = term.pole.imag() <= 0.0;
        if (tau > 0.0 && lhp) acc += term.eval_time(tau);
        if (tau < 0.0 && !lhp) acc += term.eval_time(tau);
        if (tau == 0.0) acc += 0.5 * term.eval_time(tau);
      }
      return acc;
    }
    const double sigma = pulse_.width;
    const double chi = pulse_.detuning;
    Complex acc = 0.0;
    for (const ResidueTerm& term : e_residues_[m]) {
      if (term.order > 2)
        throw Error(ErrorCode::DegenerateInput,
                    "Gaussian path supports pole order <= 2");
      acc += term.laurent[0] *
             faddeeva_overlap(term.pole - chi, sigma, tau);
      if (term.order == 2)
        acc += term.laurent[1] *
               faddeeva_overlap_dpole(term.pole - chi, sigma, tau);
    }
    return acc * gaussian_norm(sigma) * std::exp(-kI * chi * tau) / kTwoPi;
  }

 private:
  ChainSpec spec_;
  Pulse pulse_;
  RationalChainSolution sol_;
  std::vector<std::vector<ResidueTerm>> e_residues_;
  std::vector<std::vector<ResidueTerm>> pulse_terms_;
};

// Exact-phase amplitudes: one vector quadrature across the tau batch.
MatrixXcd exact_pulse_amplitudes(const ChainSpec& spec, const Pulse& pulse,
                                 const VectorXd& taus) {
  const auto [lo, hi] = spectral_window(pulse);
  const int T = static_cast<int>(taus.size());
  const int n = spec.n;
  double tmax = 0.0;
  for (int k = 0; k < T; ++k) tmax = std::max(tmax, std::abs(taus(k)));
  QuadratureOptions q;
  q.rel_tol = 1e-9;
  q.abs_tol = 1e-13;
  q.max_intervals = 40000;
  q.initial_panels = std::clamp(int((hi - lo) * (tmax + 1.0) / kPi / 2.0), 8, 1024);
  auto f = [&](double dk) {
    VectorXcd out(n * T);
    const ScatteringSolution s =
        solve_chain(spec, nudged(spec, dk), Regime::ExactPhase);
    const Complex amp = spectral_amplitude(pulse, dk);
    for (int m = 0; m < n; ++m) {
      const Complex base = s.e(m) * amp;
      for (int k = 0; k < T; ++k)
        out(m * T + k) = base * std::exp(-kI * dk * taus(k));
    }
    return out;
  };
  const VectorXcd gk = integrate_vector(f, n * T, lo, hi, q);
  MatrixXcd amps(T, n);
  for (int m = 0; m < n; ++m)
    for (int k = 0; k < T; ++k) amps(k, m) = gk(m * T + k) / kTwoPi;
  return amps;
}

}  // namespace

VectorXd excitation_probability(const ChainSpec& spec0, const Pulse& pulse,
                                int m, const VectorXd& tau_grid,
                                Regime regime) {
  const ChainSpec spec = oriented(spec0, pulse);
  const int mi = pulse.side == Direction::LeftIncident ? m : spec.n - 1 - m;
  VectorXd out(tau_grid.size());
  if (regime == Regime::Markovian) {
    const MarkovianPulse mp(spec, pulse);
    for (Eigen::Index i = 0; i < tau_grid.size(); ++i)
      out(i) = std::norm(mp.amplitude(mi, tau_grid(i)));
  } else {
    const MatrixXcd amps = exact_pulse_amplitudes(spec, pulse, tau_grid);
    for (Eigen::Index i = 0; i < tau_grid.size(); ++i)
      out(i) = std::norm(amps(i, mi));
  }
  return out;
}

VectorXd excitation_probabilities_at(const ChainSpec& spec0,
                                     const Pulse& pulse, double tau,
                                     Regime regime) {
  const ChainSpec spec = oriented(spec0, pulse);
  VectorXd out(spec.n);
  if (regime == Regime::Markovian) {
    const MarkovianPulse mp(spec, pulse);
    for (int m = 0; m < spec.n; ++m)
      out(m) = std::norm(mp.amplitude(m, tau));
  } else {
    VectorXd taus(1);
    taus(0) = tau;
    const MatrixXcd amps = exact_pulse_amplitudes(spec, pulse, taus);
    for (int m = 0; m < spec.n; ++m) out(m) = std::norm(amps(0, m));
  }
  if (pulse.side == Direction::RightIncident) out.reverseInPlace();
  return out;
}

double total_excitation(const ChainSpec& spec, const Pulse& pulse, double tau,
                        Regime regime) {
  return excitation_probabilities_at(spec, pulse, tau, regime).sum();
}

double rising_exponential_total(const ChainSpec& spec0, double xi,
                                double chi) {
  const ChainSpec spec = validate(spec0);
  const ScatteringSolution sol =
      solve_chain(spec, Complex(chi, xi), Regime::Markovian);
  double acc = 0.0;
  for (int m = 0; m < spec.n; ++m) acc += std::norm(sol.e(m));
  return 2.0 * xi * acc;
}

ScatteredSpectra scattered_spectra(const ChainSpec& spec0, const Pulse& pulse,
                                   const VectorXd& delta_grid, Regime regime) {
  const ChainSpec spec = oriented(spec0, pulse);
  ScatteredSpectra out;
  out.delta_k = delta_grid;
  out.transmitted.resize(delta_grid.size());
  out.reflected.resize(delta_grid.size());
  for (Eigen::Index i = 0; i < delta_grid.size(); ++i) {
    const ScatteringSolution s =
        solve_chain(spec, nudged(spec, delta_grid(i)), regime);
    const double f2 =
        std::norm(spectral_amplitude(pulse, delta_grid(i))) / kTwoPi;
    out.transmitted(i) = std::norm(s.transmission()) * f2;
    out.reflected(i) = std::norm(s.reflection()) * f2;
  }
  return out;
}

void field_amplitudes(const ChainSpec& spec0, const Pulse& pulse, double t,
                      const VectorXd& x_grid, VectorXcd& psi_r,
                      VectorXcd& psi_l, Regime regime) {
  const ChainSpec spec = oriented(spec0, pulse);
  const bool flip = pulse.side == Direction::RightIncident;
  const auto [lo, hi] = spectral_window(pulse);
  const int P = static_cast<int>(x_grid.size());
  const int n = spec.n;
  const double L = spec.spacing();
  const double X = spec.half_extent();

  struct Meta {
    int s;
    double u1;
  };
  std::vector<Meta> meta(P);
  for (int i = 0; i < P; ++i) {
    const double x = flip ? -x_grid(i) : x_grid(i);
    if (regime == Regime::Markovian) {
      meta[i].s = x < 0.0 ? 0 : n;
      meta[i].u1 = x;
    } else {
      const double xp = x + X;
      int s = xp < 0.0 ? 0 : int(std::floor(xp / L)) + 1;
      s = std::clamp(s, 0, n);
      meta[i].s = s;
      meta[i].u1 = xp - s * L;
    }
  }

  QuadratureOptions q;
  q.rel_tol = 1e-8;
  q.abs_tol = 1e-12;
  q.max_intervals = 60000;
  double umax = 0.0;
  for (const Meta& mm : meta) umax = std::max(umax, std::abs(mm.u1));
  q.initial_panels = std::clamp(
      int((hi - lo) * (t + pulse.x0 + umax) / kPi / 2.0), 8, 4096);

  auto f = [&](double dk) {
    VectorXcd out(2 * P);
    const ScatteringSolution s =
        solve_chain(spec, nudged(spec, dk), regime);
    const Complex amp =
        spectral_amplitude(pulse, dk) * std::exp(kI * dk * (pulse.x0 - t));
    for (int i = 0; i < P; ++i) {
      const Meta& mm = meta[i];
      const Complex e1 = std::exp(kI * dk * mm.u1);
      out(2 * i) = s.t(mm.s) * amp * e1;
      out(2 * i + 1) = s.r(mm.s) * amp / e1;
    }
    return out;
  };
  const VectorXcd gk = integrate_vector(f, 2 * P, lo, hi, q);

  psi_r.resize(P);
  psi_l.resize(P);
  for (int i = 0; i < P; ++i) {
    Complex ar = gk(2 * i) / kTwoPi;
    Complex al = gk(2 * i + 1) / kTwoPi;
    if (flip) std::swap(ar, al);
    psi_r(i) = ar;
    psi_l(i) = al;
  }
}

FieldSample field_densities(const ChainSpec& spec, const Pulse& pulse,
                            double t, const VectorXd& x_grid, Regime regime) {
  VectorXcd psi_r, psi_l;
  field_amplitudes(spec, pulse, t, x_grid, psi_r, psi_l, regime);
  FieldSample sample;
  sample.x = x_grid;
  sample.t = t;
  sample.density_r = psi_r.cwiseAbs2();
  sample.density_l = psi_l.cwiseAbs2();
  return sample;
}

// ---------------------------------------------------------------------------
// Optimization

namespace {

double golden_max(const std::function<double(double)>& f, double lo,
                  double hi, double rel_tol, double* arg) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (std::abs(b - a) > rel_tol * (std::abs(a) + std::abs(b) + 1e-12)) {
    if (f1 > f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  *arg = 0.5 * (a + b);
  return f(*arg);
}

// Coarse scan then golden refinement on the bracketing cell pair.
double scan_then_golden(const std::function<double(double)>& f, double lo,
                        double hi, int coarse, double* arg) {
  int best = 0;
  double best_val = -1e300;
  for (int i = 0; i <= coarse; ++i) {
    const double x = lo + (hi - lo) * i / coarse;
    const double v = f(x);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  const double cell = (hi - lo) / coarse;
  const double a = std::max(lo, lo + (best - 1) * cell);
  const double b = std::min(hi, lo + (best + 1) * cell);
  return golden_max(f, a, b, 1e-7, arg);
}

}  // namespace

OptimizeResult optimize_pulse(const ChainSpec& spec0, PulseKind kind, int m,
                              const OptimizeBox& box, double chi,
                              Regime regime) {
  const ChainSpec spec = validate(spec0);
  OptimizeResult result;

  if (kind == PulseKind::RisingExp) {
    // tau = x0 arrival is optimal for every width; scan width only.
    auto value = [&](double xi) {
      if (m < 0) return rising_exponential_total(spec, xi, chi);
      const ScatteringSolution s =
          solve_chain(spec, Complex(chi, xi), Regime::Markovian);
      return 2.0 * xi * std::norm(s.e(m));
    };
    result.value = scan_then_golden(value, box.width_lo, box.width_hi, 64,
                                    &result.width);
    result.tau = 0.0;
  } else {
    auto tau_optimum = [&](double width, double* tau_arg) {
      Pulse pulse;
      pulse.kind = kind;
      pulse.width = width;
      pulse.detuning = chi;
      if (regime == Regime::Markovian) {
        const MarkovianPulse mp(spec, pulse);
        auto val = [&](double tau) {
          if (m >= 0) return std::norm(mp.amplitude(m, tau));
          double acc = 0.0;
          for (int j = 0; j < spec.n; ++j)
            acc += std::norm(mp.amplitude(j, tau));
          return acc;
        };
        return scan_then_golden(val, box.tau_lo, box.tau_hi, 64, tau_arg);
      }
      auto val = [&](double tau) {
        VectorXd taus(1);
        taus(0) = tau;
        const MatrixXcd amps = exact_pulse_amplitudes(spec, pulse, taus);
        if (m >= 0) return std::norm(amps(0, m));
        return amps.row(0).cwiseAbs2().sum();
      };
      return scan_then_golden(val, box.tau_lo, box.tau_hi, 48, tau_arg);
    };
    auto width_value = [&](double width) {
      double tau_arg = 0.0;
      return tau_optimum(width, &tau_arg);
    };
    const int coarse = regime == Regime::Markovian ? 48 : 24;
    result.value =
        scan_then_golden(width_value, box.width_lo, box.width_hi, coarse,
                         &result.width);
    tau_optimum(result.width, &result.tau);
  }

  const double wspan = box.width_hi - box.width_lo;
  if (result.width <= box.width_lo + 1e-6 * wspan ||
      result.width >= box.width_hi - 1e-6 * wspan)
    throw Error(ErrorCode::NoInteriorMaximum,
                "optimum sits on the width boundary; widen the box");
  return result;
}

FieldSample emitted_pulse_shape(const ChainSpec& spec,
                                const InitialState& init, double t,
                                const VectorXd& x_grid) {
  const ResidueEvolution evolution(spec, init);
  return evolution.field_snapshot(x_grid, t);
}

}  // namespace wqed
