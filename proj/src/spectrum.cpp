#include "wqed/spectrum.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace wqed {

int PoleSet::count_with_multiplicity() const {
  int c = 0;
  for (const PoleEntry& e : poles) c += e.multiplicity;
  return c;
}

double PoleSet::max_im() const {
  double m = -1e300;
  for (const PoleEntry& e : poles) m = std::max(m, e.p.imag());
  return m;
}

PoleSet PoleSet::sorted_by_decay() const {
  PoleSet out = *this;
  std::sort(out.poles.begin(), out.poles.end(),
            [](const PoleEntry& a, const PoleEntry& b) {
              return a.gamma().real() < b.gamma().real();
            });
  return out;
}

namespace {

// Attach symmetric/anti-symmetric labels by matching poles against the
// coupling-matrix spectrum (identical qubits; Conjecture 1 instrumentation).
void classify_by_parity(const ChainSpec& spec, PoleSet& set) {
  if (!spec.identical()) return;
  const CouplingMatrixRates rates = coupling_matrix_rates(spec);
  for (PoleEntry& entry : set.poles) {
    double best = 1e300;
    int best_l = -1;
    for (size_t l = 0; l < rates.poles.poles.size(); ++l) {
      const double dist = std::abs(entry.p - rates.poles.poles[l].p);
      if (dist < best) {
        best = dist;
        best_l = static_cast<int>(l);
      }
    }
    if (best_l < 0 || best > 1e-6 * (1.0 + std::abs(entry.p))) continue;
    entry.cls = rates.poles.poles[best_l].cls;
  }
}

}  // namespace

namespace {

// M11 and its derivative in product form: numerically stable for chains
// whose expanded characteristic coefficients are ill-conditioned.
std::pair<Complex, Complex> markovian_char_eval(const ChainSpec& spec,
                                                Complex dk) {
  Eigen::Matrix2cd M = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd D = Eigen::Matrix2cd::Zero();
  const Complex em = std::exp(-kI * spec.theta);
  const Complex ep = std::exp(kI * spec.theta);
  for (int j = 0; j < spec.n; ++j) {
    const Complex lin = dk + spec.detunings(j);
    const Complex iJ = kI * spec.couplings(j);
    Eigen::Matrix2cd C, dC;
    C << (lin + iJ) * em, iJ * ep, -iJ * em, (lin - iJ) * ep;
    dC << em, Complex(0.0), Complex(0.0), ep;
    D = D * C + M * dC;
    M = M * C;
  }
  return {M(0, 0), D(0, 0)};
}

}  // namespace

PoleSet markovian_poles(const ChainSpec& spec) {
  // The raw transfer-product denominator polynomial M11 is the common
  // characteristic polynomial of every scattering parameter, so parameter-
  // specific pole/zero cancellations never lose roots here.
  const RationalChainSolution sol = solve_chain_rational(spec);
  PoleSet set;
  set.theta = spec.theta;
  set.omega = spec.omega;
  for (const RootCluster& rc : poly_roots(sol.m11)) {
    PoleEntry entry;
    entry.p = rc.value;
    entry.multiplicity = rc.multiplicity;
    if (rc.multiplicity == 1) {
      // Final polish against the product form, whose evaluation does not
      // suffer from expanded-coefficient cancellation.
      Complex z = entry.p;
      for (int it = 0; it < 8; ++it) {
        const auto [f, df] = markovian_char_eval(spec, z);
        if (std::abs(df) < 1e-300) break;
        const Complex step = f / df;
        if (!std::isfinite(std::abs(step)) ||
            std::abs(step) > 0.1 * (1.0 + std::abs(z)))
          break;
        z -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
      }
      entry.p = z;
    }
    set.poles.push_back(entry);
  }
  classify_by_parity(spec, set);
  return set.sorted_by_decay();
}

CharacteristicFunction::CharacteristicFunction(const ChainSpec& spec)
    : spacing_(spec.spacing()) {
  // Normalize by E^{+N} so the function is a polynomial in e^{2 i phi}
  // with polynomial coefficients (the closed-form shape), same zeros.
  BiPoly m11 = solve_chain_bivariate(spec).m11;
  const int n = spec.n;
  const Complex scale = std::exp(kI * double(n) * spec.theta);
  BiPoly shifted;
  for (const auto& [d, p] : m11.channels())
    shifted.add_channel(d + n, p * scale);
  m11_ = shifted;
}

Complex CharacteristicFunction::operator()(Complex delta_k) const {
  return m11_.eval(delta_k, spacing_);
}

Complex CharacteristicFunction::derivative(Complex delta_k) const {
  return m11_.eval_derivative(delta_k, spacing_);
}

Complex characteristic_value(const ChainSpec& spec, Complex delta_k) {
  return CharacteristicFunction(spec)(delta_k);
}

namespace {

int adaptive_truncation(const ChainSpec& spec, double radius) {
  // Smallest M with (R theta / Omega)^M / M! < 1e-14.
  const double x = radius * spec.theta / spec.omega;
  double term = 1.0;
  for (int m = 1; m <= 400; ++m) {
    term *= x / m;
    if (m >= 8 && term < 1e-14) return m;
  }
  throw Error(ErrorCode::TruncationInsufficient,
              "no Taylor order reaches 1e-14 for this disk");
}

// Winding number of chi around a small circle; -1 on an unresolved phase.
int winding_number(const CharacteristicFunction& chi, Complex center,
                   double radius) {
  int samples = 128;
  for (int attempt = 0; attempt < 6; ++attempt, samples *= 2) {
    double total = 0.0;
    double prev_arg = 0.0;
    bool ok = true;
    for (int i = 0; i <= samples; ++i) {
      const double ang = 2.0 * kPi * i / samples;
      const Complex z = center + radius * std::exp(kI * ang);
      const Complex v = chi(z);
      if (std::abs(v) == 0.0) return -1;
      const double arg = std::arg(v);
      if (i > 0) {
        double step = arg - prev_arg;
        while (step > kPi) step -= 2.0 * kPi;
        while (step < -kPi) step += 2.0 * kPi;
        if (std::abs(step) > 0.5 * kPi) {
          ok = false;
          break;
        }
        total += step;
      }
      prev_arg = arg;
    }
    if (ok) return static_cast<int>(std::lround(total / (2.0 * kPi)));
  }
  return -1;
}

}  // namespace

PoleSet nonmarkovian_poles(const ChainSpec& spec, const SearchDisk& disk,
                           const NonMarkovianOptions& opts) {
  const CharacteristicFunction chi(spec);
  int truncation = opts.truncation > 0
                       ? opts.truncation
                       : adaptive_truncation(
                             spec, disk.radius + std::abs(disk.center));

  std::vector<Complex> refined;
  for (int attempt = 0; attempt < 3; ++attempt) {
    refined.clear();
    const Poly trunc = characteristic_taylor_poly(spec, truncation);
    bool all_converged = true;
    for (const RootCluster& rc : poly_roots(trunc)) {
      if (std::abs(rc.value - disk.center) > 1.05 * disk.radius) continue;
      // Newton iteration on the exact transcendental function.
      Complex z = rc.value;
      bool converged = false;
      for (int it = 0; it < 60; ++it) {
        const Complex f = chi(z);
        const Complex df = chi.derivative(z);
        if (std::abs(df) < 1e-300) break;
        const Complex step = f / df;
        z -= step;
        if (std::abs(z - disk.center) > 2.0 * disk.radius) break;
        if (std::abs(step) <= 1e-13 * (1.0 + std::abs(z))) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        all_converged = false;
        break;
      }
      if (std::abs(z - disk.center) <= disk.radius) refined.push_back(z);
    }
    if (all_converged) break;
    if (attempt == 2)
      throw Error(ErrorCode::TruncationInsufficient,
                  "Newton refinement diverged at truncation order " +
                      std::to_string(truncation));
    truncation = truncation * 3 / 2 + 4;
  }

  // Deduplicate.
  std::vector<Complex> unique;
  for (const Complex& z : refined) {
    bool seen = false;
    for (const Complex& u : unique)
      if (std::abs(z - u) <= 1e-8 * (1.0 + std::abs(u))) seen = true;
    if (!seen) unique.push_back(z);
  }

  PoleSet set;
  set.theta = spec.theta;
  set.omega = spec.omega;
  const PoleSet markov = markovian_poles(spec);
  for (const Complex& p : unique) {
    PoleEntry entry;
    entry.p = p;
    entry.cls = PoleClass::NonMarkovian;
    for (const PoleEntry& mk : markov.poles) {
      if (std::abs(p - mk.p) < 0.2 * (1.0 + std::abs(mk.p))) {
        entry.cls = mk.cls;
        break;
      }
    }
    if (opts.certify) {
      double nearest = 1e300;
      for (const Complex& u : unique)
        if (u != p) nearest = std::min(nearest, std::abs(u - p));
      const double rc = std::min(1e-4 * (1.0 + std::abs(p)), 0.45 * nearest);
      const int wind = winding_number(chi, p, rc);
      if (wind != entry.multiplicity)
        throw Error(ErrorCode::TruncationInsufficient,
                    "winding count " + std::to_string(wind) + " at pole (" +
                        std::to_string(p.real()) + ", " +
                        std::to_string(p.imag()) + ")");
      entry.certified = true;
    }
    set.poles.push_back(entry);
  }

  set = set.sorted_by_decay();
  if (opts.count > 0 && static_cast<int>(set.poles.size()) > opts.count)
    set.poles.resize(opts.count);
  for (const PoleEntry& e : set.poles)
    if (std::abs(e.p) > 0.5 * spec.omega)
      throw Error(ErrorCode::ValidityViolated,
                  "pole magnitude approaches Omega; the Taylor-in-Delta/Omega "
                  "method is outside its validity range");
  return set;
}

DarkBasis dark_basis(const ChainSpec& spec, int n) {
  if (!spec.identical())
    throw Error(ErrorCode::NotAtBicPoint, "BIC basis needs identical qubits");
  if (std::abs(spec.theta - n * kPi) > 1e-9)
    throw Error(ErrorCode::NotAtBicPoint,
                "theta = " + std::to_string(spec.theta) + " is not " +
                    std::to_string(n) + " pi");
  const int N = spec.n;
  DarkBasis basis;

  // Bright direction: (-1)^{n j}; dark space is its orthogonal complement
  // (the constraint sum_j (-1)^{n j} e_j = 0).
  VectorXcd bright(N);
  for (int j = 0; j < N; ++j)
    bright(j) = (n % 2 != 0 && (j + 1) % 2 != 0) ? -1.0 : 1.0;
  bright /= bright.norm();
  // rev(bright) = +-bright; record its parity.
  VectorXcd rb = bright.reverse();
  basis.bright_parity = (rb - bright).norm() < 1e-12 ? +1 : -1;
  basis.bright = bright;

  // Parity-adapted candidates, Gram-Schmidt against bright and prior darks.
  std::vector<std::pair<VectorXcd, int>> candidates;
  for (int j = 0; j < N / 2; ++j) {
    VectorXcd plus = VectorXcd::Zero(N), minus = VectorXcd::Zero(N);
    plus(j) = plus(N - 1 - j) = 1.0 / std::sqrt(2.0);
    minus(j) = 1.0 / std::sqrt(2.0);
    minus(N - 1 - j) = -1.0 / std::sqrt(2.0);
    candidates.push_back({plus, +1});
    candidates.push_back({minus, -1});
  }
  if (N % 2 == 1) {
    VectorXcd mid = VectorXcd::Zero(N);
    mid(N / 2) = 1.0;
    candidates.push_back({mid, +1});
  }
  // Anti-symmetric vectors first for stable, convention-matching ordering.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const auto& a, const auto& b) {
                     return a.second < b.second;
                   });
  for (auto& [vec, parity] : candidates) {
    VectorXcd v = vec;
    if (parity == basis.bright_parity) v -= bright.dot(v) * bright;
    for (const VectorXcd& d : basis.dark) v -= d.dot(v) * d;
    if (v.norm() < 1e-9) continue;
    v /= v.norm();
    basis.dark.push_back(v);
    basis.dark_parity.push_back(parity);
  }
  return basis;
}

MatrixXcd coupling_matrix(const ChainSpec& spec) {
  if (!spec.identical())
    throw Error(ErrorCode::DegenerateInput,
                "coupling matrix defined for identical qubits");
  return effective_coupling_matrix(spec);
}

MatrixXcd effective_coupling_matrix(const ChainSpec& spec) {
  const int N = spec.n;
  MatrixXcd M(N, N);
  for (int j = 0; j < N; ++j)
    for (int k = 0; k < N; ++k)
      M(j, k) = std::sqrt(spec.couplings(j) * spec.couplings(k)) *
                std::exp(kI * spec.theta * double(std::abs(j - k)));
  for (int j = 0; j < N; ++j) M(j, j) -= kI * spec.detunings(j);
  return M;
}

CouplingMatrixRates coupling_matrix_rates(const ChainSpec& spec) {
  const MatrixXcd J = effective_coupling_matrix(spec);
  Eigen::ComplexEigenSolver<MatrixXcd> es(J, true);
  CouplingMatrixRates out;
  out.poles.theta = spec.theta;
  out.poles.omega = spec.omega;
  out.eigenvectors = es.eigenvectors();
  const int N = spec.n;
  out.parity.resize(N, 0);
  for (int l = 0; l < N; ++l) {
    VectorXcd xi = out.eigenvectors.col(l);
    xi /= xi.norm();
    out.eigenvectors.col(l) = xi;
    PoleEntry entry;
    entry.p = -kI * es.eigenvalues()(l);  // Gamma = 2 lambda
    const VectorXcd rev = xi.reverse();
    const double even = (rev - xi).norm();
    const double odd = (rev + xi).norm();
    if (even < 1e-8) {
      out.parity[l] = +1;
      entry.cls = PoleClass::Symmetric;
    } else if (odd < 1e-8) {
      out.parity[l] = -1;
      entry.cls = PoleClass::AntiSymmetric;
    } else {
      out.all_parity_definite = false;
    }
    out.poles.poles.push_back(entry);
  }
  return out;
}

std::vector<FanoPoint> fano_minima(const ChainSpec& spec) {
  const RationalChainSolution sol = solve_chain_rational(spec);
  std::vector<FanoPoint> points;
  auto reflectance = [&](double dk) {
    return std::norm(sol.r_left(Complex(dk, 0.0)));
  };

  // Exact transparency points: real roots of the reflection numerator.
  if (sol.r_left.num().degree() >= 1) {
    for (const RootCluster& rc : poly_roots(sol.r_left.num())) {
      if (std::abs(rc.value.imag()) < 1e-7 * (1.0 + std::abs(rc.value))) {
        FanoPoint pt;
        pt.delta_k = rc.value.real();
        pt.reflectance = reflectance(pt.delta_k);
        pt.transparent = true;
        points.push_back(pt);
      }
    }
  }

  // Numerical line-shape minima elsewhere.
  double pole_scale = 1.0;
  for (const RootCluster& rc : poly_roots(sol.m11))
    pole_scale = std::max(pole_scale, std::abs(rc.value));
  const double W = std::max(10.0, 4.0 * pole_scale);
  const int samples = 4000;
  const double h = 2.0 * W / samples;
  double prev = reflectance(-W);
  double cur = reflectance(-W + h);
  for (int i = 2; i <= samples; ++i) {
    const double next = reflectance(-W + i * h);
    if (cur <= prev && cur <= next && cur < 0.999) {
      // Golden-section refinement on the bracket.
      double a = -W + (i - 2) * h, b = -W + i * h;
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = reflectance(x1), f2 = reflectance(x2);
      for (int it = 0; it < 80; ++it) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          f1 = reflectance(x1);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          f2 = reflectance(x2);
        }
      }
      FanoPoint pt;
      pt.delta_k = 0.5 * (a + b);
      pt.reflectance = reflectance(pt.delta_k);
      pt.transparent = pt.reflectance < 1e-16;
      bool duplicate = false;
      for (const FanoPoint& known : points)
        if (std::abs(known.delta_k - pt.delta_k) < 10.0 * h) duplicate = true;
      if (!duplicate) points.push_back(pt);
    }
    prev = cur;
    cur = next;
  }
  std::sort(points.begin(), points.end(),
            [](const FanoPoint& a, const FanoPoint& b) {
              return a.delta_k < b.delta_k;
            });
  return points;
}

}  // namespace wqed
