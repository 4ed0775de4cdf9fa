#include "wqed/ratfun.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace wqed {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

double scale_at(const Poly& p, Complex x) {
  // Magnitude of the evaluation, all cancellations ignored.
  double s = 0.0;
  double ax = 1.0;
  const double r = std::abs(x);
  for (const Complex& c : p.coeffs()) {
    s += std::abs(c) * ax;
    ax *= std::max(r, 1e-30);
  }
  return std::max(s, 1e-300);
}

}  // namespace

Poly::Poly(std::vector<Complex> ascending) : c_(std::move(ascending)) {
  if (c_.empty()) c_.push_back(Complex(0.0));
  trim();
}

Poly Poly::from_roots(const std::vector<Complex>& roots, Complex scale) {
  Poly p = Poly::constant(scale);
  for (const Complex& r : roots) p *= Poly({-r, Complex(1.0)});
  return p;
}

bool Poly::is_zero() const {
  return c_.size() == 1 && c_[0] == Complex(0.0);
}

double Poly::max_abs_coeff() const {
  double m = 0.0;
  for (const Complex& v : c_) m = std::max(m, std::abs(v));
  return m;
}

Complex Poly::operator()(Complex x) const {
  Complex acc = c_.back();
  for (int k = static_cast<int>(c_.size()) - 2; k >= 0; --k)
    acc = acc * x + c_[k];
  return acc;
}

Poly Poly::derivative() const {
  if (c_.size() == 1) return Poly::constant(0.0);
  std::vector<Complex> d(c_.size() - 1);
  for (size_t k = 1; k < c_.size(); ++k) d[k - 1] = double(k) * c_[k];
  return Poly(std::move(d));
}

Poly Poly::shifted(Complex x0) const {
  // Repeated synthetic division by (x - x0): after pass j the leading
  // entries hold the quotient and work[j] the Taylor coefficient.
  std::vector<Complex> work = c_;
  std::vector<Complex> out(c_.size());
  const int n = static_cast<int>(c_.size());
  for (int j = 0; j < n; ++j) {
    for (int k = n - 2; k >= j; --k) work[k] += x0 * work[k + 1];
    out[j] = work[j];
  }
  return Poly(std::move(out));
}

Poly Poly::deflated(Complex root) const {
  const int n = degree();
  if (n < 1) return Poly::constant(0.0);
  std::vector<Complex> q(n);
  Complex carry = c_[n];
  for (int k = n - 1; k >= 0; --k) {
    q[k] = carry;
    carry = c_[k] + carry * root;
  }
  Poly out(std::move(q));
  out.trim();
  return out;
}

Poly Poly::conj_coeffs() const {
  std::vector<Complex> d(c_.size());
  for (size_t k = 0; k < c_.size(); ++k) d[k] = std::conj(c_[k]);
  return Poly(std::move(d));
}

Poly Poly::operator+(const Poly& o) const {
  std::vector<Complex> d(std::max(c_.size(), o.c_.size()), Complex(0.0));
  for (size_t k = 0; k < c_.size(); ++k) d[k] += c_[k];
  for (size_t k = 0; k < o.c_.size(); ++k) d[k] += o.c_[k];
  return Poly(std::move(d));
}

Poly Poly::operator-(const Poly& o) const { return *this + o * Complex(-1.0); }

Poly Poly::operator*(const Poly& o) const {
  if (is_zero() || o.is_zero()) return Poly::constant(0.0);
  std::vector<Complex> d(c_.size() + o.c_.size() - 1, Complex(0.0));
  for (size_t i = 0; i < c_.size(); ++i)
    for (size_t j = 0; j < o.c_.size(); ++j) d[i + j] += c_[i] * o.c_[j];
  return Poly(std::move(d));
}

Poly Poly::operator*(Complex s) const {
  std::vector<Complex> d(c_.size());
  for (size_t k = 0; k < c_.size(); ++k) d[k] = c_[k] * s;
  return Poly(std::move(d));
}

void Poly::trim(double rel_tol) {
  const double cut = rel_tol * max_abs_coeff();
  while (c_.size() > 1 && std::abs(c_.back()) <= cut) c_.pop_back();
  if (c_.size() == 1 && std::abs(c_[0]) <= 0.0) c_[0] = Complex(0.0);
}

std::vector<RootCluster> poly_roots(const Poly& p, double cluster_eps) {
  if (p.is_zero())
    throw Error(ErrorCode::DegenerateInput, "roots of the zero polynomial");
  const int deg = p.degree();
  if (deg == 0) return {};

  // Companion matrix of the monic polynomial.
  MatrixXcd comp = MatrixXcd::Zero(deg, deg);
  const Complex lead = p.leading();
  for (int k = 0; k < deg - 1; ++k) comp(k + 1, k) = 1.0;
  for (int k = 0; k < deg; ++k) comp(k, deg - 1) = -p.coeff(k) / lead;
  Eigen::ComplexEigenSolver<MatrixXcd> es(comp, false);
  std::vector<Complex> raw(es.eigenvalues().data(),
                           es.eigenvalues().data() + deg);

  // Newton-polish every eigenvalue before clustering; companion eigenvalues
  // of high-degree products can be off by far more than the cluster radius.
  const Poly dp = p.derivative();
  for (Complex& z : raw) {
    Complex best = z;
    double best_val = std::abs(p(z));
    for (int it = 0; it < 24; ++it) {
      const Complex d = dp(z);
      if (std::abs(d) < 1e-300) break;
      const Complex step = p(z) / d;
      if (!std::isfinite(std::abs(step)) ||
          std::abs(step) > 0.5 * (1.0 + std::abs(z)))
        break;
      z -= step;
      const double val = std::abs(p(z));
      if (val < best_val) {
        best_val = val;
        best = z;
      }
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(z))) break;
    }
    z = best;
  }

  // Cluster for multiplicity.
  std::sort(raw.begin(), raw.end(), [](Complex a, Complex b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<RootCluster> clusters;
  std::vector<bool> used(raw.size(), false);
  for (size_t i = 0; i < raw.size(); ++i) {
    if (used[i]) continue;
    Complex sum = raw[i];
    int count = 1;
    used[i] = true;
    for (size_t j = i + 1; j < raw.size(); ++j) {
      if (used[j]) continue;
      const Complex mean = sum / double(count);
      if (std::abs(raw[j] - mean) <=
          cluster_eps * std::max(1.0, std::abs(mean))) {
        sum += raw[j];
        ++count;
        used[j] = true;
      }
    }
    clusters.push_back({sum / double(count), count});
  }

  // Refine multiple roots on the derivative of matching order, where the
  // cluster mean is a simple root again.
  for (RootCluster& c : clusters) {
    if (c.multiplicity == 1) continue;
    Poly target = p;
    for (int k = 1; k < c.multiplicity; ++k) target = target.derivative();
    const Poly dtarget = target.derivative();
    Complex z = c.value;
    for (int it = 0; it < 8; ++it) {
      const Complex fz = target(z);
      const Complex dz = dtarget(z);
      if (std::abs(dz) < 1e-300) break;
      const Complex step = fz / dz;
      if (!std::isfinite(std::abs(step)) ||
          std::abs(step) > cluster_eps * std::max(1.0, std::abs(z)))
        break;
      z -= step;
    }
    c.value = z;
  }
  return clusters;
}

RationalFn::RationalFn(Poly num, Poly den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero())
    throw Error(ErrorCode::DegenerateInput, "rational with zero denominator");
}

RationalFn RationalFn::operator+(const RationalFn& o) const {
  return RationalFn(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

RationalFn RationalFn::operator*(const RationalFn& o) const {
  return RationalFn(num_ * o.num_, den_ * o.den_);
}

RationalFn RationalFn::operator*(Complex s) const {
  return RationalFn(num_ * s, den_);
}

RationalFn RationalFn::operator*(const Poly& p) const {
  return RationalFn(num_ * p, den_);
}

RationalFn RationalFn::conj_coeffs() const {
  return RationalFn(num_.conj_coeffs(), den_.conj_coeffs());
}

RationalFn RationalFn::simplified(double root_tol) const {
  if (num_.is_zero()) return RationalFn(Poly::constant(0.0), Poly::constant(1.0));
  Poly num = num_;
  Poly den = den_;
  auto den_roots = poly_roots(den);
  for (const RootCluster& rc : den_roots) {
    for (int k = 0; k < rc.multiplicity; ++k) {
      if (num.degree() < 1) break;
      // Polish the candidate root on the numerator so each polynomial is
      // deflated at its own root; deflating at a slightly-off root would
      // smear the error into every coefficient.
      Complex rn = rc.value;
      const Poly dnum = num.derivative();
      for (int it = 0; it < 3; ++it) {
        const Complex d = dnum(rn);
        if (std::abs(d) < 1e-300) break;
        const Complex step = num(rn) / d;
        if (std::abs(step) > 0.1 * (1.0 + std::abs(rn))) break;
        rn -= step;
      }
      const double match = root_tol * std::max(1.0, std::abs(rc.value));
      // scale_at alone collapses for roots near the origin.
      const double scale = std::max(scale_at(num, rn), num.max_abs_coeff());
      if (std::abs(rn - rc.value) <= match &&
          std::abs(num(rn)) <= 1e-6 * scale) {
        num = num.deflated(rn);
        den = den.deflated(rc.value);
      } else {
        break;
      }
    }
  }
  const Complex lead = den.leading();
  num = num * (1.0 / lead);
  den = den * (1.0 / lead);
  return RationalFn(num, den);
}

Complex ResidueTerm::eval_time(double t) const {
  Complex poly = 0.0;
  double tk = 1.0;
  for (const Complex& c : tcoef) {
    poly += c * tk;
    tk *= t;
  }
  return poly * std::exp(-kI * pole * t);
}

namespace {

// Principal part of num / ((x - p)^m * others) at p via Taylor division.
ResidueTerm laurent_parts(const Poly& num, const Poly& others, Complex p,
                          int m) {
  const Poly ns = num.shifted(p);
  const Poly qs = others.shifted(p);
  std::vector<Complex> g(m, Complex(0.0));
  const Complex q0 = qs.coeff(0);
  for (int k = 0; k < m; ++k) {
    Complex acc = ns.coeff(k);
    for (int j = 0; j < k; ++j) acc -= g[j] * qs.coeff(k - j);
    g[k] = acc / q0;
  }
  ResidueTerm term;
  term.pole = p;
  term.order = m;
  term.laurent.resize(m);
  for (int j = 1; j <= m; ++j) term.laurent[j - 1] = g[m - j];
  return term;
}

}  // namespace

std::vector<ResidueTerm> residues(const RationalFn& f, double cluster_eps) {
  if (!f.proper())
    throw Error(ErrorCode::ImproperRational,
                "deg(num) = " + std::to_string(f.num().degree()) +
                    " >= deg(den) = " + std::to_string(f.den().degree()));
  std::vector<ResidueTerm> out;
  if (f.num().is_zero()) return out;
  const auto poles = poly_roots(f.den(), cluster_eps);
  for (const RootCluster& rc : poles) {
    Poly q = f.den();
    for (int k = 0; k < rc.multiplicity; ++k) q = q.deflated(rc.value);
    out.push_back(laurent_parts(f.num(), q, rc.value, rc.multiplicity));
  }
  return out;
}

std::vector<ResidueTerm> residues_at(
    const Poly& num, const std::vector<std::pair<Complex, int>>& poles) {
  int den_degree = 0;
  for (const auto& [root, mult] : poles) den_degree += mult;
  if (num.degree() >= den_degree)
    throw Error(ErrorCode::ImproperRational,
                "deg(num) = " + std::to_string(num.degree()) +
                    " >= deg(den) = " + std::to_string(den_degree));
  std::vector<ResidueTerm> out;
  if (num.is_zero()) return out;
  for (size_t i = 0; i < poles.size(); ++i) {
    Poly others = Poly::constant(1.0);
    for (size_t j = 0; j < poles.size(); ++j) {
      if (j == i) continue;
      const Poly lin({-poles[j].first, Complex(1.0)});
      for (int k = 0; k < poles[j].second; ++k) others *= lin;
    }
    out.push_back(
        laurent_parts(num, others, poles[i].first, poles[i].second));
  }
  return out;
}

void to_time_terms(std::vector<ResidueTerm>& terms) {
  for (ResidueTerm& term : terms) {
    const Complex side = term.pole.imag() > 0.0 ? kI : -kI;
    term.tcoef.assign(term.order, Complex(0.0));
    double factorial = 1.0;
    Complex mik = 1.0;  // (-i)^k
    for (int k = 0; k < term.order; ++k) {
      if (k > 0) {
        factorial *= k;
        mik *= -kI;
      }
      term.tcoef[k] = side * term.laurent[k] * mik / factorial;
    }
  }
}

std::vector<ResidueTerm> lhp_time_terms(const RationalFn& f) {
  std::vector<ResidueTerm> terms = residues(f);
  std::vector<ResidueTerm> lhp;
  for (ResidueTerm& t : terms)
    if (t.pole.imag() <= 0.0) lhp.push_back(std::move(t));
  to_time_terms(lhp);
  return lhp;
}

Complex eval_time_terms(const std::vector<ResidueTerm>& terms, double t) {
  Complex acc = 0.0;
  for (const ResidueTerm& term : terms) acc += term.eval_time(t);
  return acc;
}

Complex inverse_fourier(const RationalFn& f, double t) {
  std::vector<ResidueTerm> terms = residues(f);
  to_time_terms(terms);
  Complex acc = 0.0;
  for (const ResidueTerm& term : terms) {
    const bool lhp = term.pole.imag() <= 0.0;
    if (t > 0.0 && lhp) acc += term.eval_time(t);
    if (t < 0.0 && !lhp) acc += term.eval_time(t);
    if (t == 0.0) acc += 0.5 * term.eval_time(t);
  }
  return acc;
}

Complex rational_fourier(const RationalFn& R, double s) {
  return rational_fourier_terms(residues(R), s);
}

Complex rational_fourier_terms(const std::vector<ResidueTerm>& terms,
                               double s) {
  Complex upper = 0.0, lower = 0.0;
  for (const ResidueTerm& term : terms) {
    // Residue of R e^{i Delta s} at the pole.
    Complex res = 0.0;
    double factorial = 1.0;
    Complex isk = 1.0;  // (is)^{j-1}
    for (int j = 1; j <= term.order; ++j) {
      if (j > 1) {
        factorial *= (j - 1);
        isk *= kI * s;
      }
      res += term.laurent[j - 1] * isk / factorial;
    }
    res *= std::exp(kI * term.pole * s);
    if (term.pole.imag() > 0.0)
      upper += res;
    else
      lower += res;
  }
  if (s > 0.0) return 2.0 * kPi * kI * upper;
  if (s < 0.0) return -2.0 * kPi * kI * lower;
  return kPi * kI * (upper - lower);
}

namespace {

// integral_0^t u^k e^{a u} du, stable for small |a t|.
Complex power_exp_integral(int k, Complex a, double t) {
  if (std::abs(a) * std::abs(t) < 0.5) {
    Complex acc = 0.0;
    Complex am = 1.0;
    double factorial = 1.0;
    double tp = std::pow(t, k + 1);
    for (int m = 0; m < 40; ++m) {
      if (m > 0) {
        factorial *= m;
        am *= a;
        tp *= t;
      }
      const Complex inc = am * tp / (factorial * (k + m + 1));
      acc += inc;
      if (std::abs(inc) < 1e-18 * (1.0 + std::abs(acc))) break;
    }
    return acc;
  }
  // Upward recurrence I_k = (t^k e^{at} - k I_{k-1}) / a.
  const Complex eat = std::exp(a * t);
  Complex ik = (eat - 1.0) / a;
  double tk = 1.0;
  for (int j = 1; j <= k; ++j) {
    tk *= t;
    ik = (tk * eat - double(j) * ik) / a;
  }
  return ik;
}

}  // namespace

double integrate_abs2_time_terms(const std::vector<ResidueTerm>& terms,
                                 double t) {
  if (t <= 0.0) return 0.0;
  Complex total = 0.0;
  for (const ResidueTerm& lt : terms) {
    for (const ResidueTerm& mt : terms) {
      const Complex a = -kI * (lt.pole - std::conj(mt.pole));
      for (size_t j = 0; j < lt.tcoef.size(); ++j) {
        for (size_t k = 0; k < mt.tcoef.size(); ++k) {
          const Complex c = lt.tcoef[j] * std::conj(mt.tcoef[k]);
          if (std::abs(c) == 0.0) continue;
          total += c * power_exp_integral(int(j + k), a, t);
        }
      }
    }
  }
  return total.real();
}

namespace {

// Weideman (1994) rational approximation of the Faddeeva function on the
// closed upper half plane, coefficients generated once by a direct DFT.
struct WeidemanTable {
  static constexpr int N = 64;
  double a[N];
  double L;

  WeidemanTable() {
    const int M = 2 * N;
    const int M2 = 2 * M;
    L = std::sqrt(N / std::sqrt(2.0));
    std::vector<double> F(2 * M, 0.0);
    for (int k = -M + 1; k <= M - 1; ++k) {
      const double theta = k * kPi / M;
      const double t = L * std::tan(0.5 * theta);
      F[k + M] = std::exp(-t * t) * (L * L + t * t);
    }
    // fftshift then DFT, real part.
    std::vector<double> G(2 * M);
    for (int i = 0; i < 2 * M; ++i) G[i] = F[(i + M) % (2 * M)];
    for (int j = 1; j <= N; ++j) {
      double re = 0.0;
      for (int m = 0; m < 2 * M; ++m)
        re += G[m] * std::cos(2.0 * kPi * j * m / M2);
      a[j - 1] = re / M2;
    }
  }
};

Complex faddeeva_upper(Complex z) {
  static const WeidemanTable table;
  const double L = table.L;
  const Complex iz = kI * z;
  const Complex denom = L - iz;
  const Complex Z = (L + iz) / denom;
  Complex p = table.a[WeidemanTable::N - 1];
  for (int k = WeidemanTable::N - 2; k >= 0; --k) p = p * Z + table.a[k];
  return 2.0 * p / (denom * denom) + (1.0 / kSqrtPi) / denom;
}

}  // namespace

Complex faddeeva_w(Complex z) {
  if (z.imag() >= 0.0) return faddeeva_upper(z);
  // w(z) + w(-z) = 2 exp(-z^2)
  const Complex zz = z * z;
  return 2.0 * std::exp(-zz) - faddeeva_upper(-z);
}

Complex faddeeva_overlap(Complex pole, double sigma, double tau) {
  if (!(sigma > 0.0))
    throw Error(ErrorCode::DegenerateInput, "overlap needs sigma > 0");
  const Complex zeta = -pole / (2.0 * sigma) - kI * sigma * tau;
  const double gauss_exp = -sigma * sigma * tau * tau;
  auto gauss = [&]() { return std::exp(Complex(gauss_exp, 0.0)); };
  // Residue-crossing term, written so the exponent stays bounded for
  // lower-half-plane poles and tau > 0 (and the mirrored case).
  auto crossing = [&]() {
    return std::exp(-pole * pole / (4.0 * sigma * sigma) - kI * pole * tau);
  };
  if (pole.imag() < 0.0) {
    if (zeta.imag() >= 0.0) return -kI * kPi * gauss() * faddeeva_upper(zeta);
    return -kI * kPi * (2.0 * crossing() - gauss() * faddeeva_upper(-zeta));
  }
  if (pole.imag() > 0.0) {
    if (zeta.imag() <= 0.0) return kI * kPi * gauss() * faddeeva_upper(-zeta);
    return kI * kPi * (2.0 * crossing() - gauss() * faddeeva_upper(zeta));
  }
  // Real pole: principal value (half sum of the two one-sided limits).
  const Complex below = -kI * kPi * (zeta.imag() >= 0.0
                                         ? gauss() * faddeeva_upper(zeta)
                                         : 2.0 * crossing() -
                                               gauss() * faddeeva_upper(-zeta));
  const Complex above = kI * kPi * (zeta.imag() <= 0.0
                                        ? gauss() * faddeeva_upper(-zeta)
                                        : 2.0 * crossing() -
                                              gauss() * faddeeva_upper(zeta));
  return 0.5 * (below + above);
}

Complex faddeeva_overlap_dpole(Complex pole, double sigma, double tau) {
  const Complex zeta = -pole / (2.0 * sigma) - kI * sigma * tau;
  const double gauss_exp = -sigma * sigma * tau * tau;
  const Complex gauss = std::exp(Complex(gauss_exp, 0.0));
  auto wprime = [](Complex z, Complex wz) {
    return -2.0 * z * wz + 2.0 * kI / kSqrtPi;
  };
  const Complex dzeta_dp = Complex(-1.0 / (2.0 * sigma), 0.0);
  auto crossing = [&]() {
    return std::exp(-pole * pole / (4.0 * sigma * sigma) - kI * pole * tau);
  };
  const Complex dcross_dp = crossing() * (-pole / (2.0 * sigma * sigma) -
                                          kI * tau);
  if (pole.imag() < 0.0) {
    if (zeta.imag() >= 0.0) {
      const Complex wz = faddeeva_upper(zeta);
      return -kI * kPi * gauss * wprime(zeta, wz) * dzeta_dp;
    }
    const Complex wmz = faddeeva_upper(-zeta);
    return -kI * kPi *
           (2.0 * dcross_dp - gauss * wprime(-zeta, wmz) * (-dzeta_dp));
  }
  if (pole.imag() > 0.0) {
    if (zeta.imag() <= 0.0) {
      const Complex wmz = faddeeva_upper(-zeta);
      return kI * kPi * gauss * wprime(-zeta, wmz) * (-dzeta_dp);
    }
    const Complex wz = faddeeva_upper(zeta);
    return kI * kPi * (2.0 * dcross_dp - gauss * wprime(zeta, wz) * dzeta_dp);
  }
  // Real poles only appear in degenerate setups; central difference.
  const double h = 1e-6;
  return (faddeeva_overlap(pole + h, sigma, tau) -
          faddeeva_overlap(pole - h, sigma, tau)) /
         (2.0 * h);
}

}  // namespace wqed
