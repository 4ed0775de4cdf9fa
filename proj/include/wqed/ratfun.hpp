#ifndef WQED_RATFUN_HPP
#define WQED_RATFUN_HPP

#include <complex>
#include <vector>

#include "wqed/model.hpp"

// Complex-coefficient polynomial and rational-function algebra in the
// detuning variable Delta_k. Everything here is exact up to floating point:
// root finding is companion-matrix eigenvalues with a Newton polish, residue
// extraction handles multiple poles through local Taylor expansions.

namespace wqed {

class Poly {
 public:
  Poly() : c_{Complex(0.0)} {}
  explicit Poly(std::vector<Complex> ascending);
  static Poly constant(Complex value) { return Poly({value}); }
  static Poly variable() { return Poly({Complex(0.0), Complex(1.0)}); }
  // Monic product of (x - r) over the given roots, times `scale`.
  static Poly from_roots(const std::vector<Complex>& roots,
                         Complex scale = Complex(1.0));

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const;
  Complex coeff(int k) const {
    return k < static_cast<int>(c_.size()) ? c_[k] : Complex(0.0);
  }
  const std::vector<Complex>& coeffs() const { return c_; }
  Complex leading() const { return c_.back(); }
  double max_abs_coeff() const;

  Complex operator()(Complex x) const;  // Horner
  Poly derivative() const;
  // Coefficients of p(x0 + y) as a polynomial in y (Taylor shift).
  Poly shifted(Complex x0) const;
  // Divide by (x - root); caller guarantees root is (numerically) a root.
  Poly deflated(Complex root) const;
  Poly conj_coeffs() const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(Complex s) const;
  Poly& operator+=(const Poly& o) { return *this = *this + o; }
  Poly& operator*=(const Poly& o) { return *this = *this * o; }

  // Drops trailing coefficients below rel_tol * max|c|.
  void trim(double rel_tol = 1e-14);

 private:
  std::vector<Complex> c_;  // ascending degree, size >= 1
};

struct RootCluster {
  Complex value;
  int multiplicity = 1;
};

// All roots with multiplicities assigned by relative clustering radius.
// Throws DegenerateInput on the zero polynomial; degree 0 yields no roots.
std::vector<RootCluster> poly_roots(const Poly& p, double cluster_eps = 1e-7);

class RationalFn {
 public:
  RationalFn() : num_(Poly::constant(0.0)), den_(Poly::constant(1.0)) {}
  RationalFn(Poly num, Poly den);

  const Poly& num() const { return num_; }
  const Poly& den() const { return den_; }
  Complex operator()(Complex x) const { return num_(x) / den_(x); }
  bool proper() const { return num_.degree() < den_.degree(); }
  // Degree gap den - num; >= 1 for proper functions.
  int degree_gap() const { return den_.degree() - num_.degree(); }

  RationalFn operator+(const RationalFn& o) const;
  RationalFn operator*(const RationalFn& o) const;
  RationalFn operator*(Complex s) const;
  RationalFn operator*(const Poly& p) const;
  RationalFn conj_coeffs() const;

  // Cancels common roots of num and den (within root_tol on the root gap;
  // clustered multiple roots scatter by the usual eps^(1/m) conditioning,
  // which the default absorbs) and makes the denominator monic.
  RationalFn simplified(double root_tol = 1e-5) const;

 private:
  Poly num_, den_;
};

// One pole's contribution to the inverse Fourier transform:
//   term(t) = (sum_k tcoef[k] t^k) * exp(-i pole t).
struct ResidueTerm {
  Complex pole;
  int order = 1;
  std::vector<Complex> laurent;  // a_{-1} ... a_{-order}
  std::vector<Complex> tcoef;    // filled by to_time_terms

  Complex eval_time(double t) const;
};

// Laurent principal parts of a proper rational function at every pole.
// Throws ImproperRational if deg(num) >= deg(den).
std::vector<ResidueTerm> residues(const RationalFn& f,
                                  double cluster_eps = 1e-7);

// Laurent principal parts with caller-supplied pole locations and
// multiplicities (monic factored denominator); avoids re-clustering
// high-multiplicity roots numerically.
std::vector<ResidueTerm> residues_at(
    const Poly& num, const std::vector<std::pair<Complex, int>>& poles);

// Converts Laurent data to time-domain coefficients for
//   integral dDelta/(2 pi) f(Delta) e^{-i Delta t}
// closed over the half plane that contains the pole. For a lower-half-plane
// pole and t > 0 this is -i * sum_j a_{-j} (-it)^{j-1}/(j-1)! e^{-i p t}.
void to_time_terms(std::vector<ResidueTerm>& terms);

// integral_{-inf}^{inf} dDelta/(2 pi) f(Delta) e^{-i Delta t}, valid for all
// real t: lower-half-plane poles contribute for t > 0, upper-half-plane poles
// for t < 0, and t = 0 uses the half-sum (Theta(0) = 1/2 convention).
Complex inverse_fourier(const RationalFn& f, double t);

// Same integral restricted to the terms supported on t > 0 (LHP poles).
std::vector<ResidueTerm> lhp_time_terms(const RationalFn& f);
Complex eval_time_terms(const std::vector<ResidueTerm>& terms, double t);

// integral_{-inf}^{inf} R(Delta) e^{i Delta s} dDelta for a proper rational R
// with no real poles. s = 0 requires degree gap >= 2.
Complex rational_fourier(const RationalFn& R, double s);
// Same, from precomputed Laurent data (residues(R)); cheap per shift.
Complex rational_fourier_terms(const std::vector<ResidueTerm>& terms,
                               double s);

// integral_0^t of prod-of-terms squared: given h(u) = sum_l term_l(u),
// returns integral_0^t |h(u)|^2 du exactly (piecewise-exponential algebra).
double integrate_abs2_time_terms(const std::vector<ResidueTerm>& terms,
                                 double t);

// Faddeeva function w(z) = exp(-z^2) erfc(-iz), all complex z.
Complex faddeeva_w(Complex z);

// integral dDelta exp(-Delta^2/(4 sigma^2)) / (Delta - pole) * e^{-i Delta tau}
// over the real line, for Im(pole) != 0; entire in tau.
Complex faddeeva_overlap(Complex pole, double sigma, double tau);
// Derivative of the overlap with respect to the pole location.
Complex faddeeva_overlap_dpole(Complex pole, double sigma, double tau);

}  // namespace wqed

#endif  // WQED_RATFUN_HPP
