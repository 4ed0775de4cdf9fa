#ifndef WQED_SCATTERING_HPP
#define WQED_SCATTERING_HPP

#include <map>
#include <vector>

#include "wqed/model.hpp"
#include "wqed/ratfun.hpp"

// Scattering eigenstate parameters {t_j, r_j, e_j} for the chain, by the
// transfer-matrix recursion. Conventions follow the unit-cell form
//   T_j = [[1 + iJ/(D+d), iJ/(D+d)], [-iJ/(D+d), 1 - iJ/(D+d)]]
//         * diag(e^{-i phi}, e^{i phi})
// with phi = theta in the Markovian regime and (Delta_k + Omega) L in the
// exact-phase regime. t_{N+1} and r_{N+1} are referenced to x = N L; the
// *_phys accessors fold the reference phases away so that amplitudes refer
// to plane waves about the chain center (the Markovian x = 0 convention).

namespace wqed {

using TransferMatrix = Eigen::Matrix2cd;

struct ScatteringSolution {
  VectorXcd t;  // t_1 .. t_{N+1}
  VectorXcd r;  // r_1 .. r_{N+1}
  VectorXcd e;  // e_1 .. e_N
  ModePoint mode;
  Regime regime = Regime::Markovian;
  double theta = 0.0;
  bool perfect_reflection = false;  // |t_{N+1}| ~ 0 at a real Delta_k

  Complex transmission() const { return t(t.size() - 1); }
  Complex reflection() const { return r(0); }
};

TransferMatrix unit_cell(const ChainSpec& spec, int j, Complex delta_k,
                         Regime regime);

// Full interior solution for a left-incident photon at the given detuning.
ScatteringSolution solve_chain(const ChainSpec& spec, Complex delta_k,
                               Regime regime = Regime::Markovian);

// Parity image of a left-incident solution: qubit j -> N-j+1, movers swap.
ScatteringSolution mirror(const ScatteringSolution& sol);

// |t|^2 + |r|^2 for a lossless chain (1 for real detunings).
double flux(const ScatteringSolution& sol);

// ---------------------------------------------------------------------------
// Markovian rational representation: every scattering parameter as an exact
// RationalFn in Delta_k. This is what the residue evolution consumes.

struct RationalChainSolution {
  Poly m11;                 // characteristic denominator polynomial
  RationalFn t_phys;        // transmission, x = 0 reference
  RationalFn r_left;        // left-incidence reflection
  RationalFn r_right;       // right-incidence reflection, x = 0 reference
  std::vector<RationalFn> e;  // excitation coefficients e_1 .. e_N

  int n() const { return static_cast<int>(e.size()); }
};

RationalChainSolution solve_chain_rational(const ChainSpec& spec);

// ---------------------------------------------------------------------------
// Exact-phase bivariate representation: polynomials in Delta_k and in the
// round-trip symbol Ephase = e^{i Delta_k L}. M11 evaluated this way is the
// full transcendental characteristic function.

class BiPoly {
 public:
  BiPoly() = default;
  static BiPoly constant(Complex value);
  static BiPoly from(int epower, Poly p);

  const std::map<int, Poly>& channels() const { return ch_; }
  bool empty() const { return ch_.empty(); }
  void add_channel(int epower, const Poly& p);

  BiPoly operator+(const BiPoly& o) const;
  BiPoly operator*(const BiPoly& o) const;
  BiPoly operator*(Complex s) const;
  BiPoly operator*(const Poly& p) const;
  // Coefficient-conjugate with E -> E^{-1}; equals conj(f(conj .))
  // for the physical evaluation E = e^{i Delta L} on the real axis.
  BiPoly conj_coeffs() const;

  Complex eval(Complex delta_k, double spacing) const;
  // d/dDelta including the E-channel chain rule.
  Complex eval_derivative(Complex delta_k, double spacing) const;

 private:
  std::map<int, Poly> ch_;
};

// Exact factorization data of the dominant (straight-through) channel of
// m11: its roots are the cell resonances -delta_j - i J_j by construction.
struct EchoBasis {
  int channel = 0;
  std::vector<Complex> roots;
  Complex lead{1.0, 0.0};
};

struct BivariateChainSolution {
  BiPoly m11;   // characteristic function (up to a nonzero entire factor)
  BiPoly m21;
  BiPoly m12;
  Poly d_all;   // prod_j (Delta + delta_j)
  EchoBasis m11_basis;
  // Numerators of e_j over den = d_extra[j] * m11.
  std::vector<BiPoly> e_num;
  std::vector<Poly> e_den_extra;
  std::vector<std::vector<Complex>> e_den_extra_roots;
  // Numerators of interior t_{j+1}, r_{j+1} (j = 0..N) over the same style
  // of denominator: t_num[j] / (tr_den_extra[j] * m11).
  std::vector<BiPoly> t_num;
  std::vector<BiPoly> r_num;
  std::vector<Poly> tr_den_extra;
  std::vector<std::vector<Complex>> tr_den_extra_roots;
  double spacing = 0.0;
  double theta = 0.0;
  int n = 0;
};

BivariateChainSolution solve_chain_bivariate(const ChainSpec& spec);

// Truncated-Taylor polynomial image of the characteristic function: each
// e^{i phi} replaced by e^{i theta} sum_{n<=M} (i theta Delta/Omega)^n / n!.
Poly characteristic_taylor_poly(const ChainSpec& spec, int truncation);

// ---------------------------------------------------------------------------
// Echo expansion: asymptotic (large |Delta|) representation of a bivariate
// ratio num / (den_extra * m11) as sum_d rho_d(Delta) E^d. The rho_d carry
// factored denominators: pole locations and multiplicities are tracked
// explicitly, so products stack powers without ever re-finding roots of
// high-multiplicity polynomials. Valid for |Delta| >= valid_radius; used for
// exact Fourier tails.

struct FactoredPole {
  Complex root;
  int mult = 1;
};

// num(Delta) / prod_i (Delta - root_i)^{mult_i}, monic denominator.
struct FactoredRational {
  Poly num = Poly::constant(0.0);
  std::vector<FactoredPole> poles;

  Complex eval(Complex x) const;
  Poly denominator() const;
  FactoredRational times(const FactoredRational& o) const;
  FactoredRational plus(const FactoredRational& o) const;
  FactoredRational scaled(Complex s) const;
  FactoredRational conj_coeffs() const;
  // f(Delta + s) as a factored rational in Delta.
  FactoredRational shifted_argument(Complex s) const;
};

// Channels hold term lists rather than single merged rationals: merging
// different pole orders onto one stacked denominator trades accuracy for
// nothing (the fill polynomials cancel catastrophically).
struct EchoExpansion {
  std::map<int, std::vector<FactoredRational>> channels;
  double valid_radius = 0.0;

  Complex eval(Complex delta_k, double spacing) const;
  EchoExpansion product(const EchoExpansion& o) const;
  EchoExpansion scaled(Complex s) const;
  EchoExpansion plus(const EchoExpansion& o) const;
  // Conjugate-function expansion: rho_d -> conj coefficients, d -> -d.
  EchoExpansion conj_coeffs() const;
  // Multiply by E^{shift}.
  EchoExpansion shifted_channels(int shift) const;
  EchoExpansion shifted_argument(Complex s, double spacing) const;
};

// Expands num / (den_extra * m11) in powers of E around |Delta| = infinity,
// where den_extra = prod (Delta - r) over extra_roots and the dominant
// channel of m11 is factored by `basis` (exact structural roots). `orders`
// echo terms are kept; accuracy at |Delta| = W is O(eta^{orders+1}) where
// eta is the dominance ratio of m11 at W.
EchoExpansion echo_expand(const BiPoly& num,
                          const std::vector<Complex>& extra_roots,
                          const BiPoly& m11, const EchoBasis& basis,
                          int orders, double valid_radius);

}  // namespace wqed

#endif  // WQED_SCATTERING_HPP
