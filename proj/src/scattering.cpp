#include "wqed/scattering.hpp"

#include <algorithm>
#include <cmath>

namespace wqed {

namespace {

Complex phase_for(const ChainSpec& spec, Complex delta_k, Regime regime) {
  if (regime == Regime::Markovian) return Complex(spec.theta, 0.0);
  return (delta_k + spec.omega) * spec.spacing();
}

}  // namespace

TransferMatrix unit_cell(const ChainSpec& spec, int j, Complex delta_k,
                         Regime regime) {
  const double J = spec.couplings(j);
  const double d = spec.detunings(j);
  const Complex denom = delta_k + d;
  if (delta_k.imag() == 0.0 && std::abs(denom) < 1e-14)
    throw Error(ErrorCode::OnQubitResonancePole,
                "real evaluation at Delta_k = -delta_" + std::to_string(j + 1) +
                    "; use the rational representation");
  const Complex a = kI * J / denom;
  const Complex phi = phase_for(spec, delta_k, regime);
  const Complex em = std::exp(-kI * phi);
  const Complex ep = std::exp(kI * phi);
  TransferMatrix T;
  T << (1.0 + a) * em, a * ep, -a * em, (1.0 - a) * ep;
  return T;
}

ScatteringSolution solve_chain(const ChainSpec& spec, Complex delta_k,
                               Regime regime) {
  const int n = spec.n;
  ScatteringSolution sol;
  sol.mode = {delta_k, Direction::LeftIncident};
  sol.regime = regime;
  sol.theta = spec.theta;
  sol.t.resize(n + 1);
  sol.r.resize(n + 1);
  sol.e.resize(n);

  std::vector<TransferMatrix> cells(n);
  TransferMatrix T = TransferMatrix::Identity();
  for (int j = 0; j < n; ++j) {
    cells[j] = unit_cell(spec, j, delta_k, regime);
    T = T * cells[j];
  }
  if (std::abs(T(0, 0)) < 1e-12)
    throw Error(ErrorCode::SingularTransferProduct,
                "transfer product T11 vanishes at this detuning (pole)");
  sol.t(n) = 1.0 / T(0, 0);
  sol.r(n) = 0.0;
  sol.perfect_reflection =
      delta_k.imag() == 0.0 && std::abs(sol.t(n)) < 1e-10;

  // Interior amplitudes by the backward recursion
  // (t_j, r_j)^T = T_j (t_{j+1}, r_{j+1})^T, so each interface relation is
  // satisfied to machine precision.
  Eigen::Vector2cd v;
  v << sol.t(n), sol.r(n);
  for (int j = n - 1; j >= 0; --j) {
    v = cells[j] * v;
    sol.t(j) = v(0);
    sol.r(j) = v(1);
  }
  for (int j = 0; j < n; ++j) {
    const Complex tj = sol.t(j);
    const Complex rj = sol.r(j);
    sol.e(j) = std::sqrt(spec.couplings(j)) * (tj + rj) /
               (delta_k + spec.detunings(j));
  }
  return sol;
}

ScatteringSolution mirror(const ScatteringSolution& sol) {
  // Parity relabeling: qubit j -> N-j+1, right and left movers swap. For a
  // mirror-symmetric chain this is the right-incident solution of the same
  // chain; in general it solves the reversed chain. Segment anchor phases
  // are a representation choice and are handled by field reconstruction.
  ScatteringSolution out = sol;
  out.mode.direction = sol.mode.direction == Direction::LeftIncident
                           ? Direction::RightIncident
                           : Direction::LeftIncident;
  out.e = sol.e.reverse();
  out.t = sol.r.reverse();
  out.r = sol.t.reverse();
  return out;
}

double flux(const ScatteringSolution& sol) {
  return std::norm(sol.transmission()) + std::norm(sol.reflection());
}

// ---------------------------------------------------------------------------
// Markovian rational solve

namespace {

struct PolyMat2 {
  Poly m[2][2];

  static PolyMat2 identity() {
    PolyMat2 I;
    I.m[0][0] = Poly::constant(1.0);
    I.m[0][1] = Poly::constant(0.0);
    I.m[1][0] = Poly::constant(0.0);
    I.m[1][1] = Poly::constant(1.0);
    return I;
  }
  PolyMat2 operator*(const PolyMat2& o) const {
    PolyMat2 out;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j];
    return out;
  }
};

// Numerator matrix of the unit cell over (Delta + delta_j), theta phases
// folded into the coefficients.
PolyMat2 cell_numerator(const ChainSpec& spec, int j) {
  const double J = spec.couplings(j);
  const double d = spec.detunings(j);
  const Complex em = std::exp(-kI * spec.theta);
  const Complex ep = std::exp(kI * spec.theta);
  const Poly lin({Complex(d), Complex(1.0)});  // Delta + delta_j
  PolyMat2 C;
  C.m[0][0] = (lin + Poly::constant(kI * J)) * em;
  C.m[0][1] = Poly::constant(kI * J) * ep;
  C.m[1][0] = Poly::constant(-kI * J) * em;
  C.m[1][1] = (lin - Poly::constant(kI * J)) * ep;
  return C;
}

PolyMat2 adjugate(const PolyMat2& C) {
  PolyMat2 A;
  A.m[0][0] = C.m[1][1];
  A.m[0][1] = C.m[0][1] * Complex(-1.0);
  A.m[1][0] = C.m[1][0] * Complex(-1.0);
  A.m[1][1] = C.m[0][0];
  return A;
}

}  // namespace

RationalChainSolution solve_chain_rational(const ChainSpec& spec) {
  const int n = spec.n;
  RationalChainSolution out;

  std::vector<PolyMat2> cells(n);
  Poly d_all = Poly::constant(1.0);
  PolyMat2 M = PolyMat2::identity();
  for (int j = 0; j < n; ++j) {
    cells[j] = cell_numerator(spec, j);
    M = M * cells[j];
    d_all *= Poly({Complex(spec.detunings(j)), Complex(1.0)});
  }
  out.m11 = M.m[0][0];

  const Complex back_phase = std::exp(-kI * double(n) * spec.theta);
  out.t_phys = RationalFn(d_all * back_phase, out.m11).simplified();
  out.r_left = RationalFn(M.m[1][0], out.m11).simplified();
  // Right-incidence reflection anchored at the last qubit (equals the
  // reversed chain's r_1 in its own frame).
  const Complex hop2 = std::exp(-2.0 * kI * spec.theta);
  out.r_right = RationalFn(M.m[0][1] * (-hop2), out.m11).simplified();

  out.e.reserve(n);
  PolyMat2 S = PolyMat2::identity();
  Poly s_den = Poly::constant(1.0);
  for (int j = 0; j < n; ++j) {
    if (j > 0) {
      S = adjugate(cells[j - 1]) * S;
      s_den *= Poly({Complex(spec.detunings(j - 1)), Complex(1.0)});
    }
    const Poly sum_num = (S.m[0][0] + S.m[1][0]) * out.m11 +
                         (S.m[0][1] + S.m[1][1]) * M.m[1][0];
    const Poly lin({Complex(spec.detunings(j)), Complex(1.0)});
    const Complex scale = std::sqrt(spec.couplings(j));
    RationalFn ej(sum_num * scale, s_den * lin * out.m11);
    out.e.push_back(ej.simplified());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bivariate exact-phase representation

BiPoly BiPoly::constant(Complex value) {
  BiPoly b;
  b.ch_[0] = Poly::constant(value);
  return b;
}

BiPoly BiPoly::from(int epower, Poly p) {
  BiPoly b;
  if (!p.is_zero()) b.ch_[epower] = std::move(p);
  return b;
}

void BiPoly::add_channel(int epower, const Poly& p) {
  if (p.is_zero()) return;
  auto it = ch_.find(epower);
  if (it == ch_.end())
    ch_[epower] = p;
  else {
    it->second += p;
    if (it->second.is_zero()) ch_.erase(it);
  }
}

BiPoly BiPoly::operator+(const BiPoly& o) const {
  BiPoly out = *this;
  for (const auto& [d, p] : o.ch_) out.add_channel(d, p);
  return out;
}

BiPoly BiPoly::operator*(const BiPoly& o) const {
  BiPoly out;
  for (const auto& [d1, p1] : ch_)
    for (const auto& [d2, p2] : o.ch_) out.add_channel(d1 + d2, p1 * p2);
  return out;
}

BiPoly BiPoly::operator*(Complex s) const {
  BiPoly out;
  for (const auto& [d, p] : ch_) out.add_channel(d, p * s);
  return out;
}

BiPoly BiPoly::operator*(const Poly& p) const {
  BiPoly out;
  for (const auto& [d, q] : ch_) out.add_channel(d, q * p);
  return out;
}

BiPoly BiPoly::conj_coeffs() const {
  BiPoly out;
  for (const auto& [d, p] : ch_) out.add_channel(-d, p.conj_coeffs());
  return out;
}

Complex BiPoly::eval(Complex delta_k, double spacing) const {
  Complex acc = 0.0;
  for (const auto& [d, p] : ch_)
    acc += p(delta_k) * std::exp(kI * delta_k * (spacing * d));
  return acc;
}

Complex BiPoly::eval_derivative(Complex delta_k, double spacing) const {
  Complex acc = 0.0;
  for (const auto& [d, p] : ch_) {
    const Complex ph = std::exp(kI * delta_k * (spacing * d));
    acc += (p.derivative()(delta_k) + p(delta_k) * kI * (spacing * d)) * ph;
  }
  return acc;
}

namespace {

struct BiMat2 {
  BiPoly m[2][2];

  static BiMat2 identity() {
    BiMat2 I;
    I.m[0][0] = BiPoly::constant(1.0);
    I.m[1][1] = BiPoly::constant(1.0);
    return I;
  }
  BiMat2 operator*(const BiMat2& o) const {
    BiMat2 out;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        out.m[i][j] = m[i][0] * o.m[0][j] + m[i][1] * o.m[1][j];
    return out;
  }
};

BiMat2 bi_cell(const ChainSpec& spec, int j) {
  const double J = spec.couplings(j);
  const double d = spec.detunings(j);
  const Complex em = std::exp(-kI * spec.theta);
  const Complex ep = std::exp(kI * spec.theta);
  const Poly lin({Complex(d), Complex(1.0)});
  BiMat2 C;
  C.m[0][0] = BiPoly::from(-1, (lin + Poly::constant(kI * J)) * em);
  C.m[0][1] = BiPoly::from(+1, Poly::constant(kI * J) * ep);
  C.m[1][0] = BiPoly::from(-1, Poly::constant(-kI * J) * em);
  C.m[1][1] = BiPoly::from(+1, (lin - Poly::constant(kI * J)) * ep);
  return C;
}

BiMat2 bi_adjugate(const BiMat2& C) {
  BiMat2 A;
  A.m[0][0] = C.m[1][1];
  A.m[0][1] = C.m[0][1] * Complex(-1.0);
  A.m[1][0] = C.m[1][0] * Complex(-1.0);
  A.m[1][1] = C.m[0][0];
  return A;
}

}  // namespace

namespace {

// Divides every E-channel polynomial by prod (Delta - r). The division is
// exact: a resonant qubit pins the field to zero at its site for any value
// of the propagation phase, so the channel numerators all vanish there.
BiPoly divide_out(const BiPoly& num, const std::vector<Complex>& roots) {
  BiPoly out = num;
  for (const Complex& r : roots) {
    BiPoly next;
    for (const auto& [d, p] : out.channels()) {
      if (std::abs(p(r)) > 1e-8 * std::max(1.0, p.max_abs_coeff()))
        throw Error(ErrorCode::DegenerateInput,
                    "channel numerator not divisible by its resonance factor");
      next.add_channel(d, p.deflated(r));
    }
    out = next;
  }
  return out;
}

}  // namespace

BivariateChainSolution solve_chain_bivariate(const ChainSpec& spec) {
  const int n = spec.n;
  BivariateChainSolution out;
  out.n = n;
  out.spacing = spec.spacing();
  out.theta = spec.theta;

  std::vector<BiMat2> cells(n);
  BiMat2 M = BiMat2::identity();
  Poly d_all = Poly::constant(1.0);
  out.m11_basis.channel = -n;
  out.m11_basis.lead = std::exp(-kI * double(n) * spec.theta);
  for (int j = 0; j < n; ++j) {
    cells[j] = bi_cell(spec, j);
    M = M * cells[j];
    d_all *= Poly({Complex(spec.detunings(j)), Complex(1.0)});
    // Straight-through channel root: the cell resonance.
    out.m11_basis.roots.push_back(
        Complex(-spec.detunings(j), -spec.couplings(j)));
  }
  out.m11 = M.m[0][0];
  out.m21 = M.m[1][0];
  out.m12 = M.m[0][1];
  out.d_all = d_all;

  BiMat2 S = BiMat2::identity();
  std::vector<Complex> s_den_roots;
  // Segment 0 carries t_1 = 1 and r_1 = m21 / m11. The resonance factors
  // of the recursion are divided out of every numerator, so denominators
  // are m11 alone and the representation has no real poles.
  out.t_num.push_back(out.m11);
  out.r_num.push_back(out.m21);
  out.tr_den_extra.push_back(Poly::constant(1.0));
  out.tr_den_extra_roots.push_back({});
  for (int j = 0; j < n; ++j) {
    const Complex scale = std::sqrt(spec.couplings(j));
    const BiPoly sum_num = ((S.m[0][0] + S.m[1][0]) * out.m11 +
                            (S.m[0][1] + S.m[1][1]) * out.m21) *
                           scale;
    std::vector<Complex> e_roots = s_den_roots;
    e_roots.push_back(Complex(-spec.detunings(j), 0.0));
    out.e_num.push_back(divide_out(sum_num, e_roots));
    out.e_den_extra.push_back(Poly::constant(1.0));
    out.e_den_extra_roots.push_back({});

    // Advance to segment j+1.
    S = bi_adjugate(cells[j]) * S;
    s_den_roots.push_back(Complex(-spec.detunings(j), 0.0));
    out.t_num.push_back(divide_out(
        S.m[0][0] * out.m11 + S.m[0][1] * out.m21, s_den_roots));
    out.r_num.push_back(divide_out(
        S.m[1][0] * out.m11 + S.m[1][1] * out.m21, s_den_roots));
    out.tr_den_extra.push_back(Poly::constant(1.0));
    out.tr_den_extra_roots.push_back({});
  }
  return out;
}

Poly characteristic_taylor_poly(const ChainSpec& spec, int truncation) {
  const int n = spec.n;
  const Complex em = std::exp(-kI * spec.theta);
  const Complex ep = std::exp(kI * spec.theta);
  // e^{+-i (Delta+Omega) L} ~ e^{+-i theta} sum (+-i theta Delta/Omega)^m / m!
  std::vector<Complex> plus_c(truncation + 1), minus_c(truncation + 1);
  Complex term_p = ep, term_m = em;
  for (int m = 0; m <= truncation; ++m) {
    plus_c[m] = term_p;
    minus_c[m] = term_m;
    term_p *= kI * spec.theta / spec.omega / double(m + 1);
    term_m *= -kI * spec.theta / spec.omega / double(m + 1);
  }
  const Poly phase_plus(plus_c);
  const Poly phase_minus(minus_c);

  PolyMat2 M = PolyMat2::identity();
  for (int j = 0; j < n; ++j) {
    const double J = spec.couplings(j);
    const double d = spec.detunings(j);
    const Poly lin({Complex(d), Complex(1.0)});
    PolyMat2 C;
    C.m[0][0] = (lin + Poly::constant(kI * J)) * phase_minus;
    C.m[0][1] = Poly::constant(kI * J) * phase_plus;
    C.m[1][0] = Poly::constant(-kI * J) * phase_minus;
    C.m[1][1] = (lin - Poly::constant(kI * J)) * phase_plus;
    M = M * C;
  }
  return M.m[0][0];
}

// ---------------------------------------------------------------------------
// Factored rationals and the echo expansion

namespace {

bool same_root(Complex a, Complex b) {
  return std::abs(a - b) <= 1e-9 * (1.0 + std::abs(a));
}

}  // namespace

Complex FactoredRational::eval(Complex x) const {
  Complex den = 1.0;
  for (const FactoredPole& p : poles)
    for (int k = 0; k < p.mult; ++k) den *= (x - p.root);
  return num(x) / den;
}

Poly FactoredRational::denominator() const {
  Poly den = Poly::constant(1.0);
  for (const FactoredPole& p : poles) {
    const Poly lin({-p.root, Complex(1.0)});
    for (int k = 0; k < p.mult; ++k) den *= lin;
  }
  return den;
}

FactoredRational FactoredRational::times(const FactoredRational& o) const {
  FactoredRational out;
  out.num = num * o.num;
  out.poles = poles;
  for (const FactoredPole& p : o.poles) {
    bool merged = false;
    for (FactoredPole& q : out.poles) {
      if (same_root(q.root, p.root)) {
        q.mult += p.mult;
        merged = true;
        break;
      }
    }
    if (!merged) out.poles.push_back(p);
  }
  return out;
}

FactoredRational FactoredRational::plus(const FactoredRational& o) const {
  // Common denominator = union of poles with max multiplicities.
  FactoredRational out;
  out.poles = poles;
  for (const FactoredPole& p : o.poles) {
    bool merged = false;
    for (FactoredPole& q : out.poles) {
      if (same_root(q.root, p.root)) {
        q.mult = std::max(q.mult, p.mult);
        merged = true;
        break;
      }
    }
    if (!merged) out.poles.push_back(p);
  }
  auto complement = [&](const std::vector<FactoredPole>& own) {
    Poly fill = Poly::constant(1.0);
    for (const FactoredPole& q : out.poles) {
      int have = 0;
      for (const FactoredPole& p : own)
        if (same_root(q.root, p.root)) have = p.mult;
      const Poly lin({-q.root, Complex(1.0)});
      for (int k = have; k < q.mult; ++k) fill *= lin;
    }
    return fill;
  };
  out.num = num * complement(poles) + o.num * complement(o.poles);
  return out;
}

FactoredRational FactoredRational::scaled(Complex s) const {
  FactoredRational out = *this;
  out.num = out.num * s;
  return out;
}

FactoredRational FactoredRational::conj_coeffs() const {
  FactoredRational out;
  out.num = num.conj_coeffs();
  out.poles = poles;
  for (FactoredPole& p : out.poles) p.root = std::conj(p.root);
  return out;
}

FactoredRational FactoredRational::shifted_argument(Complex s) const {
  FactoredRational out;
  out.num = num.shifted(s);
  out.poles = poles;
  for (FactoredPole& p : out.poles) p.root -= s;
  return out;
}

Complex EchoExpansion::eval(Complex delta_k, double spacing) const {
  Complex acc = 0.0;
  for (const auto& [d, terms] : channels) {
    Complex channel = 0.0;
    for (const FactoredRational& rho : terms) channel += rho.eval(delta_k);
    acc += channel * std::exp(kI * delta_k * (spacing * d));
  }
  return acc;
}

namespace {

bool same_pole_set(const FactoredRational& a, const FactoredRational& b) {
  if (a.poles.size() != b.poles.size()) return false;
  for (const FactoredPole& p : a.poles) {
    bool found = false;
    for (const FactoredPole& q : b.poles)
      if (q.mult == p.mult && same_root(q.root, p.root)) found = true;
    if (!found) return false;
  }
  return true;
}

void accumulate(std::map<int, std::vector<FactoredRational>>& into, int d,
                const FactoredRational& rho) {
  auto& terms = into[d];
  for (FactoredRational& t : terms) {
    if (same_pole_set(t, rho)) {
      t.num += rho.num;
      return;
    }
  }
  terms.push_back(rho);
}

}  // namespace

EchoExpansion EchoExpansion::product(const EchoExpansion& o) const {
  EchoExpansion out;
  out.valid_radius = std::max(valid_radius, o.valid_radius);
  for (const auto& [d1, terms1] : channels)
    for (const auto& [d2, terms2] : o.channels)
      for (const FactoredRational& r1 : terms1)
        for (const FactoredRational& r2 : terms2)
          accumulate(out.channels, d1 + d2, r1.times(r2));
  return out;
}

EchoExpansion EchoExpansion::scaled(Complex s) const {
  EchoExpansion out = *this;
  for (auto& [d, terms] : out.channels)
    for (FactoredRational& rho : terms) rho = rho.scaled(s);
  return out;
}

EchoExpansion EchoExpansion::plus(const EchoExpansion& o) const {
  EchoExpansion out = *this;
  out.valid_radius = std::max(valid_radius, o.valid_radius);
  for (const auto& [d, terms] : o.channels)
    for (const FactoredRational& rho : terms)
      accumulate(out.channels, d, rho);
  return out;
}

EchoExpansion EchoExpansion::conj_coeffs() const {
  EchoExpansion out;
  out.valid_radius = valid_radius;
  for (const auto& [d, terms] : channels) {
    std::vector<FactoredRational> conj;
    conj.reserve(terms.size());
    for (const FactoredRational& rho : terms) conj.push_back(rho.conj_coeffs());
    out.channels.emplace(-d, std::move(conj));
  }
  return out;
}

EchoExpansion EchoExpansion::shifted_channels(int shift) const {
  EchoExpansion out;
  out.valid_radius = valid_radius;
  for (const auto& [d, terms] : channels) out.channels.emplace(d + shift, terms);
  return out;
}

EchoExpansion EchoExpansion::shifted_argument(Complex s,
                                              double spacing) const {
  EchoExpansion out;
  out.valid_radius = valid_radius;
  for (const auto& [d, terms] : channels) {
    std::vector<FactoredRational> moved;
    moved.reserve(terms.size());
    const Complex ph = std::exp(kI * s * (spacing * d));
    for (const FactoredRational& rho : terms)
      moved.push_back(rho.shifted_argument(s).scaled(ph));
    out.channels.emplace(d, std::move(moved));
  }
  return out;
}

EchoExpansion echo_expand(const BiPoly& num,
                          const std::vector<Complex>& extra_roots,
                          const BiPoly& m11, const EchoBasis& basis,
                          int orders, double valid_radius) {
  const int d0 = basis.channel;
  const Complex lead0 = basis.lead;
  std::vector<FactoredPole> base_poles;
  for (const Complex& r : basis.roots) {
    bool merged = false;
    for (FactoredPole& q : base_poles)
      if (same_root(q.root, r)) {
        ++q.mult;
        merged = true;
      }
    if (!merged) base_poles.push_back({r, 1});
  }

  // 1/m11 = E^{-d0}/c0 * sum_k (-R)^k, R = sum_{d != d0} (c_d/c0) E^{d-d0}.
  std::map<int, FactoredRational> R;
  for (const auto& [d, p] : m11.channels()) {
    if (d == d0) continue;
    FactoredRational fr;
    fr.num = p * (1.0 / lead0);
    fr.poles = base_poles;
    R.emplace(d - d0, fr);
  }
  FactoredRational one;
  one.num = Poly::constant(1.0);
  std::map<int, std::vector<FactoredRational>> series;
  accumulate(series, 0, one);
  std::map<int, std::vector<FactoredRational>> power = series;
  for (int k = 1; k <= orders && !R.empty(); ++k) {
    std::map<int, std::vector<FactoredRational>> next;
    for (const auto& [d1, terms1] : power)
      for (const auto& [d2, r2] : R)
        for (const FactoredRational& r1 : terms1)
          accumulate(next, d1 + d2, r1.times(r2).scaled(-1.0));
    power = std::move(next);
    for (const auto& [d, terms] : power)
      for (const FactoredRational& r : terms) accumulate(series, d, r);
  }

  std::vector<FactoredPole> extra_poles;
  for (const Complex& r : extra_roots) {
    bool merged = false;
    for (FactoredPole& q : extra_poles)
      if (same_root(q.root, r)) {
        ++q.mult;
        merged = true;
      }
    if (!merged) extra_poles.push_back({r, 1});
  }
  const Complex lead_extra(1.0, 0.0);

  EchoExpansion out;
  out.valid_radius = valid_radius;
  for (const auto& [dn, pn] : num.channels()) {
    FactoredRational base;
    base.num = pn * (1.0 / (lead0 * lead_extra));
    base.poles = base_poles;
    for (const FactoredPole& p : extra_poles) {
      bool merged = false;
      for (FactoredPole& q : base.poles)
        if (same_root(q.root, p.root)) {
          q.mult += p.mult;
          merged = true;
        }
      if (!merged) base.poles.push_back(p);
    }
    for (const auto& [ds, terms] : series)
      for (const FactoredRational& rs : terms)
        accumulate(out.channels, dn + ds - d0, base.times(rs));
  }
  return out;
}

}  // namespace wqed
