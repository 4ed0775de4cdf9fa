#include "wqed/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace wqed {

namespace {

RationalFn shifted_argument(const RationalFn& f, Complex s) {
  return RationalFn(f.num().shifted(s), f.den().shifted(s));
}

// Factored view of a simplified rational function; the denominator factors
// stay explicit so that sums sharing pole sets merge without re-clustering.
FactoredRational to_factored(const RationalFn& f) {
  FactoredRational out;
  out.num = f.num() * (1.0 / f.den().leading());
  if (f.den().degree() > 0)
    for (const RootCluster& rc : poly_roots(f.den()))
      out.poles.push_back({rc.value, rc.multiplicity});
  return out;
}

std::vector<ResidueTerm> factored_time_terms(const FactoredRational& f,
                                             bool lhp_only) {
  std::vector<std::pair<Complex, int>> poles;
  for (const FactoredPole& p : f.poles) poles.emplace_back(p.root, p.mult);
  std::vector<ResidueTerm> terms = residues_at(f.num, poles);
  if (lhp_only) {
    std::vector<ResidueTerm> keep;
    for (ResidueTerm& t : terms)
      if (t.pole.imag() <= 0.0) keep.push_back(std::move(t));
    terms = std::move(keep);
  }
  to_time_terms(terms);
  return terms;
}

}  // namespace

// ---------------------------------------------------------------------------
// Markovian residue machinery

ResidueEvolution::ResidueEvolution(const ChainSpec& spec0,
                                   const InitialState& init) {
  const ChainSpec spec = validate(spec0);
  const ChainSpec rspec = spec.reversed();
  n_ = spec.n;
  const VectorXcd alpha = init.normalized().amplitudes;
  if (alpha.size() != n_)
    throw Error(ErrorCode::LengthMismatch, "initial state size != n");

  const RationalChainSolution sol = solve_chain_rational(spec);
  const RationalChainSolution rev = solve_chain_rational(rspec);
  // Right-incident amplitudes live on the reversed chain with the detuning
  // reference shifted to its first qubit.
  const Complex dshift = Complex(spec.detunings(n_ - 1), 0.0);
  std::vector<FactoredRational> e_left(n_), e_right(n_);
  for (int m = 0; m < n_; ++m) {
    e_left[m] = to_factored(sol.e[m]);
    e_right[m] = to_factored(shifted_argument(rev.e[n_ - 1 - m], dshift));
  }

  FactoredRational c_left, c_right;
  bool first = true;
  for (int j = 0; j < n_; ++j) {
    if (std::abs(alpha(j)) == 0.0) continue;
    const FactoredRational l = e_left[j].conj_coeffs().scaled(alpha(j));
    const FactoredRational r = e_right[j].conj_coeffs().scaled(alpha(j));
    if (first) {
      c_left = l;
      c_right = r;
      first = false;
    } else {
      c_left = c_left.plus(l);
      c_right = c_right.plus(r);
    }
  }

  amp_terms_.reserve(n_);
  for (int m = 0; m < n_; ++m) {
    const FactoredRational f =
        e_left[m].times(c_left).plus(e_right[m].times(c_right));
    amp_terms_.push_back(factored_time_terms(f, true));
  }
  // Outgoing amplitudes about the chain center: the left-incident state
  // transmits with one extra cell hop while the mirrored state reflects in
  // place (the L -> 0 limit of the exact-phase edge formulas).
  const Complex hop =
      std::exp(kI * double(n_ - 1) * spec.theta);  // t_raw e^{-i theta}
  const FactoredRational t_hop_left = to_factored(sol.t_phys).scaled(hop);
  const FactoredRational t_hop_right =
      to_factored(shifted_argument(rev.t_phys, dshift)).scaled(hop);
  const FactoredRational r_left = to_factored(sol.r_left);
  const FactoredRational r_rev =
      to_factored(shifted_argument(rev.r_left, dshift));
  const FactoredRational g_right =
      t_hop_left.times(c_left).plus(r_rev.times(c_right));
  const FactoredRational g_left =
      r_left.times(c_left).plus(t_hop_right.times(c_right));
  hr_terms_ = factored_time_terms(g_right, true);
  hl_terms_ = factored_time_terms(g_left, true);
}

VectorXcd ResidueEvolution::amplitudes(double t) const {
  VectorXcd out(n_);
  for (int m = 0; m < n_; ++m) out(m) = eval_time_terms(amp_terms_[m], t);
  return out;
}

Complex ResidueEvolution::emitted_right(double u) const {
  if (u < 0.0) return 0.0;
  const Complex v = eval_time_terms(hr_terms_, u);
  return u == 0.0 ? 0.5 * v : v;
}

Complex ResidueEvolution::emitted_left(double u) const {
  if (u < 0.0) return 0.0;
  const Complex v = eval_time_terms(hl_terms_, u);
  return u == 0.0 ? 0.5 * v : v;
}

double ResidueEvolution::radiated_probability(double t) const {
  return integrate_abs2_time_terms(hr_terms_, t) +
         integrate_abs2_time_terms(hl_terms_, t);
}

FieldSample ResidueEvolution::field_snapshot(const VectorXd& x_grid,
                                             double t) const {
  FieldSample sample;
  sample.x = x_grid;
  sample.t = t;
  sample.density_r = VectorXd::Zero(x_grid.size());
  sample.density_l = VectorXd::Zero(x_grid.size());
  for (Eigen::Index i = 0; i < x_grid.size(); ++i) {
    const double x = x_grid(i);
    if (x >= 0.0) sample.density_r(i) = std::norm(emitted_right(t - x));
    if (x <= 0.0) sample.density_l(i) = std::norm(emitted_left(t + x));
  }
  return sample;
}

// ---------------------------------------------------------------------------
// Markovian evolution (coupling-matrix eigenmodes + residue field route)

EvolutionResult evolve_markovian(const ChainSpec& spec0,
                                 const InitialState& init,
                                 const VectorXd& t_grid,
                                 const VectorXd* x_grid) {
  const ChainSpec spec = validate(spec0);
  const VectorXcd alpha = init.normalized().amplitudes;
  const MatrixXcd M = effective_coupling_matrix(spec);
  Eigen::ComplexEigenSolver<MatrixXcd> es(M, true);
  const VectorXcd lambda = es.eigenvalues();
  const VectorXcd beta = es.eigenvectors().fullPivLu().solve(alpha);

  const ResidueEvolution residue(spec, init);

  EvolutionResult result;
  result.times = t_grid;
  result.qubit_prob.resize(t_grid.size(), spec.n);
  result.pw.resize(t_grid.size());
  result.pb = VectorXd::Zero(t_grid.size());
  for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid(i);
    VectorXcd mode = beta;
    for (int l = 0; l < spec.n; ++l) mode(l) *= std::exp(-lambda(l) * t);
    const VectorXcd amps = es.eigenvectors() * mode;
    for (int m = 0; m < spec.n; ++m)
      result.qubit_prob(i, m) = std::norm(amps(m));
    result.pw(i) = residue.radiated_probability(t);
  }
  if (x_grid && t_grid.size() > 0)
    result.field = residue.field_snapshot(*x_grid, t_grid(t_grid.size() - 1));
  return result;
}

EvolutionResult evolve_bic(const ChainSpec& spec0, const InitialState& init,
                           int n, const VectorXd& t_grid,
                           const VectorXd* x_grid) {
  ChainSpec spec = validate(spec0);
  if (std::abs(spec.theta - n * kPi) > 1e-9)
    throw Error(ErrorCode::NotAtBicPoint,
                "theta = " + std::to_string(spec.theta) + " != " +
                    std::to_string(n) + " pi");
  spec.theta = n * kPi;  // snap so the pole cancellations are exact
  const VectorXcd alpha = init.normalized().amplitudes;
  const DarkBasis basis = dark_basis(spec, n);

  // Dark components are stationary (up to the global e^{-i Omega t} phase);
  // the bright component carries the full Dicke decay N gamma0.
  const double bright_rate = double(spec.n);  // Gamma_B / 2 in units of J0
  const Complex bright_amp = basis.bright.dot(alpha);
  VectorXcd stationary = VectorXcd::Zero(spec.n);
  for (size_t i = 0; i < basis.dark.size(); ++i)
    stationary += basis.dark[i] * basis.dark[i].dot(alpha);

  const ResidueEvolution residue(spec, init);

  EvolutionResult result;
  result.times = t_grid;
  result.qubit_prob.resize(t_grid.size(), spec.n);
  result.pw.resize(t_grid.size());
  result.pb = VectorXd::Zero(t_grid.size());
  for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
    const double t = t_grid(i);
    const VectorXcd amps =
        stationary + basis.bright * (bright_amp * std::exp(-bright_rate * t));
    for (int m = 0; m < spec.n; ++m)
      result.qubit_prob(i, m) = std::norm(amps(m));
    result.pw(i) = residue.radiated_probability(t);
  }
  if (x_grid && t_grid.size() > 0)
    result.field = residue.field_snapshot(*x_grid, t_grid(t_grid.size() - 1));
  return result;
}

// ---------------------------------------------------------------------------
// Non-Markovian evolver

namespace {

struct TailChannel {
  double offset;  // L * d
  FactoredRational rho;
  std::vector<ResidueTerm> res;
};

struct TailFamily {
  std::vector<TailChannel> ch;

  static TailFamily from(const EchoExpansion& ee, double spacing) {
    TailFamily fam;
    for (const auto& [d, terms] : ee.channels) {
      for (const FactoredRational& rho : terms) {
        TailChannel c;
        c.offset = spacing * d;
        c.rho = rho;
        std::vector<std::pair<Complex, int>> poles;
        int den_deg = 0;
        for (const FactoredPole& p : rho.poles) {
          poles.emplace_back(p.root, p.mult);
          den_deg += p.mult;
        }
        if (rho.num.degree() < den_deg) c.res = residues_at(rho.num, poles);
        fam.ch.push_back(std::move(c));
      }
    }
    return fam;
  }
  // sum_d rho_d(dk) e^{i dk L d}; the subtraction term on the window.
  Complex eval(Complex dk) const {
    Complex acc = 0.0;
    for (const TailChannel& c : ch)
      acc += c.rho.eval(dk) * std::exp(kI * dk * c.offset);
    return acc;
  }
  // integral over the full line of sum_d rho_d e^{i dk (L d + shift)}.
  Complex fourier(double shift) const {
    Complex acc = 0.0;
    for (const TailChannel& c : ch)
      acc += rational_fourier_terms(c.res, c.offset + shift);
    return acc;
  }
};

}  // namespace

struct NonMarkovianEvolver::Impl {
  ChainSpec spec, rspec;
  VectorXcd alpha;
  NonMarkovianRunOptions opts;
  int n = 0;
  double L = 0.0, X = 0.0, W = 60.0, theta = 0.0;
  double dshift = 0.0;  // detuning reference shift of the reversed chain

  TailFamily amp_fam_0;  // placeholder to keep vector default-constructible
  std::vector<TailFamily> amp_fam;
  TailFamily hr_fam, hl_fam;
  // Per segment s = 0..n: psi_R pieces (t_{s+1} * c_L, r^{rev}_{n-s+1} * c_R)
  // and psi_L pieces (r_{s+1} * c_L, t^{rev}_{n-s+1} * c_R).
  std::vector<TailFamily> seg_r1, seg_r2, seg_l1, seg_l2;
  bool field_ready = false;

  // Cached outgoing envelopes, one panel per interval [mL, (m+1)L] so the
  // echo-onset jumps always sit on panel boundaries (evaluated one-sided).
  struct ExteriorPanel {
    double u0 = 0.0, du = 0.0;
    std::vector<double> h2r, h2l;    // |H|^2 at panel nodes
    double prefix_r = 0.0, prefix_l = 0.0;  // cumulative up to panel start
  };
  std::vector<ExteriorPanel> panels;
  double cached_horizon = -1.0;

  // --- pointwise solves -----------------------------------------------
  Complex nudge(double dk) const {
    for (int j = 0; j < n; ++j)
      if (std::abs(dk + spec.detunings(j)) < 1e-9) return Complex(dk + 2e-9, 0.0);
    return Complex(dk, 0.0);
  }

  struct NodeData {
    ScatteringSolution left, right;
    Complex c_left, c_right;
  };

  NodeData solve_node(double dk_real) const {
    NodeData node;
    const Complex dk = nudge(dk_real);
    node.left = solve_chain(spec, dk, Regime::ExactPhase);
    node.right = solve_chain(rspec, dk + dshift, Regime::ExactPhase);
    node.c_left = 0.0;
    node.c_right = 0.0;
    for (int j = 0; j < n; ++j) {
      node.c_left += alpha(j) * std::conj(node.left.e(j));
      node.c_right += alpha(j) * std::conj(node.right.e(n - 1 - j));
    }
    return node;
  }

  Complex amp_integrand(const NodeData& node, int m) const {
    return node.left.e(m) * node.c_left +
           node.right.e(n - 1 - m) * node.c_right;
  }

  // Outgoing amplitude integrands (right/left edge reference).
  Complex hr_integrand(const NodeData& node, double dk) const {
    const Complex hop = std::exp(-kI * (theta + dk * L));
    return node.left.t(n) * hop * node.c_left + node.right.r(0) * node.c_right;
  }
  Complex hl_integrand(const NodeData& node, double dk) const {
    const Complex hop = std::exp(-kI * (theta + dk * L));
    return node.left.r(0) * node.c_left + node.right.t(n) * hop * node.c_right;
  }

  // --- construction -----------------------------------------------------
  Impl(const ChainSpec& s, const InitialState& init,
       const NonMarkovianRunOptions& o)
      : spec(validate(s)), rspec(spec.reversed()), opts(o) {
    alpha = init.normalized().amplitudes;
    n = spec.n;
    L = spec.spacing();
    X = spec.half_extent();
    theta = spec.theta;
    W = opts.window;
    dshift = spec.detunings(n - 1);

    const BivariateChainSolution B = solve_chain_bivariate(spec);
    BivariateChainSolution BR = solve_chain_bivariate(rspec);

    // Dominance ratio of the characteristic function at the window edge
    // controls the echo truncation order.
    auto dominance = [&](const BiPoly& m11, double at) {
      int d0 = 0;
      int best = -1;
      for (const auto& [d, p] : m11.channels())
        if (p.degree() > best) {
          best = p.degree();
          d0 = d;
        }
      double num = 0.0;
      const double den = std::abs(m11.channels().at(d0)(Complex(at, 0.0)));
      for (const auto& [d, p] : m11.channels())
        if (d != d0) num += std::abs(p(Complex(at, 0.0)));
      return num / den;
    };
    double eta = std::max(dominance(B.m11, W), dominance(B.m11, -W));
    while (eta > 0.25 && W < 2000.0) {
      W *= 1.6;
      eta = std::max(dominance(B.m11, W), dominance(B.m11, -W));
    }
    int orders = opts.echo_orders;
    if (orders <= 0) {
      orders = 3;
      double err = eta * eta * eta * eta;
      while (err > 1e-12 && orders < 16) {
        err *= eta;
        ++orders;
      }
    }

    // Echo expansions of the excitation coefficients and the overlaps.
    std::vector<EchoExpansion> ee_e(n), ee_er(n);
    for (int m = 0; m < n; ++m) {
      ee_e[m] = echo_expand(B.e_num[m], B.e_den_extra_roots[m], B.m11,
                            B.m11_basis, orders, W);
      ee_er[m] = echo_expand(BR.e_num[m], BR.e_den_extra_roots[m], BR.m11,
                             BR.m11_basis, orders, W);
    }
    // The reversed chain is referenced to its own first qubit; shift the
    // detuning argument back to the original frame.
    if (dshift != 0.0) {
      const Complex sh(dshift, 0.0);
      for (int m = 0; m < n; ++m)
        ee_er[m] = ee_er[m].shifted_argument(sh, L);
    }

    EchoExpansion ee_cl, ee_cr;
    for (int j = 0; j < n; ++j) {
      if (std::abs(alpha(j)) == 0.0) continue;
      ee_cl = ee_cl.plus(ee_e[j].conj_coeffs().scaled(alpha(j)));
      ee_cr = ee_cr.plus(ee_er[n - 1 - j].conj_coeffs().scaled(alpha(j)));
    }

    amp_fam.resize(n);
    for (int m = 0; m < n; ++m) {
      const EchoExpansion fam = ee_e[m].product(ee_cl).plus(
          ee_er[n - 1 - m].product(ee_cr));
      amp_fam[m] = TailFamily::from(fam, L);
    }

    // Outgoing envelopes.
    auto echo_tr = [&](const BivariateChainSolution& bi, bool want_t, int s) {
      const BiPoly& num = want_t ? bi.t_num[s] : bi.r_num[s];
      EchoExpansion ee = echo_expand(num, bi.tr_den_extra_roots[s], bi.m11,
                                     bi.m11_basis, orders, W);
      if (&bi == &BR && dshift != 0.0)
        ee = ee.shifted_argument(Complex(dshift, 0.0), L);
      return ee;
    };
    const Complex hopc = std::exp(-kI * theta);
    EchoExpansion ee_tN = echo_tr(B, true, n).shifted_channels(-1).scaled(hopc);
    EchoExpansion ee_tN_rev =
        echo_tr(BR, true, n).shifted_channels(-1).scaled(hopc);
    EchoExpansion ee_r1_rev = echo_tr(BR, false, 0);
    EchoExpansion ee_r1 = echo_tr(B, false, 0);
    hr_fam = TailFamily::from(
        ee_tN.product(ee_cl).plus(ee_r1_rev.product(ee_cr)), L);
    hl_fam = TailFamily::from(
        ee_r1.product(ee_cl).plus(ee_tN_rev.product(ee_cr)), L);

    if (opts.field_observables || opts.x_grid) {
      seg_r1.resize(n + 1);
      seg_r2.resize(n + 1);
      seg_l1.resize(n + 1);
      seg_l2.resize(n + 1);
      for (int s = 0; s <= n; ++s) {
        seg_r1[s] = TailFamily::from(echo_tr(B, true, s).product(ee_cl), L);
        seg_r2[s] =
            TailFamily::from(echo_tr(BR, false, n - s).product(ee_cr), L);
        seg_l1[s] = TailFamily::from(echo_tr(B, false, s).product(ee_cl), L);
        seg_l2[s] =
            TailFamily::from(echo_tr(BR, true, n - s).product(ee_cr), L);
      }
      field_ready = true;
    }
  }

  // --- batched Fourier evaluation ---------------------------------------
  // amplitudes for all qubits at all grid times with one adaptive pass.
  MatrixXcd amplitudes_batch(const VectorXd& ts) const {
    const int T = static_cast<int>(ts.size());
    const int dim = n * T;
    double tmax = 0.0;
    for (int k = 0; k < T; ++k) tmax = std::max(tmax, std::abs(ts(k)));
    QuadratureOptions q = opts.quad;
    q.initial_panels = std::clamp(
        int(W * (tmax + 2.0 * n * L) / kPi / 2.0), 8, 1024);
    auto f = [&](double dk) {
      VectorXcd out(dim);
      const NodeData node = solve_node(dk);
      for (int m = 0; m < n; ++m) {
        const Complex base =
            amp_integrand(node, m) - amp_fam[m].eval(Complex(dk, 0.0));
        for (int k = 0; k < T; ++k)
          out(m * T + k) = base * std::exp(-kI * dk * ts(k));
      }
      return out;
    };
    const VectorXcd gk = integrate_vector(f, dim, -W, W, q);
    MatrixXcd amps(T, n);
    for (int m = 0; m < n; ++m)
      for (int k = 0; k < T; ++k)
        amps(k, m) =
            (gk(m * T + k) + amp_fam[m].fourier(-ts(k))) / (2.0 * kPi);
    return amps;
  }

  // Field amplitudes at a set of x positions, one time, one adaptive pass.
  void field_batch(const VectorXd& xs, double t, VectorXcd& psi_r,
                   VectorXcd& psi_l) const {
    const int P = static_cast<int>(xs.size());
    struct Meta {
      int s;
      double u1, u2;
      Complex carrier1, carrier2;
    };
    std::vector<Meta> meta(P);
    for (int i = 0; i < P; ++i) {
      const double xp = xs(i) + X;  // first qubit at 0 in these coordinates
      int s = xp < 0.0 ? 0 : int(std::floor(xp / L)) + 1;
      s = std::clamp(s, 0, n);
      const double xrev = (n - 1) * L - xp;
      meta[i].s = s;
      meta[i].u1 = xp - s * L;
      meta[i].u2 = xrev - (n - s) * L;
      meta[i].carrier1 = std::exp(kI * spec.omega * meta[i].u1);
      meta[i].carrier2 = std::exp(kI * spec.omega * meta[i].u2);
    }
    QuadratureOptions q = opts.quad;
    q.initial_panels =
        std::clamp(int(W * (t + 2.0 * n * L + X) / kPi / 2.0), 8, 1024);
    const int dim = 2 * P;
    auto f = [&](double dk) {
      VectorXcd out(dim);
      const NodeData node = solve_node(dk);
      const Complex dkx(dk, 0.0);
      // Per-segment subtraction values are shared between positions.
      std::vector<Complex> sub_r1(n + 1), sub_r2(n + 1), sub_l1(n + 1),
          sub_l2(n + 1);
      std::vector<bool> have(n + 1, false);
      const Complex et = std::exp(-kI * dk * t);
      for (int i = 0; i < P; ++i) {
        const Meta& mm = meta[i];
        if (!have[mm.s]) {
          sub_r1[mm.s] = seg_r1[mm.s].eval(dkx);
          sub_r2[mm.s] = seg_r2[mm.s].eval(dkx);
          sub_l1[mm.s] = seg_l1[mm.s].eval(dkx);
          sub_l2[mm.s] = seg_l2[mm.s].eval(dkx);
          have[mm.s] = true;
        }
        const Complex e1 = std::exp(kI * dk * mm.u1);
        const Complex e2 = std::exp(kI * dk * mm.u2);
        const Complex tpiece = node.left.t(mm.s) * node.c_left;
        const Complex rpiece_rev = node.right.r(n - mm.s) * node.c_right;
        const Complex rpiece = node.left.r(mm.s) * node.c_left;
        const Complex tpiece_rev = node.right.t(n - mm.s) * node.c_right;
        out(2 * i) = ((tpiece - sub_r1[mm.s]) * e1 * mm.carrier1 +
                      (rpiece_rev - sub_r2[mm.s]) / e2 / mm.carrier2) *
                     et;
        out(2 * i + 1) = ((rpiece - sub_l1[mm.s]) / e1 / mm.carrier1 +
                          (tpiece_rev - sub_l2[mm.s]) * e2 * mm.carrier2) *
                         et;
      }
      return out;
    };
    const VectorXcd gk = integrate_vector(f, dim, -W, W, q);
    psi_r.resize(P);
    psi_l.resize(P);
    for (int i = 0; i < P; ++i) {
      const Meta& mm = meta[i];
      psi_r(i) = (gk(2 * i) +
                  mm.carrier1 * seg_r1[mm.s].fourier(mm.u1 - t) +
                  (1.0 / mm.carrier2) * seg_r2[mm.s].fourier(-mm.u2 - t)) /
                 (2.0 * kPi);
      psi_l(i) = (gk(2 * i + 1) +
                  (1.0 / mm.carrier1) * seg_l1[mm.s].fourier(-mm.u1 - t) +
                  mm.carrier2 * seg_l2[mm.s].fourier(mm.u2 - t)) /
                 (2.0 * kPi);
    }
  }

  // Outgoing envelopes H_R, H_L at a batch of retarded times.
  void outgoing_batch(const std::vector<double>& us, VectorXcd& hr,
                      VectorXcd& hl) const {
    const int U = static_cast<int>(us.size());
    double umax = 0.0;
    for (double u : us) umax = std::max(umax, std::abs(u));
    QuadratureOptions q = opts.quad;
    q.initial_panels =
        std::clamp(int(W * (umax + 2.0 * n * L) / kPi / 2.0), 8, 1024);
    auto f = [&](double dk) {
      VectorXcd out(2 * U);
      const NodeData node = solve_node(dk);
      const Complex br =
          hr_integrand(node, dk) - hr_fam.eval(Complex(dk, 0.0));
      const Complex bl =
          hl_integrand(node, dk) - hl_fam.eval(Complex(dk, 0.0));
      for (int i = 0; i < U; ++i) {
        const Complex e = std::exp(-kI * dk * us[i]);
        out(2 * i) = br * e;
        out(2 * i + 1) = bl * e;
      }
      return out;
    };
    const VectorXcd gk = integrate_vector(f, 2 * U, -W, W, q);
    hr.resize(U);
    hl.resize(U);
    for (int i = 0; i < U; ++i) {
      hr(i) = (gk(2 * i) + hr_fam.fourier(-us[i])) / (2.0 * kPi);
      hl(i) = (gk(2 * i + 1) + hl_fam.fourier(-us[i])) / (2.0 * kPi);
    }
  }

  void ensure_exterior(double horizon) {
    if (horizon <= cached_horizon) return;
    const double nudge_u = 1e-9 * std::max(L, 1e-3);
    double base = std::min(0.004, L / 2.0);
    base = std::max(base, horizon / 20000.0);
    const int cells = std::max(2, 2 * int(std::ceil(L / (2.0 * base))));
    const int count = int(std::ceil(horizon / L)) + 1;

    // One batched pass over every node of every panel; echo-onset panel
    // boundaries are evaluated one-sided.
    std::vector<double> us;
    for (int m = 0; m < count; ++m) {
      for (int i = 0; i <= cells; ++i) {
        double u = (m + double(i) / cells) * L;
        if (i == 0) u += nudge_u;
        if (i == cells) u -= nudge_u;
        us.push_back(u);
      }
    }
    VectorXcd hr, hl;
    outgoing_batch(us, hr, hl);

    panels.assign(count, {});
    double acc_r = 0.0, acc_l = 0.0;
    for (int m = 0; m < count; ++m) {
      ExteriorPanel& panel = panels[m];
      panel.u0 = m * L;
      panel.du = L / cells;
      panel.h2r.resize(cells + 1);
      panel.h2l.resize(cells + 1);
      for (int i = 0; i <= cells; ++i) {
        panel.h2r[i] = std::norm(hr(m * (cells + 1) + i));
        panel.h2l[i] = std::norm(hl(m * (cells + 1) + i));
      }
      panel.prefix_r = acc_r;
      panel.prefix_l = acc_l;
      VectorXd vr(cells + 1), vl(cells + 1);
      for (int i = 0; i <= cells; ++i) {
        vr(i) = panel.h2r[i];
        vl(i) = panel.h2l[i];
      }
      acc_r += simpson_uniform(vr, panel.du);
      acc_l += simpson_uniform(vl, panel.du);
    }
    cached_horizon = horizon;
  }

  double pw(double t) {
    if (t <= 0.0) return 0.0;
    ensure_exterior(t);
    const int m = std::min<int>(int(t / L), int(panels.size()) - 1);
    const ExteriorPanel& panel = panels[m];
    auto partial = [&](const std::vector<double>& f, double upto) {
      const int cells = int(f.size()) - 1;
      VectorXd head(cells + 1);
      int last = 0;
      for (int i = 0; i <= cells; ++i) {
        const double u = panel.u0 + i * panel.du;
        if (u <= upto || i == 0) {
          head(i) = f[i];
          last = i;
        }
      }
      double acc = simpson_uniform(head.head(last + 1), panel.du);
      // Remaining partial cell by linear interpolation of f.
      const double u_last = panel.u0 + last * panel.du;
      if (upto > u_last && last < cells) {
        const double frac = (upto - u_last) / panel.du;
        const double fa = f[last];
        const double fb = f[last + 1];
        acc += panel.du * frac * (fa + 0.5 * frac * (fb - fa));
      }
      return acc;
    };
    return panel.prefix_r + panel.prefix_l + partial(panel.h2r, t) +
           partial(panel.h2l, t);
  }

  double pb(double t) const {
    // Interior integral split at the qubit sites and at every causal front
    // x = x_q +- (t - k L): the density jumps there.
    if (n < 2) return 0.0;
    const double h = std::min(1.0 / (4.0 * spec.omega), L / 64.0);
    const double nudge_x = 1e-9 * L;
    double total = 0.0;
    for (int seg = 0; seg < n - 1; ++seg) {
      const double a = spec.qubit_position(seg);
      const double b = spec.qubit_position(seg + 1);
      std::vector<double> cuts = {a, b};
      for (int q = 0; q < n; ++q) {
        const double pq = spec.qubit_position(q);
        for (int k = 0; k * L <= t; ++k) {
          for (double front : {pq + (t - k * L), pq - (t - k * L)}) {
            if (front > a + 4.0 * nudge_x && front < b - 4.0 * nudge_x)
              cuts.push_back(front);
          }
        }
      }
      std::sort(cuts.begin(), cuts.end());
      for (size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double lo = cuts[c], hi = cuts[c + 1];
        if (hi - lo < 4.0 * nudge_x) continue;
        const int cells = std::max(4, 2 * int(std::ceil((hi - lo) / h / 2.0)));
        VectorXd xs(cells + 1);
        for (int i = 0; i <= cells; ++i) {
          double x = lo + (hi - lo) * i / cells;
          if (i == 0) x += nudge_x;
          if (i == cells) x -= nudge_x;
          xs(i) = x;
        }
        VectorXcd pr, pl;
        field_batch(xs, t, pr, pl);
        VectorXd dens(cells + 1);
        for (int i = 0; i <= cells; ++i)
          dens(i) = std::norm(pr(i)) + std::norm(pl(i));
        total += simpson_uniform(dens, (hi - lo) / cells);
      }
    }
    return total;
  }
};

NonMarkovianEvolver::NonMarkovianEvolver(const ChainSpec& spec,
                                         const InitialState& init,
                                         const NonMarkovianRunOptions& opts)
    : impl_(std::make_unique<Impl>(spec, init, opts)) {}

NonMarkovianEvolver::~NonMarkovianEvolver() = default;

VectorXcd NonMarkovianEvolver::amplitudes(double t) const {
  VectorXd ts(1);
  ts(0) = t;
  return impl_->amplitudes_batch(ts).row(0).transpose();
}

MatrixXcd NonMarkovianEvolver::amplitudes_batch(const VectorXd& t_grid) const {
  return impl_->amplitudes_batch(t_grid);
}

std::pair<Complex, Complex> NonMarkovianEvolver::field_at(double x,
                                                          double t) const {
  if (!impl_->field_ready)
    throw Error(ErrorCode::ConfigError,
                "evolver built without field observables");
  VectorXd xs(1);
  xs(0) = x;
  VectorXcd pr, pl;
  impl_->field_batch(xs, t, pr, pl);
  return {pr(0), pl(0)};
}

double NonMarkovianEvolver::bounded_probability(double t) const {
  if (!impl_->field_ready)
    throw Error(ErrorCode::ConfigError,
                "evolver built without field observables");
  return impl_->pb(t);
}

double NonMarkovianEvolver::radiated_probability(double t) const {
  if (!impl_->field_ready)
    throw Error(ErrorCode::ConfigError,
                "evolver built without field observables");
  return impl_->pw(t);
}

double NonMarkovianEvolver::outgoing_density_right(double u) const {
  VectorXcd hr, hl;
  impl_->outgoing_batch({std::max(u, 1e-9)}, hr, hl);
  return std::norm(hr(0));
}

double NonMarkovianEvolver::outgoing_density_left(double u) const {
  VectorXcd hr, hl;
  impl_->outgoing_batch({std::max(u, 1e-9)}, hr, hl);
  return std::norm(hl(0));
}

FieldSample NonMarkovianEvolver::field_snapshot(const VectorXd& x_grid,
                                                double t) const {
  if (!impl_->field_ready)
    throw Error(ErrorCode::ConfigError,
                "evolver built without field observables");
  FieldSample sample;
  sample.x = x_grid;
  sample.t = t;
  VectorXcd pr, pl;
  impl_->field_batch(x_grid, t, pr, pl);
  sample.density_r = pr.cwiseAbs2();
  sample.density_l = pl.cwiseAbs2();
  return sample;
}

EvolutionResult evolve_nonmarkovian(const ChainSpec& spec,
                                    const InitialState& init,
                                    const VectorXd& t_grid,
                                    const NonMarkovianRunOptions& opts) {
  NonMarkovianEvolver evolver(spec, init, opts);
  EvolutionResult result;
  result.times = t_grid;
  result.qubit_prob = evolver.amplitudes_batch(t_grid).cwiseAbs2();
  result.pw.resize(t_grid.size());
  result.pb.resize(t_grid.size());
  for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
    if (opts.field_observables) {
      result.pw(i) = evolver.radiated_probability(t_grid(i));
      result.pb(i) = evolver.bounded_probability(t_grid(i));
    } else {
      result.pw(i) = 0.0;
      result.pb(i) = 0.0;
    }
  }
  if (opts.x_grid && t_grid.size() > 0)
    result.field =
        evolver.field_snapshot(*opts.x_grid, t_grid(t_grid.size() - 1));
  return result;
}

// ---------------------------------------------------------------------------

Complex TwoQubitSymmetricState::qubit_amplitude(double t) const {
  return std::exp(-0.5 * gamma1 * t) / std::sqrt(2.0);
}

Complex TwoQubitSymmetricState::field_envelope(double u) const {
  return -kI * gamma1 / (2.0 * std::sqrt(2.0)) * std::exp(-0.5 * gamma1 * u);
}

TwoQubitSymmetricState two_qubit_symmetric_state(const ChainSpec& spec0) {
  const ChainSpec spec = validate(spec0);
  if (spec.n != 2 || !spec.identical())
    throw Error(ErrorCode::DegenerateInput,
                "closed form defined for two identical qubits");
  TwoQubitSymmetricState state;
  state.theta = spec.theta;
  state.spacing = spec.spacing();
  state.gamma1 = kGamma0 * (1.0 + std::exp(kI * spec.theta));
  return state;
}

}  // namespace wqed
