#include "evarfluid/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "evarfluid/error.hpp"
#include "evarfluid/flowmap.hpp"
#include "evarfluid/kernels.hpp"
#include "evarfluid/parallel.hpp"

namespace evf {

std::string to_string(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::E_D1: return "E_D1";
    case FunctionalKind::E_D2: return "E_D2";
    case FunctionalKind::E_D3: return "E_D3";
    case FunctionalKind::E_DW: return "E_D+W";
    case FunctionalKind::E_TD: return "E_TD";
    case FunctionalKind::E_GD: return "E_GD";
  }
  return "?";
}

FunctionalKind functional_kind_from_string(const std::string& name) {
  for (FunctionalKind k : {FunctionalKind::E_D1, FunctionalKind::E_D2, FunctionalKind::E_D3,
                           FunctionalKind::E_DW, FunctionalKind::E_TD, FunctionalKind::E_GD})
    if (to_string(k) == name) return k;
  if (name == "E_DW") return FunctionalKind::E_DW;
  throw Error(errc::invalid_argument, "unknown energy functional '" + name + "'");
}

bool acts_on_velocity(FunctionalKind k) {
  return k != FunctionalKind::E_TD && k != FunctionalKind::E_GD;
}

VariationalState VariationalState::rest(const Grid& g) {
  return {VectorField(g), ScalarField(g), ScalarField(g, 1.0), VectorField(g), ScalarField(g, 1.0),
          ScalarField(g)};
}

EnergyFunctional::EnergyFunctional(FunctionalKind kind, ConstitutiveSet cs, const Operators& ops)
    : kind_(kind), cs_(std::move(cs)), ops_(ops) {}

namespace {

bool linear_in_r(const ConstitutiveFunction& e) {
  return e.name() == "newtonian" || e.is_zero() || (e.name() == "power_law" && e.param("p") == 1.0);
}

// Energy density of a velocity kind at a velocity gradient, without E_W.
double viscous_density(FunctionalKind k, const Mat3& g, const ConstitutiveSet& cs) {
  const auto dec = decompose_gradient(g);
  switch (k) {
    case FunctionalKind::E_D1: return -0.5 * cs.e1(frobenius_sq(dec.d_plus));
    case FunctionalKind::E_D2: return -0.5 * cs.e2(dec.divergence * dec.divergence);
    case FunctionalKind::E_D3: return -0.5 * cs.e3(frobenius_sq(dec.d_minus));
    default:
      return -0.5 * (cs.e1(frobenius_sq(dec.d_plus)) + cs.e2(dec.divergence * dec.divergence) +
                     cs.e3(frobenius_sq(dec.d_minus)));
  }
}

const ConstitutiveFunction& scalar_member(FunctionalKind k, const ConstitutiveSet& cs) {
  return k == FunctionalKind::E_TD ? cs.e4 : cs.e5;
}

const ScalarField& scalar_argument(FunctionalKind k, const VariationalState& s) {
  return k == FunctionalKind::E_TD ? s.theta : s.concentration;
}

double l2(const VectorField& u) { return std::sqrt(std::max(0.0, inner(u, u))); }
double l2(const ScalarField& u) { return std::sqrt(std::max(0.0, inner(u, u))); }

// Per-point block of the viscous stress selected by the kind.
TensorField stress_block(FunctionalKind k, const TensorField& gv, const ConstitutiveSet& cs) {
  if (k == FunctionalKind::E_DW) return kernels::viscous_stress_field(gv, cs);
  TensorField out(gv.grid);
  par::for_each(out.size(), [&](std::size_t p) {
    const auto dec = decompose_gradient(gv.at(p));
    Mat3 s;
    switch (k) {
      case FunctionalKind::E_D1: s = cs.e1.deriv(frobenius_sq(dec.d_plus)) * dec.d_plus; break;
      case FunctionalKind::E_D2:
        s = Mat3::diagonal(cs.e2.deriv(dec.divergence * dec.divergence) * dec.divergence);
        break;
      case FunctionalKind::E_D3: s = cs.e3.deriv(frobenius_sq(dec.d_minus)) * dec.d_minus; break;
      default: break;
    }
    out.set(p, s);
  });
  return out;
}

}  // namespace

bool EnergyFunctional::is_quadratic() const {
  switch (kind_) {
    case FunctionalKind::E_D1: return linear_in_r(cs_.e1);
    case FunctionalKind::E_D2: return linear_in_r(cs_.e2);
    case FunctionalKind::E_D3: return linear_in_r(cs_.e3);
    case FunctionalKind::E_DW:
      return linear_in_r(cs_.e1) && linear_in_r(cs_.e2) && linear_in_r(cs_.e3);
    case FunctionalKind::E_TD: return linear_in_r(cs_.e4);
    case FunctionalKind::E_GD: return linear_in_r(cs_.e5);
  }
  return false;
}

double EnergyFunctional::evaluate(const VariationalState& s) const {
  Direction none;
  if (acts_on_velocity(kind_))
    none.vec = VectorField(s.v.grid);
  else
    none.scalar = ScalarField(scalar_argument(kind_, s).grid);
  return along(s, none)(0.0);
}

std::function<double(double)> EnergyFunctional::along(const VariationalState& s,
                                                      const Direction& d) const {
  const double dv = s.v.grid.size() ? s.v.grid.cell_volume() : 1.0;
  if (acts_on_velocity(kind_)) {
    struct Line {
      TensorField gv, gp;
      VectorField v, phi, rho_f;
      ScalarField sigma;
      ScalarField div_v, div_phi;
    };
    auto line = std::make_shared<Line>();
    line->gv = ops_.grad_tensor(s.v);
    line->gp = ops_.grad_tensor(d.vec);
    const bool work = kind_ == FunctionalKind::E_DW;
    if (work) {
      line->v = s.v;
      line->phi = d.vec;
      line->rho_f = s.rho * s.force;
      line->sigma = s.sigma;
      line->div_v = ops_.div(s.v);
      line->div_phi = ops_.div(d.vec);
    }
    const FunctionalKind kind = kind_;
    const ConstitutiveSet cs = cs_;
    return [line, kind, cs, work, dv](double eps) {
      const Line& l = *line;
      return dv * par::ordered_sum(l.gv.size(), [&](std::size_t p) {
               double e = viscous_density(kind, l.gv.at(p) + eps * l.gp.at(p), cs);
               if (work) {
                 const Vec3 v = l.v.at(p) + eps * l.phi.at(p);
                 e += (l.div_v[p] + eps * l.div_phi[p]) * l.sigma[p] + dot(l.rho_f.at(p), v);
               }
               return e;
             });
    };
  }
  struct ScalarLine {
    VectorField gf, gp;
  };
  auto line = std::make_shared<ScalarLine>();
  line->gf = ops_.grad(scalar_argument(kind_, s));
  line->gp = ops_.grad(d.scalar);
  const ConstitutiveFunction e = scalar_member(kind_, cs_);
  const double dvs = line->gf.grid.cell_volume();
  return [line, e, dvs](double eps) {
    const ScalarLine& l = *line;
    return dvs * par::ordered_sum(l.gf.size(), [&](std::size_t p) {
             return -0.5 * e(norm_sq(l.gf.at(p) + eps * l.gp.at(p)));
           });
  };
}

Direction EnergyFunctional::strong_force(const VariationalState& s) const {
  Direction f;
  if (acts_on_velocity(kind_)) {
    const TensorField gv = ops_.grad_tensor(s.v);
    f.vec = ops_.div_tensor(stress_block(kind_, gv, cs_));
    if (kind_ == FunctionalKind::E_DW) {
      f.vec -= ops_.grad(s.sigma);
      f.vec += s.rho * s.force;
    }
    return f;
  }
  const VectorField g = ops_.grad(scalar_argument(kind_, s));
  f.scalar = ops_.div(kernels::flux_field(g, scalar_member(kind_, cs_)));
  return f;
}

VectorField strong_force_momentum(const VariationalState& s, const ConstitutiveSet& cs,
                                  const Operators& ops) {
  return EnergyFunctional(FunctionalKind::E_DW, cs, ops).strong_force(s).vec;
}

// ---------------------------------------------------------------------------
// Gateaux derivatives

GateauxResult gateaux(const std::function<double(double)>& f, const std::vector<double>& eps) {
  if (eps.empty()) throw Error(errc::invalid_argument, "epsilon sweep is empty");
  GateauxResult r;
  r.epsilons = eps;
  for (double e : eps) {
    if (!(e > 0.0)) throw Error(errc::invalid_argument, "epsilons must be positive");
    r.central.push_back((f(e) - f(-e)) / (2.0 * e));
  }
  const std::size_t n = eps.size();
  r.value = r.central.back();
  if (n >= 2) {
    const double q = eps[n - 2] / eps[n - 1];
    r.value = r.central[n - 1] + (r.central[n - 1] - r.central[n - 2]) / (q * q - 1.0);
  }
  r.observed_order = std::numeric_limits<double>::quiet_NaN();
  if (n >= 3) {
    const double d1 = r.central[n - 3] - r.central[n - 2];
    const double d2 = r.central[n - 2] - r.central[n - 1];
    double mag = 0.0;
    for (double c : r.central) mag = std::max(mag, std::fabs(c));
    const double noise = 1e-13 * std::max(mag, 1e-300);
    if (std::fabs(d2) > noise && std::fabs(d1) > noise) {
      r.observed_order = std::log(std::fabs(d1 / d2)) / std::log(eps[n - 3] / eps[n - 2]);
      r.converged = std::fabs(d2) < std::fabs(d1);
    }
  }
  return r;
}

GateauxResult gateaux(const EnergyFunctional& e, const VariationalState& s, const Direction& d,
                      const std::vector<double>& epsilons) {
  return gateaux(e.along(s, d), epsilons);
}

std::vector<Direction> velocity_probes(const Operators& ops, std::size_t count, std::uint64_t seed,
                                       bool solenoidal) {
  std::vector<Direction> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    VectorField u = random_band_limited_vector(ops.grid(), seed + 1000 * (i + 1));
    if (solenoidal) {
      u = ops.project(u);
      u *= 1.0 / std::max(u.max_abs(), 1e-300);
    }
    out[i].vec = std::move(u);
  }
  return out;
}

std::vector<Direction> scalar_probes(const Grid& g, std::size_t count, std::uint64_t seed) {
  std::vector<Direction> out(count);
  for (std::size_t i = 0; i < count; ++i)
    out[i].scalar = random_band_limited(g, seed + 1000 * (i + 1));
  return out;
}

// ---------------------------------------------------------------------------
// Euler-Lagrange residuals

EulerLagrangeReport verify_euler_lagrange(const EnergyFunctional& e, const VariationalState& s,
                                          const std::vector<Direction>& probes,
                                          const EulerLagrangeOptions& opts) {
  EulerLagrangeReport rep;
  rep.kind = e.kind();
  rep.name = to_string(e.kind());
  const bool vel = acts_on_velocity(e.kind());
  const Direction force = e.strong_force(s);
  const double energy = e.evaluate(s);
  const double force_norm = vel ? l2(force.vec) : l2(force.scalar);
  rep.min_order = std::numeric_limits<double>::infinity();
  rep.max_order = -std::numeric_limits<double>::infinity();

  for (std::size_t i = 0; i < probes.size(); ++i) {
    const Direction& phi = probes[i];
    ProbeResidual pr;
    pr.probe_id = i;
    pr.pairing = vel ? inner(force.vec, phi.vec) : inner(force.scalar, phi.scalar);
    pr.scale = std::fabs(energy) + force_norm * (vel ? l2(phi.vec) : l2(phi.scalar));
    if (!(pr.scale > 0.0)) pr.scale = 1.0;
    const GateauxResult g = gateaux(e.along(s, phi), opts.epsilons);
    pr.epsilons = g.epsilons;
    double min_res = std::numeric_limits<double>::infinity();
    for (double c : g.central) {
      pr.residuals.push_back(std::fabs(c - pr.pairing));
      min_res = std::min(min_res, pr.residuals.back());
    }
    pr.richardson_residual = std::fabs(g.value - pr.pairing);
    const double rel = min_res / pr.scale;
    pr.observed_order = std::numeric_limits<double>::quiet_NaN();
    if (rel > opts.noise_floor) {
      pr.observed_order = loglog_slope(pr.epsilons, pr.residuals);
      rep.min_order = std::min(rep.min_order, pr.observed_order);
      rep.max_order = std::max(rep.max_order, pr.observed_order);
      rep.order_checked = true;
    }
    if (rel >= rep.max_relative_residual) {
      rep.max_relative_residual = rel;
      rep.worst_probe = i;
    }
    rep.probes.push_back(std::move(pr));
  }

  if (e.is_quadratic()) {
    rep.pass = rep.max_relative_residual <= opts.tolerance;
    if (!rep.pass)
      rep.failure = "probe " + std::to_string(rep.worst_probe) + " residual " +
                    std::to_string(rep.max_relative_residual) + " exceeds tolerance";
  } else if (rep.order_checked) {
    rep.pass = rep.min_order >= opts.order_low && rep.max_order <= opts.order_high;
    if (!rep.pass)
      rep.failure = "epsilon-sweep order outside [" + std::to_string(opts.order_low) + ", " +
                    std::to_string(opts.order_high) + "]";
  }
  return rep;
}

ConstrainedReport verify_constrained(const ConstitutiveSet& cs, const Operators& ops,
                                     const VectorField& v, const ScalarField& rho,
                                     const ScalarField& q, const std::vector<Direction>& probes,
                                     const EulerLagrangeOptions& opts, double tolerance) {
  ConstrainedReport rep;
  const Grid& g = ops.grid();
  const TensorField gv = ops.grad_tensor(v);
  const VectorField visc = ops.div_tensor(kernels::viscous_stress_field(gv, cs));
  const VectorField grad_q = ops.grad(q);

  VariationalState s = VariationalState::rest(g);
  s.v = v;
  s.rho = rho;
  VectorField rho_force = grad_q - ops.project(visc);
  s.force = VectorField(g);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t p = 0; p < g.size(); ++p) s.force.c[a][p] = rho_force.c[a][p] / rho[p];

  const EnergyFunctional e(FunctionalKind::E_DW, cs, ops);
  VariationalState control = s;
  control.force = VectorField(g);

  const double energy = std::fabs(e.evaluate(s));
  for (const Direction& phi : probes) {
    const double sc = energy + l2(visc) * l2(phi.vec);
    rep.premise_max =
        std::max(rep.premise_max, std::fabs(gateaux(e, s, phi, opts.epsilons).value) / sc);
    rep.control_premise =
        std::max(rep.control_premise, std::fabs(gateaux(e, control, phi, opts.epsilons).value) / sc);
  }

  const VectorField w = visc + s.rho * s.force;
  const HelmholtzSplit split = ops.helmholtz_split(w);
  rep.scale = std::max(w.max_abs(), visc.max_abs());
  if (!(rep.scale > 0.0)) rep.scale = 1.0;
  rep.solenoidal_residual = split.solenoidal.max_abs() / rep.scale;
  rep.sigma = split.potential;
  rep.sigma_mean = mean(split.potential);
  // Expected sigma: q (mean removed) plus the potential of the gradient part of
  // div S_visc, which the compensating force leaves in place.
  ScalarField expected = ops.helmholtz_split(visc).potential;
  const double qm = mean(q);
  for (std::size_t p = 0; p < g.size(); ++p) expected[p] += q[p] - qm;
  rep.sigma_error = (split.potential - expected).max_abs() / std::max(expected.max_abs(), 1e-300);
  rep.control_solenoidal = ops.project(visc).max_abs() / std::max(visc.max_abs(), 1e-300);

  const double premise_tol = e.is_quadratic() ? opts.tolerance : 1e3 * opts.tolerance;
  rep.pass = rep.premise_max <= premise_tol && rep.solenoidal_residual <= tolerance &&
             rep.sigma_error <= tolerance && std::fabs(rep.sigma_mean) <= tolerance * rep.scale;
  return rep;
}

double integration_by_parts_residual(const Operators& ops, const TensorField& m,
                                     const VectorField& phi) {
  const double lhs = inner(ops.div_tensor(m), phi);
  const TensorField gp = ops.grad_tensor(phi);
  const double rhs = -inner(m, gp);
  const double scale = std::sqrt(inner(m, m) * inner(gp, gp));
  return std::fabs(lhs - rhs) / std::max(scale, 1e-300);
}

// ---------------------------------------------------------------------------
// Newtonian reduction

NewtonianCoefficients newtonian_reduction_oracle(const ConstitutiveSet& cs) {
  // For v = a cos(k.x): grad v = -sin(k.x) a (x) k, and with a linear stress
  // div S(v,0) = -cos(k.x) S0 k, S0 = S(a (x) k). The target operator gives
  // -cos(k.x) (alpha |k|^2 a + beta (k.a) k). Take |k| = 1.
  auto s0k = [&](const Vec3& a, const Vec3& k) {
    return stress(decompose_gradient(Mat3::outer(a, k)), 0.0, cs) * k;
  };
  const Vec3 ex{1, 0, 0}, ey{0, 1, 0};
  NewtonianCoefficients c;
  c.laplacian = dot(s0k(ey, ex), ey);                // a perpendicular to k
  c.grad_div = dot(s0k(ex, ex), ex) - c.laplacian;   // a parallel to k
  return c;
}

NewtonianReductionReport verify_newtonian_reduction(const ConstitutiveSet& cs, const Operators& ops,
                                                    const VectorField& v) {
  NewtonianReductionReport rep;
  rep.oracle = newtonian_reduction_oracle(cs);
  const VectorField assembled =
      ops.div_tensor(kernels::viscous_stress_field(ops.grad_tensor(v), cs));
  const VectorField model =
      rep.oracle.laplacian * ops.laplacian(v) + rep.oracle.grad_div * ops.grad(ops.div(v));
  rep.max_error = (assembled - model).max_abs() / std::max(assembled.max_abs(), 1e-300);
  return rep;
}

DissipationSignCheck dissipation_sign_check(const ConstitutiveSet& cs, const Operators& ops,
                                            const VectorField& v,
                                            const std::vector<double>& epsilons) {
  VariationalState s = VariationalState::rest(v.grid);
  s.v = v;
  const EnergyFunctional e(FunctionalKind::E_DW, cs, ops);
  Direction d;
  d.vec = v;
  DissipationSignCheck r;
  r.gateaux = gateaux(e, s, d, epsilons).value;
  r.minus_dissipation = -integrate(kernels::dissipation_field(ops.grad_tensor(v), cs));
  const double p = cs.e1.name() == "power_law" ? cs.e1.param("p") : 1.0;
  r.homogeneous = 2.0 * p * e.evaluate(s);
  return r;
}

}  // namespace evf
