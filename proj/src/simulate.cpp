#include "evarfluid/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "evarfluid/error.hpp"
#include "evarfluid/kernels.hpp"
#include "evarfluid/parallel.hpp"

namespace evf {

namespace {

constexpr double kPi = std::numbers::pi;

void require_positive_density(const ScalarField& rho) {
  if (!rho.all_finite()) throw Error(errc::non_finite, "instability: non-finite density");
  if (!(rho.min() > 0.0))
    throw Error(errc::nonpositive_density,
                "density must be positive (min " + std::to_string(rho.min()) + ")");
}

template <class F>
double integral(const Grid& g, F&& f) {
  return g.cell_volume() * par::ordered_sum(g.size(), f);
}

Vec3 box_center(const Grid& g) {
  Vec3 c;
  for (std::size_t a = 0; a < 3; ++a) c[a] = g.active(a) ? 0.5 * g.lengths[a] : 0.0;
  return c;
}

ScalarField pressure_field(const FluidState& s, const Closure& closure) {
  if (closure.pressure == Closure::Pressure::prescribed) return s.sigma;
  ScalarField out(s.grid());
  par::for_each(out.size(), [&](std::size_t p) { out[p] = closure.barotropic_pressure(s.rho[p]); });
  return out;
}

// v . grad f
ScalarField advect(const VectorField& v, const VectorField& grad_f) {
  ScalarField out(v.grid);
  par::for_each(out.size(), [&](std::size_t p) { out[p] = dot(v.at(p), grad_f.at(p)); });
  return out;
}

void axpy(std::vector<ScalarField>& y, double a, const std::vector<ScalarField>& x) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    auto& yd = y[k].data;
    const auto& xd = x[k].data;
    par::for_each(yd.size(), [&](std::size_t p) { yd[p] += a * xd[p]; });
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// State and closure

FluidState FluidState::rest(const Grid& g, double cv) {
  FluidState s;
  s.rho = ScalarField(g, 1.0);
  s.v = VectorField(g);
  s.sigma = ScalarField(g);
  s.theta = ScalarField(g, 1.0);
  s.e = ScalarField(g, cv);
  s.c = ScalarField(g);
  s.s = ScalarField(g);
  s.force = VectorField(g);
  return s;
}

void FluidState::validate() const {
  const Grid& g = grid();
  for (const Grid* o : {&v.grid, &sigma.grid, &theta.grid, &e.grid, &c.grid, &s.grid, &force.grid})
    require_same_grid(g, *o);
  require_positive_density(rho);
  const bool finite = rho.all_finite() && v.all_finite() && sigma.all_finite() &&
                      theta.all_finite() && e.all_finite() && c.all_finite() && s.all_finite() &&
                      force.all_finite();
  if (!finite) throw Error(errc::non_finite, "state contains non-finite values");
}

double Closure::potential(double rho) const { return a * std::pow(rho, gamma); }
double Closure::potential_deriv(double rho) const { return a * gamma * std::pow(rho, gamma - 1.0); }
double Closure::barotropic_pressure(double rho) const {
  return rho * potential_deriv(rho) - potential(rho);
}
double Closure::sound_speed_sq(double rho) const {
  return a * gamma * (gamma - 1.0) * std::pow(rho, gamma - 1.0);
}

double Closure::consistency_error(double rho, double h) const {
  const double dp = (potential(rho + h) - potential(rho - h)) / (2.0 * h);
  return std::fabs((rho * dp - potential(rho)) - a * (gamma - 1.0) * std::pow(rho, gamma));
}

void Closure::validate() const {
  if (!(a > 0.0) || !(gamma > 1.0))
    throw Error(errc::invalid_argument, "barotropic closure needs a > 0 and gamma > 1");
  if (!(cv > 0.0)) throw Error(errc::invalid_argument, "caloric closure needs cv > 0");
}

std::string to_string(SystemKind k) {
  switch (k) {
    case SystemKind::compressible: return "compressible";
    case SystemKind::incompressible: return "incompressible";
    case SystemKind::euler_compressible: return "euler-compressible";
    case SystemKind::euler_incompressible: return "euler-incompressible";
  }
  return "?";
}

SystemKind system_kind_from_string(const std::string& name) {
  for (SystemKind k : {SystemKind::compressible, SystemKind::incompressible,
                       SystemKind::euler_compressible, SystemKind::euler_incompressible})
    if (to_string(k) == name) return k;
  throw Error(errc::invalid_argument, "unknown system '" + name + "'");
}

std::string to_string(Integrator i) { return i == Integrator::rk4 ? "rk4" : "euler"; }

Integrator integrator_from_string(const std::string& name) {
  if (name == "rk4") return Integrator::rk4;
  if (name == "euler") return Integrator::euler;
  throw Error(errc::invalid_argument, "unknown integrator '" + name + "'");
}

// ---------------------------------------------------------------------------
// Right-hand sides

CompressibleRates rhs_compressible(const FluidState& s, const ConstitutiveSet& cs,
                                   const Closure& closure, const Operators& ops) {
  const Grid& g = s.grid();
  require_same_grid(g, ops.grid());
  require_positive_density(s.rho);

  CompressibleRates r;
  r.sigma = pressure_field(s, closure);
  const TensorField grad_v = ops.grad_tensor(s.v);
  const TensorField stress = kernels::stress_field(grad_v, r.sigma, cs);
  const ScalarField ed = kernels::dissipation_field(grad_v, cs);
  const VectorField grad_theta = ops.grad(s.theta);
  const VectorField q = kernels::flux_field(grad_theta, cs.e4);
  const VectorField qc = kernels::flux_field(ops.grad(s.c), cs.e5);

  VectorField mass_flux(g), energy_flux(g), conc_flux(g);
  TensorField mom_flux(g);
  VectorField body(g);
  ScalarField body_power(g);
  par::for_each(g.size(), [&](std::size_t p) {
    const double rho = s.rho[p];
    const Vec3 v = s.v.at(p);
    const Mat3 st = stress.at(p);
    const double ea = rho * (0.5 * norm_sq(v) + s.e[p]);
    mass_flux.set(p, rho * v);
    mom_flux.set(p, rho * Mat3::outer(v, v) - st);
    // (S^T v)_j = S_ij v_i
    energy_flux.set(p, ea * v - q.at(p) - transpose(st) * v);
    conc_flux.set(p, s.c[p] * v - qc.at(p));
    const Vec3 f = rho * s.force.at(p);
    body.set(p, f);
    body_power[p] = dot(f, v);
  });

  r.rho = ops.div(mass_flux);
  r.rho *= -1.0;
  r.momentum = body - ops.div_tensor(mom_flux);
  r.total_energy = body_power - ops.div(energy_flux);
  r.concentration = ops.div(conc_flux);
  r.concentration *= -1.0;

  // theta rho D_t s = div q + e~_D, advanced only where the temperature is positive.
  r.entropy = ScalarField(g);
  if (s.theta.min() > 0.0) {
    const ScalarField div_q = ops.div(q);
    const VectorField grad_s = ops.grad(s.s);
    par::for_each(g.size(), [&](std::size_t p) {
      r.entropy[p] = -dot(s.v.at(p), grad_s.at(p)) + (div_q[p] + ed[p]) / (s.rho[p] * s.theta[p]);
    });
  }
  return r;
}

IncompressibleRates rhs_incompressible(const FluidState& s, const ConstitutiveSet& cs,
                                       const Closure& closure, const Operators& ops,
                                       double divergence_tolerance) {
  (void)closure;
  const Grid& g = s.grid();
  require_same_grid(g, ops.grid());
  require_positive_density(s.rho);

  const TensorField grad_v = ops.grad_tensor(s.v);
  {
    const ScalarField dv = ops.div(s.v);
    double gmax = 0.0;
    for (const auto& comp : grad_v.m)
      for (double x : comp) gmax = std::max(gmax, std::fabs(x));
    if (dv.max_abs() > divergence_tolerance * (gmax + 1.0))
      throw Error(errc::divergence_drift,
                  "velocity is not divergence-free (||div v|| = " + std::to_string(dv.max_abs()) +
                      ")");
  }

  // Skew-symmetric advection 1/2 [(v.grad) v + div(v (x) v)].
  TensorField vv(g);
  par::for_each(g.size(), [&](std::size_t p) {
    const Vec3 v = s.v.at(p);
    vv.set(p, Mat3::outer(v, v));
  });
  const VectorField conservative = ops.div_tensor(vv);
  const VectorField visc = ops.div_tensor(kernels::viscous_stress_field(grad_v, cs));

  VectorField w(g);
  par::for_each(g.size(), [&](std::size_t p) {
    const Vec3 v = s.v.at(p);
    const Vec3 adv = 0.5 * (grad_v.at(p) * v + conservative.at(p));
    w.set(p, visc.at(p) + s.rho[p] * (s.force.at(p) - adv));
  });

  IncompressibleRates r;
  const double rmin = s.rho.min(), rmax = s.rho.max();
  if (rmax - rmin <= 1e-14 * rmax) {
    const HelmholtzSplit split = ops.helmholtz_split(w);
    r.velocity = (1.0 / rmin) * split.solenoidal;
    r.sigma = split.potential;
  } else {
    // div(beta grad sigma) = div(beta w), beta = 1/rho, by fixed-point iteration
    // around the constant coefficient beta0.
    ScalarField beta(g), beta_dev(g);
    const double beta0 = 0.5 * (1.0 / rmin + 1.0 / rmax);
    for (std::size_t p = 0; p < g.size(); ++p) {
      beta[p] = 1.0 / s.rho[p];
      beta_dev[p] = beta[p] - beta0;
    }
    const ScalarField rhs0 = ops.div(beta * w);
    ScalarField sigma(g);
    for (int it = 0; it < 200; ++it) {
      ScalarField rhs = rhs0;
      rhs -= ops.div(beta_dev * ops.grad(sigma));
      ScalarField next = ops.inverse_laplacian(rhs);
      next *= 1.0 / beta0;
      const double change = (next - sigma).max_abs();
      sigma = std::move(next);
      if (change <= 1e-13 * std::max(sigma.max_abs(), 1e-300)) break;
    }
    r.velocity = ops.project(beta * (w - ops.grad(sigma)));
    const double m = mean(sigma);
    for (double& x : sigma.data) x -= m;
    r.sigma = std::move(sigma);
  }

  const VectorField grad_rho = ops.grad(s.rho);
  r.rho = advect(s.v, grad_rho);
  r.rho *= -1.0;

  const VectorField grad_theta = ops.grad(s.theta);
  const ScalarField div_q = ops.div(kernels::flux_field(grad_theta, cs.e4));
  const VectorField grad_c = ops.grad(s.c);
  const ScalarField div_qc = ops.div(kernels::flux_field(grad_c, cs.e5));
  r.theta = ScalarField(g);
  r.concentration = ScalarField(g);
  par::for_each(g.size(), [&](std::size_t p) {
    const Vec3 v = s.v.at(p);
    r.theta[p] = -dot(v, grad_theta.at(p)) + div_q[p] / s.rho[p];
    r.concentration[p] = -dot(v, grad_c.at(p)) + div_qc[p];
  });
  return r;
}

CompressibleRates rhs_inviscid_compressible(const FluidState& s, const Closure& closure,
                                            const Operators& ops) {
  return rhs_compressible(s, ConstitutiveSet::inviscid(), closure, ops);
}

IncompressibleRates rhs_inviscid_incompressible(const FluidState& s, const Closure& closure,
                                                const Operators& ops) {
  return rhs_incompressible(s, ConstitutiveSet::inviscid(), closure, ops);
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(SystemKind kind, ConstitutiveSet cs, Closure closure, const Operators& ops)
    : kind_(kind), cs_(std::move(cs)), closure_(closure), ops_(ops) {
  closure_.validate();
  if (kind_ == SystemKind::euler_compressible || kind_ == SystemKind::euler_incompressible)
    cs_ = ConstitutiveSet::inviscid();
}

bool Simulator::incompressible() const {
  return kind_ == SystemKind::incompressible || kind_ == SystemKind::euler_incompressible;
}

FluidState Simulator::prepare(FluidState s) const {
  s.validate();
  require_same_grid(s.grid(), ops_.grid());
  if (closure_.caloric == Closure::Caloric::ideal)
    for (std::size_t p = 0; p < s.e.size(); ++p) s.e[p] = closure_.cv * s.theta[p];
  if (incompressible()) {
    s.v = ops_.project(s.v);
    s.sigma = rhs_incompressible(s, cs_, closure_, ops_, divergence_tolerance).sigma;
  } else {
    s.sigma = pressure_field(s, closure_);
  }
  return s;
}

Simulator::Vars Simulator::pack(const FluidState& s) const {
  if (incompressible())
    return {s.rho, s.v.component(0), s.v.component(1), s.v.component(2), s.theta, s.c};
  const Grid& g = s.grid();
  Vars u(7, ScalarField(g));
  par::for_each(g.size(), [&](std::size_t p) {
    const double rho = s.rho[p];
    const Vec3 v = s.v.at(p);
    u[0][p] = rho;
    for (std::size_t a = 0; a < 3; ++a) u[1 + a][p] = rho * v[a];
    u[4][p] = rho * (0.5 * norm_sq(v) + s.e[p]);
    u[5][p] = s.c[p];
    u[6][p] = s.s[p];
  });
  return u;
}

FluidState Simulator::unpack(const Vars& u, const FluidState& like, double t) const {
  FluidState s = like;
  s.t = t;
  const Grid& g = like.grid();
  const bool ideal = closure_.caloric == Closure::Caloric::ideal;
  if (incompressible()) {
    s.rho = u[0];
    for (std::size_t a = 0; a < 3; ++a) s.v.set_component(a, u[1 + a]);
    s.theta = u[4];
    s.c = u[5];
    if (ideal)
      for (std::size_t p = 0; p < g.size(); ++p) s.e[p] = closure_.cv * s.theta[p];
    return s;
  }
  s.rho = u[0];
  s.c = u[5];
  s.s = u[6];
  par::for_each(g.size(), [&](std::size_t p) {
    const double rho = u[0][p];
    const Vec3 v{u[1][p] / rho, u[2][p] / rho, u[3][p] / rho};
    s.v.set(p, v);
    s.e[p] = u[4][p] / rho - 0.5 * norm_sq(v);
    if (ideal) s.theta[p] = s.e[p] / closure_.cv;
  });
  if (closure_.pressure == Closure::Pressure::barotropic) s.sigma = pressure_field(s, closure_);
  return s;
}

Simulator::Vars Simulator::rates(const FluidState& s) const {
  if (incompressible()) {
    IncompressibleRates r = rhs_incompressible(s, cs_, closure_, ops_, divergence_tolerance);
    return {r.rho,         r.velocity.component(0), r.velocity.component(1),
            r.velocity.component(2), r.theta, r.concentration};
  }
  CompressibleRates r = rhs_compressible(s, cs_, closure_, ops_);
  return {r.rho,          r.momentum.component(0), r.momentum.component(1),
          r.momentum.component(2), r.total_energy, r.concentration, r.entropy};
}

FluidState Simulator::step(const FluidState& s, double dt, Integrator integrator) const {
  if (!(dt > 0.0)) throw Error(errc::invalid_argument, "dt must be positive");
  const Vars u0 = pack(s);
  Vars u;
  if (integrator == Integrator::euler) {
    u = u0;
    axpy(u, dt, rates(s));
  } else {
    const Vars k1 = rates(s);
    Vars u1 = u0;
    axpy(u1, 0.5 * dt, k1);
    const Vars k2 = rates(unpack(u1, s, s.t + 0.5 * dt));
    Vars u2 = u0;
    axpy(u2, 0.5 * dt, k2);
    const Vars k3 = rates(unpack(u2, s, s.t + 0.5 * dt));
    Vars u3 = u0;
    axpy(u3, dt, k3);
    const Vars k4 = rates(unpack(u3, s, s.t + dt));
    u = u0;
    axpy(u, dt / 6.0, k1);
    axpy(u, dt / 3.0, k2);
    axpy(u, dt / 3.0, k3);
    axpy(u, dt / 6.0, k4);
  }
  for (const auto& f : u)
    if (!f.all_finite()) throw Error(errc::non_finite, "instability: non-finite field after step");
  FluidState next = unpack(u, s, s.t + dt);
  require_positive_density(next.rho);
  if (incompressible()) {
    const double d = ops_.div(next.v).max_abs();
    if (d > divergence_abort * (next.v.max_abs() + 1.0))
      throw Error(errc::divergence_drift,
                  "divergence drift after step (||div v|| = " + std::to_string(d) + ")");
    next.sigma = rhs_incompressible(next, cs_, closure_, ops_, divergence_tolerance).sigma;
  }
  return next;
}

double Simulator::stable_dt(const FluidState& s) const {
  const Grid& g = s.grid();
  double hmin = std::numeric_limits<double>::infinity();
  std::size_t dims = 0;
  for (std::size_t a = 0; a < 3; ++a)
    if (g.active(a)) {
      hmin = std::min(hmin, g.spacing(a));
      ++dims;
    }
  const double kmax = kPi / hmin;
  double umax = s.v.max_abs() * std::sqrt(static_cast<double>(dims));
  if (!incompressible()) {
    double c2 = 0.0;
    for (double r : s.rho.data) c2 = std::max(c2, closure_.sound_speed_sq(r));
    umax += std::sqrt(c2);
  }
  const double rho_min = s.rho.min();
  const TensorField grad_v = ops_.grad_tensor(s.v);
  double nu = kernels::max_effective_viscosity(grad_v, cs_) / rho_min;
  {
    const VectorField gt = ops_.grad(s.theta);
    const VectorField gc = ops_.grad(s.c);
    const double cv = closure_.caloric == Closure::Caloric::ideal ? closure_.cv : 1.0;
    for (std::size_t p = 0; p < g.size(); ++p) {
      nu = std::max(nu, cs_.e4.deriv(norm_sq(gt.at(p))) / (rho_min * cv));
      nu = std::max(nu, cs_.e5.deriv(norm_sq(gc.at(p))));
    }
  }
  // RK4 reaches about 2.8 along the imaginary axis and 2.78 along the negative real axis.
  const double dt_adv = umax > 0.0 ? 2.8 / (umax * kmax) : std::numeric_limits<double>::infinity();
  const double dt_visc = nu > 0.0 ? 2.78 / (static_cast<double>(dims) * nu * kmax * kmax)
                                  : std::numeric_limits<double>::infinity();
  return std::min(dt_adv, dt_visc);
}

// ---------------------------------------------------------------------------
// Diagnostics

DiagnosticsRecord diagnostics(const FluidState& s, const ConstitutiveSet& cs,
                              const Operators& ops) {
  const Grid& g = s.grid();
  DiagnosticsRecord d;
  d.t = s.t;
  const TensorField grad_v = ops.grad_tensor(s.v);
  const ScalarField ed = kernels::dissipation_field(grad_v, cs);
  const ScalarField div_v = ops.div(s.v);
  const Vec3 center = box_center(g);

  for (std::size_t a = 0; a < 3; ++a) {
    d.momentum[a] = integral(g, [&](std::size_t p) { return s.rho[p] * s.v.c[a][p]; });
    d.force_total[a] = integral(g, [&](std::size_t p) { return s.rho[p] * s.force.c[a][p]; });
    d.angular_momentum[a] = integral(g, [&](std::size_t p) {
      return cross(g.coord(p) - center, s.rho[p] * s.v.at(p))[a];
    });
    d.force_torque[a] = integral(g, [&](std::size_t p) {
      return cross(g.coord(p) - center, s.rho[p] * s.force.at(p))[a];
    });
  }
  d.kinetic_energy = integral(g, [&](std::size_t p) { return 0.5 * s.rho[p] * norm_sq(s.v.at(p)); });
  d.total_energy = integral(g, [&](std::size_t p) {
    return s.rho[p] * (0.5 * norm_sq(s.v.at(p)) + s.e[p]);
  });
  d.concentration_total = integral(g, [&](std::size_t p) { return s.c[p]; });
  d.mass = integral(g, [&](std::size_t p) { return s.rho[p]; });
  d.dissipation = integral(g, [&](std::size_t p) { return ed[p]; });
  d.pressure_work = integral(g, [&](std::size_t p) { return div_v[p] * s.sigma[p]; });
  d.force_power = integral(g, [&](std::size_t p) {
    return s.rho[p] * dot(s.force.at(p), s.v.at(p));
  });
  d.max_divergence = div_v.max_abs();

  if (s.theta.min() > 0.0) {
    const VectorField gt = ops.grad(s.theta);
    const VectorField q = kernels::flux_field(gt, cs.e4);
    d.entropy_production = integral(g, [&](std::size_t p) {
      const double th = s.theta[p];
      return ed[p] / th + dot(q.at(p), gt.at(p)) / (th * th);
    });
  }
  return d;
}

double central_rate(const std::array<double, 5>& f, double dt) {
  return (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * dt);
}

void fill_budget_residuals(std::vector<DiagnosticsRecord>& rec, double dt) {
  if (rec.size() < 5) return;
  for (std::size_t n = 2; n + 2 < rec.size(); ++n) {
    auto rate = [&](auto get) {
      return central_rate({get(rec[n - 2]), get(rec[n - 1]), get(rec[n]), get(rec[n + 1]),
                           get(rec[n + 2])},
                          dt);
    };
    DiagnosticsRecord& r = rec[n];
    r.energy_budget_residual = rate([](const DiagnosticsRecord& d) { return d.kinetic_energy; }) +
                               r.dissipation - r.pressure_work - r.force_power;
    r.total_energy_budget_residual =
        std::fabs(rate([](const DiagnosticsRecord& d) { return d.total_energy; }) - r.force_power);
    double mom = 0.0, ang = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
      mom = std::max(mom, std::fabs(rate([a](const DiagnosticsRecord& d) { return d.momentum[a]; }) -
                                    r.force_total[a]));
      ang = std::max(ang, std::fabs(rate([a](const DiagnosticsRecord& d) {
                                      return d.angular_momentum[a];
                                    }) -
                                    r.force_torque[a]));
    }
    r.momentum_budget_residual = mom;
    r.angular_momentum_budget_residual = ang;
  }
}

ThermoFields thermo_fields(const FluidState& s) {
  require_positive_density(s.rho);
  if (!(s.theta.min() > 0.0))
    throw Error(errc::nonpositive_temperature, "thermodynamic fields need theta > 0");
  const Grid& g = s.grid();
  ThermoFields t{ScalarField(g), s.s, ScalarField(g)};
  par::for_each(g.size(), [&](std::size_t p) {
    t.h[p] = s.e[p] + s.sigma[p] / s.rho[p];
    t.e_f[p] = s.e[p] - s.theta[p] * s.s[p];
  });
  return t;
}

ThermoResiduals thermo_identity_residuals(const std::array<const FluidState*, 5>& hist, double dt,
                                          const ConstitutiveSet& cs, const Operators& ops) {
  const FluidState& c = *hist[2];
  const Grid& g = c.grid();
  std::array<ThermoFields, 5> tf;
  for (std::size_t k = 0; k < 5; ++k) tf[k] = thermo_fields(*hist[k]);

  // D_t f = five-point time difference + v . grad f, at the middle state.
  auto material = [&](auto field_of) {
    const ScalarField& mid = field_of(std::size_t{2});
    const VectorField grad = ops.grad(mid);
    ScalarField out(g);
    par::for_each(g.size(), [&](std::size_t p) {
      const std::array<double, 5> f{field_of(std::size_t{0})[p], field_of(std::size_t{1})[p], mid[p],
                                    field_of(std::size_t{3})[p], field_of(std::size_t{4})[p]};
      out[p] = central_rate(f, dt) + dot(c.v.at(p), grad.at(p));
    });
    return out;
  };
  const ScalarField dh = material([&](std::size_t k) -> const ScalarField& { return tf[k].h; });
  const ScalarField ds = material([&](std::size_t k) -> const ScalarField& { return tf[k].s; });
  const ScalarField def = material([&](std::size_t k) -> const ScalarField& { return tf[k].e_f; });
  const ScalarField dtheta =
      material([&](std::size_t k) -> const ScalarField& { return hist[k]->theta; });
  const ScalarField dsigma =
      material([&](std::size_t k) -> const ScalarField& { return hist[k]->sigma; });

  const TensorField grad_v = ops.grad_tensor(c.v);
  const TensorField stress = kernels::stress_field(grad_v, c.sigma, cs);
  const ScalarField ed = kernels::dissipation_field(grad_v, cs);
  const ScalarField div_q = ops.div(kernels::flux_field(ops.grad(c.theta), cs.e4));

  ThermoResiduals r;
  for (std::size_t p = 0; p < g.size(); ++p) {
    const double rho = c.rho[p];
    const double heat = div_q[p] + ed[p];
    r.enthalpy = std::max(r.enthalpy, std::fabs(rho * dh[p] - heat - dsigma[p]));
    r.entropy = std::max(r.entropy, std::fabs(c.theta[p] * rho * ds[p] - heat));
    const double work = contract(stress.at(p), grad_v.at(p));
    r.free_energy = std::max(
        r.free_energy, std::fabs(rho * def[p] + tf[2].s[p] * rho * dtheta[p] - work + ed[p]));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Driver

RunResult run(const Simulator& sim, const FluidState& initial, const RunOptions& opts) {
  RunResult res;
  const ConstitutiveSet& cs = sim.constitutive();
  const Operators& ops = sim.operators();
  std::vector<FluidState> window;  // last five states when thermo is on
  FluidState s = initial;
  res.min_stable_dt = std::numeric_limits<double>::infinity();
  res.records.reserve(opts.steps + 1);

  auto observe = [&](std::size_t n) {
    res.records.push_back(diagnostics(s, cs, ops));
    if (opts.observer) opts.observer(n, s);
    if (!opts.thermo) return;
    window.push_back(s);
    if (window.size() > 5) window.erase(window.begin());
    if (window.size() == 5) {
      const ThermoResiduals r = thermo_identity_residuals(
          {&window[0], &window[1], &window[2], &window[3], &window[4]}, opts.dt, cs, ops);
      res.thermo_max.enthalpy = std::max(res.thermo_max.enthalpy, r.enthalpy);
      res.thermo_max.entropy = std::max(res.thermo_max.entropy, r.entropy);
      res.thermo_max.free_energy = std::max(res.thermo_max.free_energy, r.free_energy);
    }
  };

  observe(0);
  for (std::size_t n = 1; n <= opts.steps; ++n) {
    const double limit = sim.stable_dt(s);
    res.min_stable_dt = std::min(res.min_stable_dt, limit);
    if (opts.dt > limit) ++res.cfl_warnings;
    s = sim.step(s, opts.dt, opts.integrator);
    observe(n);
  }
  fill_budget_residuals(res.records, opts.dt);
  res.final_state = std::move(s);
  return res;
}

// ---------------------------------------------------------------------------
// Initial conditions

FluidState taylor_green(const Grid& g, double amplitude) {
  FluidState s = FluidState::rest(g);
  const double kx = 2.0 * kPi / g.lengths[0], ky = 2.0 * kPi / g.lengths[1];
  const double kbar = 0.5 * (kx + ky);
  s.v = sample(g, [&](const Vec3& x) {
    return Vec3{amplitude * ky / kbar * std::sin(kx * x[0]) * std::cos(ky * x[1]),
                -amplitude * kx / kbar * std::cos(kx * x[0]) * std::sin(ky * x[1]), 0.0};
  });
  return s;
}

FluidState shear_layer(const Grid& g, double amplitude) {
  FluidState s = FluidState::rest(g);
  const double k = 2.0 * kPi / g.lengths[1];
  s.v = sample(g, [&](const Vec3& x) { return Vec3{amplitude * std::sin(k * x[1]), 0.0, 0.0}; });
  return s;
}

FluidState heat_mode(const Grid& g, double theta0, double delta, double cv) {
  FluidState s = FluidState::rest(g, cv);
  const double k = 2.0 * kPi / g.lengths[0];
  s.theta = sample(g, [&](const Vec3& x) { return theta0 + delta * std::sin(k * x[0]); });
  s.e = s.theta;
  s.e *= cv;
  return s;
}

FluidState density_bump(const Grid& g, double amplitude) {
  FluidState s = FluidState::rest(g);
  const double k = 2.0 * kPi / g.lengths[0];
  s.rho = sample(g, [&](const Vec3& x) { return 1.0 + amplitude * std::sin(k * x[0]); });
  return s;
}

FluidState gaussian_vortex(const Grid& g, double amplitude, double width) {
  FluidState s = FluidState::rest(g);
  const Vec3 c = box_center(g);
  const double w = width * g.lengths[0];
  // Stream function psi = A w^2 exp(-r^2 / w^2) / 2, v = (d psi/dy, -d psi/dx).
  s.v = sample(g, [&](const Vec3& x) {
    const double dx = x[0] - c[0], dy = x[1] - c[1];
    const double ex = amplitude * std::exp(-(dx * dx + dy * dy) / (w * w));
    return Vec3{-dy * ex, dx * ex, 0.0};
  });
  return s;
}

FluidState smooth_compressible(const Grid& g, double amplitude, std::uint64_t seed, double cv) {
  FluidState s = FluidState::rest(g, cv);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  // Sum of modes with |m_x|, |m_y| <= 2, scaled to unit max norm.
  auto field = [&]() {
    std::vector<std::array<double, 4>> modes;
    for (int mx = 0; mx <= 2; ++mx)
      for (int my = -2; my <= 2; ++my)
        if (mx > 0 || my > 0) modes.push_back({double(mx), double(my), coef(rng), coef(rng)});
    ScalarField f = sample(g, [&](const Vec3& x) {
      double v = 0.0;
      for (const auto& m : modes) {
        const double ph = 2.0 * kPi * (m[0] * x[0] / g.lengths[0] + m[1] * x[1] / g.lengths[1]);
        v += m[2] * std::cos(ph) + m[3] * std::sin(ph);
      }
      return v;
    });
    f *= 1.0 / f.max_abs();
    return f;
  };
  ScalarField r = field(), vx = field(), vy = field(), th = field(), cc = field();
  for (std::size_t p = 0; p < g.size(); ++p) {
    s.rho[p] = 1.0 + amplitude * r[p];
    s.v.set(p, {amplitude * vx[p], amplitude * vy[p], 0.0});
    s.theta[p] = 1.0 + amplitude * th[p];
    s.e[p] = cv * s.theta[p];
    s.c[p] = 1.0 + amplitude * cc[p];
  }
  return s;
}

}  // namespace evf
