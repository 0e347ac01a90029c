#include "evarfluid/flowmap.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "evarfluid/error.hpp"

namespace evf {

namespace {

constexpr double kPi = std::numbers::pi;

double kron(std::size_t i, std::size_t j) { return i == j ? 1.0 : 0.0; }

double rel(double abs_err, double scale) { return abs_err / std::max(1.0, std::fabs(scale)); }

// Contractions of the metric package used by the Lagrangian representations.
struct MetricForms {
  double trace_form = 0.0;   // g'_ij g^ij
  double strain_form = 0.0;  // g'_ij g'_kl g^ik g^jl
  double grad_form = 0.0;    // (g'_i . g'_j)(g^i . g^j)
};

MetricForms metric_forms(const MetricData& m) {
  MetricForms f;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      f.trace_form += m.g_dot_lower(i, j) * m.g_upper(i, j);
      f.grad_form += dot(m.g_dot[i], m.g_dot[j]) * dot(m.g_dual[i], m.g_dual[j]);
      for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t l = 0; l < 3; ++l)
          f.strain_form += m.g_dot_lower(i, j) * m.g_dot_lower(k, l) * m.g_upper(i, k) *
                           m.g_upper(j, l);
    }
  return f;
}

double metric_jacobian(const FlowMap& fm, const Vec3& xi, double t) {
  const Mat3 f = fm.jacobian(xi, t);
  return std::sqrt(det(transpose(f) * f));
}

}  // namespace

// ---------------------------------------------------------------------------
// Catalog

FlowMap builtin_map(MapKind kind, double parameter, const Box& reference) {
  FlowMap fm;
  fm.reference_domain = reference;
  fm.name = to_string(kind);
  switch (kind) {
    case MapKind::identity:
      fm.map = [](const Vec3& xi, double) { return xi; };
      fm.jacobian = [](const Vec3&, double) { return Mat3::identity(); };
      fm.velocity = [](const Vec3&, double) { return Vec3{}; };
      fm.velocity_jacobian = [](const Vec3&, double) { return Mat3{}; };
      fm.eulerian_velocity_gradient = [](const Vec3&, double) { return Mat3{}; };
      break;
    case MapKind::shear: {
      const double r = parameter;
      fm.map = [r](const Vec3& xi, double t) { return Vec3{xi[0] + r * t * xi[1], xi[1], xi[2]}; };
      fm.jacobian = [r](const Vec3&, double t) { return Mat3{1, r * t, 0, 0, 1, 0, 0, 0, 1}; };
      fm.velocity = [r](const Vec3& xi, double) { return Vec3{r * xi[1], 0, 0}; };
      fm.velocity_jacobian = [r](const Vec3&, double) { return Mat3{0, r, 0, 0, 0, 0, 0, 0, 0}; };
      // v(x) = (r x2, 0, 0)
      fm.eulerian_velocity_gradient = [r](const Vec3&, double) {
        return Mat3{0, r, 0, 0, 0, 0, 0, 0, 0};
      };
      break;
    }
    case MapKind::rotation: {
      const double w = parameter;
      fm.map = [w](const Vec3& xi, double t) {
        const double c = std::cos(w * t), s = std::sin(w * t);
        return Vec3{c * xi[0] - s * xi[1], s * xi[0] + c * xi[1], xi[2]};
      };
      fm.jacobian = [w](const Vec3&, double t) {
        const double c = std::cos(w * t), s = std::sin(w * t);
        return Mat3{c, -s, 0, s, c, 0, 0, 0, 1};
      };
      fm.velocity = [w](const Vec3& xi, double t) {
        const double c = std::cos(w * t), s = std::sin(w * t);
        return Vec3{w * (-s * xi[0] - c * xi[1]), w * (c * xi[0] - s * xi[1]), 0};
      };
      fm.velocity_jacobian = [w](const Vec3&, double t) {
        const double c = std::cos(w * t), s = std::sin(w * t);
        return Mat3{-w * s, -w * c, 0, w * c, -w * s, 0, 0, 0, 0};
      };
      // v(x) = w (-x2, x1, 0)
      fm.eulerian_velocity_gradient = [w](const Vec3&, double) {
        return Mat3{0, -w, 0, w, 0, 0, 0, 0, 0};
      };
      break;
    }
    case MapKind::dilation: {
      const double a = parameter;
      fm.map = [a](const Vec3& xi, double t) { return std::exp(a * t) * xi; };
      fm.jacobian = [a](const Vec3&, double t) { return Mat3::diagonal(std::exp(a * t)); };
      fm.velocity = [a](const Vec3& xi, double t) { return (a * std::exp(a * t)) * xi; };
      fm.velocity_jacobian = [a](const Vec3&, double t) {
        return Mat3::diagonal(a * std::exp(a * t));
      };
      // v(x) = a x
      fm.eulerian_velocity_gradient = [a](const Vec3&, double) { return Mat3::diagonal(a); };
      break;
    }
  }
  return fm;
}

MapKind map_kind_from_string(const std::string& name) {
  if (name == "identity") return MapKind::identity;
  if (name == "shear") return MapKind::shear;
  if (name == "rotation") return MapKind::rotation;
  if (name == "dilation") return MapKind::dilation;
  throw Error(errc::invalid_argument, "unknown flow map '" + name + "'");
}

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::identity: return "identity";
    case MapKind::shear: return "shear";
    case MapKind::rotation: return "rotation";
    case MapKind::dilation: return "dilation";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Metric

MetricData metric_at(const FlowMap& fm, const Vec3& xi, double t, double det_tolerance) {
  MetricData m;
  const Mat3 f = fm.jacobian(xi, t);
  const Mat3 fv = fm.velocity_jacobian(xi, t);
  for (std::size_t i = 0; i < 3; ++i) {
    m.g[i] = f.col(i);
    m.g_dot[i] = fv.col(i);
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      m.g_lower(i, j) = dot(m.g[i], m.g[j]);
      m.g_dot_lower(i, j) = dot(m.g_dot[i], m.g[j]) + dot(m.g[i], m.g_dot[j]);
    }
  const double d = det(m.g_lower);
  if (!(d > det_tolerance)) {
    std::ostringstream os;
    os << "flow map '" << fm.name << "' is not locally invertible at t=" << t
       << " (det g_ij = " << d << ")";
    throw Error(errc::singular_metric, os.str());
  }
  m.g_upper = inverse(m.g_lower);
  for (std::size_t i = 0; i < 3; ++i) {
    Vec3 gi{};
    for (std::size_t j = 0; j < 3; ++j) gi += m.g_upper(i, j) * m.g[j];
    m.g_dual[i] = gi;
  }
  m.jacobian = std::sqrt(d);
  return m;
}

Mat3 eulerian_gradient(const FlowMap& fm, const Vec3& xi, double t) {
  if (fm.eulerian_velocity_gradient) return fm.eulerian_velocity_gradient(fm.map(xi, t), t);
  return fm.velocity_jacobian(xi, t) * inverse(fm.jacobian(xi, t));
}

double time_derivative(const std::function<double(double)>& f, double t, double h) {
  return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h);
}

double MetricResiduals::max_algebraic() const {
  return std::max({inverse, kronecker, dual, strain, contraction_forms});
}

MetricResiduals verify_metric_identities(const FlowMap& fm, const Vec3& xi, double t) {
  const MetricData m = metric_at(fm, xi, t);
  const Mat3 f = fm.jacobian(xi, t);
  const Mat3 grad = eulerian_gradient(fm, xi, t);
  const auto dec = decompose_gradient(grad);
  MetricResiduals r;

  r.inverse = max_abs(m.g_upper * m.g_lower - Mat3::identity());
  r.kronecker = max_abs(f * m.g_upper * transpose(f) - Mat3::identity());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      r.dual = std::max(r.dual, std::fabs(dot(m.g_dual[i], m.g[j]) - kron(i, j)));

  double rate_metric = 0.0;
  for (std::size_t k = 0; k < 3; ++k) rate_metric += dot(m.g_dot[k], m.g_dual[k]);
  rate_metric *= m.jacobian;
  const double h = 1e-3 * fm.characteristic_time;
  const double rate_fd =
      time_derivative([&](double s) { return metric_jacobian(fm, xi, s); }, t, h);
  r.jacobian_rate = rel(std::fabs(rate_fd - rate_metric), rate_metric);

  const Mat3 strain_pullback = 2.0 * (transpose(f) * dec.d_plus * f);
  r.strain = rel(max_abs(m.g_dot_lower - strain_pullback), max_abs(strain_pullback));

  const MetricForms forms = metric_forms(m);
  const double div_metric = 0.5 * forms.trace_form;
  const double div_sq_metric = 0.25 * forms.trace_form * forms.trace_form;
  const double dplus_metric = 0.25 * forms.strain_form;
  const double dminus_metric = forms.grad_form - 0.25 * forms.strain_form;
  const double div = dec.divergence;
  r.contraction_forms = std::max({rel(std::fabs(div_metric - div), div),
                            rel(std::fabs(div_sq_metric - div * div), div * div),
                            rel(std::fabs(dplus_metric - frobenius_sq(dec.d_plus)),
                                frobenius_sq(dec.d_plus)),
                            rel(std::fabs(dminus_metric - frobenius_sq(dec.d_minus)),
                                frobenius_sq(dec.d_minus))});
  return r;
}

// ---------------------------------------------------------------------------
// Pullbacks

ScalarFn ScalarFn::constant(double c) {
  return {[c](const Vec3&, double) { return c; }, [](const Vec3&, double) { return Vec3{}; }};
}

std::string to_string(PullbackKind kind) {
  switch (kind) {
    case PullbackKind::W1: return "W1";
    case PullbackKind::D1: return "D1";
    case PullbackKind::D2: return "D2";
    case PullbackKind::D3: return "D3";
    case PullbackKind::D4: return "D4";
    case PullbackKind::D5: return "D5";
  }
  return "?";
}

double PullbackPair::abs_err() const { return std::fabs(lhs - rhs); }
double PullbackPair::rel_err() const { return abs_err() / std::max(std::fabs(lhs), 1.0); }
double PullbackPair::rel_err_refined() const {
  return std::fabs(lhs_refined - rhs_refined) / std::max(std::fabs(lhs_refined), 1.0);
}

namespace {

// Eulerian density at x~(xi, t) times det(dx~/dxi).
double eulerian_integrand(const FlowMap& fm, double t, PullbackKind which,
                          const ConstitutiveSet& cs, const PullbackFields& fields,
                          const Vec3& xi) {
  const Vec3 x = fm.map(xi, t);
  const double jac = det(fm.jacobian(xi, t));
  const auto dec = decompose_gradient(eulerian_gradient(fm, xi, t));
  double density = 0.0;
  switch (which) {
    case PullbackKind::W1: density = dec.divergence * fields.sigma.value(x, t); break;
    case PullbackKind::D1: density = 0.5 * cs.e1(frobenius_sq(dec.d_plus)); break;
    case PullbackKind::D2: density = 0.5 * cs.e2(dec.divergence * dec.divergence); break;
    case PullbackKind::D3: density = 0.5 * cs.e3(frobenius_sq(dec.d_minus)); break;
    case PullbackKind::D4: density = 0.5 * cs.e4(norm_sq(fields.theta.grad(x, t))); break;
    case PullbackKind::D5:
      density = 0.5 * cs.e5(norm_sq(fields.concentration.grad(x, t)));
      break;
  }
  return density * jac;
}

// Metric expression K(.) at xi times J.
double lagrangian_integrand(const FlowMap& fm, double t, PullbackKind which,
                            const ConstitutiveSet& cs, const PullbackFields& fields,
                            const Vec3& xi) {
  const MetricData m = metric_at(fm, xi, t);
  const MetricForms forms = metric_forms(m);
  auto gradient_form = [&](const ScalarFn& f) {
    // d f(x~(xi,t)) / d xi_i = g_i . grad f
    const Vec3 gx = f.grad(fm.map(xi, t), t);
    std::array<double, 3> dxi{};
    for (std::size_t i = 0; i < 3; ++i) dxi[i] = dot(m.g[i], gx);
    double s = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) s += m.g_upper(i, j) * dxi[i] * dxi[j];
    return std::max(0.0, s);
  };
  double k = 0.0;
  switch (which) {
    case PullbackKind::W1:
      k = 0.5 * forms.trace_form * fields.sigma.value(fm.map(xi, t), t);
      break;
    case PullbackKind::D1: k = 0.5 * cs.e1(std::max(0.0, 0.25 * forms.strain_form)); break;
    case PullbackKind::D2:
      k = 0.5 * cs.e2(0.25 * forms.trace_form * forms.trace_form);
      break;
    case PullbackKind::D3:
      k = 0.5 * cs.e3(std::max(0.0, forms.grad_form - 0.25 * forms.strain_form));
      break;
    case PullbackKind::D4: k = 0.5 * cs.e4(gradient_form(fields.theta)); break;
    case PullbackKind::D5: k = 0.5 * cs.e5(gradient_form(fields.concentration)); break;
  }
  return k * m.jacobian;
}

}  // namespace

PullbackPair pullback_energy_pair(const FlowMap& fm, double t, PullbackKind which,
                                  const QuadratureRule& q, const ConstitutiveSet& cs,
                                  const PullbackFields& fields, double tolerance) {
  auto lhs_of = [&](const QuadratureRule& rule) {
    return rule.integrate(
        [&](const Vec3& xi) { return eulerian_integrand(fm, t, which, cs, fields, xi); });
  };
  auto rhs_of = [&](const QuadratureRule& rule) {
    return rule.integrate(
        [&](const Vec3& xi) { return lagrangian_integrand(fm, t, which, cs, fields, xi); });
  };
  PullbackPair p;
  p.lhs = lhs_of(q);
  p.rhs = rhs_of(q);
  const QuadratureRule fine = q.refined();
  p.lhs_refined = lhs_of(fine);
  p.rhs_refined = rhs_of(fine);
  p.quadrature_estimate = std::fabs(p.lhs - p.lhs_refined);
  p.quadrature_warning = p.quadrature_estimate / std::max(std::fabs(p.lhs), 1.0) > tolerance;
  return p;
}

DivergenceIdentity divergence_identity_pair(const FlowMap& fm, double t, const ScalarFn& f,
                                            const QuadratureRule& q) {
  const double h = 1e-3 * fm.characteristic_time;
  DivergenceIdentity d;
  d.lhs = q.integrate([&](const Vec3& xi) {
    const double div = trace(eulerian_gradient(fm, xi, t));
    return f.value(fm.map(xi, t), t) * div * det(fm.jacobian(xi, t));
  });
  d.rhs_metric = q.integrate([&](const Vec3& xi) {
    const MetricData m = metric_at(fm, xi, t);
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += dot(m.g_dot[j], m.g_dual[j]);
    return f.value(fm.map(xi, t), t) * s * m.jacobian;
  });
  d.rhs_rate = q.integrate([&](const Vec3& xi) {
    const double rate = time_derivative([&](double s) { return metric_jacobian(fm, xi, s); }, t, h);
    return f.value(fm.map(xi, t), t) * rate;
  });
  return d;
}

double mass_pullback(const FlowMap& fm, const std::function<double(const Vec3&)>& rho0,
                     const Vec3& xi, double t) {
  return rho0(xi) / metric_at(fm, xi, t).jacobian;
}

double continuity_residual(const FlowMap& fm, const std::function<double(const Vec3&)>& rho0,
                           const Vec3& xi, double t, double dt) {
  const double rho = mass_pullback(fm, rho0, xi, t);
  const double orbit_rate =
      (mass_pullback(fm, rho0, xi, t + dt) - mass_pullback(fm, rho0, xi, t - dt)) / (2.0 * dt);
  const double div = trace(eulerian_gradient(fm, xi, t));
  return orbit_rate + div * rho;
}

// ---------------------------------------------------------------------------
// Action variation

Perturbation Perturbation::bump(const Box& box, double horizon, const Vec3& direction,
                                const Vec3& curvature_direction) {
  if (!(horizon > 0.0)) throw Error(errc::invalid_argument, "perturbation horizon must be > 0");
  const Vec3 lo = box.lo;
  const Vec3 ext = box.hi - box.lo;
  // b(xi) = 16 prod s_i (1 - s_i), max 1/4 at the box centre.
  auto shape = [lo, ext](const Vec3& xi) {
    double b = 16.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double s = (xi[i] - lo[i]) / ext[i];
      b *= s * (1.0 - s);
    }
    return b;
  };
  auto shape_grad = [lo, ext](const Vec3& xi) {
    std::array<double, 3> f{}, df{};
    for (std::size_t i = 0; i < 3; ++i) {
      const double s = (xi[i] - lo[i]) / ext[i];
      f[i] = s * (1.0 - s);
      df[i] = (1.0 - 2.0 * s) / ext[i];
    }
    return 16.0 * Vec3{df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]};
  };
  const double om = kPi / horizon;
  Perturbation p;
  p.y = [=](const Vec3& xi, double t) { return (std::sin(om * t) * shape(xi)) * direction; };
  p.y_t = [=](const Vec3& xi, double t) {
    return (om * std::cos(om * t) * shape(xi)) * direction;
  };
  p.y_jacobian = [=](const Vec3& xi, double t) {
    return std::sin(om * t) * Mat3::outer(direction, shape_grad(xi));
  };
  const Vec3 cd = curvature_direction;
  // sin^2 so that y_t and w_t are not L2-orthogonal in time; otherwise the
  // eps^2 term of the central difference cancels.
  p.w = [=](const Vec3& xi, double t) {
    const double s = std::sin(om * t);
    return (s * s * shape(xi)) * cd;
  };
  p.w_t = [=](const Vec3& xi, double t) { return (om * std::sin(2 * om * t) * shape(xi)) * cd; };
  p.w_jacobian = [=](const Vec3& xi, double t) {
    const double s = std::sin(om * t);
    return (s * s) * Mat3::outer(cd, shape_grad(xi));
  };
  return p;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double dn = static_cast<double>(n);
  return (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
}

ActionVariationResult action_variation_check(const FlowMap& fm, const Perturbation& pert,
                                             const std::function<double(const Vec3&)>& rho0,
                                             const QuadratureRule& q,
                                             const ActionVariationOptions& opts) {
  const double horizon = opts.horizon;
  const GaussLegendre1D time_rule(opts.time_nodes, 0.0, horizon);

  // Admissibility: y and w vanish at both ends of the time interval.
  for (std::size_t n = 0; n < q.size(); n += 7) {
    const Vec3 xi = q.node(n);
    for (double tt : {0.0, horizon}) {
      const double mag = norm(pert.y(xi, tt)) + (pert.w ? norm(pert.w(xi, tt)) : 0.0);
      if (mag > 1e-12)
        throw Error(errc::invalid_argument,
                    "perturbation must vanish at t = 0 and t = T (admissible variation)");
    }
  }

  const auto* potential = opts.chemical_potential ? &*opts.chemical_potential : nullptr;
  auto space_time = [&](auto&& integrand) {
    double s = 0.0;
    for (std::size_t k = 0; k < time_rule.size(); ++k) {
      const double t = time_rule.nodes[k];
      s += time_rule.weights[k] * q.integrate([&](const Vec3& xi) { return integrand(xi, t); });
    }
    return s;
  };

  auto action = [&](double eps) {
    return space_time([&](const Vec3& xi, double t) {
      Vec3 xt = fm.velocity(xi, t) + eps * pert.y_t(xi, t);
      if (pert.w_t) xt += (eps * eps) * pert.w_t(xi, t);
      double density = -0.5 * rho0(xi) * norm_sq(xt);
      if (potential) {
        Mat3 f = fm.jacobian(xi, t) + eps * pert.y_jacobian(xi, t);
        if (pert.w_jacobian) f += (eps * eps) * pert.w_jacobian(xi, t);
        const double jac = det(f);
        if (!(jac > 0.0))
          throw Error(errc::singular_metric, "perturbed flow map is not invertible");
        density += potential->eval(rho0(xi) / jac) * jac;
      }
      return density;
    });
  };

  const double ht = 1e-3 * horizon;
  const Vec3 ext = fm.reference_domain.hi - fm.reference_domain.lo;
  ActionVariationResult res;
  res.force_pairing = space_time([&](const Vec3& xi, double t) {
    Vec3 accel;
    for (std::size_t c = 0; c < 3; ++c)
      accel[c] = time_derivative([&](double s) { return fm.velocity(xi, s)[c]; }, t, ht);
    const Vec3 y = pert.y(xi, t);
    double value = rho0(xi) * dot(accel, y);
    if (potential) {
      // grad_x P = F^{-T} grad_xi P, with P = rho p'(rho) - p(rho), rho = rho0 / J.
      auto pressure = [&](const Vec3& p) {
        const double rho = rho0(p) / det(fm.jacobian(p, t));
        return rho * potential->deriv(rho) - potential->eval(rho);
      };
      Vec3 grad_xi;
      for (std::size_t c = 0; c < 3; ++c) {
        const double h = 1e-3 * ext[c];
        grad_xi[c] = time_derivative(
            [&](double s) {
              Vec3 p = xi;
              p[c] = s;
              return pressure(p);
            },
            xi[c], h);
      }
      const Mat3 f = fm.jacobian(xi, t);
      value += dot(transpose(inverse(f)) * grad_xi, y) * det(f);
    }
    return value;
  });

  for (double eps : opts.epsilons) {
    const double d = (action(eps) - action(-eps)) / (2.0 * eps);
    res.epsilons.push_back(eps);
    res.derivatives.push_back(d);
    res.residuals.push_back(std::fabs(d - res.force_pairing));
  }
  res.fitted_slope = loglog_slope(res.epsilons, res.residuals);
  return res;
}

}  // namespace evf
