#include "evarfluid/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "evarfluid/error.hpp"
#include "evarfluid/io.hpp"

namespace evf {

// ---------------------------------------------------------------------------
// Values

std::string ConfigValue::render() const {
  switch (kind) {
    case Kind::string: return "\"" + text + "\"";
    case Kind::number: return io::format_double(number);
    case Kind::boolean: return boolean ? "true" : "false";
    case Kind::array: {
      std::string s = "[";
      for (std::size_t i = 0; i < items.size(); ++i) s += (i ? ", " : "") + items[i].render();
      return s + "]";
    }
    case Kind::table: {
      std::string s = "{";
      for (std::size_t i = 0; i < table.size(); ++i)
        s += (i ? ", " : "") + table[i].first + " = " + table[i].second.render();
      return s + "}";
    }
  }
  return "";
}

namespace {

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

class Parser {
 public:
  Parser(const std::string& text, std::string origin) : src_(text), origin_(std::move(origin)) {}

  ConfigMap parse_document() {
    ConfigMap out;
    std::string section;
    while (!at_end()) {
      skip_blank();
      if (at_end()) break;
      if (peek() == '\n') {
        advance();
        continue;
      }
      if (peek() == '#') {
        skip_comment();
        continue;
      }
      if (peek() == '[') {
        advance();
        skip_blank();
        section = read_key("section name");
        skip_blank();
        expect(']');
        end_of_line();
        continue;
      }
      const int kl = line_, kc = col_;
      const std::string key = read_key("key");
      skip_blank();
      expect('=');
      skip_blank();
      ConfigValue v = parse_value();
      end_of_line();
      insert(out, section.empty() ? key : section + "." + key, std::move(v), kl, kc);
    }
    return out;
  }

  ConfigValue parse_single() {
    skip_blank();
    ConfigValue v = parse_value();
    skip_blank();
    if (!at_end()) fail("unexpected trailing characters");
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(line_, col_, msg); }
  [[noreturn]] void fail_at(int line, int col, const std::string& msg) const {
    throw Error(errc::parse_error,
                origin_ + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return at_end() ? '\0' : src_[pos_]; }
  char advance() {
    const char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void skip_blank() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
  }
  void skip_comment() {
    while (!at_end() && peek() != '\n') advance();
  }
  void skip_space_and_newlines() {
    for (;;) {
      skip_blank();
      if (peek() == '#') skip_comment();
      if (peek() == '\n') {
        advance();
        continue;
      }
      return;
    }
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    advance();
  }
  void end_of_line() {
    skip_blank();
    if (peek() == '#') skip_comment();
    if (at_end()) return;
    if (peek() != '\n') fail("expected end of line");
    advance();
  }
  std::string read_key(const char* what) {
    std::string k;
    while (!at_end() && is_key_char(peek())) k += advance();
    if (k.empty()) fail(std::string("expected ") + what);
    return k;
  }

  ConfigValue parse_value() {
    ConfigValue v;
    v.line = line_;
    v.column = col_;
    const char c = peek();
    if (c == '"') {
      advance();
      v.kind = ConfigValue::Kind::string;
      for (;;) {
        if (at_end() || peek() == '\n') fail_at(v.line, v.column, "unterminated string");
        char ch = advance();
        if (ch == '"') break;
        if (ch == '\\') {
          if (at_end()) fail("unterminated escape");
          const char e = advance();
          switch (e) {
            case 'n': ch = '\n'; break;
            case 't': ch = '\t'; break;
            case '"': ch = '"'; break;
            case '\\': ch = '\\'; break;
            default: fail(std::string("unknown escape '\\") + e + "'");
          }
        }
        v.text += ch;
      }
      return v;
    }
    if (c == '[') {
      advance();
      v.kind = ConfigValue::Kind::array;
      skip_space_and_newlines();
      if (peek() == ']') {
        advance();
        return v;
      }
      for (;;) {
        skip_space_and_newlines();
        v.items.push_back(parse_value());
        skip_space_and_newlines();
        if (peek() == ',') {
          advance();
          skip_space_and_newlines();
          if (peek() == ']') {
            advance();
            return v;
          }
          continue;
        }
        if (peek() == ']') {
          advance();
          return v;
        }
        fail("expected ',' or ']' in array");
      }
    }
    if (c == '{') {
      advance();
      v.kind = ConfigValue::Kind::table;
      skip_blank();
      if (peek() == '}') {
        advance();
        return v;
      }
      for (;;) {
        skip_blank();
        const int kl = line_, kc = col_;
        std::string key = read_key("key in inline table");
        for (const auto& [k, _] : v.table)
          if (k == key) fail_at(kl, kc, "duplicate key '" + key + "' in inline table");
        skip_blank();
        expect('=');
        skip_blank();
        v.table.emplace_back(std::move(key), parse_value());
        skip_blank();
        if (peek() == ',') {
          advance();
          continue;
        }
        if (peek() == '}') {
          advance();
          return v;
        }
        fail("expected ',' or '}' in inline table");
      }
    }
    std::string word;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' ||
                         peek() == '-' || peek() == '+' || peek() == '_'))
      word += advance();
    if (word.empty()) fail("expected a value");
    if (word == "true" || word == "false") {
      v.kind = ConfigValue::Kind::boolean;
      v.boolean = word == "true";
      v.text = word;
      return v;
    }
    char* end = nullptr;
    const double x = std::strtod(word.c_str(), &end);
    if (end != word.c_str() + word.size() || !std::isfinite(x))
      fail_at(v.line, v.column, "invalid value '" + word + "' (strings must be quoted)");
    v.kind = ConfigValue::Kind::number;
    v.number = x;
    v.text = word;
    return v;
  }

  void insert(ConfigMap& out, const std::string& key, ConfigValue v, int line, int col) {
    if (v.kind == ConfigValue::Kind::table) {
      for (auto& [k, sub] : v.table) insert(out, key + "." + k, sub, sub.line, sub.column);
      return;
    }
    if (out.count(key)) fail_at(line, col, "duplicate key '" + key + "'");
    out.emplace(key, std::move(v));
  }

  const std::string& src_;
  std::string origin_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

[[noreturn]] void invalid(const std::string& key, const std::string& msg) {
  throw Error(errc::validation_error, "invalid value for '" + key + "': " + msg);
}

struct Reader {
  const ConfigMap& m;

  const ConfigValue* find(const std::string& key) const {
    auto it = m.find(key);
    return it == m.end() ? nullptr : &it->second;
  }
  double number(const std::string& key, double fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::number) invalid(key, "expected a number");
    return v->number;
  }
  double positive(const std::string& key, double fallback) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) invalid(key, "must be positive");
    return x;
  }
  std::size_t count(const std::string& key, std::size_t fallback, std::size_t min = 1) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    return to_count(key, *v, min);
  }
  static std::size_t to_count(const std::string& key, const ConfigValue& v, std::size_t min) {
    if (v.kind != ConfigValue::Kind::number || v.number < static_cast<double>(min) ||
        std::floor(v.number) != v.number || v.number > 1e9)
      invalid(key, "expected an integer >= " + std::to_string(min));
    return static_cast<std::size_t>(v.number);
  }
  std::string string(const std::string& key, const std::string& fallback) const {
    const ConfigValue* v = find(key);
    if (!v) return fallback;
    if (v->kind != ConfigValue::Kind::string) invalid(key, "expected a string");
    return v->text;
  }
  std::vector<double> numbers(const std::string& key) const {
    const ConfigValue* v = find(key);
    if (!v) return {};
    if (v->kind != ConfigValue::Kind::array) invalid(key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& it : v->items) {
      if (it.kind != ConfigValue::Kind::number) invalid(key, "expected an array of numbers");
      out.push_back(it.number);
    }
    return out;
  }
};

ConstitutiveFunction make_member(const std::string& key, const std::string& family, double mu,
                                 double p) {
  try {
    if (family == "zero") return ConstitutiveFunction::zero();
    if (family == "newtonian") return ConstitutiveFunction::newtonian(mu);
    if (family == "power_law") return ConstitutiveFunction::power_law(mu, p);
  } catch (const Error& e) {
    std::string detail = e.what();
    const std::string prefix = "invalid constitutive parameters: ";
    if (detail.rfind(prefix, 0) == 0) detail = detail.substr(prefix.size());
    throw Error(errc::validation_error, "invalid constitutive parameters for '" + key + "': " + detail);
  }
  invalid(key + ".family", "unknown family '" + family + "' (newtonian, power_law, zero)");
}

std::vector<std::string> build_known_keys() {
  std::vector<std::string> k = {"command", "scenario", "system", "dt", "t_end", "integrator",
                                "backend", "output", "seed", "threads", "snapshot_every",
                                "grid.n", "grid.nx", "grid.ny", "grid.nz", "grid.lengths",
                                "grid.lx", "grid.ly", "grid.lz",
                                "constitutive.family", "constitutive.mu", "constitutive.p",
                                "constitutive.bulk", "constitutive.kappa",
                                "constitutive.diffusivity",
                                "closure.pressure", "closure.a", "closure.gamma", "closure.caloric",
                                "closure.cv",
                                "initial.amplitude", "initial.density", "initial.theta",
                                "initial.delta", "initial.width", "initial.force",
                                "verify.probes", "verify.metric_points", "verify.quadrature_nodes",
                                "verify.map_parameter", "verify.conservation_steps"};
  for (int j = 1; j <= 5; ++j)
    for (const char* f : {"family", "mu", "p"})
      k.push_back("constitutive.e" + std::to_string(j) + "." + f);
  for (const char* t :
       {"metric_algebraic", "metric_rate", "pullback", "pullback_refinement", "pullback_floor",
        "euler_lagrange", "order_low", "order_high", "constrained", "action_slope", "newtonian",
        "stress_order_low", "stress_order_high", "mass_drift", "momentum_drift", "energy_drift",
        "energy_budget", "thermo_order", "divergence", "integration_by_parts",
        "angular_momentum_budget"})
    k.push_back(std::string("tolerances.") + t);
  std::sort(k.begin(), k.end());
  return k;
}

RunConfig build(ConfigMap m, const std::vector<std::string>& overrides) {
  for (const std::string& raw : overrides) {
    std::string s = raw;
    if (s.rfind("--", 0) == 0) s = s.substr(2);
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Error(errc::validation_error, "override '" + raw + "' must look like --key=value");
    const std::string key = s.substr(0, eq);
    ConfigValue v = parse_override_value(s.substr(eq + 1));
    if (v.kind == ConfigValue::Kind::table)
      throw Error(errc::validation_error, "override '" + raw + "': inline tables are not accepted");
    m[key] = std::move(v);
  }
  const auto& known = known_config_keys();
  for (const auto& [key, v] : m)
    if (!std::binary_search(known.begin(), known.end(), key)) {
      std::string where;
      if (v.line > 0) where = " (line " + std::to_string(v.line) + ")";
      throw Error(errc::validation_error, "unknown key '" + key + "'" + where);
    }

  const Reader r{m};
  RunConfig c;
  c.command = r.string("command", "");
  static const std::set<std::string> commands = {"verify-metric", "verify-variational",
                                                 "verify-thermo", "simulate"};
  if (c.command.empty()) throw Error(errc::validation_error, "missing key 'command'");
  if (!commands.count(c.command)) invalid("command", "unknown command '" + c.command + "'");
  c.scenario = r.string("scenario", c.scenario);
  static const std::set<std::string> scenarios = {"taylor-green", "shear-layer", "heat",
                                                  "density-bump", "vortex", "smooth"};
  if (!scenarios.count(c.scenario))
    invalid("scenario", "expected taylor-green, shear-layer, heat, density-bump, vortex or smooth");
  try {
    c.system = system_kind_from_string(r.string("system", to_string(c.system)));
  } catch (const Error&) {
    invalid("system", "expected compressible, incompressible, euler-compressible or euler-incompressible");
  }
  try {
    c.integrator = integrator_from_string(r.string("integrator", to_string(c.integrator)));
  } catch (const Error&) {
    invalid("integrator", "expected rk4 or euler");
  }
  try {
    c.backend = backend_from_string(r.string("backend", to_string(c.backend)));
  } catch (const Error&) {
    invalid("backend", "expected spectral or fd4");
  }
  c.dt = r.positive("dt", c.dt);
  c.t_end = r.positive("t_end", c.t_end);
  c.output = r.string("output", c.output.string());
  {
    const double seed = r.number("seed", 1.0);
    if (seed < 0 || std::floor(seed) != seed || seed > 9.007199254740992e15)
      invalid("seed", "expected a nonnegative integer");
    c.seed = static_cast<std::uint64_t>(seed);
  }
  c.threads = static_cast<int>(r.count("threads", 0, 0));
  c.snapshot_every = r.count("snapshot_every", 0, 0);

  // grid
  std::array<std::size_t, 3> dims{64, 64, 1};
  std::array<double, 3> lengths{1.0, 1.0, 1.0};
  if (const ConfigValue* n = r.find("grid.n")) {
    if (n->kind == ConfigValue::Kind::number) {
      dims[0] = dims[1] = Reader::to_count("grid.n", *n, 1);
    } else if (n->kind == ConfigValue::Kind::array && (n->items.size() == 2 || n->items.size() == 3)) {
      for (std::size_t a = 0; a < n->items.size(); ++a) dims[a] = Reader::to_count("grid.n", n->items[a], 1);
    } else {
      invalid("grid.n", "expected an integer or an array of 2 or 3 integers");
    }
  }
  dims[0] = r.count("grid.nx", dims[0]);
  dims[1] = r.count("grid.ny", dims[1]);
  dims[2] = r.count("grid.nz", dims[2]);
  if (const auto l = r.numbers("grid.lengths"); !l.empty()) {
    if (l.size() != 2 && l.size() != 3) invalid("grid.lengths", "expected 2 or 3 lengths");
    for (std::size_t a = 0; a < l.size(); ++a) lengths[a] = l[a];
  }
  lengths[0] = r.number("grid.lx", lengths[0]);
  lengths[1] = r.number("grid.ly", lengths[1]);
  lengths[2] = r.number("grid.lz", lengths[2]);
  c.grid.dims = dims;
  c.grid.lengths = lengths;
  try {
    c.grid.validate();
  } catch (const Error& e) {
    invalid("grid", e.what());
  }

  // constitutive set: shorthand for the strain/vorticity members, then per-member tables
  {
    const std::string family = r.string("constitutive.family", "newtonian");
    const double mu = r.number("constitutive.mu", 0.01);
    const double p = r.number("constitutive.p", 1.0);
    const auto key = r.find("constitutive.mu") ? std::string("constitutive.mu")
                                               : std::string("constitutive");
    c.constitutive.e1 = make_member(key, family, mu, p);
    c.constitutive.e3 = make_member(key, family, mu, p);
    const double bulk = r.number("constitutive.bulk", 0.0);
    const double kappa = r.number("constitutive.kappa", 0.0);
    const double diff = r.number("constitutive.diffusivity", 0.0);
    c.constitutive.e2 = bulk == 0.0 ? ConstitutiveFunction::zero()
                                    : make_member("constitutive.bulk", "newtonian", bulk, 1.0);
    c.constitutive.e4 = kappa == 0.0 ? ConstitutiveFunction::zero()
                                     : make_member("constitutive.kappa", "newtonian", kappa, 1.0);
    c.constitutive.e5 = diff == 0.0 ? ConstitutiveFunction::zero()
                                    : make_member("constitutive.diffusivity", "newtonian", diff, 1.0);
    ConstitutiveFunction* members[5] = {&c.constitutive.e1, &c.constitutive.e2, &c.constitutive.e3,
                                        &c.constitutive.e4, &c.constitutive.e5};
    for (int j = 1; j <= 5; ++j) {
      const std::string base = "constitutive.e" + std::to_string(j);
      if (!r.find(base + ".family") && !r.find(base + ".mu") && !r.find(base + ".p")) continue;
      *members[j - 1] = make_member(base, r.string(base + ".family", "newtonian"),
                                    r.number(base + ".mu", 0.0), r.number(base + ".p", 1.0));
    }
  }

  // closure
  {
    const std::string pressure = r.string("closure.pressure", "barotropic");
    if (pressure == "barotropic")
      c.closure.pressure = Closure::Pressure::barotropic;
    else if (pressure == "prescribed")
      c.closure.pressure = Closure::Pressure::prescribed;
    else
      invalid("closure.pressure", "expected barotropic or prescribed");
    const std::string caloric = r.string("closure.caloric", "ideal");
    if (caloric == "ideal")
      c.closure.caloric = Closure::Caloric::ideal;
    else if (caloric == "none")
      c.closure.caloric = Closure::Caloric::none;
    else
      invalid("closure.caloric", "expected ideal or none");
    c.closure.a = r.number("closure.a", c.closure.a);
    c.closure.gamma = r.number("closure.gamma", c.closure.gamma);
    c.closure.cv = r.number("closure.cv", c.closure.cv);
    try {
      c.closure.validate();
    } catch (const Error& e) {
      invalid("closure", e.what());
    }
  }

  // initial condition
  c.initial.amplitude = r.number("initial.amplitude", c.initial.amplitude);
  c.initial.density = r.number("initial.density", c.initial.density);
  c.initial.theta = r.number("initial.theta", c.initial.theta);
  c.initial.delta = r.number("initial.delta", c.initial.delta);
  c.initial.width = r.positive("initial.width", c.initial.width);
  if (const auto f = r.numbers("initial.force"); !f.empty()) {
    if (f.size() > 3) invalid("initial.force", "expected up to 3 components");
    for (std::size_t a = 0; a < f.size(); ++a) c.initial.force[a] = f[a];
  }

  // verification knobs and tolerances
  c.probes = r.count("verify.probes", c.probes);
  c.metric_points = r.count("verify.metric_points", c.metric_points);
  c.quadrature_nodes = r.count("verify.quadrature_nodes", c.quadrature_nodes, 2);
  c.map_parameter = r.number("verify.map_parameter", c.map_parameter);
  c.conservation_steps = r.count("verify.conservation_steps", c.conservation_steps, 5);
  Tolerances& t = c.tol;
  auto tol = [&](const char* name, double& field) {
    field = r.positive(std::string("tolerances.") + name, field);
  };
  tol("metric_algebraic", t.metric_algebraic);
  tol("metric_rate", t.metric_rate);
  tol("pullback", t.pullback);
  tol("pullback_refinement", t.pullback_refinement);
  tol("pullback_floor", t.pullback_floor);
  tol("euler_lagrange", t.euler_lagrange);
  tol("order_low", t.order_low);
  tol("order_high", t.order_high);
  tol("constrained", t.constrained);
  tol("action_slope", t.action_slope);
  tol("newtonian", t.newtonian);
  tol("stress_order_low", t.stress_order_low);
  tol("stress_order_high", t.stress_order_high);
  tol("mass_drift", t.mass_drift);
  tol("momentum_drift", t.momentum_drift);
  tol("energy_drift", t.energy_drift);
  tol("energy_budget", t.energy_budget);
  tol("thermo_order", t.thermo_order);
  tol("divergence", t.divergence);
  tol("integration_by_parts", t.integration_by_parts);
  tol("angular_momentum_budget", t.angular_momentum_budget);

  for (const auto& [key, v] : m) c.echo.emplace_back(key, v.render());
  return c;
}

}  // namespace

ConfigMap parse_config_text(const std::string& text, const std::string& origin) {
  return Parser(text, origin).parse_document();
}

ConfigValue parse_override_value(const std::string& text) {
  try {
    return Parser(text, "<flag>").parse_single();
  } catch (const Error&) {
    ConfigValue v;
    v.kind = ConfigValue::Kind::string;
    v.text = text;
    return v;
  }
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = build_known_keys();
  return keys;
}

std::size_t RunConfig::steps() const {
  return static_cast<std::size_t>(std::max(1.0, std::round(t_end / dt)));
}

RunConfig parse_config_string(const std::string& text, const std::vector<std::string>& overrides,
                              const std::string& origin) {
  return build(parse_config_text(text, origin), overrides);
}

RunConfig parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  if (path.empty()) return build({}, overrides);
  std::ifstream in(path);
  if (!in) throw Error(errc::io_error, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), overrides, path.string());
}

std::string describe(const ConstitutiveFunction& f) {
  std::string s = f.name();
  if (f.is_zero()) return s;
  s += "(";
  bool first = true;
  for (const auto& [k, v] : f.params()) {
    if (k == "r_floor") continue;
    s += (first ? "" : ", ") + k + "=" + io::format_double(v);
    first = false;
  }
  return s + ")";
}

std::string describe(const ConstitutiveSet& cs) {
  return "e1=" + describe(cs.e1) + " e2=" + describe(cs.e2) + " e3=" + describe(cs.e3) +
         " e4=" + describe(cs.e4) + " e5=" + describe(cs.e5);
}

std::string describe(const Closure& c) {
  std::string s = c.pressure == Closure::Pressure::barotropic
                      ? "barotropic(a=" + io::format_double(c.a) + ", gamma=" +
                            io::format_double(c.gamma) + ")"
                      : std::string("prescribed");
  s += c.caloric == Closure::Caloric::ideal ? " ideal(cv=" + io::format_double(c.cv) + ")"
                                            : std::string(" caloric=none");
  return s;
}

}  // namespace evf
