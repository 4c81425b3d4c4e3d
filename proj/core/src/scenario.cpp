#include "varorbit/scenario.hpp"

#include "varorbit/expr.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace varorbit {

// ---------------------------------------------------------------------------
// TOML subset

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : s_(text) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = &header(root);
      } else {
        key_value(*table);
      }
      end_of_line();
    }
    return canonical(root);
  }

  // Plain values before subtables, which is the order dump_toml writes.
  static Json canonical(const Json& t) {
    Json out = Json::object();
    for (const auto& [k, v] : t.items())
      if (!v.is_object()) out[k] = v;
    for (const auto& [k, v] : t.items())
      if (v.is_object()) out[k] = canonical(v);
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ScenarioError(std::to_string(line_) + ":" + std::to_string(col_) + ": " + msg);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    const char c = s_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') get();
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') get();
      if (peek() == '\n') get();
      else break;
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_all() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (peek() == '\n' || peek() == '\r') get();
      else break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') get();
    if (eof()) return;
    if (peek() != '\n') fail("expected end of line");
    get();
  }

  static bool bare_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }

  std::string key_part() {
    skip_ws();
    if (peek() == '"') return basic_string();
    if (peek() == '\'') return literal_string();
    std::string k;
    while (!eof() && bare_char(peek())) k += get();
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::vector<std::string> dotted_key() {
    std::vector<std::string> parts{key_part()};
    skip_ws();
    while (peek() == '.') {
      get();
      parts.push_back(key_part());
      skip_ws();
    }
    return parts;
  }

  Json& header(Json& root) {
    get();
    if (peek() == '[') fail("arrays of tables are not supported");
    const auto parts = dotted_key();
    skip_ws();
    if (peek() != ']') fail("expected ']'");
    if (!defined_.insert(path_of(parts)).second) fail("table [" + join(parts) + "] defined twice");
    get();
    Json* t = &root;
    for (const auto& part : parts) {
      Json& next = (*t)[part];
      if (next.is_null()) next = Json::object();
      else if (!next.is_object()) fail("key '" + part + "' is not a table");
      t = &next;
    }
    return *t;
  }

  static std::string join(const std::vector<std::string>& parts) {
    std::string p;
    for (const auto& x : parts) p += (p.empty() ? "" : ".") + x;
    return p;
  }
  static std::string path_of(const std::vector<std::string>& parts) {
    std::string p;
    for (const auto& x : parts) p += "\x1f" + x;
    return p;
  }

  void key_value(Json& table) {
    const auto parts = dotted_key();
    skip_ws();
    if (peek() != '=') fail("expected '='");
    get();
    skip_ws();
    Json v = value();
    Json* t = &table;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      Json& next = (*t)[parts[i]];
      if (next.is_null()) next = Json::object();
      else if (!next.is_object()) fail("key '" + parts[i] + "' is not a table");
      t = &next;
    }
    if (t->contains(parts.back())) fail("duplicate key '" + parts.back() + "'");
    (*t)[parts.back()] = std::move(v);
  }

  Json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') fail("inline tables are not supported");
    std::string tok;
    while (!eof() && (bare_char(peek()) || peek() == '.' || peek() == '+')) tok += get();
    if (tok == "true") return true;
    if (tok == "false") return false;
    return number(tok);
  }

  Json number(std::string tok) {
    if (tok.empty()) fail("expected a value");
    std::string clean;
    for (char ch : tok)
      if (ch != '_') clean += ch;
    const bool neg = clean[0] == '-';
    const std::string body = (clean[0] == '-' || clean[0] == '+') ? clean.substr(1) : clean;
    if (body == "inf") return neg ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    const char* b = clean.data() + (clean[0] == '+' ? 1 : 0);
    const char* e = clean.data() + clean.size();
    if (is_float) {
      double x = 0;
      const auto r = std::from_chars(b, e, x);
      if (r.ec != std::errc() || r.ptr != e) fail("invalid number '" + tok + "'");
      return x;
    }
    std::int64_t x = 0;
    const auto r = std::from_chars(b, e, x);
    if (r.ec != std::errc() || r.ptr != e) fail("invalid value '" + tok + "'");
    return x;
  }

  std::string basic_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = get();
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  std::string literal_string() {
    get();
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '\'') break;
      out += c;
    }
    return out;
  }

  Json array() {
    get();
    Json a = Json::array();
    while (true) {
      skip_all();
      if (peek() == ']') {
        get();
        return a;
      }
      a.push_back(value());
      skip_all();
      if (peek() == ',') {
        get();
        continue;
      }
      if (peek() != ']') fail("expected ',' or ']'");
    }
  }

  const std::string& s_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  std::set<std::string> defined_;
};


bool bare_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string key_text(const std::string& k) { return bare_key(k) ? k : quote(k); }

std::string float_text(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string value_text(const Json& v) {
  switch (v.type()) {
    case Json::value_t::string: return quote(v.get<std::string>());
    case Json::value_t::boolean: return v.get<bool>() ? "true" : "false";
    case Json::value_t::number_integer: return std::to_string(v.get<std::int64_t>());
    case Json::value_t::number_unsigned: return std::to_string(v.get<std::uint64_t>());
    case Json::value_t::number_float: return float_text(v.get<double>());
    case Json::value_t::array: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + value_text(v[i]);
      return out + "]";
    }
    default: throw ScenarioError("cannot write a " + std::string(v.type_name()) + " value as TOML");
  }
}

void dump_table(std::ostringstream& os, const Json& t, const std::string& prefix) {
  for (const auto& [k, v] : t.items())
    if (!v.is_object()) os << key_text(k) << " = " << value_text(v) << "\n";
  for (const auto& [k, v] : t.items()) {
    if (!v.is_object()) continue;
    const std::string path = prefix.empty() ? key_text(k) : prefix + "." + key_text(k);
    os << "\n[" << path << "]\n";
    dump_table(os, v, path);
  }
}

}  // namespace

Json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

std::string dump_toml(const Json& doc) {
  if (!doc.is_object()) throw ScenarioError("a TOML document must be a table");
  std::ostringstream os;
  dump_table(os, doc, "");
  return os.str();
}

// ---------------------------------------------------------------------------
// Scenario

namespace {

using Params = std::map<std::string, double>;

[[noreturn]] void bad(const std::string& where, const std::string& msg) { throw ScenarioError(where + ": " + msg); }

void allow_keys(const Json& t, const std::string& where, std::initializer_list<const char*> keys) {
  if (!t.is_object()) bad(where, "expected a table");
  for (const auto& [k, v] : t.items()) {
    bool ok = false;
    for (const char* a : keys) ok = ok || k == a;
    if (!ok) bad(where, "unknown key '" + k + "'");
  }
}

Expr expr_of(const Json& v, const std::string& where, const std::vector<std::string>& vars, const Params& params) {
  if (v.is_number()) return Expr::constant(v.get<double>());
  if (!v.is_string()) bad(where, "expected a number or an expression string");
  try {
    return Expr::parse(v.get<std::string>(), vars, params);
  } catch (const ExprError& e) {
    bad(where, e.what());
  }
}

double number_of(const Json& v, const std::string& where, const Params& params) {
  if (v.is_boolean()) bad(where, "expected a number");
  const Expr e = expr_of(v, where, {}, params);
  const double x = e(std::span<const double>());
  if (std::isnan(x)) bad(where, "evaluates to nan");
  return x;
}

int int_of(const Json& v, const std::string& where, int min) {
  if (!v.is_number_integer()) bad(where, "expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < min || x > std::numeric_limits<int>::max()) bad(where, "must be an integer >= " + std::to_string(min));
  return static_cast<int>(x);
}

double positive(double x, const std::string& where) {
  if (!(x > 0.0)) bad(where, "must be positive");
  return x;
}

const Json& array_of(const Json& v, const std::string& where, std::size_t size) {
  if (!v.is_array()) bad(where, "expected an array");
  if (v.size() != size) bad(where, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
  return v;
}

Vec vec_of(const Json& v, const std::string& where, int size, const Params& params) {
  array_of(v, where, static_cast<std::size_t>(size));
  Vec out(size);
  for (int i = 0; i < size; ++i) out[i] = number_of(v[static_cast<std::size_t>(i)], where, params);
  return out;
}

std::span<const double> span_of(const Vec& x) { return {x.data(), static_cast<std::size_t>(x.size())}; }

ChartMetric metric_from(std::vector<std::vector<Expr>> g) {
  const int n = static_cast<int>(g.size());
  std::vector<std::vector<std::vector<Expr>>> dg(static_cast<std::size_t>(n));
  bool constant = true;
  for (int k = 0; k < n; ++k) {
    auto& d = dg[static_cast<std::size_t>(k)];
    d.assign(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Expr& e = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = e.derivative(k);
        constant = constant && e.is_constant();
      }
  }
  ChartMetric m;
  m.constant = constant;
  m.value = [g, n](const Vec& x) {
    Mat out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](span_of(x));
    return out;
  };
  m.derivatives = [dg, n](const Vec& x, std::span<Mat> out) {
    for (int k = 0; k < n; ++k) {
      const auto& d = dg[static_cast<std::size_t>(k)];
      Mat& o = out[static_cast<std::size_t>(k)];
      o.resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) o(i, j) = d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](span_of(x));
    }
  };
  return m;
}

ManifoldPtr build_manifold(const Json& t, const Params& params) {
  const std::string where = "[manifold]";
  allow_keys(t, where, {"kind", "coordinates", "periods", "metric", "radius", "beta"});
  const std::string kind = t.contains("kind") ? t["kind"].get<std::string>() : "chart";
  if (kind == "sphere") {
    for (const char* k : {"coordinates", "periods", "metric", "beta"})
      if (t.contains(k)) bad(where, std::string("'") + k + "' does not apply to a sphere");
    const double r = t.contains("radius") ? positive(number_of(t["radius"], where + ".radius", params), where + ".radius")
                                          : 1.0;
    return std::make_shared<Manifold>(Manifold::sphere(r));
  }
  if (t.contains("radius")) bad(where, "'radius' only applies to kind = \"sphere\"");

  std::vector<std::string> names;
  std::vector<std::vector<Expr>> g;
  Vec periods;
  if (kind == "cylinder") {
    // dr² + β(r) dθ² with θ of period 2π.
    for (const char* k : {"coordinates", "periods", "metric"})
      if (t.contains(k)) bad(where, std::string("'") + k + "' does not apply to kind = \"cylinder\"");
    if (!t.contains("beta")) bad(where, "kind = \"cylinder\" needs 'beta', an expression in r");
    names = {"r", "theta"};
    periods = Vec(2);
    periods << 0.0, 2.0 * std::numbers::pi;
    g = {{Expr::constant(1.0), Expr::constant(0.0)},
         {Expr::constant(0.0), expr_of(t["beta"], where + ".beta", names, params)}};
  } else if (kind == "chart") {
    if (t.contains("beta")) bad(where, "'beta' only applies to kind = \"cylinder\"");
    if (!t.contains("coordinates") || !t["coordinates"].is_array() || t["coordinates"].empty())
      bad(where, "'coordinates' must be a non-empty array of names");
    for (const auto& c : t["coordinates"]) {
      if (!c.is_string() || !bare_key(c.get<std::string>())) bad(where + ".coordinates", "invalid coordinate name");
      names.push_back(c.get<std::string>());
    }
    const int n = static_cast<int>(names.size());
    if (n > kMaxDim) bad(where, "at most " + std::to_string(kMaxDim) + " coordinates");
    for (const auto& nm : names)
      if (params.count(nm)) bad(where, "coordinate '" + nm + "' shadows a parameter");
    periods = t.contains("periods") ? vec_of(t["periods"], where + ".periods", n, params) : Vec(Vec::Zero(n));
    if (t.contains("metric")) {
      const Json& rows = array_of(t["metric"], where + ".metric", static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const Json& row = array_of(rows[static_cast<std::size_t>(i)], where + ".metric", static_cast<std::size_t>(n));
        g.emplace_back();
        for (int j = 0; j < n; ++j) g.back().push_back(expr_of(row[static_cast<std::size_t>(j)], where + ".metric", names, params));
      }
    } else {
      for (int i = 0; i < n; ++i) {
        g.emplace_back();
        for (int j = 0; j < n; ++j) g.back().push_back(Expr::constant(i == j ? 1.0 : 0.0));
      }
    }
  } else {
    bad(where + ".kind", "unknown manifold kind '" + kind + "' (chart, cylinder, sphere)");
  }
  try {
    return std::make_shared<Manifold>(Manifold::periodic_chart(names, periods, metric_from(std::move(g))));
  } catch (const GeometryError& e) {
    bad(where, e.what());
  }
}

Lagrangian build_lagrangian(const Json& t, const ManifoldPtr& m, const Params& params) {
  const std::string where = "[lagrangian]";
  allow_keys(t, where, {"theta", "V", "cap_energy", "cap_region"});
  const auto& vars = m->coordinate_names();
  const int n = m->coord_dim();
  OneForm theta;
  if (t.contains("theta")) {
    const Json& a = array_of(t["theta"], where + ".theta", static_cast<std::size_t>(n));
    std::vector<Expr> th, dth;  // dth[i * n + j] = ∂_i θ_j
    bool zero = true;
    for (int j = 0; j < n; ++j) {
      th.push_back(expr_of(a[static_cast<std::size_t>(j)], where + ".theta", vars, params));
      zero = zero && th.back().is_zero();
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) dth.push_back(th[static_cast<std::size_t>(j)].derivative(i));
    if (!zero) {
      theta.value = [th, n](const Vec& x) {
        Vec out(n);
        for (int j = 0; j < n; ++j) out[j] = th[static_cast<std::size_t>(j)](span_of(x));
        return out;
      };
      theta.jacobian = [dth, n](const Vec& x) {
        Mat J(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) J(i, j) = dth[static_cast<std::size_t>(i * n + j)](span_of(x));
        return J;
      };
    }
  }
  ScalarField V;
  if (t.contains("V")) {
    const Expr e = expr_of(t["V"], where + ".V", vars, params);
    if (!e.is_zero()) {
      std::vector<Expr> grad;
      for (int i = 0; i < n; ++i) grad.push_back(e.derivative(i));
      V.value = [e](const Vec& x) { return e(span_of(x)); };
      V.gradient = [grad, n](const Vec& x) {
        Vec out(n);
        for (int i = 0; i < n; ++i) out[i] = grad[static_cast<std::size_t>(i)](span_of(x));
        return out;
      };
    }
  }
  Lagrangian L(m, theta, V);
  if (t.contains("cap_energy")) {
    if (!t.contains("cap_region")) bad(where, "'cap_energy' needs 'cap_region' = [[lo...], [hi...]]");
    const Json& r = array_of(t["cap_region"], where + ".cap_region", 2);
    const Box region{vec_of(r[0], where + ".cap_region", n, params), vec_of(r[1], where + ".cap_region", n, params)};
    L = quad_cap(L, number_of(t["cap_energy"], where + ".cap_energy", params), region);
  } else if (t.contains("cap_region")) {
    bad(where, "'cap_region' without 'cap_energy'");
  }
  return L;
}

std::optional<Box> box_of(const Json& t, const std::string& where, int n, const Params& params) {
  if (!t.contains("lo") && !t.contains("hi")) return std::nullopt;
  if (!t.contains("lo") || !t.contains("hi")) bad(where, "'lo' and 'hi' go together");
  Box b{vec_of(t["lo"], where + ".lo", n, params), vec_of(t["hi"], where + ".hi", n, params)};
  for (int i = 0; i < n; ++i)
    if (!(b.lo[i] < b.hi[i])) bad(where, "'lo' must be below 'hi' in every coordinate");
  return b;
}

const Json& table(const Json& doc, const char* name) {
  static const Json empty = Json::object();
  return doc.contains(name) ? doc[name] : empty;
}

}  // namespace

MinimaxOptions Scenario::minimax_options() const {
  MinimaxOptions o;
  o.max_sweeps = max_sweeps;
  o.sweep_time = sweep_time;
  o.refine_n = refine_n;
  o.certificate = tolerances;
  return o;
}

Loop Scenario::class_seed_loop(const Eigen::VectorXi& winding) const {
  const Manifold& m = *manifold;
  if (!m.is_chart()) throw ScenarioError("[class_min]: class minimization needs a chart manifold");
  if (class_seed.empty()) throw ScenarioError("[class_min]: 'seed' is missing");
  if (winding.size() != m.coord_dim()) throw ScenarioError("class: one winding number per coordinate expected");
  for (int i = 0; i < winding.size(); ++i)
    if (winding[i] != 0 && m.periods()[i] == 0.0)
      throw ScenarioError("class: coordinate '" + m.coordinate_names()[static_cast<std::size_t>(i)] + "' is not periodic");
  std::vector<Expr> e;
  for (const auto& s : class_seed) e.push_back(Expr::parse(s, {"t"}, resolved_parameters));
  return sample_loop(
      [&](double t) {
        Vec x(m.coord_dim());
        for (int i = 0; i < x.size(); ++i)
          x[i] = e[static_cast<std::size_t>(i)](std::span<const double>(&t, 1)) + winding[i] * m.periods()[i] * t;
        return x;
      },
      class_period, n, winding);
}

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  s.doc = parse_toml(text);
  const Json& d = s.doc;
  allow_keys(d, "top level",
             {"name", "seed", "k", "parameters", "manifold", "lagrangian", "shrink", "search", "barrier",
              "discretization", "class_min", "sweepout", "certificate", "output"});
  if (!d.contains("name") || !d["name"].is_string()) bad("top level", "'name' (a string) is required");
  s.name = d["name"].get<std::string>();
  if (d.contains("seed")) s.seed = static_cast<std::uint64_t>(int_of(d["seed"], "seed", 0));

  Params& params = s.resolved_parameters;
  params["pi"] = std::numbers::pi;
  if (d.contains("k")) {
    s.k = number_of(d["k"], "k", params);
    params["k"] = *s.k;
  }
  if (d.contains("parameters")) {
    const Json& p = d["parameters"];
    if (!p.is_object()) bad("[parameters]", "expected a table");
    for (const auto& [k, v] : p.items()) {
      if (k == "pi" || k == "k" || !bare_key(k)) bad("[parameters]", "invalid parameter name '" + k + "'");
      params[k] = number_of(v, "[parameters]." + k, params);
    }
  }

  if (!d.contains("manifold")) bad("top level", "[manifold] is required");
  s.manifold = build_manifold(d["manifold"], params);
  const int n = s.manifold->coord_dim();
  for (const auto& nm : s.manifold->coordinate_names())
    if (nm == "t") bad("[manifold]", "'t' is reserved for the loop parameter");
  s.lagrangian = build_lagrangian(table(d, "lagrangian"), s.manifold, params);

  if (d.contains("shrink")) {
    const std::string w = "[shrink]";
    const Json& t = d["shrink"];
    allow_keys(t, w, {"r0", "r1", "r2", "s_inf", "profile"});
    for (const char* k : {"r0", "r1", "r2"})
      if (!t.contains(k)) bad(w, std::string("'") + k + "' is required");
    const double r0 = number_of(t["r0"], w + ".r0", params), r1 = number_of(t["r1"], w + ".r1", params),
                 r2 = number_of(t["r2"], w + ".r2", params);
    try {
      if (t.contains("profile")) {
        if (t.contains("s_inf")) bad(w, "'profile' and 's_inf' are exclusive");
        const Expr f = expr_of(t["profile"], w + ".profile", {"r"}, params);
        const Expr df = f.derivative(0), ddf = df.derivative(0);
        RadialProfile prof;
        prof.f = [f](double r) { return f(std::span<const double>(&r, 1)); };
        prof.df = [df](double r) { return df(std::span<const double>(&r, 1)); };
        prof.ddf = [ddf](double r) { return ddf(std::span<const double>(&r, 1)); };
        s.shrink = build_profile_shrink(*s.manifold, prof, r0, r1, r2);
      } else {
        const double s_inf = t.contains("s_inf") ? number_of(t["s_inf"], w + ".s_inf", params) : 0.5;
        s.shrink = build_radial_shrink(*s.manifold, r0, r1, r2, s_inf);
      }
    } catch (const ShrinkError& e) {
      bad(w, e.what());
    }
  }

  {
    const std::string w = "[search]";
    const Json& t = table(d, "search");
    allow_keys(t, w, {"lo", "hi", "k_min", "k_max", "tol"});
    s.search_region = box_of(t, w, n, params);
    if (t.contains("k_min")) s.k_min = number_of(t["k_min"], w + ".k_min", params);
    if (t.contains("k_max")) s.k_max = number_of(t["k_max"], w + ".k_max", params);
    if (!(s.k_min < s.k_max)) bad(w, "'k_min' must be below 'k_max'");
    if (t.contains("tol")) s.cu_tol = positive(number_of(t["tol"], w + ".tol", params), w + ".tol");
  }
  {
    const std::string w = "[barrier]";
    const Json& t = table(d, "barrier");
    allow_keys(t, w, {"lo", "hi", "spacing", "radius"});
    s.barrier_box = box_of(t, w, n, params);
    if (t.contains("spacing")) s.cover.spacing = positive(number_of(t["spacing"], w + ".spacing", params), w);
    if (t.contains("radius")) s.cover.radius = positive(number_of(t["radius"], w + ".radius", params), w);
  }
  {
    const std::string w = "[discretization]";
    const Json& t = table(d, "discretization");
    allow_keys(t, w,
               {"n", "refine_n", "nodes", "gradient_tol", "level_tol", "tau", "max_sweeps", "sweep_time",
                "pole_period"});
    if (t.contains("n")) s.n = int_of(t["n"], w + ".n", 8);
    if (t.contains("refine_n")) s.refine_n = int_of(t["refine_n"], w + ".refine_n", 8);
    if (t.contains("nodes")) s.nodes = int_of(t["nodes"], w + ".nodes", 3);
    if (t.contains("max_sweeps")) s.max_sweeps = int_of(t["max_sweeps"], w + ".max_sweeps", 1);
    auto pos = [&](const char* k, double& out) {
      if (t.contains(k)) out = positive(number_of(t[k], w + "." + k, params), w + "." + k);
    };
    if (t.contains("gradient_tol")) {
      double g = 0.0;
      pos("gradient_tol", g);
      s.gradient_tol = g;
    }
    pos("level_tol", s.level_tol);
    pos("tau", s.tau);
    pos("sweep_time", s.sweep_time);
    pos("pole_period", s.pole_period);
  }
  {
    const std::string w = "[class_min]";
    const Json& t = table(d, "class_min");
    allow_keys(t, w, {"seed", "period", "lo", "hi", "starts", "chunks", "chunk_time"});
    if (t.contains("seed")) {
      const Json& a = array_of(t["seed"], w + ".seed", static_cast<std::size_t>(n));
      for (const auto& e : a) {
        expr_of(e, w + ".seed", {"t"}, params);
        s.class_seed.push_back(e.is_string() ? e.get<std::string>() : float_text(e.get<double>()));
      }
    }
    if (t.contains("period")) s.class_period = positive(number_of(t["period"], w + ".period", params), w + ".period");
    s.drift_box = box_of(t, w, n, params);
    if (t.contains("starts")) s.class_starts = int_of(t["starts"], w + ".starts", 1);
    if (t.contains("chunks")) s.class_chunks = int_of(t["chunks"], w + ".chunks", 1);
    if (t.contains("chunk_time"))
      s.class_chunk_time = positive(number_of(t["chunk_time"], w + ".chunk_time", params), w + ".chunk_time");
  }
  {
    const std::string w = "[sweepout]";
    const Json& t = table(d, "sweepout");
    allow_keys(t, w, {"axis", "wobble"});
    if (t.contains("axis")) {
      s.sweep_axis = vec_of(t["axis"], w + ".axis", n, params);
      if (s.sweep_axis.norm() == 0.0) bad(w + ".axis", "must be non-zero");
    }
    if (t.contains("wobble")) s.sweep_wobble = number_of(t["wobble"], w + ".wobble", params);
  }
  {
    const std::string w = "[certificate]";
    const Json& t = table(d, "certificate");
    allow_keys(t, w, {"el_residual", "energy_dev", "closure", "shooting_steps"});
    auto& c = s.tolerances;
    if (t.contains("el_residual")) c.el_residual = positive(number_of(t["el_residual"], w, params), w + ".el_residual");
    if (t.contains("energy_dev")) c.energy_dev = positive(number_of(t["energy_dev"], w, params), w + ".energy_dev");
    if (t.contains("closure")) c.closure = positive(number_of(t["closure"], w, params), w + ".closure");
    if (t.contains("shooting_steps")) c.shooting_steps = int_of(t["shooting_steps"], w + ".shooting_steps", 16);
  }
  {
    const Json& t = table(d, "output");
    allow_keys(t, "[output]", {"dir"});
    if (t.contains("dir")) {
      if (!t["dir"].is_string()) bad("[output].dir", "expected a string");
      s.output_dir = t["dir"].get<std::string>();
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  try {
    return parse_scenario(os.str());
  } catch (const ScenarioError& e) {
    throw ScenarioError(path.string() + ":" + e.what());
  }
}

std::string dump_scenario(const Scenario& s) { return dump_toml(s.doc); }

}  // namespace varorbit
