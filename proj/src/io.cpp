#include "triblock/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "triblock/error.hpp"

namespace triblock {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json to_json(const MassPair& m) { return Json::array({m.m1, m.m2}); }

Json to_json(const GammaMatrix& g) { return Json{{"g11", g.g11}, {"g22", g.g22}, {"g12", g.g12}}; }

Json geometry_json(const MassPair& m) {
  Json j;
  j["m1"] = m.m1;
  j["m2"] = m.m2;
  j["perimeter"] = perimeter(m);
  const auto grad = perimeter_gradient(m);
  j["perimeter_gradient"] = Json::array({number(grad[0]), number(grad[1])});
  if (!m.is_double()) {
    j["kind"] = "single";
    j["radius"] = std::sqrt(m.total() / std::numbers::pi);
    return j;
  }
  const BubbleGeometry g = solve_geometry(m);
  j["kind"] = "double";
  j["theta0"] = g.theta0;
  j["theta1"] = g.theta1;
  j["theta2"] = g.theta2;
  j["r0"] = number(g.r0);
  j["r1"] = g.r1;
  j["r2"] = g.r2;
  j["h"] = g.h;
  j["swapped"] = g.swapped;
  Json res = Json::array();
  for (double r : geometry_residuals(g, m)) res.push_back(r);
  j["residuals"] = res;
  return j;
}

Json to_json(const Configuration& c) {
  Json cl = Json::array();
  for (const Cluster& k : c.clusters) cl.push_back({{"kind", to_string(k.kind)}, {"m1", k.mass.m1}, {"m2", k.mass.m2}});
  return Json{{"clusters", cl},
              {"total", to_json(c.total)},
              {"doubles", c.count(ClusterKind::double_bubble)},
              {"singles1", c.count(ClusterKind::single_type1)},
              {"singles2", c.count(ClusterKind::single_type2)}};
}

Json to_json(const Thresholds& t) {
  auto pair = [](const std::array<double, 2>& a) { return Json::array({number(a[0]), number(a[1])}); };
  return Json{{"M_star", pair(t.M_star)},           {"m_s_bar", pair(t.m_s_bar)},
              {"m_star", pair(t.m_star)},           {"inflection", pair(t.inflection)},
              {"m_d_bar", pair(t.m_d_bar)},         {"gamma12_star", number(t.gamma12_star)},
              {"gamma12_star_singles", number(t.gamma12_star_singles)}};
}

Json to_json(const RegimeReport& r) {
  return Json{{"thresholds", to_json(r.th)},
              {"M_bar", Json::array({number(r.M_bar[0]), number(r.M_bar[1])})},
              {"coexistence_hypothesis", r.coexistence_hypothesis},
              {"coexistence_case_condition", r.coexistence_case_condition},
              {"all_singles_hypothesis", r.all_singles_hypothesis},
              {"one_double_hypothesis", r.one_double_hypothesis},
              {"guarantee", r.guarantee},
              {"doubles", r.doubles},
              {"singles1", r.singles1},
              {"singles2", r.singles2},
              {"consistent", r.consistent},
              {"energy", number(r.energy)},
              {"configuration", to_json(r.config)}};
}

Json to_json(const Layout& l) {
  Json pts = Json::array(), ms = Json::array();
  for (const TorusPoint& p : l.points) pts.push_back(Json::array({p.x, p.y}));
  for (const MassPair& m : l.masses) ms.push_back(to_json(m));
  return Json{{"points", pts}, {"masses", ms}};
}

Json to_json(const F0Result& f) {
  return Json{{"value", number(f.value)}, {"std_error", number(f.std_error)}, {"fk", number(f.fk)},
              {"self", number(f.self)},   {"R0", number(f.R0)},               {"masses_pass_conditions", f.masses_pass_conditions}};
}

Json to_json(const EnergyParts& e) {
  return Json{{"gradient", e.gradient}, {"well", e.well}, {"nonlocal", e.nonlocal}, {"total", e.total()}};
}

Json to_json(const Components& c) {
  Json j = to_json(c.config);
  Json centers = Json::array();
  for (const TorusPoint& p : c.centers) centers.push_back(Json::array({p.x, p.y}));
  j["centers"] = centers;
  return j;
}

MassPair mass_pair_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorKind::invalid_input, "a mass pair must be an array of two numbers");
  }
  MassPair m{j[0].get<double>(), j[1].get<double>()};
  validate(m);
  return m;
}

Configuration configuration_from_json(const Json& j) {
  const Json& src = j.contains("configuration") ? j["configuration"] : j;
  if (!src.contains("clusters") || !src["clusters"].is_array()) fail(ErrorKind::invalid_input, "configuration needs a clusters array");
  Configuration c;
  for (const Json& k : src["clusters"]) {
    if (!k.contains("m1") || !k.contains("m2")) fail(ErrorKind::invalid_input, "cluster needs m1 and m2");
    const MassPair m{k["m1"].get<double>(), k["m2"].get<double>()};
    validate(m);
    Cluster cl = Cluster::from_mass(m);
    if (k.contains("kind") && cluster_kind_from_string(k["kind"].get<std::string>()) != cl.kind) {
      fail(ErrorKind::invalid_input, "cluster kind does not match its masses");
    }
    c.clusters.push_back(cl);
    c.total.m1 += m.m1;
    c.total.m2 += m.m2;
  }
  return c;
}

Layout layout_from_json(const Json& j) {
  const Json& src = j.contains("layout") ? j["layout"] : j;
  if (!src.contains("points") || !src.contains("masses")) fail(ErrorKind::invalid_input, "layout needs points and masses");
  Layout l;
  for (const Json& p : src["points"]) {
    if (!p.is_array() || p.size() != 2) fail(ErrorKind::invalid_input, "a point must be an array of two numbers");
    l.points.push_back(TorusPoint::canonical(p[0].get<double>(), p[1].get<double>()));
  }
  for (const Json& m : src["masses"]) l.masses.push_back(mass_pair_from_json(m));
  l.validate();
  return l;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) fail(ErrorKind::io, "cannot allocate digest context");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) == 1 && EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) fail(ErrorKind::io, "sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s += hex[md[i] >> 4];
    s += hex[md[i] & 15];
  }
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text(path)); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::io, "cannot open " + path);
  os << text;
  if (!os) fail(ErrorKind::io, "failed writing " + path);
}

Csv::Csv(std::vector<std::string> header) : width_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ += (i ? "," : "") + header[i];
  out_ += "\n";
}

void Csv::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) fail(ErrorKind::invalid_input, "csv row width does not match header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const std::string& c = cells[i];
    const bool quote = c.find_first_of(",\"\n") != std::string::npos;
    std::string cell = c;
    if (quote) {
      cell = "\"";
      for (char ch : c) cell += ch == '"' ? std::string("\"\"") : std::string(1, ch);
      cell += "\"";
    }
    out_ += (i ? "," : "") + cell;
  }
  out_ += "\n";
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trace_csv(const std::vector<TraceRow>& trace, const std::string& config_hash) {
  Csv csv({"step", "total", "perimeter_proxy", "gradient", "well", "nonlocal", "mass1", "mass2", "config_hash"});
  for (const TraceRow& t : trace) {
    csv.row({std::to_string(t.step), fmt(t.energy.total()), fmt((t.energy.gradient + t.energy.well) / kSurfaceTension),
             fmt(t.energy.gradient), fmt(t.energy.well), fmt(t.energy.nonlocal), fmt(t.mass1), fmt(t.mass2), config_hash});
  }
  return csv.str();
}

}  // namespace triblock
