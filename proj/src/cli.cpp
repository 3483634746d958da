#include "triblock/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "triblock/error.hpp"
#include "triblock/torus_green.hpp"

namespace triblock::cli {

namespace {

using P = ParamType;
constexpr double kInf = std::numeric_limits<double>::infinity();

Param num(std::string name, double def, std::string help, std::optional<double> lo = std::nullopt,
          std::optional<double> hi = std::nullopt) {
  return {std::move(name), P::number, def, std::move(help), lo, hi, {}};
}
Param integer(std::string name, long long def, std::string help, std::optional<double> lo = std::nullopt,
              std::optional<double> hi = std::nullopt) {
  return {std::move(name), P::integer, def, std::move(help), lo, hi, {}};
}
Param str(std::string name, std::string def, std::string help, std::vector<std::string> choices = {}) {
  return {std::move(name), P::string, def, std::move(help), std::nullopt, std::nullopt, std::move(choices)};
}
Param flag(std::string name, bool def, std::string help) {
  return {std::move(name), P::boolean, def, std::move(help), std::nullopt, std::nullopt, {}};
}
Param list(std::string name, std::vector<double> def, std::string help, std::optional<double> lo = std::nullopt) {
  return {std::move(name), P::number_list, Json(def), std::move(help), lo, std::nullopt, {}};
}

Param out_param() { return str("out", "out", "output directory"); }
Param gamma_param() { return list("gamma", {1.0, 1.0, 0.0}, "interaction matrix as g11,g22,g12"); }

const std::map<std::string, std::vector<Param>>& schemas() {
  static const std::map<std::string, std::vector<Param>> s = {
      {"bubble",
       {num("m1", 1.0, "area of lobe 1", 0.0), num("m2", 1.0, "area of lobe 2", 0.0), gamma_param(), out_param()}},
      {"partition",
       {num("M1", 1.0, "total mass of species 1", 0.0), num("M2", 1.0, "total mass of species 2", 0.0), gamma_param(),
        integer("restarts", 16, "random restarts per cell", 0, 10000),
        integer("max_doubles", -1, "cap on double bubbles, negative for the finiteness bound", -1, 100000),
        integer("max_iterations", 4000, "quasi-Newton iterations per start", 1, 1000000),
        integer("seed", 20240607, "random seed", 0),
        num("oracle_delta", 0.0, "quantum of the exhaustive oracle, 0 disables it", 0.0),
        integer("oracle_max_parts", 0, "part cap of the oracle, 0 for the default", 0, 1000),
        num("balance_tol", 1e-6, "tolerance of the derivative balance check", 0.0), out_param()}},
      {"green",
       {num("x", 0.5, "x coordinate"), num("y", 0.5, "y coordinate"),
        integer("grid", 0, "also tabulate an N×N grid, 0 disables it", 0, 2048), out_param()}},
      {"place",
       {list("masses", {}, "cluster masses as m1,m2,m1,m2,...", 0.0),
        str("input", "", "partition.json whose configuration supplies the masses"), gamma_param(),
        integer("restarts", 8, "random restarts", 1, 10000), integer("seed", 1, "random seed", 0),
        integer("max_iterations", 5000, "iterations per restart", 1, 1000000),
        num("gradient_tolerance", 1e-10, "convergence tolerance on the gradient norm", 0.0),
        flag("f0", true, "also evaluate F0 at the optimum"),
        integer("qmc_log2", 12, "log2 of Sobol points per replicate", 4, 22),
        integer("qmc_replicates", 4, "randomized replicates", 2, 256),
        integer("qmc_panels", 4, "Gauss panels per boundary piece", 1, 64), out_param()}},
      {"relax",
       {integer("n", 256, "grid size", 16, 4096), num("eta", 0.04, "droplet scale", 0.0, 0.5),
        num("epsilon", 0.0, "interface width, 0 selects 0.5/n", 0.0), num("dt", 0.0, "time step, 0 selects epsilon/n", 0.0),
        integer("steps", 1000, "time steps", 0, 100000000), integer("trace_every", 10, "trace interval", 1),
        num("M1", 4.0, "scaled mass of species 1", 0.0), num("M2", 4.0, "scaled mass of species 2", 0.0), gamma_param(),
        str("init", "noise", "initial data", {"noise", "layout"}),
        num("noise_amplitude", 1e-2, "amplitude of uniform noise", 0.0, 1.0),
        str("layout", "", "layout.json seeding droplets when init is layout"), integer("seed", 1, "random seed", 0),
        str("well", "standard", "double-well potential", {"standard", "printed"}),
        num("threshold", 0.5, "threshold level for the sharp evaluation", 0.0, 1.0), out_param()}},
      {"compare",
       {num("M1", 20.0, "total mass of species 1", 0.0), num("M2", 20.0, "total mass of species 2", 0.0), gamma_param(),
        integer("n", 512, "grid size", 16, 4096), num("eta", 0.04, "droplet scale", 0.0, 0.5),
        num("epsilon_cells", 0.5, "interface width in grid cells", 0.0),
        num("dt_factor", 32.0, "time step in units of epsilon/n", 0.0), integer("steps", 8000, "time steps", 0, 100000000),
        integer("trace_every", 100, "trace interval", 1),
        num("mass_perturbation", 0.15, "relative perturbation of seeded cluster masses", 0.0, 0.99),
        num("position_jitter", 0.03, "largest seed offset from the optimal centers", 0.0, 0.5),
        integer("seed", 1, "random seed", 0), integer("restarts", 2, "partition restarts", 0, 10000),
        flag("f0", true, "evaluate the next-order prediction"), integer("qmc_log2", 12, "log2 of Sobol points", 4, 22),
        integer("qmc_replicates", 4, "randomized replicates", 2, 256),
        num("tolerance", 0.15, "relative energy tolerance reported as within_tolerance", 0.0), out_param()}},
      {"regime-sweep",
       {list("M1", {}, "species 1 masses", 0.0), list("M2", {}, "species 2 masses", 0.0),
        list("g12", {}, "cross interaction values", 0.0), num("g11", 1.0, "species 1 self interaction", 0.0),
        num("g22", 1.0, "species 2 self interaction", 0.0), integer("restarts", 2, "partition restarts", 0, 10000),
        integer("seed", 20240607, "random seed", 0), out_param()}},
  };
  return s;
}

const char* type_name(P t) {
  switch (t) {
    case P::number: return "number";
    case P::integer: return "integer";
    case P::string: return "string";
    case P::boolean: return "boolean";
    case P::number_list: return "list of numbers";
  }
  return "?";
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  fail(ErrorKind::invalid_input, "parameter " + key + ": " + why);
}

double parse_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    bad(key, "'" + s + "' is not a number");
  }
  if (used != s.size()) bad(key, "'" + s + "' is not a number");
  return v;
}

Json from_flag(const Param& p, const std::string& s) {
  switch (p.type) {
    case P::number: return parse_double(p.name, s);
    case P::integer: {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(s, &used);
      } catch (const std::exception&) {
        bad(p.name, "'" + s + "' is not an integer");
      }
      if (used != s.size()) bad(p.name, "'" + s + "' is not an integer");
      return v;
    }
    case P::string: return s;
    case P::boolean:
      if (s == "true" || s == "1") return true;
      if (s == "false" || s == "0") return false;
      bad(p.name, "'" + s + "' is not a boolean");
    case P::number_list: {
      Json a = Json::array();
      std::stringstream ss(s);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) a.push_back(parse_double(p.name, item));
      }
      return a;
    }
  }
  return nullptr;
}

void check_value(const Param& p, const Json& v) {
  auto in_range = [&](double x) {
    if (!std::isfinite(x)) bad(p.name, "must be finite");
    if (p.min && x < *p.min) bad(p.name, fmt(x) + " is below " + fmt(*p.min));
    if (p.max && x > *p.max) bad(p.name, fmt(x) + " is above " + fmt(*p.max));
  };
  switch (p.type) {
    case P::number:
      if (!v.is_number()) bad(p.name, std::string("expected ") + type_name(p.type));
      in_range(v.get<double>());
      break;
    case P::integer:
      if (!v.is_number_integer()) bad(p.name, std::string("expected ") + type_name(p.type));
      in_range(static_cast<double>(v.get<long long>()));
      break;
    case P::string:
      if (!v.is_string()) bad(p.name, std::string("expected ") + type_name(p.type));
      if (!p.choices.empty() && std::find(p.choices.begin(), p.choices.end(), v.get<std::string>()) == p.choices.end()) {
        bad(p.name, "'" + v.get<std::string>() + "' is not a valid choice");
      }
      break;
    case P::boolean:
      if (!v.is_boolean()) bad(p.name, std::string("expected ") + type_name(p.type));
      break;
    case P::number_list:
      if (!v.is_array()) bad(p.name, std::string("expected ") + type_name(p.type));
      for (const Json& x : v) {
        if (!x.is_number()) bad(p.name, "list entries must be numbers");
        in_range(x.get<double>());
      }
      break;
  }
}

// typed accessors on a resolved config
double getd(const Json& c, const char* k) { return c.at(k).get<double>(); }
long long geti(const Json& c, const char* k) { return c.at(k).get<long long>(); }
std::string gets(const Json& c, const char* k) { return c.at(k).get<std::string>(); }
bool getb(const Json& c, const char* k) { return c.at(k).get<bool>(); }
std::vector<double> getl(const Json& c, const char* k) { return c.at(k).get<std::vector<double>>(); }

GammaMatrix gamma_of(const Json& c) {
  const std::vector<double> g = getl(c, "gamma");
  if (g.size() != 3) bad("gamma", "expected three values g11,g22,g12");
  GammaMatrix m;
  m.g11 = g[0];
  m.g22 = g[1];
  m.g12 = g[2];
  m.validate();
  return m;
}

/// Collects artifacts written into the output directory.
class Artifacts {
 public:
  Artifacts(std::filesystem::path dir, std::string hash) : dir_(std::move(dir)), hash_(std::move(hash)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::io, "cannot create " + dir_.string() + ": " + ec.message());
  }
  const std::string& hash() const { return hash_; }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void text(const std::string& name, const std::string& content) {
    write_text(path(name), content);
    record(name);
  }
  void json(const std::string& name, Json j) {
    j["config_hash"] = hash_;
    text(name, j.dump(2) + "\n");
  }
  void pgm(const std::string& name, const Grid& g) {
    write_pgm(path(name), g, 0.0, 1.0, "config_hash " + hash_);
    record(name);
  }
  Json list() const { return entries_; }

 private:
  void record(const std::string& name) {
    entries_.push_back({{"path", name}, {"sha256", sha256_file(path(name))}});
  }
  std::filesystem::path dir_;
  std::string hash_;
  Json entries_ = Json::array();
};

Json check_list(const std::vector<ConditionCheck>& checks) {
  Json a = Json::array();
  for (const ConditionCheck& c : checks) a.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return a;
}

void cmd_bubble(const Json& c, Artifacts& art, std::ostream& out) {
  const MassPair m{getd(c, "m1"), getd(c, "m2")};
  validate(m);
  if (m.total() <= 0.0) bad("m1", "at least one mass must be positive");
  const GammaMatrix g = gamma_of(c);
  Json j = geometry_json(m);
  const Evaluation ev = e0_eval(m, g);
  j["e0"] = ev.value;
  j["e0_gradient"] = Json::array({number(ev.d1), number(ev.d2)});
  j["gamma"] = to_json(g);
  art.json("bubble.json", j);
  j["config_hash"] = art.hash();
  out << j.dump(2) << "\n";
}

void cmd_partition(const Json& c, Artifacts& art, std::ostream& out) {
  const MassPair M{getd(c, "M1"), getd(c, "M2")};
  const GammaMatrix g = gamma_of(c);
  SearchBudget b;
  b.restarts = static_cast<int>(geti(c, "restarts"));
  b.max_doubles = static_cast<int>(geti(c, "max_doubles"));
  b.max_iterations = static_cast<int>(geti(c, "max_iterations"));
  b.seed = static_cast<std::uint64_t>(geti(c, "seed"));
  const RegimeReport r = classify_regime(M, g, b);
  Json j;
  j["M"] = to_json(M);
  j["gamma"] = to_json(g);
  j["energy"] = number(r.energy);
  j["configuration"] = to_json(r.config);
  j["regime"] = to_json(r);
  j["regime"].erase("configuration");
  j["checks"] = check_list(check_necessary_conditions(r.config, g, r.th, getd(c, "balance_tol")));
  const double delta = getd(c, "oracle_delta");
  if (delta > 0.0) {
    const OracleResult o = ebar_oracle(M, g, delta, static_cast<int>(geti(c, "oracle_max_parts")));
    const double qb = quantization_bound(r.config, g, delta);
    j["oracle"] = {{"delta", delta},
                   {"energy", number(o.energy)},
                   {"states", o.states},
                   {"configuration", to_json(o.config)},
                   {"quantization_bound", number(qb)},
                   {"ebar_minus_oracle", number(r.energy - o.energy)},
                   {"within_bound", r.energy <= o.energy + qb * (1.0 + 1e-12)}};
  }
  art.json("partition.json", j);
  out << "energy " << fmt(r.energy) << " doubles " << r.doubles << " singles1 " << r.singles1 << " singles2 "
      << r.singles2 << " guarantee \"" << r.guarantee << "\"\n";
}

void cmd_green(const Json& c, Artifacts& art, std::ostream& out) {
  const TorusPoint p = TorusPoint::canonical(getd(c, "x"), getd(c, "y"));
  Json j;
  j["point"] = Json::array({p.x, p.y});
  const double ge = green(p), gs = green_spectral(p);
  const auto grad = green_gradient(p);
  j["green_ewald"] = ge;
  j["green_spectral"] = gs;
  j["difference"] = ge - gs;
  j["gradient"] = Json::array({grad[0], grad[1]});
  j["regular_part"] = p.norm() < 0.5 ? number(regular_part(p)) : Json(nullptr);
  j["R0_ewald"] = regular_part_origin();
  j["R0_product"] = regular_part_origin_product();
  art.json("green.json", j);
  const int n = static_cast<int>(geti(c, "grid"));
  if (n > 0) {
    Csv csv({"i", "j", "x", "y", "ewald", "spectral", "config_hash"});
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const TorusPoint q = TorusPoint::canonical(static_cast<double>(k) / n, static_cast<double>(i) / n);
        const bool origin = i == 0 && k == 0;
        csv.row({std::to_string(i), std::to_string(k), fmt(q.x), fmt(q.y), origin ? "inf" : fmt(green(q)),
                 origin ? "inf" : fmt(green_spectral(q)), art.hash()});
      }
    art.text("green_grid.csv", csv.str());
  }
  out << "green " << fmt(ge) << " spectral " << fmt(gs) << " R0 " << fmt(regular_part_origin()) << "\n";
}

QuadratureOptions quadrature_of(const Json& c) {
  QuadratureOptions q;
  q.log2_points = static_cast<int>(geti(c, "qmc_log2"));
  q.replicates = static_cast<int>(geti(c, "qmc_replicates"));
  q.seed = static_cast<std::uint64_t>(geti(c, "seed")) + 7;
  return q;
}

void cmd_place(const Json& c, Artifacts& art, std::ostream& out) {
  const GammaMatrix g = gamma_of(c);
  std::vector<MassPair> masses;
  const std::vector<double> flat = getl(c, "masses");
  const std::string input = gets(c, "input");
  if (!flat.empty() && !input.empty()) bad("masses", "give either masses or input, not both");
  if (!input.empty()) {
    Json src;
    try {
      src = Json::parse(read_text(input));
    } catch (const Json::exception& e) {
      fail(ErrorKind::invalid_input, "cannot parse " + input + ": " + e.what());
    }
    for (const Cluster& k : configuration_from_json(src).clusters) masses.push_back(k.mass);
  } else {
    if (flat.size() % 2 != 0) bad("masses", "expected pairs m1,m2");
    for (std::size_t k = 0; k + 1 < flat.size(); k += 2) masses.push_back({flat[k], flat[k + 1]});
  }
  if (masses.empty()) bad("masses", "no clusters to place");
  PlacementOptions po;
  po.restarts = static_cast<int>(geti(c, "restarts"));
  po.seed = static_cast<std::uint64_t>(geti(c, "seed"));
  po.max_iterations = static_cast<int>(geti(c, "max_iterations"));
  po.gradient_tolerance = getd(c, "gradient_tolerance");
  po.record_trace = true;
  const PlacementResult r = minimize_FK(masses, g, po);
  Json j;
  j["gamma"] = to_json(g);
  j["layout"] = to_json(r.layout);
  j["energy"] = r.energy;
  j["gradient_norm"] = r.gradient_norm;
  j["best_restart"] = r.best_restart;
  if (getb(c, "f0")) {
    QuadratureOptions q = quadrature_of(c);
    q.panels = static_cast<int>(geti(c, "qmc_panels"));
    j["F0"] = to_json(F0(r.layout, g, q));
  }
  art.json("layout.json", j);
  Csv csv({"restart", "iteration", "energy", "gradient_norm", "config_hash"});
  for (const DescentStep& s : r.trace) {
    csv.row({std::to_string(s.restart), std::to_string(s.iteration), fmt(s.energy), fmt(s.gradient_norm), art.hash()});
  }
  art.text("place_trace.csv", csv.str());
  out << "FK " << fmt(r.energy) << " gradient_norm " << fmt(r.gradient_norm) << "\n";
}

void cmd_relax(const Json& c, Artifacts& art, std::ostream& out) {
  const int n = static_cast<int>(geti(c, "n"));
  const double eta = getd(c, "eta");
  if (!(eta > 0.0)) bad("eta", "must be positive");
  const double eps = getd(c, "epsilon") > 0.0 ? getd(c, "epsilon") : 0.5 / n;
  const GammaMatrix g = gamma_of(c);
  Field init;
  if (gets(c, "init") == "layout") {
    const std::string path = gets(c, "layout");
    if (path.empty()) bad("layout", "init layout needs a layout file");
    Json src;
    try {
      src = Json::parse(read_text(path));
    } catch (const Json::exception& e) {
      fail(ErrorKind::invalid_input, "cannot parse " + path + ": " + e.what());
    }
    const Layout l = layout_from_json(src);
    std::vector<Droplet> ds;
    for (std::size_t k = 0; k < l.size(); ++k) ds.push_back({l.points[k], l.masses[k]});
    init = seed_droplets(ds, n, eta, eps, SeedShape::disks);
  } else {
    const MassPair means{getd(c, "M1") * eta * eta, getd(c, "M2") * eta * eta};
    if (means.total() >= 1.0) bad("M1", "η²(M1 + M2) must stay below 1");
    init = uniform_noise(means, n, eps, getd(c, "noise_amplitude"), static_cast<std::uint64_t>(geti(c, "seed")));
  }
  init.well = gets(c, "well") == "printed" ? WellKind::printed : WellKind::standard;
  RelaxOptions ro;
  ro.dt = getd(c, "dt");
  ro.steps = static_cast<int>(geti(c, "steps"));
  ro.trace_every = static_cast<int>(geti(c, "trace_every"));
  const GammaMatrix gs = diffuse_gamma(g, eta);
  const RelaxResult r = relax(init, gs, ro);
  art.text("relax_trace.csv", trace_csv(r.trace, art.hash()));
  art.pgm("u1.pgm", r.field.u1);
  art.pgm("u2.pgm", r.field.u2);
  Json j;
  j["n"] = n;
  j["epsilon"] = eps;
  j["eta"] = eta;
  j["gamma"] = to_json(g);
  j["gamma_scaled"] = to_json(gs);
  j["step"] = ro.steps;
  j["energy"] = to_json(r.trace.back().energy);
  j["max_mass_drift"] = r.max_mass_drift;
  j["max_sum"] = r.max_sum;
  const ThresholdResult th = threshold(r.field, getd(c, "threshold"), eta);
  const Components comp = extract_components(th.config);
  j["overlap_fraction"] = th.overlap_fraction;
  j["components"] = to_json(comp);
  if (!comp.config.clusters.empty()) {
    const SharpEnergy se = sharp_energy(th.config, g);
    j["sharp_energy"] = {{"perimeter", se.perimeter}, {"nonlocal", se.nonlocal}, {"total", se.total()}};
  } else {
    j["sharp_energy"] = nullptr;
  }
  art.json("field.json", j);
  out << "energy " << fmt(r.trace.back().energy.total()) << " components " << comp.config.clusters.size() << "\n";
}

void cmd_compare(const Json& c, Artifacts& art, std::ostream& out) {
  const MassPair M{getd(c, "M1"), getd(c, "M2")};
  const GammaMatrix g = gamma_of(c);
  CompareOptions o;
  o.n = static_cast<int>(geti(c, "n"));
  o.eta = getd(c, "eta");
  if (!(o.eta > 0.0)) bad("eta", "must be positive");
  o.epsilon_cells = getd(c, "epsilon_cells");
  o.dt_factor = getd(c, "dt_factor");
  o.steps = static_cast<int>(geti(c, "steps"));
  o.trace_every = static_cast<int>(geti(c, "trace_every"));
  o.mass_perturbation = getd(c, "mass_perturbation");
  o.position_jitter = getd(c, "position_jitter");
  o.seed = static_cast<std::uint64_t>(geti(c, "seed"));
  o.budget.restarts = static_cast<int>(geti(c, "restarts"));
  o.placement.seed = o.seed;
  o.with_F0 = getb(c, "f0");
  o.quadrature = quadrature_of(c);
  const CompareReport r = compare(M, g, o);
  const double tol = getd(c, "tolerance");
  Json j;
  j["M"] = to_json(M);
  j["gamma"] = to_json(g);
  j["n"] = o.n;
  j["eta"] = o.eta;
  j["epsilon"] = o.epsilon_cells / o.n;
  j["dt"] = o.dt_factor * o.epsilon_cells / (static_cast<double>(o.n) * o.n);
  j["steps"] = o.steps;
  j["ebar"] = r.regime.energy;
  j["regime"] = to_json(r.regime);
  j["placement"] = {{"layout", to_json(r.placement.layout)}, {"energy", r.placement.energy},
                    {"gradient_norm", r.placement.gradient_norm}};
  if (o.with_F0) {
    j["F0"] = to_json(r.f0);
    j["prediction"] = r.prediction;
    j["relative_gap_to_prediction"] = (r.sharp.total() - r.prediction) / r.prediction;
  }
  Json seeds = Json::array();
  for (const Droplet& d : r.seeds) seeds.push_back({{"center", Json::array({d.center.x, d.center.y})}, {"mass", to_json(d.mass)}});
  j["seeds"] = seeds;
  j["final_energy"] = to_json(r.trace.back().energy);
  j["max_mass_drift"] = r.max_mass_drift;
  j["components"] = to_json(r.components);
  j["overlap_fraction"] = r.overlap_fraction;
  j["sharp_energy"] = {{"perimeter", r.sharp.perimeter}, {"nonlocal", r.sharp.nonlocal}, {"total", r.sharp.total()}};
  j["relative_gap"] = r.relative_gap;
  j["tolerance"] = tol;
  j["within_tolerance"] = std::abs(r.relative_gap) <= tol;
  j["structure_matches"] = r.structure_matches;
  j["fk_extracted"] = r.fk_extracted;
  j["center_offset"] = r.center_offset;
  art.json("compare.json", j);
  art.text("compare_trace.csv", trace_csv(r.trace, art.hash()));
  art.pgm("u1.pgm", r.final_field.u1);
  art.pgm("u2.pgm", r.final_field.u2);
  out << "ebar " << fmt(r.regime.energy) << " sharp " << fmt(r.sharp.total()) << " relative_gap "
      << fmt(r.relative_gap) << " structure_matches " << (r.structure_matches ? "true" : "false") << "\n";
}

void cmd_sweep(const Json& c, Artifacts& art, std::ostream& out) {
  const std::vector<double> m1s = getl(c, "M1"), m2s = getl(c, "M2"), g12s = getl(c, "g12");
  SearchBudget b;
  b.restarts = static_cast<int>(geti(c, "restarts"));
  b.seed = static_cast<std::uint64_t>(geti(c, "seed"));
  Csv csv({"M1", "M2", "g11", "g22", "g12", "doubles", "singles1", "singles2", "energy", "guarantee",
           "coexistence_hypothesis", "coexistence_case_condition", "all_singles_hypothesis", "one_double_hypothesis",
           "consistent", "M_star1", "M_star2", "M_bar1", "M_bar2", "gamma12_star", "gamma12_star_singles", "error",
           "config_hash"});
  int failures = 0;
  for (double m1 : m1s)
    for (double m2 : m2s)
      for (double g12 : g12s) {
        GammaMatrix g;
        g.g11 = getd(c, "g11");
        g.g22 = getd(c, "g22");
        g.g12 = g12;
        std::vector<std::string> row = {fmt(m1), fmt(m2), fmt(g.g11), fmt(g.g22), fmt(g12)};
        try {
          const RegimeReport r = classify_regime({m1, m2}, g, b);
          auto tf = [](bool v) { return std::string(v ? "true" : "false"); };
          row.insert(row.end(), {std::to_string(r.doubles), std::to_string(r.singles1), std::to_string(r.singles2),
                                 fmt(r.energy), r.guarantee, tf(r.coexistence_hypothesis),
                                 tf(r.coexistence_case_condition), tf(r.all_singles_hypothesis),
                                 tf(r.one_double_hypothesis), tf(r.consistent), fmt(r.th.M_star[0]),
                                 fmt(r.th.M_star[1]), fmt(r.M_bar[0]), fmt(r.M_bar[1]), fmt(r.th.gamma12_star),
                                 fmt(r.th.gamma12_star_singles), ""});
        } catch (const Error& e) {
          ++failures;
          row.resize(5);
          for (int k = 0; k < 16; ++k) row.push_back("");
          row.push_back(std::string(to_string(e.kind())) + ": " + e.what());
        }
        row.push_back(art.hash());
        csv.row(row);
      }
  art.text("sweep.csv", csv.str());
  out << "cells " << m1s.size() * m2s.size() * g12s.size() << " failures " << failures << "\n";
}

}  // namespace

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : schemas()) v.push_back(k);
    return v;
  }();
  return c;
}

const std::vector<Param>& schema(const std::string& command) {
  const auto it = schemas().find(command);
  if (it == schemas().end()) fail(ErrorKind::invalid_input, "unknown command '" + command + "'");
  return it->second;
}

Json resolve_config(const std::string& command, const Json& file, const std::map<std::string, std::string>& flags) {
  const std::vector<Param>& ps = schema(command);
  Json c = Json::object();
  for (const Param& p : ps) c[p.name] = p.fallback;
  if (!file.is_null()) {
    if (!file.is_object()) fail(ErrorKind::invalid_input, "config must be a JSON object");
    for (const auto& [k, v] : file.items()) {
      if (k == "command") {
        if (!v.is_string() || v.get<std::string>() != command) {
          fail(ErrorKind::invalid_input, "config is for command " + v.dump() + ", not " + command);
        }
        continue;
      }
      const auto it = std::find_if(ps.begin(), ps.end(), [&](const Param& p) { return p.name == k; });
      if (it == ps.end()) fail(ErrorKind::invalid_input, "unknown config key '" + k + "' for " + command);
      // integers written as 3.0 are accepted
      if (it->type == P::integer && v.is_number_float() && std::floor(v.get<double>()) == v.get<double>() &&
          std::abs(v.get<double>()) < 9e15) {
        c[k] = static_cast<long long>(v.get<double>());
      } else if (it->type == P::number && v.is_number_integer()) {
        c[k] = v.get<double>();
      } else {
        c[k] = v;
      }
    }
  }
  for (const auto& [k, s] : flags) {
    const auto it = std::find_if(ps.begin(), ps.end(), [&](const Param& p) { return p.name == k; });
    if (it == ps.end()) fail(ErrorKind::invalid_input, "unknown flag --" + k + " for " + command);
    c[k] = from_flag(*it, s);
  }
  for (const Param& p : ps) check_value(p, c[p.name]);
  c["command"] = command;
  return c;
}

std::string config_hash(const Json& resolved) { return sha256_hex(resolved.dump()); }

Json execute(const Json& c, std::ostream& out) {
  const std::string command = gets(c, "command");
  const std::string hash = config_hash(c);
  Artifacts art(gets(c, "out"), hash);
  if (command == "bubble") cmd_bubble(c, art, out);
  else if (command == "partition") cmd_partition(c, art, out);
  else if (command == "green") cmd_green(c, art, out);
  else if (command == "place") cmd_place(c, art, out);
  else if (command == "relax") cmd_relax(c, art, out);
  else if (command == "compare") cmd_compare(c, art, out);
  else if (command == "regime-sweep") cmd_sweep(c, art, out);
  else fail(ErrorKind::invalid_input, "unknown command '" + command + "'");
  Json m;
  m["tool"] = "triblock";
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = c;
  m["config_hash"] = hash;
  if (c.contains("seed")) m["seed"] = c["seed"];
  m["R0"] = {{"ewald", regular_part_origin()}, {"product", regular_part_origin_product()}};
  m["threads"] = 1;
  m["artifacts"] = art.list();
  write_text(art.path("manifest.json"), m.dump(2) + "\n");
  return m;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input:
    case ErrorKind::singular_input:
    case ErrorKind::domain:
    case ErrorKind::overlap: return 2;
    case ErrorKind::convergence:
    case ErrorKind::budget_exceeded: return 3;
    case ErrorKind::io: return 4;
  }
  return 5;
}

namespace {

std::string describe(const std::string& command) {
  static const std::map<std::string, std::string> text = {
      {"bubble", "optimal double-bubble geometry and e0 for one cluster"},
      {"partition", "optimal splitting of the total masses into clusters (ebar)"},
      {"green", "torus Green's function, its gradient and regular part"},
      {"place", "cluster centers minimizing FK, with optional F0"},
      {"relax", "phase-field relaxation from noise or a layout"},
      {"compare", "seeded phase-field run checked against ebar"},
      {"regime-sweep", "regime classification over a grid of masses and cross coefficients"},
  };
  return text.at(command);
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message, const std::string& command) {
  Json e{{"error", {{"kind", kind}, {"message", message}}}};
  if (!command.empty()) e["command"] = command;
  err << e.dump() << "\n";
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sharp-interface droplet energies of ternary systems and their phase-field cross-check", "triblock"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_paths;
  std::map<std::string, CLI::App*> subs;
  for (const std::string& name : commands()) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    subs[name] = sub;
    sub->add_option("--config", config_paths[name], "JSON config; flags override its keys");
    for (const Param& p : schema(name)) {
      std::string def = p.fallback.is_string() ? p.fallback.get<std::string>() : p.fallback.dump();
      if (p.type == P::number_list) {
        def.clear();
        for (const Json& x : p.fallback) def += (def.empty() ? "" : ",") + fmt(x.get<double>());
      }
      sub->add_option("--" + p.name, values[name][p.name], p.help + " (" + type_name(p.type) + ", default " + def + ")");
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "invalid_input", e.what(), "");
    return 2;
  }
  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;
  try {
    Json file;
    if (!config_paths[command].empty()) {
      try {
        file = Json::parse(read_text(config_paths[command]));
      } catch (const Json::exception& e) {
        fail(ErrorKind::invalid_input, "cannot parse config " + config_paths[command] + ": " + e.what());
      }
    }
    std::map<std::string, std::string> flags;
    for (const Param& p : schema(command))
      if (subs[command]->count("--" + p.name) > 0) flags[p.name] = values[command][p.name];
    const Json c = resolve_config(command, file, flags);
    execute(c, out);
    return 0;
  } catch (const Error& e) {
    report_error(err, to_string(e.kind()), e.what(), command);
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), command);
    return 5;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("triblock");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace triblock::cli
