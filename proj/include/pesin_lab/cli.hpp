#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pesin_lab/entropy.hpp"
#include "pesin_lab/hamiltonian.hpp"
#include "pesin_lab/json_io.hpp"
#include "pesin_lab/lyapunov.hpp"
#include "pesin_lab/poincare.hpp"
#include "pesin_lab/suspension.hpp"
#include "pesin_lab/systems.hpp"

namespace pesin_lab::cli {

enum ExitCode { kOk = 0, kValidation = 2, kNumerical = 3, kViolation = 4 };

/// Merged experiment configuration: JSON config file overridden by flags.
/// Every value read through it is echoed under "config" in the output.
class Config {
 public:
  explicit Config(nlohmann::json values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.contains(key) && !values_[key].is_null(); }

  std::string text(const std::string& key, const std::string& fallback) {
    std::string v = fallback;
    if (has(key)) v = values_[key].is_string() ? values_[key].get<std::string>() : values_[key].dump();
    used_[key] = v;
    return v;
  }

  double number(const std::string& key, double fallback) {
    double v = fallback;
    if (has(key)) v = to_double(key, values_[key]);
    used_[key] = v;
    return v;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const double v = number(key, static_cast<double>(fallback));
    if (!(v >= 0.0 && v == std::floor(v) && v < 1e15)) fail(ErrorCode::InvalidArgument, key + " must be a count");
    used_[key] = static_cast<std::size_t>(v);
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed() {
    std::uint64_t s = 0;
    if (has("seed")) {
      const auto& v = values_["seed"];
      if (v.is_number_unsigned()) {
        s = v.get<std::uint64_t>();
      } else if (v.is_string()) {
        const std::string t = v.get<std::string>();
        const auto res = std::from_chars(t.data(), t.data() + t.size(), s);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size())
          fail(ErrorCode::InvalidArgument, "seed must be a 64-bit unsigned integer");
      } else {
        fail(ErrorCode::InvalidArgument, "seed must be a 64-bit unsigned integer");
      }
    }
    used_["seed"] = s;
    return s;
  }

  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
    std::vector<double> out = fallback;
    if (has(key)) {
      const auto& v = values_[key];
      out.clear();
      if (v.is_array()) {
        for (const auto& e : v) out.push_back(to_double(key, e));
      } else if (v.is_number()) {
        out.push_back(v.get<double>());
      } else {
        std::stringstream ss(v.get<std::string>());
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_double(key, item));
      }
    }
    used_[key] = out;
    return out;
  }

  bool flag(const std::string& key) {
    bool b = false;
    if (has(key)) b = values_[key].is_boolean() ? values_[key].get<bool>() : values_[key].dump() != "\"false\"";
    used_[key] = b;
    return b;
  }

  IntegratorOptions integrator(const IntegratorOptions& defaults = {}) {
    IntegratorOptions o = defaults;
    o.atol = number("atol", defaults.atol);
    o.rtol = number("rtol", defaults.rtol);
    if (!(o.atol > 0.0 && o.rtol > 0.0)) fail(ErrorCode::InvalidArgument, "tolerances must be positive");
    return o;
  }

  const nlohmann::json& used() const { return used_; }

 private:
  static double to_double(const std::string& key, const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return to_double(key, v.get<std::string>());
    fail(ErrorCode::InvalidArgument, key + " must be a number");
  }

  static double to_double(const std::string& key, const std::string& s) {
    double d = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    while (e > b && e[-1] == ' ') --e;
    const auto res = std::from_chars(b, e, d);
    if (res.ec != std::errc() || res.ptr != e) fail(ErrorCode::InvalidArgument, key + ": '" + s + "' is not a number");
    return d;
  }

  nlohmann::json values_;
  nlohmann::json used_ = nlohmann::json::object();
};

namespace detail {

inline constexpr std::uint64_t kStartStream = 0x7374617274ULL;

inline Vec start_point(Config& cfg, const VectorField& field, std::uint64_t seed) {
  if (cfg.has("x0")) {
    const auto v = cfg.list("x0", {});
    if (static_cast<int>(v.size()) != field.dim())
      fail(ErrorCode::DimensionMismatch, "x0 must have " + std::to_string(field.dim()) + " coordinates");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), field.dim());
  }
  Rng rng = substream(seed, 0, kStartStream);
  return pesin_lab::detail::sample_volume(field, rng);
}

inline std::vector<int> resolution(Config& cfg, const std::vector<int>& fallback, int dim) {
  std::vector<double> def(fallback.begin(), fallback.end());
  const auto v = cfg.list("grid", def);
  if (static_cast<int>(v.size()) != dim)
    fail(ErrorCode::DimensionMismatch, "grid needs " + std::to_string(dim) + " resolutions");
  std::vector<int> out;
  for (double d : v) {
    if (!(d >= 1.0 && d == std::floor(d) && d < 1e6)) fail(ErrorCode::InvalidArgument, "grid entries must be positive integers");
    out.push_back(static_cast<int>(d));
  }
  return out;
}

inline EntropyOptions entropy_options(Config& cfg, std::vector<int> res, std::uint64_t seed, std::size_t threads) {
  EntropyOptions o;
  o.resolution = std::move(res);
  o.time_step = cfg.number("time_step", 1.0);
  o.n_max = static_cast<int>(cfg.count("n_max", 10));
  o.n_orbits = cfg.count("n_orbits", 100);
  o.orbit_length = cfg.count("orbit_length", 10'000);
  o.resolve_factor = cfg.number("resolve_factor", 5.0);
  o.seed = seed;
  o.threads = threads;
  return o;
}

inline Vec golden_shift(int dim) {
  Vec s(dim);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < dim; ++i) s[i] = i == 0 ? g : std::sqrt(static_cast<double>(i + 1)) - 1.0;
  return s;
}

inline BaseSystem base_system(const std::string& name) {
  if (name == "circle") return rotation_base(golden_shift(1));
  return base_by_name(name);
}

inline std::vector<double> parse_levels(Config& cfg) {
  if (!cfg.has("levels")) fail(ErrorCode::InvalidArgument, "hamiltonian needs --levels a:b:k or a list");
  const std::string spec = cfg.text("levels", "");
  if (spec.find(':') == std::string::npos) return cfg.list("levels", {});
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    double d = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), d);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size())
      fail(ErrorCode::InvalidArgument, "levels must look like a:b:k");
    parts.push_back(d);
  }
  if (parts.size() != 3 || !(parts[2] >= 1.0) || parts[2] != std::floor(parts[2]))
    fail(ErrorCode::InvalidArgument, "levels must look like a:b:k with k >= 1");
  const auto k = static_cast<std::size_t>(parts[2]);
  std::vector<double> e;
  for (std::size_t i = 0; i < k; ++i) {
    e.push_back(k == 1 ? parts[0] : parts[0] + (parts[1] - parts[0]) * static_cast<double>(i) / static_cast<double>(k - 1));
  }
  return e;
}

inline HamiltonianSystem hamiltonian_system(Config& cfg) {
  std::string spec = cfg.has("H") ? cfg.text("H", "") : cfg.text("system", "coupled_quartic4");
  if (spec.rfind("builtin:", 0) == 0) spec = spec.substr(8);
  const System s = load_system(spec);
  if (!s.hamiltonian) fail(ErrorCode::InvalidArgument, "'" + spec + "' is not a Hamiltonian system");
  return *s.hamiltonian;
}

}  // namespace detail

/// Output sink: JSON summary on stdout and CSV artifacts under --out.
class Output {
 public:
  Output(std::ostream& out, std::string dir, std::string format, bool overwrite)
      : out_(out), dir_(std::move(dir)), format_(std::move(format)), overwrite_(overwrite) {
    if (format_ != "json" && format_ != "csv" && format_ != "both")
      fail(ErrorCode::InvalidArgument, "--format must be json, csv or both");
    if (format_ != "json" && dir_.empty()) fail(ErrorCode::InvalidArgument, "--format " + format_ + " needs --out DIR");
  }

  bool wants_csv() const { return format_ != "json"; }

  void csv(const std::string& name, const CsvTable& table) {
    if (!wants_csv()) return;
    namespace fs = std::filesystem;
    fs::create_directories(dir_);
    const fs::path p = fs::path(dir_) / name;
    if (fs::exists(p) && !overwrite_)
      fail(ErrorCode::InvalidArgument, p.string() + " already exists (pass --overwrite to replace it)");
    std::ofstream f(p, std::ios::binary);
    if (!f) fail(ErrorCode::InvalidArgument, "cannot write " + p.string());
    f << table.str();
    artifacts_.push_back(name);
  }

  void summary(nlohmann::json j) {
    if (!artifacts_.empty()) j["artifacts"] = artifacts_;
    if (format_ != "csv") out_ << j.dump(2) << '\n';
  }

 private:
  std::ostream& out_;
  std::string dir_;
  std::string format_;
  bool overwrite_;
  std::vector<std::string> artifacts_;
};

namespace commands {

inline int list_systems(Config&, Output& o) {
  nlohmann::json systems = nlohmann::json::array();
  for (const auto& n : builtin_names()) {
    const System s = builtin(n);
    systems.push_back({{"name", n},
                       {"dim", s.field.dim()},
                       {"kind", s.hamiltonian ? "hamiltonian" : "field"},
                       {"divergence_free", s.field.divergence_free()}});
  }
  o.summary({{"command", "list-systems"},
             {"systems", systems},
             {"base_maps", nlohmann::json::array({"cat", "rotation", "identity", "circle"})},
             {"ceilings", nlohmann::json::array({"const:c", "cosine:a,b"})}});
  return kOk;
}

inline int simulate(Config& cfg, Output& o, std::size_t) {
  const System sys = load_system(cfg.text("system", "abc"));
  const std::uint64_t seed = cfg.seed();
  const IntegratorOptions opts = cfg.integrator();
  const Vec x0 = detail::start_point(cfg, sys.field, seed);
  const double t = cfg.number("t", 10.0);
  const std::size_t points = cfg.count("points", 100);
  require(std::isfinite(t), "t must be finite");
  require(points >= 1, "points must be at least 1");

  std::vector<std::string> header{"t"};
  for (int i = 0; i < sys.field.dim(); ++i) header.push_back("x" + std::to_string(i));
  CsvTable traj(header);
  auto row = [&](double time, const Vec& x) {
    std::vector<double> r{time};
    for (int i = 0; i < x.size(); ++i) r.push_back(x[i]);
    traj.add(r);
  };
  IntegrationStats stats;
  Vec x = sys.field.canonical(x0);
  row(0.0, x);
  for (std::size_t k = 1; k <= points; ++k) {
    x = flow(sys.field, x, t / static_cast<double>(points), opts, &stats).position;
    row(t * static_cast<double>(k) / static_cast<double>(points), x);
  }
  nlohmann::json j = {{"command", "simulate"},
                      {"system", sys.field.name()},
                      {"x0", to_json(x0)},
                      {"t", t},
                      {"end", to_json(x)},
                      {"liouville", to_json(liouville_report(sys.field, x0, t, opts))},
                      {"steps", {{"accepted", stats.accepted}, {"rejected", stats.rejected}, {"gluings", stats.gluings}}}};
  if (sys.hamiltonian) j["energy_drift"] = std::abs(sys.hamiltonian->energy(x) - sys.hamiltonian->energy(x0));
  o.csv("trajectory.csv", traj);
  j["config"] = cfg.used();
  o.summary(std::move(j));
  return kOk;
}

inline int lyapunov(Config& cfg, Output& o, std::size_t threads) {
  const System sys = load_system(cfg.text("system", "abc"));
  const std::uint64_t seed = cfg.seed();
  const IntegratorOptions opts = cfg.integrator();
  const Vec x0 = detail::start_point(cfg, sys.field, seed);
  const double t = cfg.number("t_horizon", 200.0);
  const double renorm = cfg.number("renorm", 0.5);
  const std::size_t n = cfg.count("n_samples", 16);
  const SamplingOptions sampling{threads, renorm};

  nlohmann::json j = {{"command", "lyapunov"}, {"system", sys.field.name()}, {"x0", to_json(x0)}};
  j["spectrum"] = to_json(spectrum(sys.field, x0, t, renorm, opts));
  if (n > 0) {
    const IntegratedExponent ie = integrated_exponent(sys.field, n, t, seed, opts, sampling);
    j["integrated"] = to_json(ie);
    std::vector<std::string> header{"index", "lambda_plus"};
    for (int i = 0; i < sys.field.dim(); ++i) header.push_back("x" + std::to_string(i));
    for (int i = 0; i < sys.field.dim(); ++i) header.push_back("lambda" + std::to_string(i + 1));
    CsvTable samples(header);
    for (std::size_t k = 0; k < ie.samples.size(); ++k) {
      const auto& s = ie.samples[k];
      std::vector<double> r{static_cast<double>(k), s.lambda_plus};
      for (int i = 0; i < s.x.size(); ++i) r.push_back(s.x[i]);
      r.insert(r.end(), s.values.begin(), s.values.end());
      samples.add(r);
    }
    o.csv("lyapunov_samples.csv", samples);
  }
  if (cfg.has("finite_n")) {
    nlohmann::json fin = nlohmann::json::array();
    for (double nd : cfg.list("finite_n", {})) {
      if (!(nd >= 1.0 && nd == std::floor(nd))) fail(ErrorCode::InvalidArgument, "finite_n entries must be positive integers");
      const IntegratedExponent fe =
          finite_n_estimator(sys.field, static_cast<int>(nd), std::max<std::size_t>(n, 1), seed, opts, sampling);
      nlohmann::json e = to_json(fe);
      e["n"] = static_cast<int>(nd);
      fin.push_back(std::move(e));
    }
    j["finite_n"] = fin;
  }
  j["config"] = cfg.used();
  o.summary(std::move(j));
  return kOk;
}

inline int dominate(Config& cfg, Output& o, std::size_t) {
  const System sys = load_system(cfg.text("system", "cat_suspension3"));
  const std::uint64_t seed = cfg.seed();
  const IntegratorOptions opts = cfg.integrator();
  const Vec x0 = detail::start_point(cfg, sys.field, seed);
  const double ell = cfg.number("ell", 1.0);
  const double horizon = cfg.number("horizon", 10.0 * ell);
  const DominationReport rep = domination_check(sys.field, x0, ell, horizon, opts);
  CsvTable t({"k", "product"});
  for (std::size_t k = 0; k < rep.splitting.size(); ++k) t.add({static_cast<double>(k), rep.splitting[k].product});
  o.csv("domination.csv", t);
  o.summary({{"command", "dominate"},
             {"system", sys.field.name()},
             {"x0", to_json(x0)},
             {"report", to_json(rep)},
             {"config", cfg.used()}});
  return kOk;
}

inline int suspend(Config& cfg, Output& o, std::size_t threads) {
  const std::string base_name = cfg.text("base", "cat");
  const std::string ceiling_spec = cfg.text("ceiling", "const:1");
  const SuspensionSystem sys = pesin_lab::suspend(detail::base_system(base_name), parse_ceiling(ceiling_spec));
  const std::uint64_t seed = cfg.seed();
  const double t = cfg.number("t", 10.0);

  SuspensionPoint p;
  if (cfg.has("x0")) {
    const auto v = cfg.list("x0", {});
    if (static_cast<int>(v.size()) != sys.base().dim())
      fail(ErrorCode::DimensionMismatch, "x0 must be a base point");
    p.base_point = Eigen::Map<const Eigen::VectorXd>(v.data(), sys.base().dim());
    p.height = cfg.number("height", 0.0);
  } else {
    p = lift_measure_sample(sys, seed, 1).front();
  }
  const SuspensionPoint q = sys.evolve(p, t);
  auto point = [](const SuspensionPoint& s) { return nlohmann::json{{"base", to_json(s.base_point)}, {"height", s.height}}; };

  nlohmann::json j = {{"command", "suspend"},
                      {"base", base_name},
                      {"ceiling", ceiling_spec},
                      {"alpha", sys.ceiling().alpha},
                      {"h_max", sys.ceiling().h_max},
                      {"integral_estimate", sys.integral_estimate()},
                      {"integral_stderr", sys.integral_stderr()},
                      {"integral_samples", SuspensionSystem::kIntegralSamples},
                      {"is_flow", sys.is_flow()},
                      {"evolve", {{"start", point(p)}, {"t", t}, {"end", point(q)}}}};
  if (sys.base().known_entropy) {
    j["base_entropy"] = *sys.base().known_entropy;
    j["abramov_prediction"] = abramov_check(sys, *sys.base().known_entropy);
  }
  if (sys.is_flow()) {
    const SuspensionPoint back = sys.evolve(q, -t);
    j["evolve"]["roundtrip_error"] =
        std::hypot(pesin_lab::detail::torus_distance(back.base_point, p.base_point), back.height - p.height);
    j["expansivity"] = to_json(expansivity_probe(sys.base(), cfg.number("delta", 0.1), cfg.count("pairs", 200),
                                                 static_cast<int>(cfg.count("probe_horizon", 50)), seed));
  }
  if (cfg.flag("entropy")) {
    const int d = sys.base().dim();
    std::vector<int> def(static_cast<std::size_t>(d), 16);
    def.push_back(static_cast<int>(std::ceil(sys.ceiling().h_max - 1e-12)));
    const EntropyOptions eo = detail::entropy_options(cfg, detail::resolution(cfg, def, d + 1), seed, threads);
    const EntropyEstimate direct = flow_entropy(sys, eo);
    EntropyOptions base_opts = eo;
    base_opts.resolution.pop_back();
    j["entropy"] = to_json(direct);
    j["abramov_transfer"] = to_json(abramov_transfer(sys, base_opts));
    o.csv("entropy_diagnostics.csv", diagnostics_csv(direct));
  }
  j["config"] = cfg.used();
  o.summary(std::move(j));
  return kOk;
}

inline int entropy(Config& cfg, Output& o, std::size_t threads) {
  const std::uint64_t seed = cfg.seed();
  nlohmann::json j = {{"command", "entropy"}};
  EntropyEstimate est;
  if (cfg.has("map")) {
    const std::string name = cfg.text("map", "cat");
    const BaseSystem base = detail::base_system(name);
    const MapSystem m = map_system(base);
    const EntropyOptions eo = detail::entropy_options(
        cfg, detail::resolution(cfg, std::vector<int>(static_cast<std::size_t>(base.dim()), 16), base.dim()), seed,
        threads);
    est = refined_entropy(m, PartitionGrid(eo.resolution, m.state_space), eo.n_max, eo.n_orbits, eo.orbit_length,
                          seed, threads, eo.resolve_factor);
    j["map"] = name;
    if (base.known_entropy) j["known_entropy"] = *base.known_entropy;
  } else {
    const System sys = load_system(cfg.text("system", "cat_suspension3"));
    const IntegratorOptions opts = cfg.integrator();
    EntropyOptions eo =
        detail::entropy_options(cfg, detail::resolution(cfg, sys.entropy_resolution, sys.field.dim()), seed, threads);
    eo.grid_domain = sys.entropy_domain;
    est = flow_entropy(sys.field, eo, opts);
    j["system"] = sys.field.name();
  }
  j["estimate"] = to_json(est);
  o.csv("entropy_diagnostics.csv", diagnostics_csv(est));
  j["config"] = cfg.used();
  o.summary(std::move(j));
  return kOk;
}

inline int pesin_check(Config& cfg, Output& o, std::size_t threads) {
  const System sys = load_system(cfg.text("system", "cat_suspension3"));
  const std::uint64_t seed = cfg.seed();
  const IntegratorOptions opts = cfg.integrator();
  EntropyOptions eo =
      detail::entropy_options(cfg, detail::resolution(cfg, sys.entropy_resolution, sys.field.dim()), seed, threads);
  eo.grid_domain = sys.entropy_domain;
  LyapunovOptions lo;
  lo.n_samples = cfg.count("lyap_samples", 64);
  lo.t_horizon = cfg.number("lyap_horizon", 200.0);
  lo.renorm_interval = cfg.number("renorm", 0.5);
  lo.seed = seed;
  lo.threads = threads;
  const PesinReport r = pesin_report(sys.field, eo, lo, opts);
  o.csv("entropy_diagnostics.csv", diagnostics_csv(r.entropy));
  o.summary({{"command", "pesin-check"},
             {"system", sys.field.name()},
             {"report", to_json(r)},
             {"status", r.violation ? "VIOLATION" : "ok"},
             {"config", cfg.used()}});
  return r.violation ? kViolation : kOk;
}

inline int hamiltonian(Config& cfg, Output& o, std::size_t threads) {
  const HamiltonianSystem sys = detail::hamiltonian_system(cfg);
  const std::vector<double> levels = detail::parse_levels(cfg);
  LevelOptions lo;
  lo.n_samples = cfg.count("n_samples", 16);
  lo.t_horizon = cfg.number("t_horizon", 100.0);
  lo.seed = cfg.seed();
  const IntegratorOptions opts = cfg.integrator(hamiltonian_integrator_options());
  const double renorm = cfg.number("renorm", 0.5);
  const LevelIntegral li = integrated_level_entropy(sys, levels, lo, opts, SamplingOptions{threads, renorm});
  CsvTable t({"e", "lambda_plus", "stderr", "n_rejected"});
  for (std::size_t k = 0; k < li.levels.size(); ++k) {
    t.add({li.energies[k], li.levels[k].value, li.levels[k].std_error, static_cast<double>(li.levels[k].n_rejected)});
  }
  o.csv("levels.csv", t);
  o.summary({{"command", "hamiltonian"},
             {"system", sys.name()},
             {"integrated", to_json(li)},
             {"level_measure", "rays from the origin, uniform on S^3, weight r^3 / (d . grad H)"},
             {"energy_axis", "trapezoid rule in e over the given levels"},
             {"config", cfg.used()}});
  return kOk;
}

}  // namespace commands

inline void write_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  err << nlohmann::json{{"error", {{"code", code}, {"message", message}}}, {"exit_code", exit_code}}.dump() << '\n';
}

/// Entry point of the pesin-lab tool. args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pesin-lab: Lyapunov exponents, entropy and Pesin checks for volume-preserving flows"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every command");

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::set<std::string> flags;
  auto opt = [&](CLI::App* sub, const std::string& key, const std::string& help) {
    std::string name = "--" + key;
    for (auto& c : name) c = c == '_' ? '-' : c;
    options[key + "@" + sub->get_name()] = sub->add_option(name, values[key + "@" + sub->get_name()], help);
  };
  auto flag = [&](CLI::App* sub, const std::string& key, const std::string& help) {
    std::string name = "--" + key;
    for (auto& c : name) c = c == '_' ? '-' : c;
    options[key + "@" + sub->get_name()] = sub->add_flag(name, help);
    flags.insert(key);
  };
  auto common = [&](CLI::App* sub) {
    opt(sub, "config", "JSON experiment config; flags override its entries");
    opt(sub, "seed", "global 64-bit seed (default 0)");
    opt(sub, "out", "directory for CSV artifacts");
    opt(sub, "format", "json, csv or both (default json)");
    opt(sub, "threads", "worker threads (default PESIN_LAB_THREADS or 1)");
    opt(sub, "atol", "integrator absolute tolerance");
    opt(sub, "rtol", "integrator relative tolerance");
    flag(sub, "overwrite", "replace existing CSV files");
  };
  auto entropy_flags = [&](CLI::App* sub) {
    opt(sub, "grid", "per-axis cell counts, e.g. 16,16,1");
    opt(sub, "time_step", "time of the sampled map (default 1)");
    opt(sub, "n_max", "deepest refinement (default 10)");
    opt(sub, "n_orbits", "number of orbits (default 100)");
    opt(sub, "orbit_length", "steps per orbit (default 10000)");
    opt(sub, "resolve_factor", "windows per occupied cylinder for a resolved depth (default 5)");
  };

  auto* sim = app.add_subcommand("simulate", "integrate one orbit; trajectory CSV and Liouville check");
  common(sim);
  opt(sim, "system", "built-in name or JSON file");
  opt(sim, "x0", "start point, comma separated (default: seeded volume sample)");
  opt(sim, "t", "integration time (default 10)");
  opt(sim, "points", "trajectory rows (default 100)");

  auto* lya = app.add_subcommand("lyapunov", "Lyapunov spectrum of one orbit and the integrated exponent");
  common(lya);
  opt(lya, "system", "built-in name or JSON file");
  opt(lya, "x0", "start point for the single-orbit spectrum");
  opt(lya, "t_horizon", "orbit length (default 200)");
  opt(lya, "renorm", "QR renormalization interval (default 0.5)");
  opt(lya, "n_samples", "Monte-Carlo samples for the integrated exponent (default 16, 0 to skip)");
  opt(lya, "finite_n", "list of n for the finite-n estimator, e.g. 1,2,4,8");

  auto* dom = app.add_subcommand("dominate", "finite-orbit domination test of the linear Poincare flow");
  common(dom);
  opt(dom, "system", "built-in name or JSON file");
  opt(dom, "x0", "start point");
  opt(dom, "ell", "domination time (default 1)");
  opt(dom, "horizon", "orbit length (default 10 ell)");

  auto* sus = app.add_subcommand("suspend", "suspension flow of a base map under a ceiling");
  common(sus);
  opt(sus, "base", "cat, rotation, identity or circle (default cat)");
  opt(sus, "ceiling", "const:c or cosine:a,b (default const:1)");
  opt(sus, "x0", "base point");
  opt(sus, "height", "height of the start point (default 0)");
  opt(sus, "t", "evolution time (default 10)");
  opt(sus, "delta", "expansivity probe radius (default 0.1)");
  opt(sus, "pairs", "expansivity probe pairs (default 200)");
  opt(sus, "probe_horizon", "expansivity probe iterates (default 50)");
  flag(sus, "entropy", "also estimate the suspension entropy");
  entropy_flags(sus);

  auto* ent = app.add_subcommand("entropy", "partition-refinement entropy estimate");
  common(ent);
  opt(ent, "system", "flow: built-in name or JSON file");
  opt(ent, "map", "discrete map instead of a flow: cat, rotation, identity, circle");
  entropy_flags(ent);

  auto* pes = app.add_subcommand("pesin-check", "compare entropy with the integrated positive exponent");
  common(pes);
  opt(pes, "system", "built-in name or JSON file");
  entropy_flags(pes);
  opt(pes, "lyap_samples", "Monte-Carlo samples for the exponent (default 64)");
  opt(pes, "lyap_horizon", "orbit length per exponent sample (default 200)");
  opt(pes, "renorm", "QR renormalization interval (default 0.5)");

  auto* ham = app.add_subcommand("hamiltonian", "level-resolved exponents of a Hamiltonian on R^4");
  common(ham);
  opt(ham, "H", "builtin:NAME or a JSON system file");
  opt(ham, "system", "same as --H");
  opt(ham, "levels", "a:b:k (k equally spaced levels) or a list");
  opt(ham, "n_samples", "samples per level (default 16)");
  opt(ham, "t_horizon", "orbit length per sample (default 100)");
  opt(ham, "renorm", "QR renormalization interval (default 0.5)");

  auto* lst = app.add_subcommand("list-systems", "names of the built-in systems");
  (void)lst;

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    write_error(err, "InvalidArgument", e.what(), kValidation);
    return kValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    nlohmann::json merged = nlohmann::json::object();
    const std::string suffix = "@" + command;
    if (auto it = options.find("config" + suffix); it != options.end() && it->second->count() > 0) {
      std::ifstream f(values["config" + suffix]);
      if (!f) fail(ErrorCode::InvalidArgument, "cannot read config file " + values["config" + suffix]);
      try {
        f >> merged;
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("config file is not valid JSON: ") + e.what());
      }
      require(merged.is_object(), "config file must hold a JSON object");
    }
    for (const auto& [key, o] : options) {
      const auto at = key.find('@');
      if (key.substr(at) != suffix || o->count() == 0) continue;
      const std::string name = key.substr(0, at);
      if (name == "config") continue;
      if (flags.count(name)) {
        merged[name] = true;
      } else {
        merged[name] = values[key];
      }
    }

    Config plumbing(merged);
    std::size_t threads = default_threads();
    if (plumbing.has("threads")) {
      threads = plumbing.count("threads", threads);
      require(threads >= 1, "threads must be at least 1");
    }
    Output output(out, plumbing.has("out") ? plumbing.text("out", "") : "",
                  plumbing.has("format") ? plumbing.text("format", "json") : "json", plumbing.flag("overwrite"));

    for (const char* k : {"threads", "out", "format", "overwrite", "config"}) merged.erase(k);
    Config cfg(merged);
    int code = kOk;
    if (command == "list-systems") code = commands::list_systems(cfg, output);
    if (command == "simulate") code = commands::simulate(cfg, output, threads);
    if (command == "lyapunov") code = commands::lyapunov(cfg, output, threads);
    if (command == "dominate") code = commands::dominate(cfg, output, threads);
    if (command == "suspend") code = commands::suspend(cfg, output, threads);
    if (command == "entropy") code = commands::entropy(cfg, output, threads);
    if (command == "pesin-check") code = commands::pesin_check(cfg, output, threads);
    if (command == "hamiltonian") code = commands::hamiltonian(cfg, output, threads);
    return code;
  } catch (const Error& e) {
    const int code = is_validation_error(e.code()) ? kValidation : kNumerical;
    write_error(err, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const nlohmann::json::exception& e) {
    write_error(err, "InvalidArgument", e.what(), kValidation);
    return kValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    write_error(err, "InvalidArgument", e.what(), kValidation);
    return kValidation;
  } catch (const std::exception& e) {
    write_error(err, "InternalError", e.what(), kNumerical);
    return kNumerical;
  }
}

}  // namespace pesin_lab::cli
