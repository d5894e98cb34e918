#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pesin_lab/entropy.hpp"
#include "pesin_lab/hamiltonian.hpp"
#include "pesin_lab/lyapunov.hpp"
#include "pesin_lab/poincare.hpp"
#include "pesin_lab/suspension.hpp"

namespace pesin_lab {

using nlohmann::json;

inline json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json to_json(const IntegratorOptions& o) {
  return {{"atol", o.atol}, {"rtol", o.rtol}, {"h_init", o.h_init}, {"max_steps", o.max_steps}};
}

inline json to_json(const LiouvilleReport& r) {
  return {{"det", r.det}, {"det_full_product", r.det_product}, {"expected", r.expected}, {"error", r.error},
          {"segments", r.segments}};
}

inline json to_json(const LyapunovSpectrum& s) {
  json j = {{"exponents", s.exponents},       {"t_total", s.t_total}, {"renorm_interval", s.renorm_interval},
            {"residual_sum", s.residual_sum}, {"end", to_json(s.end)}, {"min_speed", s.min_speed}};
  if (s.flow_exponent_index) {
    j["flow_exponent_index"] = *s.flow_exponent_index;
    j["flow_alignment_deg"] = s.flow_alignment_deg;
  } else {
    j["flow_exponent_index"] = nullptr;
  }
  if (s.exponents.size() == 3) j["pairing_check"] = pairing_check(s);
  return j;
}

inline json to_json(const IntegratedExponent& e) {
  return {{"value", e.value},         {"std_error", e.std_error},   {"n_samples", e.n_samples},
          {"n_rejected", e.n_rejected}, {"t_horizon", e.t_horizon}, {"method", to_string(e.method)},
          {"seed", e.seed}};
}

inline json to_json(const PoincareCocycle& p) {
  return {{"t", p.t}, {"start", to_json(p.start.base)}, {"end", to_json(p.end.base)}, {"matrix", to_json(p.matrix)},
          {"determinant", p.matrix.determinant()}};
}

inline json to_json(const DominationReport& r) {
  json samples = json::array();
  for (const auto& s : r.splitting) {
    samples.push_back({{"base", to_json(s.base)},
                       {"n_minus", to_json(s.n_minus)},
                       {"n_plus", to_json(s.n_plus)},
                       {"product", s.product}});
  }
  return {{"ell", r.ell},
          {"horizon", r.horizon},
          {"orbit_samples", r.orbit_samples},
          {"max_product", r.max_product},
          {"threshold", 0.5},
          {"passed", r.passed},
          {"splitting_method", r.splitting_method},
          {"splitting", samples}};
}

inline json to_json(const EntropyLevel& l) {
  return {{"n", l.n},
          {"H_n", l.h_n},
          {"H_n_over_n", l.h_n_over_n},
          {"conditional", l.conditional},
          {"conditional_stderr", l.conditional_stderr},
          {"occupied_cells", l.occupied},
          {"samples", l.samples},
          {"resolved", l.resolved}};
}

inline json to_json(const EntropyEstimate& e) {
  json diag = json::array();
  for (const auto& l : e.diagnostics) diag.push_back(to_json(l));
  return {{"value", e.value},
          {"n_depth", e.n_depth},
          {"std_error", e.std_error},
          {"bias_bound", e.bias_bound},
          {"time_step", e.time_step},
          {"n_orbits", e.n_orbits},
          {"orbit_length", e.orbit_length},
          {"seed", e.seed},
          {"method", to_string(e.method)},
          {"diagnostics", diag}};
}

inline json to_json(const PesinReport& r) {
  return {{"h_est", r.h_est},
          {"lambda_est", r.lambda_est},
          {"difference", r.difference},
          {"combined_stderr", r.combined_stderr},
          {"bias_bound", r.entropy.bias_bound},
          {"tolerance", r.tolerance},
          {"relative_gap", r.relative_gap},
          {"violation", r.violation},
          {"entropy", to_json(r.entropy)},
          {"exponent", to_json(r.exponent)}};
}

inline json to_json(const ExpansivityReport& r) {
  return {{"delta", r.delta},         {"pairs", r.pairs},       {"separated", r.separated},
          {"horizon", r.horizon},     {"fraction", r.fraction}, {"mean_separation_steps", r.mean_separation_steps}};
}

inline json to_json(const LevelIntegral& li) {
  json levels = json::array();
  for (std::size_t k = 0; k < li.levels.size(); ++k) {
    json l = to_json(li.levels[k]);
    l["energy"] = li.energies[k];
    levels.push_back(std::move(l));
  }
  return {{"value", li.value}, {"std_error", li.std_error}, {"levels", levels}};
}

/// Shortest round-trip decimal form, identical on every run.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Minimal CSV writer: header plus numeric rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(const std::vector<double>& row) { rows_.push_back(row); }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
    s += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + format_number(r[i]);
      s += '\n';
    }
    return s;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

inline CsvTable diagnostics_csv(const EntropyEstimate& e) {
  CsvTable t({"n", "H_n", "H_n/n", "occupied_cells", "samples", "conditional", "resolved"});
  for (const auto& l : e.diagnostics) {
    t.add({static_cast<double>(l.n), l.h_n, l.h_n_over_n, static_cast<double>(l.occupied),
           static_cast<double>(l.samples), l.conditional, l.resolved ? 1.0 : 0.0});
  }
  return t;
}

}  // namespace pesin_lab
