#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "arnoldi.hpp"
#include "chain.hpp"
#include "floquet.hpp"
#include "ising_precise.hpp"
#include "lanczos_td.hpp"
#include "models.hpp"

namespace krylov_td {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

// ---------------------------------------------------------------- config access

// JSON node with pointer-style location; errors carry file:line when the key can be found in the text.
class ConfigNode {
 public:
  ConfigNode(const json& j, std::string pointer, std::shared_ptr<const std::string> text, std::string file)
      : j_(&j), pointer_(std::move(pointer)), text_(std::move(text)), file_(std::move(file)) {}

  const json& raw() const { return *j_; }
  const std::string& pointer() const { return pointer_; }
  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  ConfigNode child(const std::string& key) const {
    if (!has(key)) fail("missing required key '" + key + "'", key);
    return ConfigNode((*j_)[key], pointer_ + "/" + key, text_, file_);
  }
  ConfigNode at(std::size_t i) const {
    return ConfigNode((*j_)[i], pointer_ + "/" + std::to_string(i), text_, file_);
  }

  double number(const std::string& key) const {
    const auto c = child(key);
    if (!c.raw().is_number()) c.fail("expected a number", key);
    return c.raw().get<double>();
  }
  double number(const std::string& key, double def) const { return has(key) ? number(key) : def; }
  int integer(const std::string& key) const {
    const auto c = child(key);
    if (!c.raw().is_number_integer()) c.fail("expected an integer", key);
    return c.raw().get<int>();
  }
  int integer(const std::string& key, int def) const { return has(key) ? integer(key) : def; }
  std::string string(const std::string& key) const {
    const auto c = child(key);
    if (!c.raw().is_string()) c.fail("expected a string", key);
    return c.raw().get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) const { return has(key) ? string(key) : def; }
  std::vector<double> numbers(const std::string& key) const {
    const auto c = child(key);
    if (!c.raw().is_array()) c.fail("expected an array of numbers", key);
    std::vector<double> out;
    for (std::size_t i = 0; i < c.raw().size(); ++i) {
      if (!c.raw()[i].is_number()) c.at(i).fail("expected a number", key);
      out.push_back(c.raw()[i].get<double>());
    }
    return out;
  }
  std::vector<std::string> strings(const std::string& key) const {
    const auto c = child(key);
    if (!c.raw().is_array()) c.fail("expected an array of strings", key);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < c.raw().size(); ++i) {
      if (!c.raw()[i].is_string()) c.at(i).fail("expected a string", key);
      out.push_back(c.raw()[i].get<std::string>());
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& msg, const std::string& key_hint = {}) const {
    throw ConfigError(pointer_.empty() ? "/: " + msg : pointer_ + ": " + msg, location(key_hint));
  }

 private:
  std::string location(const std::string& key) const {
    std::string loc = file_;
    if (text_ && !key.empty()) {
      const auto pos = text_->find("\"" + key + "\"");
      if (pos != std::string::npos) loc += ":" + std::to_string(1 + std::count(text_->begin(), text_->begin() + pos, '\n'));
    }
    return loc;
  }

  const json* j_;
  std::string pointer_;
  std::shared_ptr<const std::string> text_;
  std::string file_;
};

// ---------------------------------------------------------------- protocol / model parsing

inline Protocol parse_protocol(const ConfigNode& n, const std::string& key) {
  const auto c = n.child(key);
  if (c.raw().is_number()) return Protocol::constant(c.raw().get<double>());
  if (!c.raw().is_object()) c.fail("expected a number or a protocol object", key);
  const std::string type = c.string("type");
  if (type == "constant") return Protocol::constant(c.number("value"));
  if (type == "linear") return Protocol::linear(c.number("c0", 0.0), c.number("c1"));
  if (type == "polynomial") return Protocol::polynomial(c.numbers("coeffs"));
  if (type == "sinusoid")
    return Protocol::sinusoid(c.number("offset", 0.0), c.number("amplitude", 1.0), c.number("omega"), c.number("phase", 0.0));
  if (type == "ramp_to_pi") {
    const double tf = c.number("t_f");
    if (!(tf > 0)) c.fail("t_f must be positive", "t_f");
    return Protocol::ramp_to_pi(tf);
  }
  if (type == "tabulated") {
    try {
      return Protocol::tabulated(c.numbers("t"), c.numbers("v"));
    } catch (const ConfigError& e) {
      c.fail(e.what(), "t");
    }
  }
  c.fail("unknown protocol type '" + type + "'", "type");
}

inline CMat parse_matrix(const ConfigNode& n, const std::string& key) {
  const auto c = n.child(key);
  auto read = [&](const std::string& part, bool required) -> RMat {
    if (!c.has(part)) {
      if (required) c.fail("matrix needs a 'real' part", part);
      return RMat();
    }
    const auto rows = c.child(part);
    if (!rows.raw().is_array() || rows.raw().empty()) rows.fail("expected a non-empty array of rows", part);
    const std::size_t nr = rows.raw().size();
    RMat m(nr, nr);
    for (std::size_t i = 0; i < nr; ++i) {
      const auto& r = rows.raw()[i];
      if (!r.is_array() || r.size() != nr) rows.at(i).fail("rows must be arrays of equal length (square matrix)", part);
      for (std::size_t k = 0; k < nr; ++k) {
        if (!r[k].is_number()) rows.at(i).fail("expected numbers", part);
        m(i, k) = r[k].get<double>();
      }
    }
    return m;
  };
  const RMat re = read("real", true);
  RMat im = read("imag", false);
  if (im.size() == 0) im = RMat::Zero(re.rows(), re.cols());
  if (im.rows() != re.rows()) c.fail("'imag' must match 'real' in size", "imag");
  CMat m(re.rows(), re.cols());
  m.real() = re;
  m.imag() = im;
  return m;
}

inline CVec parse_vector(const ConfigNode& n, const std::string& key) {
  const auto c = n.child(key);
  const auto re = c.numbers("real");
  const auto im = c.has("imag") ? c.numbers("imag") : std::vector<double>(re.size(), 0.0);
  if (im.size() != re.size()) c.fail("'imag' must match 'real' in length", "imag");
  CVec v(re.size());
  for (std::size_t i = 0; i < re.size(); ++i) v[i] = Complex(re[i], im[i]);
  return v;
}

inline BasisKind parse_basis(const std::string& s, const ConfigNode& n, const std::string& key) {
  if (s == "fixed") return BasisKind::FixedInitialState;
  if (s == "instantaneous") return BasisKind::Instantaneous;
  n.fail("basis must be 'fixed' or 'instantaneous'", key);
}

inline ModelSpec parse_model(const ConfigNode& m) {
  ModelSpec spec;
  const std::string kind = m.string("kind");
  if (kind == "single_spin") {
    SpinParams p;
    if (m.has("two_s"))
      p.two_s = m.integer("two_s");
    else
      p.two_s = static_cast<int>(std::lround(2.0 * m.number("S")));
    p.h = m.has("h") ? parse_protocol(m, "h") : Protocol::constant(1.0);
    p.theta = m.has("theta") ? parse_protocol(m, "theta") : Protocol::constant(0.0);
    p.phi = m.has("phi") ? parse_protocol(m, "phi") : Protocol::constant(0.0);
    spec.params = p;
  } else if (kind == "oscillator_translate") {
    TranslateParams p;
    p.mass = m.number("mass", 1.0);
    p.omega = m.number("omega", 1.0);
    p.x0 = parse_protocol(m, "x0");
    p.n_max = m.integer("n_max", 64);
    spec.params = p;
  } else if (kind == "oscillator_dilate") {
    DilateParams p;
    p.mass = m.number("mass", 1.0);
    p.omega = parse_protocol(m, "omega");
    p.n_max = m.integer("n_max", 64);
    spec.params = p;
  } else if (kind == "ising") {
    IsingParams p;
    p.n_sites = m.integer("N");
    p.t_quench = m.number("t_Q");
    p.dt = m.number("dt", 0.1);
    p.h = m.number("h", 1.0);
    spec.params = p;
  } else if (kind == "lmg") {
    LmgParams p;
    p.n_spins = m.integer("N");
    p.j = m.number("J", 1.0);
    p.h = m.number("h");
    p.omega = m.number("Omega");
    const auto drive = m.string("drive", "sin");
    if (drive != "sin" && drive != "cos") m.fail("drive must be 'sin' or 'cos'", "drive");
    p.drive = drive == "sin" ? LmgDrive::Sin : LmgDrive::Cos;
    spec.params = p;
  } else if (kind == "custom") {
    CustomParams p;
    const auto terms = m.child("terms");
    if (!terms.raw().is_array() || terms.raw().empty()) terms.fail("expected a non-empty array of terms", "terms");
    for (std::size_t i = 0; i < terms.raw().size(); ++i) {
      const auto t = terms.at(i);
      CustomTerm term;
      term.matrix = parse_matrix(t, "matrix");
      term.coefficient = t.has("coefficient") ? parse_protocol(t, "coefficient") : Protocol::constant(1.0);
      p.terms.push_back(std::move(term));
    }
    if (m.has("initial_state")) {
      p.initial_state = parse_vector(m, "initial_state");
    } else {
      p.initial_state = CVec::Zero(p.terms[0].matrix.rows());
      p.initial_state[0] = 1.0;
    }
    spec.params = p;
  } else {
    m.fail("unknown model kind '" + kind + "'", "kind");
  }
  try {
    validate_spec(spec);
  } catch (const ConfigError& e) {
    m.fail(e.what(), "kind");
  }
  return spec;
}

// ---------------------------------------------------------------- experiment config

enum class ExperimentKind { Fig1Spin, Fig2Ising, Fig3Lmg, Custom };

struct Fig1Config {
  int two_s = 20;
  double h = 1.0;
  std::vector<double> ht_f{0.5, 1.0, 2.0, 4.0};
  std::vector<BasisKind> bases{BasisKind::FixedInitialState, BasisKind::Instantaneous};
  int n_steps = 1000;
  double theta_th = 0.1;
};

struct Fig2Config {
  int n_sites = 12;
  double h = 1.0;
  double h_dt = 0.1;
  std::vector<double> ht_q{5.0, 15.0, 30.0};
  int heatmap_n_max = 80;
  int max_krylov = 0;
  std::string precision = "double_double";  // arithmetic of the complexity curve: double_double | quad | double
};

struct Fig3Config {
  int n_spins = 40;
  double j = 1.0;
  double omega_over_j = 0.1;
  std::vector<double> h_over_j{2.0};
  int k_max = 0;  // 0: 2N
  int fourier_m = -1;
  LmgDrive drive = LmgDrive::Sin;
};

struct CustomConfig {
  ModelSpec spec;
  double t_start = 0.0, t_end = 1.0;
  int n_steps = 1000;
  int k_max = 0;
  double theta_th = 0.1;
  FrameRoute route = FrameRoute::Auto;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Fig1Spin;
  std::string name;
  std::string output_dir;
  json echo;
  Fig1Config fig1;
  Fig2Config fig2;
  Fig3Config fig3;
  CustomConfig custom;
};

inline std::vector<double> sweep_list(const ConfigNode& root, const std::string& key, std::vector<double> def) {
  if (!root.has("sweep")) return def;
  const auto sw = root.child("sweep");
  if (!sw.has(key)) return def;
  auto v = sw.numbers(key);
  if (v.empty()) sw.fail("sweep list '" + key + "' is empty", key);
  return v;
}

inline void require_positive(const ConfigNode& n, const std::string& key, double v) {
  if (!(v > 0)) n.fail("'" + key + "' must be positive", key);
}

inline ExperimentConfig parse_config_text(const std::string& text, const std::string& file, bool full_scale = false) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ConfigError(std::string("malformed JSON: ") + e.what(), file + ":" + std::to_string(line));
  }
  auto shared = std::make_shared<const std::string>(text);
  const ConfigNode root(j, "", shared, file);
  if (!j.is_object()) root.fail("top level must be an object");

  ExperimentConfig cfg;
  cfg.echo = j;
  cfg.name = root.string("experiment");
  cfg.output_dir = root.string("output_dir", "");
  const ConfigNode fs = full_scale && root.has("full_scale") ? root.child("full_scale") : root;

  if (cfg.name == "fig1_spin") {
    cfg.kind = ExperimentKind::Fig1Spin;
    auto& c = cfg.fig1;
    c.two_s = root.has("two_s") ? root.integer("two_s") : static_cast<int>(std::lround(2.0 * root.number("S", 10.0)));
    if (c.two_s < 1) root.fail("S must be >= 1/2", "S");
    c.h = root.number("h", 1.0);
    c.ht_f = sweep_list(root, "ht_f", c.ht_f);
    for (double x : c.ht_f) require_positive(root.child("sweep"), "ht_f", x);
    if (root.has("bases")) {
      c.bases.clear();
      const auto names = root.strings("bases");
      if (names.empty()) root.fail("'bases' is empty", "bases");
      for (const auto& s : names) c.bases.push_back(parse_basis(s, root, "bases"));
    }
    c.n_steps = root.integer("n_steps", c.n_steps);
    if (c.n_steps < 4) root.fail("'n_steps' must be >= 4", "n_steps");
    c.theta_th = root.number("theta_th", c.theta_th);
    require_positive(root, "theta_th", c.theta_th);
    require_positive(root, "h", c.h);
  } else if (cfg.name == "fig2_ising") {
    cfg.kind = ExperimentKind::Fig2Ising;
    auto& c = cfg.fig2;
    c.n_sites = fs.integer("N", root.integer("N", c.n_sites));
    c.h = root.number("h", c.h);
    c.h_dt = root.number("h_dt", c.h_dt);
    c.ht_q = sweep_list(root, "ht_Q", c.ht_q);
    for (double x : c.ht_q) require_positive(root.child("sweep"), "ht_Q", x);
    c.heatmap_n_max = root.integer("heatmap_n_max", c.heatmap_n_max);
    c.max_krylov = fs.integer("max_krylov", root.integer("max_krylov", c.max_krylov));
    c.precision = fs.string("precision", root.string("precision", c.precision));
    if (c.precision != "double_double" && c.precision != "quad" && c.precision != "double")
      root.fail("'precision' must be double_double, quad or double", "precision");
    require_positive(root, "h", c.h);
    require_positive(root, "h_dt", c.h_dt);
    if (c.n_sites < 2 || c.n_sites % 2) root.fail("'N' must be even and >= 2", "N");
    if (c.n_sites / 2 > 20) root.fail("'N' too large for dense state storage", "N");
  } else if (cfg.name == "fig3_lmg") {
    cfg.kind = ExperimentKind::Fig3Lmg;
    auto& c = cfg.fig3;
    c.n_spins = fs.integer("N", root.integer("N", c.n_spins));
    c.j = root.number("J", c.j);
    c.omega_over_j = root.number("Omega_over_J", c.omega_over_j);
    c.h_over_j = sweep_list(root, "h_over_J", c.h_over_j);
    c.k_max = fs.integer("k_max", root.integer("k_max", c.k_max));
    c.fourier_m = root.integer("fourier_M", c.fourier_m);
    const auto drive = root.string("drive", "sin");
    if (drive != "sin" && drive != "cos") root.fail("drive must be 'sin' or 'cos'", "drive");
    c.drive = drive == "sin" ? LmgDrive::Sin : LmgDrive::Cos;
    if (c.n_spins < 1) root.fail("'N' must be >= 1", "N");
    require_positive(root, "J", c.j);
    require_positive(root, "Omega_over_J", c.omega_over_j);
    if (c.k_max < 0) root.fail("'k_max' must be >= 0", "k_max");
  } else if (cfg.name == "custom") {
    cfg.kind = ExperimentKind::Custom;
    auto& c = cfg.custom;
    c.spec = parse_model(root.child("model"));
    c.spec.initial_basis = parse_basis(root.string("basis", "fixed"), root, "basis");
    if (root.has("grid")) {
      const auto g = root.child("grid");
      c.t_start = g.number("t_start", 0.0);
      c.t_end = g.number("t_end");
      c.n_steps = g.integer("n_steps", c.n_steps);
      if (!(c.t_end > c.t_start)) g.fail("t_end must exceed t_start", "t_end");
      if (c.n_steps < 4) g.fail("'n_steps' must be >= 4", "n_steps");
    } else {
      root.fail("missing required key 'grid'", "grid");
    }
    c.k_max = root.integer("k_max", hilbert_dim(c.spec));
    if (c.k_max < 1) root.fail("'k_max' must be >= 1", "k_max");
    c.theta_th = root.number("theta_th", c.theta_th);
    require_positive(root, "theta_th", c.theta_th);
    const auto route = root.string("route", "auto");
    if (route == "auto") c.route = FrameRoute::Auto;
    else if (route == "lab") c.route = FrameRoute::Lab;
    else if (route == "moving") c.route = FrameRoute::Moving;
    else root.fail("route must be 'auto', 'lab' or 'moving'", "route");
    if (c.route == FrameRoute::Moving && !(c.spec.initial_basis == BasisKind::Instantaneous && has_analytic_frame(c.spec)))
      root.fail("moving-frame route needs an instantaneous basis on a model with an analytic frame", "route");
  } else {
    root.fail("unknown experiment '" + cfg.name + "'", "experiment");
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path, bool full_scale = false) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path, full_scale);
}

// ---------------------------------------------------------------- output

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct CsvTable {
  std::string name;  // relative path
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> r) { rows.push_back(std::move(r)); }
};

inline void write_csv(const std::filesystem::path& dir, const CsvTable& t) {
  const auto path = dir / t.name;
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << "\n";
  }
}

// Output of one sweep point.
struct PointResult {
  std::string label;
  std::vector<CsvTable> tables;
  json summary;
};

// ---------------------------------------------------------------- pipelines

inline std::string label_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

inline ModelSpec fig1_spec(const Fig1Config& c, double ht_f, BasisKind basis) {
  SpinParams p;
  p.two_s = c.two_s;
  p.h = Protocol::constant(c.h);
  p.theta = Protocol::ramp_to_pi(ht_f / c.h);
  ModelSpec spec;
  spec.params = p;
  spec.initial_basis = basis;
  return spec;
}

inline PointResult run_fig1_point(const Fig1Config& c, double ht_f, BasisKind basis) {
  const double t_f = ht_f / c.h;
  const ModelSpec spec = fig1_spec(c, ht_f, basis);
  const TimeGrid grid(0.0, t_f, c.n_steps);
  const auto kd = run_lanczos_td(spec, grid, c.two_s + 1);
  const auto cs = propagate_chain(kd);
  const auto sr = spread_report(cs, kd);
  const auto env = lr_envelope(kd, c.theta_th);
  const auto rec = reconstruct_and_compare(kd, cs, spec);

  PointResult pr;
  pr.label = std::string(basis == BasisKind::Instantaneous ? "instantaneous" : "fixed") + "_htf" + label_number(ht_f);
  CsvTable cx{pr.label + "/complexity.csv", {"t", "K"}, {}};
  CsvTable an{pr.label + "/angles.csv", {"t", "n", "theta", "envelope"}, {}};
  CsvTable lz{pr.label + "/lanczos.csv", {"t", "k", "a", "b"}, {}};
  CsvTable cr{pr.label + "/crossings.csv", {"n", "t_cross"}, {}};
  for (int j = 0; j < grid.size(); ++j) {
    const auto t = fmt17(grid.node(j));
    cx.add({t, fmt17(sr.K[j])});
    for (int n = 0; n + 1 < kd.d(); ++n) an.add({t, std::to_string(n), fmt17(sr.theta(n, j)), fmt17(env.envelope(n, j))});
    for (int k = 0; k < kd.d(); ++k) lz.add({t, std::to_string(k), fmt17(kd.a()(k, j)), fmt17(kd.b()(k, j))});
  }
  for (int n = 0; n + 1 < kd.d(); ++n)
    if (env.crossing[n]) cr.add({std::to_string(n), fmt17(env.crossing[n]->time)});
  pr.tables = {cx, an, lz, cr};
  pr.summary = {{"label", pr.label}, {"ht_f", ht_f}, {"d", kd.d()}, {"halt", to_string(kd.halt)},
                {"final_K", sr.K.back()}, {"reconstruction_max_deviation", rec.max_deviation}};
  return pr;
}

struct IsingCurve {
  double ht_q = 0.0;
  std::vector<double> times;
  std::vector<double> K;                    // full-orthogonalization amplitudes
  std::vector<std::vector<double>> abs_z;   // |z_n^k| from the f recurrence
  double max_completeness_dev = 0.0;
};

inline IsingParams fig2_params(const Fig2Config& c, double ht_q) {
  IsingParams p;
  p.n_sites = c.n_sites;
  p.h = c.h;
  p.t_quench = ht_q / c.h;
  p.dt = c.h_dt / c.h;
  return p;
}

inline IsingCurve run_ising_curve(const Fig2Config& c, double ht_q, bool with_heatmap = true) {
  const auto p = fig2_params(c, ht_q);
  IsingCurve out;
  out.ht_q = ht_q;
  IsingKrylovCurve fo;
  if (c.precision == "quad")
    fo = ising_full_orthogonalization<quad>(p, c.max_krylov, 2, with_heatmap);
  else if (c.precision == "double")
    fo = ising_full_orthogonalization<double>(p, c.max_krylov, 2, with_heatmap);
  else
    fo = ising_full_orthogonalization<DoubleDouble>(p, c.max_krylov, 2, with_heatmap);
  out.times = std::move(fo.times);
  out.K = std::move(fo.K);
  out.max_completeness_dev = fo.max_completeness_dev;
  out.abs_z = std::move(fo.abs_z);
  return out;
}

inline PointResult run_fig2_point(const Fig2Config& c, double ht_q) {
  const auto curve = run_ising_curve(c, ht_q);
  PointResult pr;
  pr.label = "htQ" + label_number(ht_q);
  CsvTable cx{pr.label + "/complexity.csv", {"t", "K"}, {}};
  for (std::size_t k = 0; k < curve.K.size(); ++k) cx.add({fmt17(curve.times[k]), fmt17(curve.K[k])});
  CsvTable zh{pr.label + "/z_heatmap.csv", {"k", "n", "abs_z"}, {}};
  for (std::size_t k = 0; k < curve.abs_z.size(); ++k)
    for (std::size_t n = 0; n < curve.abs_z[k].size() && static_cast<int>(n) <= c.heatmap_n_max; ++n)
      zh.add({std::to_string(k), std::to_string(n), fmt17(curve.abs_z[k][n])});
  pr.tables = {cx, zh};
  pr.summary = {{"label", pr.label}, {"ht_Q", ht_q}, {"N", c.n_sites}, {"final_K", curve.K.back()}, {"precision", c.precision},
                {"max_completeness_deviation", curve.max_completeness_dev}};
  return pr;
}

inline ModelSpec fig3_spec(const Fig3Config& c, double h_over_j, double omega_scale = 1.0) {
  LmgParams p;
  p.n_spins = c.n_spins;
  p.j = c.j;
  p.h = h_over_j * c.j;
  p.omega = c.omega_over_j * c.j * omega_scale;
  p.drive = c.drive;
  ModelSpec spec;
  spec.params = p;
  return spec;
}

inline PointResult run_fig3_point(const Fig3Config& c, double h_over_j) {
  const ModelSpec spec = fig3_spec(c, h_over_j);
  const int k_max = c.k_max > 0 ? c.k_max : 2 * c.n_spins;
  const auto data = sambe_lanczos(spec, k_max, c.fourier_m);
  const auto st = static_limit_lanczos(spec, k_max);
  PointResult pr;
  pr.label = "h" + label_number(h_over_j);
  CsvTable lz{pr.label + "/lanczos.csv", {"k", "a", "b", "a_static", "b_static"}, {}};
  for (int k = 0; k < data.d_effective; ++k) {
    const bool has_st = k < static_cast<int>(st.a.size());
    lz.add({std::to_string(k), fmt17(data.a[k]), fmt17(data.b[k]), has_st ? fmt17(st.a[k]) : "",
            has_st ? fmt17(st.b[k]) : ""});
  }
  CsvTable pop{pr.label + "/populations.csv", {"k", "index", "kind", "value"}, {}};
  for (int k = 0; k < data.d_effective; ++k) {
    const auto p = populations(data, k);
    for (std::size_t mu = 0; mu < p.hilbert.size(); ++mu)
      pop.add({std::to_string(k), std::to_string(mu), "hilbert", fmt17(p.hilbert[mu])});
    const int M = data.layout.M;
    for (int m = -M; m <= M; ++m) pop.add({std::to_string(k), std::to_string(m), "fourier", fmt17(p.fourier[m + M])});
  }
  pr.tables = {lz, pop};
  pr.summary = {{"label", pr.label}, {"h_over_J", h_over_j}, {"d_effective", data.d_effective},
                {"fourier_M", data.layout.M}, {"certified_rows", data.certified_rows}};
  if (data.truncation_warning) pr.summary["truncation_warning"] = *data.truncation_warning;
  return pr;
}

inline PointResult run_custom_point(const CustomConfig& c) {
  const TimeGrid grid(c.t_start, c.t_end, c.n_steps);
  LanczosOptions opt;
  opt.route = c.route;
  const auto kd = run_lanczos_td(c.spec, grid, c.k_max, opt);
  const auto cs = propagate_chain(kd);
  const auto sr = spread_report(cs, kd);
  const auto env = lr_envelope(kd, c.theta_th);
  const auto rec = reconstruct_and_compare(kd, cs, c.spec);
  PointResult pr;
  pr.label = "custom";
  CsvTable cx{"complexity.csv", {"t", "K"}, {}};
  CsvTable an{"angles.csv", {"t", "n", "theta", "envelope"}, {}};
  CsvTable lz{"lanczos.csv", {"t", "k", "a", "b"}, {}};
  for (int j = 0; j < grid.size(); ++j) {
    const auto t = fmt17(grid.node(j));
    cx.add({t, fmt17(sr.K[j])});
    for (int n = 0; n + 1 < kd.d(); ++n) an.add({t, std::to_string(n), fmt17(sr.theta(n, j)), fmt17(env.envelope(n, j))});
    for (int k = 0; k < kd.d(); ++k) lz.add({t, std::to_string(k), fmt17(kd.a()(k, j)), fmt17(kd.b()(k, j))});
  }
  pr.tables = {cx, an, lz};
  pr.summary = {{"model", to_string(c.spec.kind())}, {"d", kd.d()}, {"halt", to_string(kd.halt)},
                {"moving_frame", kd.moving_frame}, {"reconstruction_max_deviation", rec.max_deviation},
                {"reconstruction_complete", rec.complete}};
  return pr;
}

// ---------------------------------------------------------------- driver

// Runs jobs on up to n_threads workers; results kept in job order; first failure (by job index) rethrown.
template <typename R>
std::vector<R> run_parallel(const std::vector<std::function<R()>>& jobs, int n_threads) {
  std::vector<R> out(jobs.size());
  std::vector<std::exception_ptr> errs(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < jobs.size();) {
      try {
        out[i] = jobs[i]();
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(n_threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
  return out;
}

inline std::string grid_hash(const std::string& s) {
  std::ostringstream os;
  os << std::hex << std::hash<std::string>{}(s);
  return os.str();
}

struct RunSummary {
  std::filesystem::path out_dir;
  std::vector<std::string> files;
  json manifest;
};

inline RunSummary run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, int n_threads = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::function<PointResult()>> jobs;
  std::string grid_desc;
  switch (cfg.kind) {
    case ExperimentKind::Fig1Spin:
      for (auto basis : cfg.fig1.bases)
        for (double x : cfg.fig1.ht_f) jobs.push_back([&cfg, basis, x] { return run_fig1_point(cfg.fig1, x, basis); });
      grid_desc = "fig1:" + std::to_string(cfg.fig1.n_steps);
      break;
    case ExperimentKind::Fig2Ising:
      for (double x : cfg.fig2.ht_q) jobs.push_back([&cfg, x] { return run_fig2_point(cfg.fig2, x); });
      grid_desc = "fig2:" + fmt17(cfg.fig2.h_dt) + ":" + std::to_string(cfg.fig2.n_sites);
      break;
    case ExperimentKind::Fig3Lmg:
      for (double x : cfg.fig3.h_over_j) jobs.push_back([&cfg, x] { return run_fig3_point(cfg.fig3, x); });
      grid_desc = "fig3:" + std::to_string(cfg.fig3.n_spins) + ":" + std::to_string(cfg.fig3.k_max);
      break;
    case ExperimentKind::Custom:
      jobs.push_back([&cfg] { return run_custom_point(cfg.custom); });
      grid_desc = "custom:" + fmt17(cfg.custom.t_start) + ":" + fmt17(cfg.custom.t_end) + ":" +
                  std::to_string(cfg.custom.n_steps);
      break;
  }
  const auto results = run_parallel(jobs, n_threads);

  RunSummary rs;
  rs.out_dir = out_dir;
  std::filesystem::create_directories(rs.out_dir);
  json files = json::array();
  json points = json::array();
  for (const auto& pr : results) {
    for (const auto& t : pr.tables) {
      write_csv(rs.out_dir, t);
      rs.files.push_back(t.name);
      files.push_back({{"path", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}});
    }
    points.push_back(pr.summary);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rs.manifest = {{"config", cfg.echo},          {"version", kVersion}, {"grid_hash", grid_hash(grid_desc)},
                 {"wall_clock_seconds", wall}, {"files", files},      {"points", points}};
  std::ofstream(rs.out_dir / "manifest.json") << rs.manifest.dump(2) << "\n";
  return rs;
}

}  // namespace krylov_td
