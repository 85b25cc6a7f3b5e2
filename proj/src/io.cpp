#include "nlffr/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nlffr/errors.hpp"

namespace nlffr::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("error writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// long CSV

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

struct Row {
  double t;
  double value;
  std::size_t line;
};

struct PendingCurve {
  std::string id;
  std::vector<Row> rows;
};

ObservedCurve finish(PendingCurve& p, const char* variable) {
  std::stable_sort(p.rows.begin(), p.rows.end(), [](const Row& a, const Row& b) { return a.t < b.t; });
  ObservedCurve c;
  c.subject_id = p.id;
  for (std::size_t k = 0; k < p.rows.size(); ++k) {
    if (k > 0 && p.rows[k].t == p.rows[k - 1].t) {
      throw ValidationError("line " + std::to_string(p.rows[k].line) + ": duplicate time " +
                            format_double(p.rows[k].t) + " for subject '" + p.id + "' variable " +
                            variable);
    }
    c.times.push_back(p.rows[k].t);
    c.values.push_back(p.rows[k].value);
  }
  return c;
}

}  // namespace

CurveData read_long_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<PendingCurve> xs, ys;
  std::map<std::string, std::size_t> x_index, y_index;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const auto fields = split_commas(trimmed);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"subject_id", "variable", "t", "value"}) {
        throw ValidationError("line " + std::to_string(line_no) +
                              ": expected header 'subject_id,variable,t,value'");
      }
      header_seen = true;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 4) throw ValidationError(where + "expected 4 fields, got " + std::to_string(fields.size()));
    const std::string& id = fields[0];
    if (id.empty()) throw ValidationError(where + "empty subject_id");
    const std::string& var = fields[1];
    if (var != "x" && var != "y") throw ValidationError(where + "variable must be 'x' or 'y', got '" + var + "'");
    double t = 0.0, v = 0.0;
    if (!parse_number(fields[2], t) || !std::isfinite(t)) throw ValidationError(where + "t is not a finite number");
    if (t < 0.0 || t > 1.0) throw ValidationError(where + "t = " + fields[2] + " lies outside [0,1]");
    if (!parse_number(fields[3], v) || !std::isfinite(v)) throw ValidationError(where + "value is not a finite number");

    auto& curves = var == "x" ? xs : ys;
    auto& index = var == "x" ? x_index : y_index;
    auto [it, inserted] = index.try_emplace(id, curves.size());
    if (inserted) curves.push_back({id, {}});
    curves[it->second].rows.push_back({t, v, line_no});
  }
  if (in.bad()) throw IoError("error reading curve data");
  if (!header_seen) throw ValidationError("line 1: missing header 'subject_id,variable,t,value'");

  CurveData data;
  for (auto& p : xs) data.x.push_back(finish(p, "x"));
  for (auto& p : ys) data.y.push_back(finish(p, "y"));
  return data;
}

CurveData read_long_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_long_csv(in);
}

void pair_by_subject(CurveData& data) {
  std::map<std::string, std::size_t> y_index;
  for (std::size_t i = 0; i < data.y.size(); ++i) y_index.emplace(data.y[i].subject_id, i);
  std::vector<std::string> unpaired;
  std::vector<ObservedCurve> ys;
  std::set<std::string> x_ids;
  for (const auto& c : data.x) {
    x_ids.insert(c.subject_id);
    auto it = y_index.find(c.subject_id);
    if (it == y_index.end()) {
      unpaired.push_back(c.subject_id + " (no y)");
    } else {
      ys.push_back(data.y[it->second]);
    }
  }
  for (const auto& c : data.y) {
    if (!x_ids.count(c.subject_id)) unpaired.push_back(c.subject_id + " (no x)");
  }
  if (!unpaired.empty()) {
    std::string msg = "unpaired subjects:";
    for (const auto& u : unpaired) msg += " " + u;
    throw ValidationError(msg);
  }
  data.y = std::move(ys);
}

// ---------------------------------------------------------------------------
// configs

namespace {

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": invalid JSON: " + e.what());
  }
}

// Collects every problem so a config reports all bad fields at once.
class FieldErrors {
 public:
  void add(const std::string& msg) { errors_.push_back(msg); }
  void raise(const std::string& what) const {
    if (errors_.empty()) return;
    std::string msg = what + ":";
    for (const auto& e : errors_) msg += "\n  " + e;
    throw ValidationError(msg);
  }

 private:
  std::vector<std::string> errors_;
};

void check_keys(const json& obj, const std::string& prefix, std::initializer_list<const char*> known,
                FieldErrors& errs) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) errs.add(prefix + it.key() + ": unknown field");
  }
}

template <typename T>
void read_field(const json& obj, const char* key, const std::string& prefix, T& out, FieldErrors& errs) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    errs.add(prefix + key + ": wrong type");
  }
}

void read_grid(const json& obj, const char* key, const std::string& prefix, std::vector<double>& out,
               FieldErrors& errs) {
  if (!obj.contains(key)) return;
  std::vector<double> g;
  try {
    g = obj.at(key).get<std::vector<double>>();
  } catch (const json::exception&) {
    errs.add(prefix + key + ": must be an array of numbers");
    return;
  }
  if (g.empty()) errs.add(prefix + key + ": must be nonempty");
  for (double v : g) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      errs.add(prefix + key + ": values must be positive");
      break;
    }
  }
  out = std::move(g);
}

void read_smoothing(const json& obj, const std::string& prefix, SmoothingConfig& cfg, FieldErrors& errs) {
  if (!obj.is_object()) {
    errs.add(prefix + ": must be an object");
    return;
  }
  check_keys(obj, prefix + ".", {"kernel", "eps_grid", "gamma_grid", "epsilon", "gamma"}, errs);
  if (obj.contains("kernel")) {
    try {
      cfg.kernel = time_kernel_kind_from_string(obj.at("kernel").get<std::string>());
    } catch (const std::exception&) {
      errs.add(prefix + ".kernel: expected \"grb\" or \"bmc\"");
    }
  }
  read_grid(obj, "eps_grid", prefix + ".", cfg.eps_grid, errs);
  read_grid(obj, "gamma_grid", prefix + ".", cfg.gamma_grid, errs);
  if (obj.contains("epsilon")) {
    double eps = 0.0;
    read_field(obj, "epsilon", prefix + ".", eps, errs);
    if (!(eps > 0.0)) errs.add(prefix + ".epsilon: must be positive");
    cfg.eps_grid = {eps};
    cfg.fixed = true;
    if (cfg.kernel == TimeKernelKind::GaussianRBF) {
      if (!obj.contains("gamma")) errs.add(prefix + ".gamma: required with a fixed epsilon for the grb kernel");
    }
  }
  if (obj.contains("gamma")) {
    double g = 0.0;
    read_field(obj, "gamma", prefix + ".", g, errs);
    if (!(g > 0.0)) errs.add(prefix + ".gamma: must be positive");
    cfg.gamma_grid = {g};
    if (!obj.contains("epsilon")) errs.add(prefix + ".epsilon: required with a fixed gamma");
  }
}

void read_regression(const json& obj, RegressionTuning& cfg, FieldErrors& errs) {
  const std::string prefix = "regression";
  if (!obj.is_object()) {
    errs.add(prefix + ": must be an object");
    return;
  }
  check_keys(obj, prefix + ".", {"eps_grid", "gamma_grid", "gamma_scale", "epsilon", "gamma"}, errs);
  read_grid(obj, "eps_grid", prefix + ".", cfg.eps_grid, errs);
  read_grid(obj, "gamma_grid", prefix + ".", cfg.gamma_grid, errs);
  if (obj.contains("gamma_scale")) {
    try {
      cfg.gamma_scale = gamma_scale_from_string(obj.at("gamma_scale").get<std::string>());
    } catch (const std::exception&) {
      errs.add(prefix + ".gamma_scale: expected \"absolute\" or \"median\"");
    }
  }
  const bool has_eps = obj.contains("epsilon");
  const bool has_gamma = obj.contains("gamma");
  // A fixed gamma is an actual second-layer gamma unless a scale is named.
  if (has_eps && has_gamma && !obj.contains("gamma_scale")) cfg.gamma_scale = GammaScale::Absolute;
  if (has_eps != has_gamma) errs.add(prefix + ": fixed tuning needs both epsilon and gamma");
  if (has_eps && has_gamma) {
    double eps = 0.0, g = 0.0;
    read_field(obj, "epsilon", prefix + ".", eps, errs);
    read_field(obj, "gamma", prefix + ".", g, errs);
    if (!(eps > 0.0)) errs.add(prefix + ".epsilon: must be positive");
    if (!(g > 0.0)) errs.add(prefix + ".gamma: must be positive");
    cfg.eps_grid = {eps};
    cfg.gamma_grid = {g};
    cfg.fixed = true;
  }
}

// Shared by run configs and scenario "fit" blocks.
FitConfig read_fit(const json& obj, TimeKernelKind default_kind, FieldErrors& errs) {
  TimeKernelKind kind = default_kind;
  if (obj.contains("kernel")) {
    try {
      kind = time_kernel_kind_from_string(obj.at("kernel").get<std::string>());
    } catch (const std::exception&) {
      errs.add("kernel: expected \"grb\" or \"bmc\"");
    }
  }
  FitConfig fit = default_fit_config(kind);
  if (obj.contains("x")) read_smoothing(obj.at("x"), "x", fit.x, errs);
  if (obj.contains("y")) read_smoothing(obj.at("y"), "y", fit.y, errs);
  if (obj.contains("regression")) read_regression(obj.at("regression"), fit.regression, errs);
  return fit;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  const json j = parse_json(json_text, "run config");
  FieldErrors errs;
  if (!j.is_object()) throw ValidationError("run config: top level must be an object");
  check_keys(j, "", {"kernel", "x", "y", "regression", "grid_size", "alpha", "band"}, errs);
  RunConfig cfg;
  cfg.fit = read_fit(j, TimeKernelKind::GaussianRBF, errs);
  read_field(j, "grid_size", "", cfg.grid_size, errs);
  if (cfg.grid_size < 2) errs.add("grid_size: must be at least 2");
  read_field(j, "alpha", "", cfg.alpha, errs);
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) errs.add("alpha: must lie in (0, 1)");
  if (j.contains("band")) {
    const json& b = j.at("band");
    if (!b.is_object()) {
      errs.add("band: must be an object");
    } else {
      check_keys(b, "band.", {"n_paths", "seed"}, errs);
      read_field(b, "n_paths", "band.", cfg.band.n_paths, errs);
      read_field(b, "seed", "band.", cfg.band.seed, errs);
      if (cfg.band.n_paths < 100) errs.add("band.n_paths: must be at least 100");
    }
  }
  errs.raise("run config");
  return cfg;
}

RunConfig read_run_config_file(const std::string& path) { return parse_run_config(read_file(path)); }

namespace {

sim::ScenarioConfig read_scenario(const json& j, const std::string& where, FieldErrors& errs) {
  sim::ScenarioConfig cfg;
  if (!j.is_object()) {
    errs.add(where + ": must be an object");
    return cfg;
  }
  check_keys(j, where + ".",
             {"model", "x_generator", "fit_kernel", "sigma", "design", "n_train", "n_test", "n_reps",
              "seed", "bmc_pairing", "coverage", "alpha", "n_paths", "fit"},
             errs);
  auto enum_field = [&](const char* key, auto parse, auto& out) {
    if (!j.contains(key)) return;
    try {
      out = parse(j.at(key).template get<std::string>());
    } catch (const std::exception&) {
      errs.add(where + "." + key + ": invalid value " + j.at(key).dump());
    }
  };
  enum_field("model", sim::response_model_from_string, cfg.model);
  enum_field("x_generator", sim::x_generator_from_string, cfg.x_generator);
  enum_field("fit_kernel", time_kernel_kind_from_string, cfg.fit_kernel);
  enum_field("design", sim::design_from_string, cfg.design);
  enum_field("bmc_pairing", sim::bmc_pairing_from_string, cfg.bmc_pairing);
  const std::string p = where + ".";
  read_field(j, "sigma", p, cfg.sigma, errs);
  read_field(j, "n_train", p, cfg.n_train, errs);
  read_field(j, "n_test", p, cfg.n_test, errs);
  read_field(j, "n_reps", p, cfg.n_reps, errs);
  read_field(j, "seed", p, cfg.seed, errs);
  read_field(j, "coverage", p, cfg.coverage, errs);
  read_field(j, "alpha", p, cfg.alpha, errs);
  read_field(j, "n_paths", p, cfg.n_paths, errs);
  if (!(cfg.sigma > 0.0)) errs.add(p + "sigma: must be positive");
  if (cfg.n_train < 2) errs.add(p + "n_train: must be at least 2");
  if (cfg.n_test < 1) errs.add(p + "n_test: must be positive");
  if (cfg.n_reps < 1) errs.add(p + "n_reps: must be positive");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) errs.add(p + "alpha: must lie in (0, 1)");
  if (cfg.n_paths < 100) errs.add(p + "n_paths: must be at least 100");
  if (j.contains("fit")) {
    const json& f = j.at("fit");
    if (!f.is_object()) {
      errs.add(p + "fit: must be an object");
    } else {
      check_keys(f, p + "fit.", {"x", "y", "regression"}, errs);
      FieldErrors inner;
      FitConfig fit = read_fit(f, cfg.fit_kernel, inner);
      fit.x.kernel = cfg.fit_kernel;
      fit.y.kernel = cfg.fit_kernel;
      try {
        inner.raise(p + "fit");
      } catch (const ValidationError& e) {
        errs.add(e.what());
      }
      cfg.fit_config = fit;
    }
  }
  return cfg;
}

}  // namespace

std::vector<sim::ScenarioConfig> parse_scenarios(const std::string& json_text) {
  const json j = parse_json(json_text, "scenario config");
  FieldErrors errs;
  std::vector<sim::ScenarioConfig> out;
  if (j.is_object() && j.contains("scenarios")) {
    check_keys(j, "", {"scenarios"}, errs);
    const json& list = j.at("scenarios");
    if (!list.is_array() || list.empty()) {
      errs.add("scenarios: must be a nonempty array");
    } else {
      for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(read_scenario(list[i], "scenarios[" + std::to_string(i) + "]", errs));
      }
    }
  } else {
    out.push_back(read_scenario(j, "scenario", errs));
  }
  errs.raise("scenario config");
  return out;
}

std::vector<sim::ScenarioConfig> read_scenarios_file(const std::string& path) {
  return parse_scenarios(read_file(path));
}

// ---------------------------------------------------------------------------
// model artifact

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index n) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    throw ValidationError("model artifact: matrix has the wrong number of rows");
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ValidationError("model artifact: matrix has the wrong number of columns");
    }
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
  }
  return m;
}

// NaN (the score of fixed tuning) is stored as null.
json number(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json kernel_to_json(const TimeKernel& k) { return {{"kind", to_string(k.kind())}, {"gamma", k.gamma()}}; }

TimeKernel kernel_from_json(const json& j) {
  return TimeKernel::make(time_kernel_kind_from_string(j.at("kind").get<std::string>()),
                          j.at("gamma").get<double>());
}

json curves_to_json(const std::vector<RecoveredCurve>& curves) {
  json arr = json::array();
  for (const auto& c : curves) {
    arr.push_back({{"times", c.times()},
                   {"coeffs", std::vector<double>(c.coeffs().data(), c.coeffs().data() + c.coeffs().size())}});
  }
  return arr;
}

std::vector<RecoveredCurve> curves_from_json(const json& arr, const TimeKernel& kernel, double eps) {
  std::vector<RecoveredCurve> out;
  for (const auto& c : arr) {
    const auto coeffs = c.at("coeffs").get<std::vector<double>>();
    out.emplace_back(c.at("times").get<std::vector<double>>(),
                     Eigen::Map<const Eigen::VectorXd>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())),
                     kernel, eps);
  }
  return out;
}

json smoothing_to_json(const SmoothingChoice& s, bool fixed) {
  return {{"epsilon", s.epsilon}, {"gamma", s.gamma}, {"gcv_score", number(s.gcv_score)},
          {"provenance", fixed ? "fixed" : "gcv"}};
}

SmoothingChoice smoothing_from_json(const json& j) {
  return {j.at("epsilon").get<double>(), j.at("gamma").get<double>(), number_from(j.at("gcv_score"))};
}

json report_to_json(const TuningReport& r) {
  return {{"x_smoothing", smoothing_to_json(r.x, r.x_fixed)},
          {"y_smoothing", smoothing_to_json(r.y, r.y_fixed)},
          {"regression",
           {{"epsilon_x", r.regression.epsilon_x},
            {"gamma_x", r.regression.gamma_x},
            {"gamma_grid_value", r.regression.grid_value},
            {"gcv_score", number(r.regression.gcv_score)},
            {"gamma_scale", to_string(r.gamma_scale)},
            {"gamma_reference", r.gamma_reference},
            {"provenance", r.regression_fixed ? "fixed" : "gcv"}}}};
}

TuningReport report_from_json(const json& j) {
  TuningReport r;
  r.x = smoothing_from_json(j.at("x_smoothing"));
  r.y = smoothing_from_json(j.at("y_smoothing"));
  r.x_fixed = j.at("x_smoothing").at("provenance") == "fixed";
  r.y_fixed = j.at("y_smoothing").at("provenance") == "fixed";
  const json& g = j.at("regression");
  r.regression = {g.at("epsilon_x").get<double>(), g.at("gamma_x").get<double>(),
                  g.at("gamma_grid_value").get<double>(), number_from(g.at("gcv_score"))};
  r.gamma_scale = gamma_scale_from_string(g.at("gamma_scale").get<std::string>());
  r.gamma_reference = g.at("gamma_reference").get<double>();
  r.regression_fixed = g.at("provenance") == "fixed";
  return r;
}

}  // namespace

std::string model_to_json(const FittedModel& model) {
  const auto& p = model.parts();
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["n"] = model.n();
  j["x_kernel"] = kernel_to_json(model.x_kernel());
  j["y_kernel"] = kernel_to_json(model.y_kernel());
  j["x_smoothing_epsilon"] = model.x_smoothing_epsilon();
  j["y_smoothing_epsilon"] = p.y_curves.front().epsilon();
  j["epsilon_x"] = p.epsilon_x;
  j["gamma_x"] = p.gamma_x;
  j["tuning"] = report_to_json(p.report);
  j["subjects"] = p.subject_ids;
  j["x_curves"] = curves_to_json(p.x_curves);
  j["y_curves"] = curves_to_json(p.y_curves);
  j["hx_gram"] = matrix_to_json(p.hx_gram);
  j["kx"] = matrix_to_json(p.kx);
  j["gx"] = matrix_to_json(p.gx);
  j["ky_inner"] = matrix_to_json(p.ky_inner);
  return j.dump(1) + "\n";
}

FittedModel model_from_json(const std::string& text) {
  const json j = parse_json(text, "model artifact");
  if (!j.is_object() || j.value("format", "") != kModelFormat) {
    throw ValidationError("model artifact: not an nlffr model file");
  }
  const int version = j.value("version", -1);
  if (version != kModelVersion) {
    throw ValidationError("model artifact: format version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kModelVersion) + ")");
  }
  try {
    FittedModel::Parts p;
    const auto n = j.at("n").get<Eigen::Index>();
    const TimeKernel xk = kernel_from_json(j.at("x_kernel"));
    const TimeKernel yk = kernel_from_json(j.at("y_kernel"));
    p.subject_ids = j.at("subjects").get<std::vector<std::string>>();
    p.x_curves = curves_from_json(j.at("x_curves"), xk, j.at("x_smoothing_epsilon").get<double>());
    p.y_curves = curves_from_json(j.at("y_curves"), yk, j.at("y_smoothing_epsilon").get<double>());
    p.hx_gram = matrix_from_json(j.at("hx_gram"), n);
    p.kx = matrix_from_json(j.at("kx"), n);
    p.gx = matrix_from_json(j.at("gx"), n);
    p.ky_inner = matrix_from_json(j.at("ky_inner"), n);
    p.epsilon_x = j.at("epsilon_x").get<double>();
    p.gamma_x = j.at("gamma_x").get<double>();
    p.report = report_from_json(j.at("tuning"));
    return FittedModel(std::move(p));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model artifact: ") + e.what());
  }
}

void save_model(const FittedModel& model, const std::string& path) {
  write_file(path, model_to_json(model));
}

FittedModel load_model(const std::string& path) { return model_from_json(read_file(path)); }

std::string fit_report_json(const FittedModel& model) {
  json j = report_to_json(model.report());
  j["n"] = model.n();
  j["x_kernel"] = kernel_to_json(model.x_kernel());
  j["y_kernel"] = kernel_to_json(model.y_kernel());
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// scenario tables

namespace {

std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string scenario_key(const sim::ScenarioConfig& c) {
  return sim::to_string(c.model) + "," + sim::to_string(c.x_generator) + "," + format_double(c.sigma) +
         "," + to_string(c.fit_kernel) + "," + sim::to_string(c.design);
}

}  // namespace

std::string scenario_summary_csv(const std::vector<sim::ScenarioResult>& results) {
  std::string out =
      "model,x_gen,sigma,fit_kernel,design,n_train,n_test,n_reps,seed,bmc_pairing,median,IQR,"
      "failures,band_coverage,pointwise_coverage\n";
  for (const auto& r : results) {
    const auto& c = r.config;
    out += scenario_key(c) + "," + std::to_string(c.n_train) + "," + std::to_string(c.n_test) + "," +
           std::to_string(c.n_reps) + "," + std::to_string(c.seed) + "," + sim::to_string(c.bmc_pairing) +
           "," + format_double(r.median) + "," + format_double(r.iqr) + "," + std::to_string(r.failures) +
           "," + optional_number(r.band_coverage) + "," + optional_number(r.pointwise_coverage) + "\n";
  }
  return out;
}

std::string scenario_reps_csv(const std::vector<sim::ScenarioResult>& results) {
  std::string out =
      "model,x_gen,sigma,fit_kernel,design,rep,median_ise,failed,x_epsilon,x_gamma,y_epsilon,y_gamma,"
      "epsilon_x,gamma_x,band_coverage,pointwise_coverage\n";
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.reps.size(); ++i) {
      const auto& rep = r.reps[i];
      const auto& t = rep.tuning;
      const bool cov = r.config.coverage && !rep.failed;
      out += scenario_key(r.config) + "," + std::to_string(i) + "," +
             (rep.failed ? std::string() : format_double(rep.median_ise)) + "," + (rep.failed ? "1" : "0") +
             "," + format_double(t.x.epsilon) + "," + format_double(t.x.gamma) + "," +
             format_double(t.y.epsilon) + "," + format_double(t.y.gamma) + "," +
             format_double(t.regression.epsilon_x) + "," + format_double(t.regression.gamma_x) + "," +
             (cov ? format_double(rep.band_coverage) : "") + "," +
             (cov ? format_double(rep.pointwise_coverage) : "") + "\n";
    }
  }
  return out;
}

}  // namespace nlffr::io
