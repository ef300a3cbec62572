#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "specctrl/control.hpp"
#include "specctrl/errors.hpp"
#include "specctrl/fit.hpp"
#include "specctrl/observability.hpp"
#include "specctrl/scan.hpp"
#include "specctrl/singular.hpp"
#include "specctrl/spectra.hpp"
#include "specctrl/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace specctrl;

namespace {

// Internal control flow for exit discipline: 2 = configuration/input error,
// 3 = solver/runtime failure.
struct cli_error {
  int code;
  std::string message;
};

[[noreturn]] void config_fail(const std::string& message) {
  throw cli_error{2, message};
}

// ---------------------------------------------------------------------------
// argument spec parsers

std::vector<int> parse_dyadic_ints(const std::string& spec, const char* what) {
  std::vector<int> out;
  if (spec.find(',') != std::string::npos) {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  } else if (auto colon = spec.find(':'); colon != std::string::npos) {
    const int lo = std::stoi(spec.substr(0, colon));
    const int hi = std::stoi(spec.substr(colon + 1));
    if (lo < 1 || hi < lo)
      config_fail(std::string(what) + ": bad dyadic range '" + spec + "'");
    for (int m = lo; m <= hi; m *= 2) out.push_back(m);
  } else {
    out.push_back(std::stoi(spec));
  }
  if (out.empty()) config_fail(std::string(what) + ": empty list");
  for (int m : out)
    if (m < 1) config_fail(std::string(what) + ": entries must be >= 1");
  return out;
}

std::vector<int> parse_int_span(const std::string& spec, const char* what) {
  std::vector<int> out;
  if (spec.find(',') != std::string::npos) {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
  } else if (auto colon = spec.find(':'); colon != std::string::npos) {
    const int lo = std::stoi(spec.substr(0, colon));
    const int hi = std::stoi(spec.substr(colon + 1));
    if (lo < 1 || hi < lo)
      config_fail(std::string(what) + ": bad range '" + spec + "'");
    for (int m = lo; m <= hi; ++m) out.push_back(m);
  } else {
    out.push_back(std::stoi(spec));
  }
  if (out.empty()) config_fail(std::string(what) + ": empty list");
  return out;
}

std::vector<double> parse_dyadic_hs(const std::string& spec, const char* what) {
  auto read = [&](const std::string& tok) -> double {
    if (tok.rfind("2^", 0) == 0) return std::exp2(std::stod(tok.substr(2)));
    return std::stod(tok);
  };
  std::vector<double> out;
  if (spec.find(',') != std::string::npos) {
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(read(tok));
  } else if (auto colon = spec.find(':'); colon != std::string::npos) {
    const double lo = read(spec.substr(0, colon));
    const double hi = read(spec.substr(colon + 1));
    if (!(lo > 0.0) || !(hi > 0.0) || hi > lo)
      config_fail(std::string(what) + ": dyadic h range runs from coarse to fine");
    for (double h = lo; h >= hi * (1.0 - 1e-12); h *= 0.5) out.push_back(h);
  } else {
    out.push_back(read(spec));
  }
  for (double h : out)
    if (!(h > 0.0)) config_fail(std::string(what) + ": h must be positive");
  return out;
}

std::pair<double, double> parse_pair(const std::string& spec, const char* what) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    config_fail(std::string(what) + ": expected lo:hi, got '" + spec + "'");
  return {std::stod(spec.substr(0, colon)), std::stod(spec.substr(colon + 1))};
}

struct OmegaSpec {
  bool full = false;
  double lo = 0.0, hi = 0.0;
};

OmegaSpec parse_omega(const std::string& spec) {
  if (spec == "full") return {true, 0.0, 0.0};
  if (spec.rfind("strip:", 0) == 0) {
    const auto [lo, hi] = parse_pair(spec.substr(6), "--omega");
    if (!(lo < hi)) config_fail("--omega: strip bounds must increase");
    return {false, lo, hi};
  }
  config_fail("--omega: expected 'full' or 'strip:lo:hi', got '" + spec + "'");
}

Region omega_region(const Grid& g, const OmegaSpec& w) {
  if (w.full)
    return region_from_predicate(
        g, std::function<bool(double, double)>([](double, double) { return true; }),
        "full");
  const double lo = w.lo, hi = w.hi;
  return region_from_predicate(
      g, std::function<bool(double, double)>(
             [lo, hi](double x, double) { return x > lo && x < hi; }),
      "strip:" + fmt_g17(lo) + ":" + fmt_g17(hi));
}

// ---------------------------------------------------------------------------
// config files: {"schema_version":1, "experiment":..., "params":{...}} plus
// optional seed / jobs / cache / output blocks. Flags given on the command
// line win over config values.

json load_json_file(const std::string& path, const char* what) {
  if (!fs::exists(path))
    config_fail(std::string(what) + ": file not found: " + path);
  std::ifstream in(path);
  if (!in) config_fail(std::string(what) + ": cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    config_fail(std::string(what) + ": malformed JSON in " + path + ": " +
                e.what());
  }
  return j;
}

struct ConfigView {
  json params;
  std::vector<std::string> consumed;

  bool has(const std::string& key) const { return params.contains(key); }

  template <class T>
  void take(const CLI::Option* opt, const std::string& key, T& target) {
    if (!params.contains(key)) return;
    consumed.push_back(key);
    if (opt != nullptr && opt->count() > 0) return;  // explicit flag wins
    try {
      target = params.at(key).get<T>();
    } catch (const json::exception&) {
      config_fail("config: params." + key + ": wrong type");
    }
  }

  void finish() const {
    for (auto it = params.begin(); it != params.end(); ++it) {
      const std::string& key = it.key();
      if (std::find(consumed.begin(), consumed.end(), key) == consumed.end())
        config_fail("config: params." + key + ": unknown field");
    }
  }
};

struct CommonOpts {
  std::string config_path;
  unsigned jobs = 0;
  bool no_cache = false;
  std::string cache_dir;
  std::string csv_path;
  std::string json_path;

  CLI::Option* config_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* csv_opt = nullptr;
  CLI::Option* json_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_outputs = true) {
  o.config_opt =
      cmd->add_option("--config", o.config_path, "JSON experiment config");
  o.jobs_opt = cmd->add_option("--jobs", o.jobs, "worker threads (0 = hardware)");
  cmd->add_flag("--no-cache", o.no_cache, "bypass the eigenband cache");
  cmd->add_option("--cache-dir", o.cache_dir,
                  "eigenband cache directory (default: SPECCTRL_CACHE_DIR)");
  if (with_outputs) {
    o.csv_opt = cmd->add_option("--csv", o.csv_path, "write records CSV here");
    o.json_opt = cmd->add_option("--json", o.json_path, "write JSON summary here");
  }
}

// Loads the config named by --config (if any), checks the envelope, applies
// the common blocks, and returns a view over params for the command to drain.
ConfigView open_config(CommonOpts& o, const std::string& experiment) {
  ConfigView view;
  if (o.config_path.empty()) {
    view.params = json::object();
    return view;
  }
  const json cfg = load_json_file(o.config_path, "config");
  if (!cfg.is_object()) config_fail("config: top level must be an object");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    const std::string& key = it.key();
    if (key != "schema_version" && key != "experiment" && key != "seed" &&
        key != "jobs" && key != "cache" && key != "output" && key != "params")
      config_fail("config: " + key + ": unknown field");
  }
  if (!cfg.contains("schema_version") || !cfg.at("schema_version").is_number_integer() ||
      cfg.at("schema_version").get<int>() != 1)
    config_fail("config: schema_version: must be the integer 1");
  if (!cfg.contains("experiment") || !cfg.at("experiment").is_string())
    config_fail("config: experiment: required string");
  if (cfg.at("experiment").get<std::string>() != experiment)
    config_fail("config: experiment: is '" +
                cfg.at("experiment").get<std::string>() + "', command needs '" +
                experiment + "'");
  if (cfg.contains("jobs")) {
    if (!cfg.at("jobs").is_number_unsigned()) config_fail("config: jobs: wrong type");
    if (o.jobs_opt == nullptr || o.jobs_opt->count() == 0)
      o.jobs = cfg.at("jobs").get<unsigned>();
  }
  if (cfg.contains("cache")) {
    const json& c = cfg.at("cache");
    if (!c.is_object()) config_fail("config: cache: must be an object");
    for (auto it = c.begin(); it != c.end(); ++it)
      if (it.key() != "enabled" && it.key() != "dir")
        config_fail("config: cache." + it.key() + ": unknown field");
    if (c.contains("enabled")) {
      if (!c.at("enabled").is_boolean()) config_fail("config: cache.enabled: wrong type");
      if (!c.at("enabled").get<bool>()) o.no_cache = true;
    }
    if (c.contains("dir")) {
      if (!c.at("dir").is_string()) config_fail("config: cache.dir: wrong type");
      if (o.cache_dir.empty()) o.cache_dir = c.at("dir").get<std::string>();
    }
  }
  if (cfg.contains("output")) {
    const json& out = cfg.at("output");
    if (!out.is_object()) config_fail("config: output: must be an object");
    for (auto it = out.begin(); it != out.end(); ++it)
      if (it.key() != "csv" && it.key() != "json")
        config_fail("config: output." + it.key() + ": unknown field");
    if (out.contains("csv") && (o.csv_opt == nullptr || o.csv_opt->count() == 0))
      o.csv_path = out.at("csv").get<std::string>();
    if (out.contains("json") && (o.json_opt == nullptr || o.json_opt->count() == 0))
      o.json_path = out.at("json").get<std::string>();
  }
  if (cfg.contains("params")) {
    if (!cfg.at("params").is_object()) config_fail("config: params: must be an object");
    view.params = cfg.at("params");
  } else {
    view.params = json::object();
  }
  return view;
}

// ---------------------------------------------------------------------------
// output helpers

void write_file(const std::string& path, const std::string& content,
                const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) config_fail(std::string(what) + ": cannot write " + path);
  out << content;
  if (!out) config_fail(std::string(what) + ": short write to " + path);
}

std::string report_csv(const ObservabilityReport& rep) {
  std::string s = "key,value,extra,label\n";
  for (const auto& r : rep.records)
    s += fmt_g17(r.key) + "," + fmt_g17(r.value) + "," + fmt_g17(r.extra) + "," +
         r.label + "\n";
  return s;
}

json report_summary(const ObservabilityReport& rep) {
  json j;
  j["experiment"] = rep.experiment;
  j["count"] = rep.records.size();
  j["min"] = rep.min_value;
  j["max"] = rep.max_value;
  j["trend_slope"] = rep.trend_slope;
  j["trend_r2"] = rep.trend_r2;
  j["skipped"] = rep.skipped;
  return j;
}

void emit(const CommonOpts& o, const json& summary, const std::string& csv) {
  if (!o.csv_path.empty() && !csv.empty()) write_file(o.csv_path, csv, "output");
  const std::string text = summary.dump(2) + "\n";
  if (!o.json_path.empty()) write_file(o.json_path, text, "output");
  std::fputs(text.c_str(), stdout);
}

// ---------------------------------------------------------------------------
// scan

struct ScanOpts {
  CommonOpts common;
  std::string model = "hyperbolic";
  std::string modes;
  std::string hs;
  int z_points = 11;
  int points = 0;
  double amplitude = -1.0;
  int refine = 0;
  std::string out = "scan.csv";
};

int cmd_scan(ScanOpts& o, const CLI::App& cmd) {
  ConfigView cfg = open_config(o.common, "scan");
  cfg.take(cmd.get_option("--model"), "model", o.model);
  cfg.take(cmd.get_option("--modes"), "modes", o.modes);
  cfg.take(cmd.get_option("--hs"), "hs", o.hs);
  cfg.take(cmd.get_option("--z-points"), "z_points", o.z_points);
  cfg.take(cmd.get_option("--points"), "points", o.points);
  cfg.take(cmd.get_option("--amplitude"), "amplitude", o.amplitude);
  cfg.take(cmd.get_option("--refine"), "refine", o.refine);
  cfg.take(cmd.get_option("--out"), "out", o.out);
  cfg.finish();

  ScanConfig sc;
  if (o.model == "hyperbolic") {
    sc.family = CapFamily::hyperbolic;
  } else if (o.model == "well1" || o.model == "well2" || o.model == "well3") {
    sc.family = CapFamily::degenerate_well;
    sc.well_order = o.model[4] - '0';
  } else {
    config_fail("scan: --model must be hyperbolic or well1|well2|well3");
  }
  if (sc.family == CapFamily::hyperbolic) {
    if (o.modes.empty()) config_fail("scan: --modes required for the hyperbolic model");
    sc.modes = parse_dyadic_ints(o.modes, "--modes");
  } else {
    if (o.hs.empty()) config_fail("scan: --hs required for well models");
    sc.hs = parse_dyadic_hs(o.hs, "--hs");
  }
  if (o.z_points < 1) config_fail("scan: --z-points must be >= 1");
  sc.zs = default_z_grid(sc.family, o.z_points);
  sc.points_override = o.points;
  sc.amplitude = o.amplitude;
  sc.refine_levels = o.refine;
  sc.workers = o.common.jobs;

  const ScanResult r = run_scan(sc);
  if (r.points.empty()) {
    std::string msg = "scan: no point succeeded";
    if (!r.failures.empty()) msg += "; first failure: " + r.failures.front().message;
    throw cli_error{3, msg};
  }
  save_scan_csv(r, o.out);
  for (const ScanFailure& f : r.failures)
    std::fprintf(stderr, "scan: h=%s z=%s+%si failed: %s\n", fmt_g17(f.h).c_str(),
                 fmt_g17(f.z.real()).c_str(), fmt_g17(f.z.imag()).c_str(),
                 f.message.c_str());
  std::fprintf(stdout, "scan: %zu rows -> %s (%zu failures)\n", r.points.size(),
               o.out.c_str(), r.failures.size());
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitOpts {
  CommonOpts common;
  std::string scan_path;
  std::string law = "all";
  bool cutoff = false;
};

ScanResult load_scan_checked(const std::string& path, const char* what) {
  if (!fs::exists(path))
    config_fail(std::string(what) + ": scan file not found: " + path);
  try {
    return load_scan_csv(path);
  } catch (const solver_error& e) {
    config_fail(std::string(what) + ": " + e.what());
  }
}

json fit_to_json(const FitResult& f) {
  json j;
  j["law"] = scaling_law_name(f.law);
  j["coefficient"] = f.coefficient;
  j["intercept"] = f.intercept;
  j["r_squared"] = f.r_squared;
  j["rss_log"] = f.rss_log;
  j["points"] = f.points;
  return j;
}

int cmd_fit(FitOpts& o, const CLI::App& cmd) {
  ConfigView cfg = open_config(o.common, "fit");
  cfg.take(cmd.get_option("--scan"), "scan", o.scan_path);
  cfg.take(cmd.get_option("--law"), "law", o.law);
  cfg.take(cmd.get_option("--cutoff"), "cutoff", o.cutoff);
  cfg.finish();
  if (o.scan_path.empty()) config_fail("fit: --scan is required");

  const ScanResult r = load_scan_checked(o.scan_path, "fit");
  std::vector<ScalingLaw> laws;
  if (o.law == "all")
    laws = {ScalingLaw::log_law, ScalingLaw::pure_power, ScalingLaw::sqrt_log};
  else if (o.law == "log")
    laws = {ScalingLaw::log_law};
  else if (o.law == "power")
    laws = {ScalingLaw::pure_power};
  else if (o.law == "sqrtlog")
    laws = {ScalingLaw::sqrt_log};
  else
    config_fail("fit: --law must be log, power, sqrtlog, or all");

  json out;
  out["experiment"] = "fit";
  out["input"] = o.scan_path;
  out["rows"] = r.points.size();
  out["cutoff"] = o.cutoff;
  json fits = json::object();
  double best_rss = std::numeric_limits<double>::infinity();
  std::string best;
  for (ScalingLaw law : laws) {
    const FitResult f = fit_scan(r, law, o.cutoff);
    fits[scaling_law_name(law)] = fit_to_json(f);
    if (f.rss_log < best_rss) {
      best_rss = f.rss_log;
      best = scaling_law_name(law);
    }
  }
  out["fits"] = fits;
  out["best_by_rss"] = best;
  emit(o.common, out, {});
  return 0;
}

// ---------------------------------------------------------------------------
// observe

struct ObserveOpts {
  CommonOpts common;
  std::string experiment;
  // stadium
  double lambda_max = 2000.0;
  int npu = 128;
  double radius = 0.5;
  double flat = 1.0;
  double margin = 0.05;
  // cdvp
  std::string modes = "8:512";
  double delta = 0.5;
  double half_length = 3.0;
  // permode
  int kmax = 50;
  double height = 1.0;
  std::string omega_x = "0.1:0.3";
  std::string z_range = "-260:0";
  int z_points = 21;
  int probes = 50;
  int basis = 511;
  std::uint64_t seed = 20260819ULL;
  // gramian
  int nx = 63;
  int ny = 63;
  std::string band = "0:60";
  std::string omega = "strip:0.4:0.6";
  double T = 1.0;
  double hbar = 1.0;
  int band_cap = 64;
};

int cmd_observe(ObserveOpts& o, const CLI::App& cmd) {
  ConfigView cfg = open_config(o.common, "observe");
  cfg.take(cmd.get_option("--experiment"), "experiment", o.experiment);
  cfg.take(cmd.get_option("--lambda-max"), "lambda_max", o.lambda_max);
  cfg.take(cmd.get_option("--npu"), "npu", o.npu);
  cfg.take(cmd.get_option("--radius"), "radius", o.radius);
  cfg.take(cmd.get_option("--flat"), "flat", o.flat);
  cfg.take(cmd.get_option("--margin"), "margin", o.margin);
  cfg.take(cmd.get_option("--modes"), "modes", o.modes);
  cfg.take(cmd.get_option("--delta"), "delta", o.delta);
  cfg.take(cmd.get_option("--half-length"), "half_length", o.half_length);
  cfg.take(cmd.get_option("--kmax"), "kmax", o.kmax);
  cfg.take(cmd.get_option("--height"), "height", o.height);
  cfg.take(cmd.get_option("--omega-x"), "omega_x", o.omega_x);
  cfg.take(cmd.get_option("--z-range"), "z_range", o.z_range);
  cfg.take(cmd.get_option("--z-points"), "z_points", o.z_points);
  cfg.take(cmd.get_option("--probes"), "probes", o.probes);
  cfg.take(cmd.get_option("--basis"), "basis", o.basis);
  cfg.take(cmd.get_option("--seed"), "seed", o.seed);
  cfg.take(cmd.get_option("--nx"), "nx", o.nx);
  cfg.take(cmd.get_option("--ny"), "ny", o.ny);
  cfg.take(cmd.get_option("--band"), "band", o.band);
  cfg.take(cmd.get_option("--omega"), "omega", o.omega);
  cfg.take(cmd.get_option("--T"), "T", o.T);
  cfg.take(cmd.get_option("--hbar"), "hbar", o.hbar);
  cfg.take(cmd.get_option("--band-cap"), "band_cap", o.band_cap);
  cfg.finish();

  if (o.experiment == "stadium") {
    StadiumWingConfig sc;
    sc.lambda_max = o.lambda_max;
    sc.n_per_unit = o.npu;
    sc.radius = o.radius;
    sc.flat = o.flat;
    sc.margin = o.margin;
    sc.use_cache = !o.common.no_cache;
    sc.cache_dir = o.common.cache_dir;
    const ObservabilityReport rep = stadium_wing_scan(sc);
    emit(o.common, report_summary(rep), report_csv(rep));
    return 0;
  }
  if (o.experiment == "cdvp") {
    CdvpConfig cc;
    cc.modes = parse_dyadic_ints(o.modes, "--modes");
    cc.delta = o.delta;
    cc.half_length = o.half_length;
    cc.use_cache = !o.common.no_cache;
    cc.cache_dir = o.common.cache_dir;
    const ObservabilityReport rep = cdvp_log_scan(cc);
    emit(o.common, report_summary(rep), report_csv(rep));
    return 0;
  }
  if (o.experiment == "permode") {
    PermodeConfig pc;
    pc.k_max = o.kmax;
    pc.a = o.height;
    std::tie(pc.omega_lo, pc.omega_hi) = parse_pair(o.omega_x, "--omega-x");
    std::tie(pc.z_lo, pc.z_hi) = parse_pair(o.z_range, "--z-range");
    pc.z_points = o.z_points;
    pc.probes.n = o.basis;
    pc.probes.random_probes = o.probes;
    pc.probes.seed = o.seed;
    pc.workers = o.common.jobs;
    const ObservabilityReport rep = permode_scan(pc);
    emit(o.common, report_summary(rep), report_csv(rep));
    return 0;
  }
  if (o.experiment == "gramian") {
    const auto [lo, hi] = parse_pair(o.band, "--band");
    const Grid g = build_rectangle(o.nx, o.ny, o.height);
    const SparseOperator op = assemble_laplacian(g);
    const EigenBand band = compute_band(op, lo, hi, o.band_cap);
    const Region omega = omega_region(g, parse_omega(o.omega));
    const GramianMatrix m = gramian(band, omega, o.T, o.hbar);
    Eigen::SelfAdjointEigenSolver<MatrixZ> es(m.m);
    if (es.info() != Eigen::Success)
      throw cli_error{3, "observe: gramian eigensolve failed"};

    std::string csv = "index,eigenvalue\n";
    for (int j = 0; j < m.size(); ++j)
      csv += std::to_string(j) + "," + fmt_g17(es.eigenvalues()(j)) + "\n";
    json out;
    out["experiment"] = "gramian";
    out["band"] = {{"lo", lo}, {"hi", hi}, {"count", band.count()}};
    out["omega"] = omega.label;
    out["T"] = o.T;
    out["hbar"] = o.hbar;
    out["c_obs"] = observability_constant(m).c_obs;
    emit(o.common, out, csv);
    return 0;
  }
  config_fail("observe: --experiment must be stadium, cdvp, permode, or gramian");
}

// ---------------------------------------------------------------------------
// control

struct ControlOpts {
  CommonOpts common;
  std::string domain = "rectangle";
  int nx = 255;
  int ny = 127;
  double height = 1.0;
  std::string band = "0:60";
  std::string omega = "strip:0.4:0.6";
  double T = 1.0;
  std::string u0 = "random:1";
  int verify_steps = 2000;
  int band_cap = 64;
  std::string g_csv;
  int g_samples = 101;
};

int cmd_control(ControlOpts& o, const CLI::App& cmd) {
  ConfigView cfg = open_config(o.common, "control");
  cfg.take(cmd.get_option("--domain"), "domain", o.domain);
  cfg.take(cmd.get_option("--nx"), "nx", o.nx);
  cfg.take(cmd.get_option("--ny"), "ny", o.ny);
  cfg.take(cmd.get_option("--height"), "height", o.height);
  cfg.take(cmd.get_option("--band"), "band", o.band);
  cfg.take(cmd.get_option("--omega"), "omega", o.omega);
  cfg.take(cmd.get_option("--T"), "T", o.T);
  cfg.take(cmd.get_option("--u0"), "u0", o.u0);
  cfg.take(cmd.get_option("--verify-steps"), "verify_steps", o.verify_steps);
  cfg.take(cmd.get_option("--band-cap"), "band_cap", o.band_cap);
  cfg.take(cmd.get_option("--g-csv"), "g_csv", o.g_csv);
  cfg.take(cmd.get_option("--g-samples"), "g_samples", o.g_samples);
  cfg.finish();

  if (o.domain != "rectangle")
    config_fail("control: --domain supports 'rectangle' only");
  const auto [lo, hi] = parse_pair(o.band, "--band");
  const Grid g = build_rectangle(o.nx, o.ny, o.height);
  const SparseOperator op = assemble_laplacian(g);
  const EigenBand band = compute_band(op, lo, hi, o.band_cap);
  const Region omega = omega_region(g, parse_omega(o.omega));

  VectorZ u0;
  json u0_desc;
  if (o.u0.rfind("random:", 0) == 0) {
    const std::uint64_t seed = std::stoull(o.u0.substr(7));
    Rng rng(seed);
    VectorZ c(band.count());
    for (int j = 0; j < band.count(); ++j) c[j] = rng.cnormal();
    c /= c.norm();
    u0 = band_reconstruct(band, c);
    u0_desc = {{"kind", "random"}, {"seed", seed}};
  } else if (o.u0.rfind("mode:", 0) == 0) {
    const int j = std::stoi(o.u0.substr(5));
    if (j < 0 || j >= band.count())
      config_fail("control: --u0 mode index out of band (count = " +
                  std::to_string(band.count()) + ")");
    u0 = band.vectors.col(j);
    u0_desc = {{"kind", "mode"}, {"index", j}};
  } else {
    config_fail("control: --u0 must be random:SEED or mode:J");
  }

  const ControlSolution sol = hum_control(band, omega, o.T, u0);
  json out;
  out["experiment"] = "control";
  out["domain"] = {{"kind", "rectangle"}, {"nx", o.nx}, {"ny", o.ny},
                   {"height", o.height}};
  out["band"] = {{"lo", lo}, {"hi", hi}, {"count", band.count()}};
  out["omega"] = omega.label;
  out["T"] = o.T;
  out["u0"] = u0_desc;
  out["cost"] = sol.cost;
  out["rho"] = sol.rho;
  out["out_of_band"] = sol.out_of_band;
  out["cg_iterations"] = sol.cg_iterations;
  out["cg_relative_residual"] = sol.cg_relative_residual;
  if (o.verify_steps > 0) {
    const ControlVerification v = verify_null_control(sol, o.verify_steps);
    out["verify"] = {{"steps", v.steps},
                     {"rho_quad", v.rho_quad},
                     {"mismatch", v.mismatch},
                     {"band_leak", v.band_leak}};
  }

  if (!o.g_csv.empty()) {
    if (o.g_samples < 2) config_fail("control: --g-samples must be >= 2");
    std::string csv = "t,norm\n";
    for (int i = 0; i < o.g_samples; ++i) {
      const double t = o.T * i / (o.g_samples - 1);
      const VectorZ gt = sol.control_at(t);
      double acc = 0.0;
      for (Eigen::Index r = 0; r < gt.size(); ++r)
        acc += g.weights[static_cast<std::size_t>(r)] * std::norm(gt[r]);
      csv += fmt_g17(t) + "," + fmt_g17(std::sqrt(acc)) + "\n";
    }
    write_file(o.g_csv, csv, "control");
  }
  emit(o.common, out, {});
  return 0;
}

// ---------------------------------------------------------------------------
// pipeline

struct PipelineOpts {
  CommonOpts common;
  std::string scan_path;
  double K = 100.0;
  std::string modes = "16:256";
  std::string window = "0.5:2";
  double omega_threshold = 1.5;
  double half_length = 3.0;
  double threshold = 0.1;
};

int cmd_pipeline(PipelineOpts& o, const CLI::App& cmd) {
  ConfigView cfg = open_config(o.common, "pipeline");
  cfg.take(cmd.get_option("--scan"), "scan", o.scan_path);
  cfg.take(cmd.get_option("--K"), "K", o.K);
  cfg.take(cmd.get_option("--modes"), "modes", o.modes);
  cfg.take(cmd.get_option("--window"), "window", o.window);
  cfg.take(cmd.get_option("--omega-threshold"), "omega_threshold", o.omega_threshold);
  cfg.take(cmd.get_option("--half-length"), "half_length", o.half_length);
  cfg.take(cmd.get_option("--stability-threshold"), "stability_threshold", o.threshold);
  cfg.finish();
  if (o.scan_path.empty()) config_fail("pipeline: --scan is required");

  const ScanResult scan = load_scan_checked(o.scan_path, "pipeline");
  PipelineConfig pc;
  pc.modes = parse_dyadic_ints(o.modes, "--modes");
  pc.K = o.K;
  std::tie(pc.window_lo, pc.window_hi) = parse_pair(o.window, "--window");
  pc.omega_threshold = o.omega_threshold;
  pc.half_length = o.half_length;
  pc.stability_threshold = o.threshold;
  pc.use_cache = !o.common.no_cache;
  pc.cache_dir = o.common.cache_dir;
  pc.workers = o.common.jobs;

  const PipelineCheck check = theorem3_pipeline(scan, pc);
  std::string csv = "mode,h,g_full,g_cutoff,T,band_count,c_obs,ratio\n";
  json records = json::array();
  for (const PipelineRecord& r : check.records) {
    csv += std::to_string(r.mode) + "," + fmt_g17(r.h) + "," + fmt_g17(r.g_full) +
           "," + fmt_g17(r.g_cutoff) + "," + fmt_g17(r.T) + "," +
           std::to_string(r.band_count) + "," + fmt_g17(r.c_obs) + "," +
           fmt_g17(r.ratio) + "\n";
    records.push_back({{"mode", r.mode},
                       {"h", r.h},
                       {"g_full", r.g_full},
                       {"g_cutoff", r.g_cutoff},
                       {"T", r.T},
                       {"band_count", r.band_count},
                       {"c_obs", r.c_obs},
                       {"ratio", r.ratio}});
  }
  json out;
  out["experiment"] = "pipeline";
  out["K"] = check.K;
  out["c0"] = check.c0;
  out["min_over_median"] = check.min_over_median;
  out["threshold"] = check.threshold;
  out["pass"] = check.pass;
  out["records"] = records;
  emit(o.common, out, csv);
  return check.pass ? 0 : 3;
}

// ---------------------------------------------------------------------------
// quasimode

struct QuasimodeOpts {
  CommonOpts common;
  int npu = 384;
  double radius = 0.5;
  double flat = 1.0;
  std::string transverse = "5:40";
  int axial = 1;
  double ramp = 0.05;
};

int cmd_quasimode(QuasimodeOpts& o, const CLI::App& cmd) {
  ConfigView cfg = open_config(o.common, "quasimode");
  cfg.take(cmd.get_option("--npu"), "npu", o.npu);
  cfg.take(cmd.get_option("--radius"), "radius", o.radius);
  cfg.take(cmd.get_option("--flat"), "flat", o.flat);
  cfg.take(cmd.get_option("--transverse"), "transverse", o.transverse);
  cfg.take(cmd.get_option("--axial"), "axial", o.axial);
  cfg.take(cmd.get_option("--ramp"), "ramp", o.ramp);
  cfg.finish();

  const std::vector<int> modes = parse_int_span(o.transverse, "--transverse");
  const Grid g = build_stadium(o.npu, o.radius, o.flat);
  const SparseOperator op = assemble_laplacian(g);

  std::string csv = "transverse,axial,lambda,residual\n";
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int m : modes) {
    const Quasimode q = build_quasimode(g, m, o.axial, o.ramp);
    const double r = quasimode_error(g, op, m, o.axial, o.ramp);
    csv += std::to_string(m) + "," + std::to_string(o.axial) + "," +
           fmt_g17(q.lambda) + "," + fmt_g17(r) + "\n";
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  json out;
  out["experiment"] = "quasimode";
  out["count"] = modes.size();
  out["axial"] = o.axial;
  out["ramp"] = o.ramp;
  out["min_residual"] = lo;
  out["max_residual"] = hi;
  out["max_over_min"] = lo > 0.0 ? hi / lo : 0.0;
  emit(o.common, out, csv);
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  CommonOpts common;
  std::vector<std::string> paths;
  std::string columns;
};

int cmd_report(ReportOpts& o, const CLI::App&) {
  json artifacts = json::object();
  std::string columns;
  for (const std::string& path : o.paths) {
    if (!fs::exists(path)) config_fail("report: missing artifact: " + path);
    const std::string stem = fs::path(path).stem().string();
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
      const json j = load_json_file(path, "report");
      std::string key = stem;
      if (j.is_object() && j.contains("experiment") && j.at("experiment").is_string())
        key = j.at("experiment").get<std::string>();
      if (artifacts.contains(key)) {
        if (artifacts.at(key) != j)
          config_fail("report: conflicting duplicate key '" + key + "' from " + path);
        continue;
      }
      artifacts[key] = j;
    } else {
      std::ifstream in(path);
      if (!in) config_fail("report: cannot open " + path);
      std::string line;
      std::size_t rows = 0;
      std::string block = "# " + stem + "\n";
      bool header = true;
      while (std::getline(in, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        if (header) {
          block += "# " + line + "\n";
          header = false;
          continue;
        }
        block += line + "\n";
        ++rows;
      }
      if (artifacts.contains(stem)) {
        const json existing = artifacts.at(stem);
        if (!existing.is_object() || existing.value("rows", std::size_t{0}) != rows)
          config_fail("report: conflicting duplicate key '" + stem + "' from " + path);
        continue;
      }
      artifacts[stem] = {{"table", path}, {"rows", rows}};
      columns += block + "\n";
    }
  }
  if (!o.columns.empty()) write_file(o.columns, columns, "report");
  json out;
  out["experiment"] = "report";
  out["count"] = artifacts.size();
  out["artifacts"] = artifacts;
  emit(o.common, out, {});
  return 0;
}

// ---------------------------------------------------------------------------
// selftest

int cmd_selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok, const std::string& detail) {
    std::fprintf(stdout, "%s - %s%s%s\n", ok ? "ok" : "FAIL", name,
                 detail.empty() ? "" : ": ", detail.c_str());
    if (!ok) ++failures;
  };

  {
    const Grid g = build_rectangle(63, 63, 1.0);
    const SparseOperator op = assemble_laplacian(g);
    const EigenBand band = compute_lowest(op, 3);
    auto disp = [&](int m, int k) {
      const double sx = std::sin(0.5 * m * std::numbers::pi * g.hx);
      const double sy = std::sin(0.5 * k * std::numbers::pi * g.hy);
      return 4.0 / (g.hx * g.hx) * sx * sx + 4.0 / (g.hy * g.hy) * sy * sy;
    };
    std::vector<double> expect = {disp(1, 1), disp(1, 2), disp(2, 1)};
    std::sort(expect.begin(), expect.end());
    double worst = 0.0;
    for (int j = 0; j < 3; ++j)
      worst = std::max(worst, std::abs(band.values[j] - expect[j]) / expect[j]);
    check("square eigenvalues match the lattice dispersion", worst < 1e-8,
          "max rel err " + fmt_g17(worst));
  }
  {
    Rng rng(404u);
    double worst = 0.0;
    for (int trial = 0; trial < 3; ++trial) {
      const int n = 60;
      std::vector<Eigen::Triplet<cdouble>> trip;
      for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, cdouble(2.0 + rng.normal(), rng.normal()));
        for (int nnz = 0; nnz < 4; ++nnz) {
          const int j = static_cast<int>(rng.uniform() * n);
          trip.emplace_back(i, j, rng.cnormal());
        }
      }
      SparseOperator op;
      op.mat.resize(n, n);
      op.mat.setFromTriplets(trip.begin(), trip.end());
      op.mat.makeCompressed();
      const double sigma = smallest_singular(op).value;
      const Eigen::JacobiSVD<MatrixZ> svd(MatrixZ(op.mat));
      const double dense = svd.singularValues()(n - 1);
      worst = std::max(worst, std::abs(sigma - dense) / dense);
    }
    check("smallest singular value agrees with dense SVD", worst < 1e-8,
          "max rel err " + fmt_g17(worst));
  }
  {
    const Grid g = build_rectangle(63, 63, 1.0);
    const SparseOperator op = assemble_laplacian(g);
    const EigenBand band = compute_band(op, 0.0, 60.0, 8);
    const Region full = region_from_predicate(
        g, std::function<bool(double, double)>([](double, double) { return true; }),
        "full");
    const double T = 1.3;
    const GramianMatrix m = gramian(band, full, T);
    const double dev =
        (m.m - T * MatrixZ::Identity(m.size(), m.size())).cwiseAbs().maxCoeff();
    check("full-domain gramian is T times the identity", dev < 1e-10,
          "max dev " + fmt_g17(dev));

    Rng rng(7u);
    VectorZ c(band.count());
    for (int j = 0; j < band.count(); ++j) c[j] = rng.cnormal();
    c /= c.norm();
    const ControlSolution sol = hum_control(band, full, T, band_reconstruct(band, c));
    check("full-domain null control is exact", sol.rho < 1e-10,
          "rho " + fmt_g17(sol.rho));
  }
  {
    const int n = 511;
    const double h = 1.0 / (n + 1);
    const double s1 = std::sin(0.5 * std::numbers::pi * h);
    const double lambda1 = 4.0 / (h * h) * s1 * s1;
    const Grid g = build_interval(n, 1.0);
    VectorZ u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
      u[static_cast<Eigen::Index>(i)] = std::sin(std::numbers::pi * g.x(i));
    const Region omega = region_from_predicate(
        g, std::function<bool(double, double)>(
               [](double x, double) { return x > 0.1 && x < 0.3; }),
        "omega");
    const double mass = mass_ratio(g, u, omega);
    const double z = lambda1 - std::numbers::pi * std::numbers::pi;
    const double constant = permode_constant(1, z, 1.0, 0.1, 0.3);
    const double rel = std::abs(constant - 1.0 / mass) * mass;
    check("separated-mode constant matches the resonant closed form", rel < 1e-9,
          "rel err " + fmt_g17(rel));
  }
  {
    const Grid g = build_rectangle(63, 63, 1.0);
    const double r = quasimode_error(g, 2, 1, 0.0);
    check("untruncated rectangle mode is an exact eigenfunction", r < 1e-9,
          "residual " + fmt_g17(r));
  }

  if (failures > 0) {
    std::fprintf(stdout, "selftest: %d check(s) failed\n", failures);
    return 3;
  }
  std::fprintf(stdout, "selftest: all checks passed\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral scans, observability reports, and band control"};
  app.set_version_flag("--version", "specctrl 0.1.0");
  app.require_subcommand(1);

  ScanOpts scan_opts;
  CLI::App* scan_cmd = app.add_subcommand("scan", "resolvent norm scan over h");
  add_common(scan_cmd, scan_opts.common, false);
  scan_cmd->add_option("--model", scan_opts.model,
                       "hyperbolic | well1 | well2 | well3");
  scan_cmd->add_option("--modes", scan_opts.modes, "dyadic mode range lo:hi or list");
  scan_cmd->add_option("--hs", scan_opts.hs, "dyadic h range lo:hi (or 2^-k) or list");
  scan_cmd->add_option("--z-points", scan_opts.z_points, "spectral grid size");
  scan_cmd->add_option("--points", scan_opts.points, "override node count");
  scan_cmd->add_option("--amplitude", scan_opts.amplitude,
                       "damping amplitude (<0 = family default)");
  scan_cmd->add_option("--refine", scan_opts.refine,
                       "zoom-in passes around each per-h argmax z");
  scan_cmd->add_option("--out", scan_opts.out, "output CSV path");

  FitOpts fit_opts;
  CLI::App* fit_cmd = app.add_subcommand("fit", "scaling-law fits of a scan");
  add_common(fit_cmd, fit_opts.common);
  fit_cmd->add_option("--scan", fit_opts.scan_path, "scan CSV input");
  fit_cmd->add_option("--law", fit_opts.law, "log | power | sqrtlog | all");
  fit_cmd->add_flag("--cutoff", fit_opts.cutoff, "fit the cutoff norms instead");

  ObserveOpts obs_opts;
  CLI::App* obs_cmd =
      app.add_subcommand("observe", "observability and concentration reports");
  add_common(obs_cmd, obs_opts.common);
  obs_cmd->add_option("--experiment", obs_opts.experiment,
                      "stadium | cdvp | permode | gramian")
      ->required();
  obs_cmd->add_option("--lambda-max", obs_opts.lambda_max, "stadium: top of the window");
  obs_cmd->add_option("--npu", obs_opts.npu, "stadium: nodes per unit length");
  obs_cmd->add_option("--radius", obs_opts.radius, "stadium: half-width r");
  obs_cmd->add_option("--flat", obs_opts.flat, "stadium: flat length L");
  obs_cmd->add_option("--margin", obs_opts.margin, "stadium: wing margin");
  obs_cmd->add_option("--modes", obs_opts.modes, "cdvp: dyadic mode range");
  obs_cmd->add_option("--delta", obs_opts.delta, "cdvp: away-region half-width");
  obs_cmd->add_option("--half-length", obs_opts.half_length, "cdvp: cylinder half-length");
  obs_cmd->add_option("--kmax", obs_opts.kmax, "permode: transverse index bound");
  obs_cmd->add_option("--height", obs_opts.height, "permode/gramian: rectangle height");
  obs_cmd->add_option("--omega-x", obs_opts.omega_x, "permode: interval lo:hi");
  obs_cmd->add_option("--z-range", obs_opts.z_range, "permode: spectral range lo:hi");
  obs_cmd->add_option("--z-points", obs_opts.z_points, "permode: grid size");
  obs_cmd->add_option("--probes", obs_opts.probes, "permode: random probes per pair");
  obs_cmd->add_option("--basis", obs_opts.basis, "permode: sine basis size");
  obs_cmd->add_option("--seed", obs_opts.seed, "permode: probe seed");
  obs_cmd->add_option("--nx", obs_opts.nx, "gramian: interior nodes in x");
  obs_cmd->add_option("--ny", obs_opts.ny, "gramian: interior nodes in y");
  obs_cmd->add_option("--band", obs_opts.band, "gramian: energy window lo:hi");
  obs_cmd->add_option("--omega", obs_opts.omega, "gramian: full or strip:lo:hi");
  obs_cmd->add_option("--T", obs_opts.T, "gramian: time horizon");
  obs_cmd->add_option("--hbar", obs_opts.hbar, "gramian: phase scale");
  obs_cmd->add_option("--band-cap", obs_opts.band_cap, "gramian: band size cap");

  ControlOpts ctl_opts;
  CLI::App* ctl_cmd = app.add_subcommand("control", "HUM null control on a band");
  add_common(ctl_cmd, ctl_opts.common);
  ctl_cmd->add_option("--domain", ctl_opts.domain, "rectangle");
  ctl_cmd->add_option("--nx", ctl_opts.nx, "interior nodes in x");
  ctl_cmd->add_option("--ny", ctl_opts.ny, "interior nodes in y");
  ctl_cmd->add_option("--height", ctl_opts.height, "rectangle height");
  ctl_cmd->add_option("--band", ctl_opts.band, "energy window lo:hi");
  ctl_cmd->add_option("--omega", ctl_opts.omega, "full or strip:lo:hi");
  ctl_cmd->add_option("--T", ctl_opts.T, "time horizon");
  ctl_cmd->add_option("--u0", ctl_opts.u0, "random:SEED or mode:J");
  ctl_cmd->add_option("--verify-steps", ctl_opts.verify_steps,
                      "quadrature re-propagation steps (0 = skip)");
  ctl_cmd->add_option("--band-cap", ctl_opts.band_cap, "band size cap");
  ctl_cmd->add_option("--g-csv", ctl_opts.g_csv, "write control norm samples here");
  ctl_cmd->add_option("--g-samples", ctl_opts.g_samples, "time samples for --g-csv");

  PipelineOpts pipe_opts;
  CLI::App* pipe_cmd =
      app.add_subcommand("pipeline", "resolvent-to-observability pipeline check");
  add_common(pipe_cmd, pipe_opts.common);
  pipe_cmd->add_option("--scan", pipe_opts.scan_path, "scan CSV with measured norms");
  pipe_cmd->add_option("--K", pipe_opts.K, "horizon multiplier");
  pipe_cmd->add_option("--modes", pipe_opts.modes, "dyadic mode range lo:hi");
  pipe_cmd->add_option("--window", pipe_opts.window, "energy window lo:hi");
  pipe_cmd->add_option("--omega-threshold", pipe_opts.omega_threshold,
                       "observe {|x| > t} (negative = everything)");
  pipe_cmd->add_option("--half-length", pipe_opts.half_length, "cylinder half-length");
  pipe_cmd->add_option("--stability-threshold", pipe_opts.threshold,
                       "min/median bound for pass");

  QuasimodeOpts quasi_opts;
  CLI::App* quasi_cmd =
      app.add_subcommand("quasimode", "truncated rectangle modes on the stadium");
  add_common(quasi_cmd, quasi_opts.common);
  quasi_cmd->add_option("--npu", quasi_opts.npu, "nodes per unit length");
  quasi_cmd->add_option("--radius", quasi_opts.radius, "stadium half-width r");
  quasi_cmd->add_option("--flat", quasi_opts.flat, "stadium flat length L");
  quasi_cmd->add_option("--transverse", quasi_opts.transverse,
                        "transverse index range lo:hi or list");
  quasi_cmd->add_option("--axial", quasi_opts.axial, "axial half-wave count");
  quasi_cmd->add_option("--ramp", quasi_opts.ramp, "cutoff ramp width");

  ReportOpts rep_opts;
  CLI::App* rep_cmd =
      app.add_subcommand("report", "merge experiment artifacts into one summary");
  add_common(rep_cmd, rep_opts.common);
  rep_cmd->add_option("paths", rep_opts.paths, "artifact files (.json or .csv)");
  rep_cmd->add_option("--columns", rep_opts.columns, "write gnuplot columns here");

  CLI::App* self_cmd = app.add_subcommand("selftest", "fast internal oracle checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (scan_cmd->parsed()) return cmd_scan(scan_opts, *scan_cmd);
    if (fit_cmd->parsed()) return cmd_fit(fit_opts, *fit_cmd);
    if (obs_cmd->parsed()) return cmd_observe(obs_opts, *obs_cmd);
    if (ctl_cmd->parsed()) return cmd_control(ctl_opts, *ctl_cmd);
    if (pipe_cmd->parsed()) return cmd_pipeline(pipe_opts, *pipe_cmd);
    if (quasi_cmd->parsed()) return cmd_quasimode(quasi_opts, *quasi_cmd);
    if (rep_cmd->parsed()) return cmd_report(rep_opts, *rep_cmd);
    if (self_cmd->parsed()) return cmd_selftest();
  } catch (const cli_error& e) {
    std::fprintf(stderr, "specctrl: %s\n", e.message.c_str());
    return e.code;
  } catch (const invalid_argument& e) {
    std::fprintf(stderr, "specctrl: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {  // std::stoi and friends
    std::fprintf(stderr, "specctrl: bad numeric argument: %s\n", e.what());
    return 2;
  } catch (const solver_error& e) {
    std::fprintf(stderr, "specctrl: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "specctrl: %s\n", e.what());
    return 3;
  }
  return 2;
}
