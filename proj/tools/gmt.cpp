// gmt: command-line front end.
//
//   gmt synth    --spec plane.json --out plane.csv
//   gmt density  --in plane.csv [--field f.json] [--scales 0.05:0.2:1] --out dir
//   gmt flatness | moments | blowup | classify   (same shape)
//   gmt verify   [--suite all] [--out dir]
//
// Exit status: 0 pass, 1 analysis failure, 2 usage.

#include "gmt/blowup.hpp"
#include "gmt/classify.hpp"
#include "gmt/density.hpp"
#include "gmt/flatness.hpp"
#include "gmt/measure.hpp"
#include "gmt/moments.hpp"
#include "gmt/synth.hpp"
#include "gmt/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef GMT_VERSION
#define GMT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gmt;

namespace {

constexpr int kExitAnalysis = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
}

struct AnalysisConfig {
  std::string command;
  std::string in, out, field, spec, suite = "all";
  std::string scales;
  double scale_min = 0.05, scale_max = 0.4;
  int per_octave = 1;
  double threshold = 0.35;
  std::uint64_t seed = 1;
  std::vector<double> center;
  int n = 0;
  std::size_t centers = 20;
  bool verbose = false;

  // Filled by validate().
  std::vector<double> ladder;  // decreasing
  std::string input_hash;

  json to_json() const {
    json j = {{"command", command}, {"seed", seed}, {"threshold", threshold}, {"n", n}, {"centers", centers}};
    if (!in.empty()) j["in"] = in, j["input_fnv1a"] = input_hash;
    if (!field.empty()) j["field"] = read_json(field);
    if (!spec.empty()) j["spec"] = read_json(spec);
    if (command == "verify") j["suite"] = suite;
    if (!ladder.empty()) j["scales"] = ladder;
    if (!center.empty()) j["center"] = center;
    return j;
  }
  std::string hash() const { return hex64(fnv1a(to_json().dump())); }
};

void parse_scales(AnalysisConfig& c) {
  if (c.scales.empty()) return;
  std::vector<std::string> parts;
  std::stringstream s(c.scales);
  for (std::string p; std::getline(s, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw UsageError("--scales expects min:max:per_octave");
  try {
    std::size_t used = 0;
    c.scale_min = std::stod(parts[0], &used);
    if (used != parts[0].size()) throw std::invalid_argument(parts[0]);
    c.scale_max = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw std::invalid_argument(parts[1]);
    c.per_octave = std::stoi(parts[2], &used);
    if (used != parts[2].size()) throw std::invalid_argument(parts[2]);
  } catch (const std::logic_error&) {
    throw UsageError("--scales: malformed number in '" + c.scales + "'");
  }
}

void validate(AnalysisConfig& c) {
  parse_scales(c);
  if (c.command != "synth" && c.command != "verify") {
    if (c.in.empty()) throw UsageError("--in is required");
    if (!(c.scale_min > 0.0) || !(c.scale_max > c.scale_min) || c.per_octave < 1)
      throw UsageError("--scales needs 0 < min < max and per_octave >= 1");
    try {
      c.ladder = scale_ladder(c.scale_min, c.scale_max, c.per_octave);
    } catch (const InputError& e) {
      throw UsageError(std::string("--scales: ") + e.what());
    }
    if (c.ladder.size() < 3) throw UsageError("--scales must give at least 3 scales");
    c.input_hash = hex64(fnv1a(slurp(c.in)));
  }
  if (c.command == "synth" && (c.spec.empty() || c.out.empty())) throw UsageError("synth needs --spec and --out");
  if (!(c.threshold > 0.0)) throw UsageError("--threshold must be positive");
  if (c.command == "classify" && !(c.threshold < 1.0 / std::sqrt(2.0)))
    throw UsageError("--threshold must lie below 1/sqrt2");
  if (c.centers == 0) throw UsageError("--centers must be positive");
}

struct Context {
  const AnalysisConfig& cfg;
  DiscreteMeasure mu;
  MetricField field;
  int n;

  void log(const std::string& msg) const {
    if (cfg.verbose) std::cerr << "[gmt] " << msg << "\n";
  }
};

Context load(const AnalysisConfig& cfg) {
  DiscreteMeasure mu;
  try {
    mu = read_measure_csv(cfg.in);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  const int d = mu.dim();
  MetricField field = MetricField::identity(d);
  if (!cfg.field.empty()) {
    try {
      field = MetricField::from_json(read_json(cfg.field));
    } catch (const InputError& e) {
      throw UsageError(e.what());
    }
    if (field.ambient_dim() != d) throw UsageError("--field dimension does not match the measure");
  }
  const int n = cfg.n > 0 ? cfg.n : d - 1;
  if (n >= d) throw UsageError("--n must be below the ambient dimension");
  if (!cfg.center.empty() && static_cast<int>(cfg.center.size()) != d)
    throw UsageError("--center dimension does not match the measure");
  return {cfg, std::move(mu), std::move(field), n};
}

/// Evaluation points: --center when given (snapped to the support),
/// otherwise interior support points spread by farthest-point order.
PointMatrix centers(const Context& c, double radius) {
  if (!c.cfg.center.empty()) {
    const Vec x = Vec::Map(c.cfg.center.data(), static_cast<Eigen::Index>(c.cfg.center.size()));
    PointMatrix one(x.size(), 1);
    one.col(0) = c.mu.point(c.mu.nearest(x).first);
    return one;
  }
  return interior_centers(c.mu, c.cfg.centers, radius);
}

Vec single_center(const Context& c) {
  if (!c.cfg.center.empty()) return centers(c, 0.0).col(0);
  const Vec mean = c.mu.points() * c.mu.weights() / c.mu.weights().sum();
  return c.mu.point(c.mu.nearest(mean).first);
}

const MetricField* aniso(const Context& c) { return c.field.is_identity() ? nullptr : &c.field; }

std::vector<double> as_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

struct Report {
  json result = json::object();
  std::ostringstream csv;
  Report() { csv.precision(12); }
};

Report run_density(const Context& c) {
  Report r;
  const auto pts = centers(c, c.cfg.ladder.front());
  r.result["profiles"] = json::array();
  double sup = 0.0;
  r.csv << "center,scale,ratio\n";
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    const auto p = density_profile(c.mu, c.field, pts.col(k), c.cfg.ladder, c.n);
    const auto dd = doubling_defect(c.mu, c.field, p.center, c.cfg.ladder.front(), default_t_grid(), c.n);
    sup = std::max(sup, p.sup_defect());
    json row = p.to_json();
    row["doubling"] = dd.to_json();
    r.result["profiles"].push_back(row);
    for (std::size_t s = 0; s < p.scales.size(); ++s) r.csv << k << ',' << p.scales[s] << ',' << p.ratios[s] << '\n';
  }
  r.result["sup_defect"] = sup;
  return r;
}

Report run_flatness(const Context& c) {
  Report r;
  const auto pts = centers(c, c.cfg.ladder.front());
  r.result["profiles"] = json::array();
  r.csv << "center,scale,beta,bbeta,bbeta_aniso,beta2\n";
  for (Eigen::Index k = 0; k < pts.cols(); ++k) {
    const auto p = flatness_profile(c.mu, pts.col(k), c.cfg.ladder, c.n, aniso(c));
    r.result["profiles"].push_back(p.to_json());
    std::istringstream rows(p.to_csv());
    std::string line;
    std::getline(rows, line);  // header
    while (std::getline(rows, line)) r.csv << k << ',' << line << '\n';
  }
  return r;
}

Report run_moments(const Context& c) {
  Report r;
  const auto frame = tilde_transform(c.mu, c.field, single_center(c));
  r.result["x0"] = as_vector(frame.x0);
  r.result["tables"] = json::array();
  r.csv << "scale,b_norm,trQ,trace_defect,fitted_constant,residual_exponent,residual_coefficient\n";
  for (double s : c.cfg.ladder) {
    const auto t = moment_residuals(frame, s, c.n, admissible_test_points(frame, s));
    r.result["tables"].push_back(t.to_json());
    r.csv << s << ',' << t.data.b.norm() << ',' << t.data.trQ << ',' << t.trace_defect << ',' << t.fitted_constant
          << ',' << t.residual_exponent << ',' << t.residual_coefficient << '\n';
  }
  return r;
}

Report run_blowup(const Context& c) {
  Report r;
  const Vec x = single_center(c);
  r.result["center"] = as_vector(x);
  r.result["rescalings"] = json::array();
  r.csv << "scale,normalizer,flatness,unit_mass\n";
  for (double s : c.cfg.ladder) {
    const auto res = rescale(c.mu, aniso(c), x, s);
    const auto f = flatness_functional(res.measure, c.n);
    r.result["rescalings"].push_back({{"scale", s},
                                      {"normalizer", res.normalizer},
                                      {"flatness", f.value},
                                      {"unit_mass", f.unit_mass},
                                      {"points", res.measure.size()}});
    r.csv << s << ',' << res.normalizer << ',' << f.value << ',' << f.unit_mass << '\n';
  }
  // Ratios of the ladder, seen from the coarsest rescaling.
  const auto coarse = rescale(c.mu, aniso(c), x, c.cfg.ladder.front());
  std::vector<double> grid;
  for (std::size_t k = 1; k < c.cfg.ladder.size(); ++k) grid.push_back(c.cfg.ladder[k] / c.cfg.ladder.front());
  const auto cd = conicality_defect(coarse.measure, c.n, grid);
  r.result["conicality"] = {{"value", cd.value}, {"per_scale", cd.per_scale}, {"quantization_error", cd.quantization_error}};
  return r;
}

Report run_classify(const Context& c) {
  Report r;
  // Unit-scale label of the data as given.
  try {
    r.result["kowalski_preiss"] = kp_classify(c.mu, c.n).to_json();
  } catch (const DomainError& e) {
    r.result["kowalski_preiss"] = {{"label", "unknown"}, {"error", e.what()}};
  }
  std::vector<double> scales(c.cfg.ladder.rbegin(), c.cfg.ladder.rend());
  const double radius = scales[scales.size() / 2];
  const auto rows = regular_singular_partition(c.mu, aniso(c), centers(c, radius), scales, c.n, c.cfg.threshold);
  r.result["partition"] = json::array();
  for (const auto& row : rows) r.result["partition"].push_back(row.to_json());
  std::istringstream summary(partition_summary_csv(rows));
  json counts = json::object();
  std::string line;
  std::getline(summary, line);
  while (std::getline(summary, line)) {
    const auto comma = line.find(',');
    counts[line.substr(0, comma)] = std::stoul(line.substr(comma + 1));
  }
  r.result["summary"] = counts;
  const int d = c.mu.dim();
  for (int a = 0; a < d; ++a) r.csv << 'x' << a << ',';
  r.csv << "verdict";
  for (double s : scales) r.csv << ",bbeta_" << s;
  r.csv << '\n';
  for (const auto& row : rows) {
    for (int a = 0; a < d; ++a) r.csv << row.point(a) << ',';
    r.csv << to_string(row.verdict);
    for (double b : row.bbeta_values) r.csv << ',' << b;
    r.csv << '\n';
  }
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
}

json envelope(const AnalysisConfig& cfg) {
  return {{"tool", "gmt"}, {"version", GMT_VERSION}, {"config", cfg.to_json()}, {"config_hash", cfg.hash()}};
}

void emit(const AnalysisConfig& cfg, const json& result, const std::string& csv) {
  json doc = envelope(cfg);
  doc["result"] = result;
  const std::string header = "# gmt " GMT_VERSION " config_hash=" + cfg.hash() + "\n";
  if (cfg.out.empty()) {
    std::cout << doc.dump(2) << "\n";
    return;
  }
  write_text(fs::path(cfg.out) / (cfg.command + ".json"), doc.dump(2) + "\n");
  write_text(fs::path(cfg.out) / (cfg.command + ".csv"), header + csv);
}

int run_synth(const AnalysisConfig& cfg) {
  synth::SurfaceSpec spec;
  json sj = read_json(cfg.spec);
  try {
    if (sj.value("kind", "") == "holder_graph" && !sj.contains("seed")) sj["seed"] = cfg.seed;
    spec = synth::SurfaceSpec::from_json(sj);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  const auto mu = synth::sample(spec);
  write_measure_csv(cfg.out, mu);
  json doc = envelope(cfg);
  doc["result"] = {{"points", mu.size()}, {"ambient_dim", mu.dim()}, {"total_mass", mu.total_mass()}, {"out", cfg.out}};
  std::cout << doc.dump() << "\n";
  return 0;
}

int run_verify(const AnalysisConfig& cfg) {
  std::vector<verify::SuiteResult> results;
  try {
    results = verify::run(cfg.suite, cfg.seed);
  } catch (const InputError& e) {
    throw UsageError(e.what());
  }
  bool ok = true;
  json list = json::array();
  std::ostringstream csv;
  csv << "suite,pass\n";
  for (const auto& r : results) {
    ok = ok && r.pass;
    list.push_back(r.to_json());
    csv << r.name << ',' << (r.pass ? "pass" : "FAIL") << '\n';
    std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name;
    if (cfg.verbose) std::cerr << " (" << r.seconds << " s)";
    std::cerr << "\n";
  }
  emit(cfg, {{"pass", ok}, {"suites", list}}, csv.str());
  return ok ? 0 : kExitAnalysis;
}

int dispatch(const AnalysisConfig& cfg) {
  if (cfg.command == "synth") return run_synth(cfg);
  if (cfg.command == "verify") return run_verify(cfg);
  const Context c = load(cfg);
  c.log("loaded " + std::to_string(c.mu.size()) + " points in R^" + std::to_string(c.mu.dim()));
  const auto t0 = std::chrono::steady_clock::now();
  Report r;
  if (cfg.command == "density") r = run_density(c);
  else if (cfg.command == "flatness") r = run_flatness(c);
  else if (cfg.command == "moments") r = run_moments(c);
  else if (cfg.command == "blowup") r = run_blowup(c);
  else r = run_classify(c);
  c.log(cfg.command + " took " +
        std::to_string(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) + " s");
  emit(cfg, r.result, r.csv.str());
  return 0;
}

void error_record(const AnalysisConfig& cfg, const char* kind, const std::string& message) {
  json doc = {{"tool", "gmt"}, {"version", GMT_VERSION}, {"command", cfg.command},
              {"error", {{"kind", kind}, {"message", message}}}};
  std::cerr << doc.dump() << "\n";
  if (!cfg.out.empty() && cfg.command != "synth") {
    try {
      write_text(fs::path(cfg.out) / "error.json", doc.dump(2) + "\n");
    } catch (...) {
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale flatness and blow-up analysis of weighted point clouds"};
  app.set_version_flag("--version", GMT_VERSION);
  app.require_subcommand(1);
  AnalysisConfig cfg;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "Sample a model surface into a measure file"},
      {"density", "Density ratios and doubling defects"},
      {"flatness", "beta, bilateral beta and beta2 profiles"},
      {"moments", "Moments b, Q and quadratic residuals"},
      {"blowup", "Rescalings, flatness functional and conicality"},
      {"classify", "Plane / light-cone label and regular-singular partition"},
      {"verify", "Run the verification suites"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--in", cfg.in, "Measure CSV (x0,...,weight)");
    sub->add_option("--out", cfg.out, name == "synth" ? "Measure CSV to write" : "Report directory");
    sub->add_option("--field", cfg.field, "Metric field JSON");
    sub->add_option("--spec", cfg.spec, "Surface spec JSON");
    sub->add_option("--scales", cfg.scales, "Scale ladder min:max:per_octave");
    sub->add_option("--threshold", cfg.threshold, "Singularity threshold for bbeta");
    sub->add_option("--seed", cfg.seed, "Seed for randomized choices");
    sub->add_option("--suite", cfg.suite, "Verification suite or 'all'");
    sub->add_option("--center", cfg.center, "Evaluation point (snapped to the support)")->delimiter(',');
    sub->add_option("--n", cfg.n, "Surface dimension (default: ambient - 1)");
    sub->add_option("--centers", cfg.centers, "Number of interior evaluation points");
    sub->add_flag("--verbose", cfg.verbose, "Progress on stderr");
    sub->callback([&cfg, name] { cfg.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (cfg.command == "classify" && cfg.scales.empty()) cfg.scales = "0.2:0.8:1";

  try {
    validate(cfg);
    return dispatch(cfg);
  } catch (const UsageError& e) {
    error_record(cfg, "usage", e.what());
    return kExitUsage;
  } catch (const InputError& e) {
    error_record(cfg, e.kind(), e.what());
    return kExitUsage;
  } catch (const gmt::Error& e) {
    error_record(cfg, e.kind(), e.what());
    return kExitAnalysis;
  } catch (const std::exception& e) {
    error_record(cfg, "internal", e.what());
    return kExitAnalysis;
  }
}
