// anasamp: command-line front end for the analytic samplers.

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "anasamp/anasamp.hpp"

namespace {

using namespace anasamp;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string spec;
  std::string class_name;
  std::optional<double> z;
  std::vector<std::string> values;
  std::vector<std::string> levels;
  std::vector<std::string> tail_k;
  unsigned i0 = 0;
  std::uint64_t count = 1000;
  std::optional<std::uint64_t> seed;
  std::uint64_t max_size = kDefaultMaxSize;
  std::optional<std::uint64_t> target;
  double tolerance = 0.1;
  std::string format;  // empty: csv for table1, json elsewhere
  unsigned jobs = 1;
  std::string method = "maximize";
  std::string emit = "stats";
  std::string omega;
  unsigned n = 10;
  std::uint64_t samples = 50000;
  std::optional<std::uint64_t> universe;
  double tol = 1e-9;
  double z_hi = 0.99;
};

double parse_double(std::string_view s, std::string_view what) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size()) throw UsageError("malformed number for " + std::string(what) + ": '" + std::string(s) + "'");
  return x;
}

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw UsageError("malformed integer for " + std::string(what) + ": '" + std::string(s) + "'");
  return x;
}

std::pair<std::string, std::string> split_assignment(const std::string& arg, std::string_view flag) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError(std::string(flag) + " expects NAME=VALUE, got '" + arg + "'");
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_builtin(const Options& o, std::string_view name) { return o.spec == "builtin:" + std::string(name); }

CombSpec load_spec(const Options& o) {
  if (o.spec.empty()) throw UsageError("--spec is required");
  if (is_builtin(o, "otter")) return otter_spec();
  if (is_builtin(o, "cayley")) throw UsageError("builtin:cayley has no grammar; use it with sample");
  return parse_spec(read_file(o.spec));
}

std::string class_of(const Options& o, const CombSpec& spec) {
  if (!o.class_name.empty()) return o.class_name;
  return spec.definitions().front().name;
}

std::uint64_t resolve_seed(const Options& o) {
  if (o.seed) return *o.seed;
  if (const char* env = std::getenv("ANASAMP_SEED")) return parse_u64(env, "ANASAMP_SEED");
  return 0;
}

/// Coordinates from --z/--value/--levels/--tail-k. User values are raised by
/// a few ulps so that an exact solution typed in decimal stays valid.
Coordinates coordinates_from(const Options& o) {
  if (!o.z) throw UsageError("--z is required");
  Coordinates c;
  c.z = *o.z;
  for (const auto& a : o.values) {
    auto [name, v] = split_assignment(a, "--value");
    c.levels[name] = {nudge_up(parse_double(v, "--value"))};
  }
  for (const auto& a : o.levels) {
    auto [name, list] = split_assignment(a, "--levels");
    std::vector<double> vs;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) vs.push_back(nudge_up(parse_double(item, "--levels")));
    c.levels[name] = std::move(vs);
  }
  for (const auto& a : o.tail_k) {
    auto [name, k] = split_assignment(a, "--tail-k");
    c.tail_k[name] = parse_double(k, "--tail-k");
  }
  return c;
}

Emit parse_emit(const std::string& s) {
  if (s == "stats") return Emit::Stats;
  if (s == "sizes") return Emit::Sizes;
  if (s == "trees") return Emit::Trees;
  throw UsageError("--emit must be sizes, trees or stats");
}

void print_report(const ExperimentReport& r, const Options& o) {
  if (o.format == "csv") std::cout << to_csv(r);
  else std::cout << to_json(r).dump(2) << '\n';
}

ExperimentConfig base_config(const Options& o, std::string hash, std::string cls, Coordinates coords) {
  ExperimentConfig cfg;
  cfg.spec_hash = std::move(hash);
  cfg.class_name = std::move(cls);
  cfg.coords = std::move(coords);
  cfg.seed = resolve_seed(o);
  cfg.count = o.count;
  cfg.max_size = o.max_size;
  cfg.target = o.target;
  cfg.tolerance = o.target ? o.tolerance : 0.0;
  cfg.jobs = o.jobs;
  cfg.emit = parse_emit(o.emit);
  if (cfg.target) target_window(*cfg.target, cfg.tolerance);  // validates the window
  return cfg;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o) {
  const auto spec = load_spec(o);
  const auto report = validate_spec(spec);
  Json j;
  j["accepted"] = report.accepted();
  Json minsize = Json::object();
  for (const auto& [name, m] : report.minsize) minsize[name] = m == kInfiniteSize ? Json(nullptr) : Json(m);
  j["minsize"] = minsize;
  Json errors = Json::array();
  for (const auto& e : report.errors)
    errors.push_back({{"kind", to_string(e.kind)}, {"className", e.class_name}, {"message", e.message}});
  j["errors"] = errors;
  std::cout << j.dump(2) << '\n';
  return report.accepted() ? kExitOk : kExitDomain;
}

int cmd_coeffs(const Options& o) {
  const auto spec = load_spec(o);
  const Grammar g(spec);
  const auto coeffs = series_coefficients(g, g.class_index(class_of(o, spec)), o.n);
  if (o.format == "csv") {
    std::cout << "n,count\n";
    for (std::size_t i = 0; i < coeffs.size(); ++i) std::cout << i << ',' << coeffs[i] << '\n';
    return kExitOk;
  }
  // Counts can exceed 64 bits; they are emitted as JSON numbers verbatim.
  std::string out = "[";
  for (std::size_t i = 0; i < coeffs.size(); ++i) out += (i ? "," : "") + coeffs[i].str();
  std::cout << out << "]\n";
  return kExitOk;
}

int cmd_eval(const Options& o) {
  const auto spec = load_spec(o);
  const Grammar g(spec);
  if (!o.z) throw UsageError("--z is required");
  const auto values = gf_values(g, *o.z, 1e-14);
  Json j;
  j["z"] = *o.z;
  Json classes = Json::object();
  for (std::size_t c = 0; c < g.class_count(); ++c)
    classes[g.class_name(c)] = {{"converged", values[c].converged},
                                {"value", values[c].converged ? Json(values[c].value) : Json(nullptr)},
                                {"iterations", values[c].iterations}};
  j["classes"] = classes;
  std::cout << j.dump(2) << '\n';
  bool all = true;
  for (const auto& v : values) all = all && v.converged;
  return all ? kExitOk : kExitDomain;
}

int sample_cayley_builtin(const Options& o) {
  if (!o.z) throw UsageError("--z is required");
  double t = 1.0;
  for (const auto& a : o.values) {
    auto [name, v] = split_assignment(a, "--value");
    if (name != "T") throw UsageError("builtin:cayley takes only --value T=t");
    t = parse_double(v, "--value");
  }
  Coordinates coords{*o.z, {{"T", {t}}}, {}};
  auto cfg = base_config(o, "builtin:cayley", "T", coords);
  const CayleySampler sampler(*o.z, t, cfg.emit == Emit::Trees);
  const auto report = run_experiment(sampler, cfg, theoretical_failure(cayley_T(*o.z), t), false);
  print_report(report, o);
  return kExitOk;
}

int sample_otter_builtin(const Options& o) {
  const double z = o.z ? *o.z : otter_singular_z(o.i0);
  double K = 0.0;
  for (const auto& a : o.tail_k) {
    auto [name, k] = split_assignment(a, "--tail-k");
    if (name != "V") throw UsageError("builtin:otter has the single class V");
    K = parse_double(k, "--tail-k");
  }
  const auto params = make_otter_params(z, o.i0, K);
  const auto spec = otter_spec();
  auto cfg = base_config(o, spec_hash(to_string(spec)), "V", params.coordinates());
  const auto sampler = make_otter_sampler(params);
  const auto theo = spec_theoretical_failure(sampler.grammar(), sampler.class_index(), cfg.coords);
  print_report(run_experiment(sampler, cfg, theo, true), o);
  return kExitOk;
}

void print_violations(const ValidityReport& report) {
  std::cerr << "coordinates are not analytically valid:\n";
  for (const auto& v : report.violations) std::cerr << "  " << v.message << '\n';
}

int cmd_sample(const Options& o) {
  const auto start = std::chrono::steady_clock::now();
  int rc = kExitOk;
  if (is_builtin(o, "cayley")) {
    rc = sample_cayley_builtin(o);
  } else if (is_builtin(o, "otter")) {
    rc = sample_otter_builtin(o);
  } else {
    const auto spec = load_spec(o);
    const Grammar g(spec);
    const auto cls = class_of(o, spec);
    const auto coords = coordinates_from(o);
    const auto validity = check_validity(g, coords);
    if (!validity.valid()) {
      print_violations(validity);
      return kExitDomain;
    }
    auto cfg = base_config(o, spec_hash(to_string(spec)), cls, coords);
    const Sampler sampler(spec, cls, coords);
    const auto theo = spec_theoretical_failure(g, sampler.class_index(), coords);
    print_report(run_experiment(sampler, cfg, theo, g.has_mset2()), o);
  }
  // Wall time stays out of the report so reports are reproducible byte for byte.
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "elapsed_ms " << ms << '\n';
  return rc;
}

int cmd_table1(const Options& o) {
  const auto rows = run_table1(resolve_seed(o), o.count, o.max_size);
  if (o.format == "json") {
    Json arr = Json::array();
    for (const auto& r : rows)
      arr.push_back({{"z", r.column.z},
                     {"zLabel", r.column.label},
                     {"t", r.column.t},
                     {"theoreticalFailure", r.theoretical},
                     {"observedFailure", r.observed()},
                     {"attempts", r.attempts},
                     {"failures", r.failures},
                     {"accepts", r.accepts},
                     {"overflows", r.overflows},
                     {"averageSize", r.mean_size},
                     {"maximalSize", r.max_size}});
    std::cout << arr.dump(2) << '\n';
  } else {
    std::cout << table1_csv(rows);
  }
  return kExitOk;
}

std::vector<unsigned> parse_omega(const std::string& s) {
  std::vector<unsigned> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(static_cast<unsigned>(parse_u64(item, "--omega")));
  if (out.empty()) throw UsageError("--omega must list at least one degree");
  return out;
}

int cmd_tune(const Options& o) {
  Json j;
  j["method"] = o.method;
  if (o.method == "maximize") {
    if (o.omega.empty()) throw UsageError("maximize needs --omega");
    const SimpleTreeFamily family(parse_omega(o.omega));
    const auto r = tune_simply_generated(family, o.tol);
    j["omega"] = family.omega();
    j["yStar"] = r.y_star;
    j["zStar"] = r.z_star;
    j["converged"] = r.converged;
    j["functionEvals"] = r.function_evals;
    j["oracleCalls"] = r.oracle_calls;
  } else if (o.method == "bisect") {
    CombSpec spec;
    std::string cls;
    if (!o.omega.empty()) {
      const SimpleTreeFamily family(parse_omega(o.omega));
      spec = family.to_spec();
      cls = "Y";
      j["omega"] = family.omega();
    } else {
      spec = load_spec(o);
      cls = class_of(o, spec);
      j["className"] = cls;
    }
    const auto r = find_singularity_bisection(spec, cls, o.z_hi, o.tol);
    j["zStar"] = r.rho;
    j["lo"] = r.lo;
    j["hi"] = r.hi;
    j["functionEvals"] = 0;
    j["oracleCalls"] = r.oracle_calls;
  } else {
    throw UsageError("--method must be maximize or bisect");
  }
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_chi2(const Options& o) {
  const auto spec = load_spec(o);
  const Grammar g(spec);
  const auto cls = class_of(o, spec);
  Coordinates coords;
  std::optional<OtterParams> otter;
  if (is_builtin(o, "otter")) {
    otter = make_otter_params(o.z ? *o.z : otter_singular_z(o.i0), o.i0);
    coords = otter->coordinates();
  } else {
    coords = coordinates_from(o);
  }
  const auto validity = check_validity(g, coords);
  if (!validity.valid()) {
    print_violations(validity);
    return kExitDomain;
  }
  const Sampler sampler(spec, cls, coords);
  const auto count = series_coefficients(g, sampler.class_index(), o.n).at(o.n);
  if (count == 0) throw DomainError("class has no object of size " + std::to_string(o.n));
  const std::uint64_t universe = o.universe ? *o.universe : count.convert_to<std::uint64_t>();
  Rng rng(resolve_seed(o));
  const auto run = run_uniformity(sampler, rng, o.n, universe, o.samples);
  Json j;
  j["n"] = o.n;
  j["universe"] = universe;
  j["samples"] = run.samples;
  j["attempts"] = run.attempts;
  j["distinctSeen"] = run.chi2.distinct_seen;
  j["statistic"] = run.chi2.statistic;
  j["dof"] = run.chi2.dof;
  j["criticalValue"] = run.chi2.critical_value;
  j["alpha"] = 0.001;
  j["pass"] = run.chi2.pass;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic samplers: uniform random generation with approximate generating-function values"};
  app.require_subcommand(1);
  Options o;

  auto add_spec = [&](CLI::App* sub) {
    sub->add_option("--spec", o.spec, "specification file, or builtin:otter / builtin:cayley")->required();
    sub->add_option("--class-name", o.class_name, "class to sample (default: first defined)");
  };
  auto add_coords = [&](CLI::App* sub) {
    sub->add_option("--z", o.z, "size parameter z");
    sub->add_option("--value", o.values, "NAME=V: value of class NAME at level 0 (repeatable)");
    sub->add_option("--levels", o.levels, "NAME=v0,v1,...: values at squaring levels (repeatable)");
    sub->add_option("--tail-k", o.tail_k, "NAME=K: tail constant for levels past the explicit ones");
    sub->add_option("--i0", o.i0, "Otter threshold level (0: automatic)");
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "RNG seed (fallback: ANASAMP_SEED, then 0)"); };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  };

  auto* validate = app.add_subcommand("validate", "check a specification and print minimal sizes");
  add_spec(validate);

  auto* coeffs = app.add_subcommand("coeffs", "exact counts of objects of size 0..n");
  add_spec(coeffs);
  coeffs->add_option("--n", o.n, "largest size")->check(CLI::Range(0u, static_cast<unsigned>(kMaxSeriesOrder)));
  add_format(coeffs);

  auto* eval = app.add_subcommand("eval", "generating-function values at z");
  add_spec(eval);
  eval->add_option("--z", o.z, "size parameter z")->required();

  auto* sample = app.add_subcommand("sample", "run an analytic sampler and report tallies");
  add_spec(sample);
  add_coords(sample);
  sample->add_option("--count", o.count, "attempts (accepted objects when --target is set)");
  add_seed(sample);
  sample->add_option("--max-size", o.max_size, "size ceiling; larger attempts count as overflows");
  sample->add_option("--target", o.target, "accept only sizes within target*(1 +- tolerance)");
  sample->add_option("--tolerance", o.tolerance, "relative width of the target window");
  add_format(sample);
  sample->add_option("--jobs", o.jobs, "worker threads")->check(CLI::Range(1u, 1024u));
  sample->add_option("--emit", o.emit, "sizes, trees or stats")->check(CLI::IsMember({"sizes", "trees", "stats"}));

  auto* table1 = app.add_subcommand("table1", "Cayley failure table: theoretical and observed rates");
  add_seed(table1);
  table1->add_option("--count", o.count, "attempts per row");
  table1->add_option("--max-size", o.max_size, "size ceiling");
  table1->add_option("--format", o.format, "csv (default) or json")->check(CLI::IsMember({"json", "csv"}));

  auto* tune = app.add_subcommand("tune", "locate the singularity of simply generated trees");
  tune->add_option("--omega", o.omega, "comma-separated degree multiset, e.g. 0,1,2");
  tune->add_option("--spec", o.spec, "specification file (bisect mode)");
  tune->add_option("--class-name", o.class_name, "class (bisect mode)");
  tune->add_option("--method", o.method, "maximize or bisect")->check(CLI::IsMember({"maximize", "bisect"}));
  tune->add_option("--tol", o.tol, "target accuracy");
  tune->add_option("--z-hi", o.z_hi, "upper bracket for bisection");

  auto* chi2 = app.add_subcommand("chi2", "chi-square uniformity test at a fixed size");
  add_spec(chi2);
  add_coords(chi2);
  chi2->add_option("--n", o.n, "object size");
  chi2->add_option("--samples", o.samples, "objects drawn");
  chi2->add_option("--universe", o.universe, "number of objects of size n (default: from the series)");
  add_seed(chi2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  // table1 defaults to CSV; every other command defaults to JSON.
  if (o.format.empty()) o.format = table1->parsed() ? "csv" : "json";

  try {
    if (validate->parsed()) return cmd_validate(o);
    if (coeffs->parsed()) return cmd_coeffs(o);
    if (eval->parsed()) return cmd_eval(o);
    if (sample->parsed()) return cmd_sample(o);
    if (table1->parsed()) return cmd_table1(o);
    if (tune->parsed()) return cmd_tune(o);
    if (chi2->parsed()) return cmd_chi2(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}
