#pragma once

// Sampling experiments and their reports: tallies, size statistics, the
// Cayley failure table and conditional-uniformity runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"

#include "anasamp/errors.hpp"
#include "anasamp/oracle.hpp"
#include "anasamp/random.hpp"
#include "anasamp/sampler.hpp"
#include "anasamp/spec.hpp"
#include "anasamp/stats.hpp"
#include "anasamp/term_tree.hpp"

namespace anasamp {

using Json = nlohmann::ordered_json;

enum class Emit { Stats, Sizes, Trees };

inline constexpr std::uint64_t kDefaultMaxSize = 10'000'000;
inline constexpr std::uint64_t kDefaultTargetAttempts = 100'000'000;

/// FNV-1a over the canonical printed form, as 16 hex digits.
inline std::string spec_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ExperimentConfig {
  std::string spec_hash;
  std::string class_name;
  Coordinates coords;
  std::uint64_t seed = 0;
  std::uint64_t count = 1000;
  std::uint64_t max_size = kDefaultMaxSize;
  std::optional<std::uint64_t> target;
  double tolerance = 0.0;
  unsigned jobs = 1;
  Emit emit = Emit::Stats;
  std::uint64_t max_attempts = kDefaultTargetAttempts;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::uint64_t attempts = 0;
  std::uint64_t accepts = 0;
  std::uint64_t failures = 0;
  std::uint64_t overflows = 0;
  std::uint64_t size_rejections = 0;
  std::optional<double> theoretical_failure;
  std::vector<std::uint64_t> sizes;  // accepted sizes, in generation order
  std::vector<std::string> trees;    // filled for Emit::Trees
  std::map<std::uint64_t, std::uint64_t> symmetry;
  bool has_pairs = false;

  /// Failures over completed attempts; overflows are excluded.
  double observed_failure_ratio() const {
    const auto completed = failures + accepts + size_rejections;
    return completed ? static_cast<double>(failures) / static_cast<double>(completed) : 0.0;
  }

  double mean_size() const {
    if (sizes.empty()) return 0.0;
    long double s = 0;
    for (auto x : sizes) s += static_cast<long double>(x);
    return static_cast<double>(s / static_cast<long double>(sizes.size()));
  }

  std::uint64_t max_size() const { return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end()); }

  std::map<std::uint64_t, std::uint64_t> size_histogram() const {
    std::map<std::uint64_t, std::uint64_t> h;
    for (auto s : sizes) ++h[s];
    return h;
  }
};

namespace detail {

template <typename Source>
ExperimentReport run_worker(const Source& source, const ExperimentConfig& cfg, std::uint64_t count,
                            std::uint64_t seed, bool has_pairs) {
  Rng rng(seed);
  ExperimentReport r;
  auto record = [&](const TermTree& tree, std::uint64_t size) {
    ++r.accepts;
    r.sizes.push_back(size);
    if (cfg.emit == Emit::Trees) r.trees.push_back(canonical_serialize(tree));
    if (has_pairs)
      for (const auto& [m, c] : symmetry_histogram(tree)) r.symmetry[m] += c;
  };
  for (std::uint64_t i = 0; i < count; ++i) {
    if (cfg.target) {
      auto t = sample_targeted(source, rng, *cfg.target, cfg.tolerance, cfg.max_attempts);
      r.attempts += t.stats.attempts;
      r.failures += t.stats.failures;
      r.overflows += t.stats.overflows;
      r.size_rejections += t.stats.size_rejections;
      record(t.tree, t.size);
    } else {
      ++r.attempts;
      Outcome o = source.sample_once(rng, cfg.max_size);
      if (auto* ok = std::get_if<Accepted>(&o)) record(ok->tree, ok->size);
      else if (is_failure(o)) ++r.failures;
      else ++r.overflows;
    }
  }
  return r;
}

}  // namespace detail

/// Runs `count` independent draws split over `jobs` workers; worker w uses
/// seed derive_seed(seed, w). Without a target a draw is one attempt; with a
/// target it is one accepted object from sample_targeted. Worker results are
/// merged in worker order, so the report does not depend on scheduling.
template <typename Source>
ExperimentReport run_experiment(const Source& source, const ExperimentConfig& cfg,
                                std::optional<double> theoretical_failure, bool has_pairs) {
  const unsigned jobs = std::max(1u, cfg.jobs);
  std::vector<ExperimentReport> parts(jobs);
  std::vector<std::exception_ptr> errors(jobs);
  auto work = [&](unsigned w) {
    try {
      const std::uint64_t share = cfg.count / jobs + (w < cfg.count % jobs ? 1 : 0);
      parts[w] = detail::run_worker(source, cfg, share, derive_seed(cfg.seed, w), has_pairs);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < jobs; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  ExperimentReport out;
  out.config = cfg;
  out.theoretical_failure = theoretical_failure;
  out.has_pairs = has_pairs;
  for (auto& p : parts) {
    out.attempts += p.attempts;
    out.accepts += p.accepts;
    out.failures += p.failures;
    out.overflows += p.overflows;
    out.size_rejections += p.size_rejections;
    out.sizes.insert(out.sizes.end(), p.sizes.begin(), p.sizes.end());
    for (auto& t : p.trees) out.trees.push_back(std::move(t));
    for (const auto& [m, c] : p.symmetry) out.symmetry[m] += c;
  }
  return out;
}

/// 1 - A(z)/a for a spec class, or nothing when the oracle diverges. A
/// value of A(z) above a by no more than rounding reads as zero failure.
inline std::optional<double> spec_theoretical_failure(const Grammar& g, std::size_t cls, const Coordinates& c) {
  const auto gf = gf_value(g, cls, c.z, 1e-14);
  if (!gf.converged || !(gf.value > 0.0)) return std::nullopt;
  const double a = c.levels.at(g.class_name(cls)).front();
  if (gf.value > a) return gf.value <= a * (1.0 + 1e-9) ? std::optional<double>(0.0) : std::nullopt;
  return theoretical_failure(gf.value, a);
}

// ---------------------------------------------------------------------------
// Serialisation

inline const char* to_string(Emit e) {
  switch (e) {
    case Emit::Stats: return "stats";
    case Emit::Sizes: return "sizes";
    case Emit::Trees: return "trees";
  }
  return "stats";
}

inline Json to_json(const ExperimentReport& r) {
  const auto& c = r.config;
  Json config;
  config["specHash"] = c.spec_hash;
  config["className"] = c.class_name;
  config["z"] = c.coords.z;
  Json levels = Json::object();
  for (const auto& [name, v] : c.coords.levels) levels[name] = v;
  config["levels"] = levels;
  Json tail = Json::object();
  for (const auto& [name, k] : c.coords.tail_k) tail[name] = k;
  config["tailK"] = tail;
  config["seed"] = c.seed;
  config["count"] = c.count;
  config["maxSize"] = c.target ? target_window(*c.target, c.tolerance).second : c.max_size;
  config["target"] = c.target ? Json(*c.target) : Json(nullptr);
  config["tolerance"] = c.target ? Json(c.tolerance) : Json(nullptr);
  config["jobs"] = c.jobs;
  config["emit"] = to_string(c.emit);

  Json j;
  j["config"] = config;
  j["tallies"] = {{"attempts", r.attempts},
                  {"accepts", r.accepts},
                  {"failures", r.failures},
                  {"overflows", r.overflows},
                  {"sizeRejections", r.size_rejections}};
  j["observedFailureRatio"] = r.observed_failure_ratio();
  j["theoreticalFailure"] = r.theoretical_failure ? Json(*r.theoretical_failure) : Json(nullptr);
  Json hist = Json::object();
  for (const auto& [s, n] : r.size_histogram()) hist[std::to_string(s)] = n;
  j["sizeStats"] = {{"mean", r.mean_size()}, {"max", r.max_size()}, {"histogram", hist}};
  if (r.has_pairs) {
    Json sym = Json::object();
    for (const auto& [m, n] : r.symmetry) sym[std::to_string(m)] = n;
    j["symmetry"] = sym;
  }
  if (c.emit == Emit::Sizes) j["sizes"] = r.sizes;
  if (c.emit == Emit::Trees) j["trees"] = r.trees;
  return j;
}

inline std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

/// CSV: a one-row summary for stats, size/count rows for sizes, one row per
/// accepted object for trees.
inline std::string to_csv(const ExperimentReport& r) {
  std::ostringstream os;
  switch (r.config.emit) {
    case Emit::Stats:
      os << "attempts,accepts,failures,overflows,size_rejections,observed_failure_pct,"
            "theoretical_failure_pct,mean_size,max_size\n";
      os << r.attempts << ',' << r.accepts << ',' << r.failures << ',' << r.overflows << ','
         << r.size_rejections << ',' << fixed(100.0 * r.observed_failure_ratio(), 1) << ','
         << (r.theoretical_failure ? fixed(100.0 * *r.theoretical_failure, 1) : std::string()) << ','
         << fixed(r.mean_size(), 1) << ',' << r.max_size() << '\n';
      break;
    case Emit::Sizes:
      os << "size,count\n";
      for (const auto& [s, n] : r.size_histogram()) os << s << ',' << n << '\n';
      break;
    case Emit::Trees:
      os << "size,tree\n";
      for (std::size_t i = 0; i < r.trees.size(); ++i) os << r.sizes[i] << ",\"" << r.trees[i] << "\"\n";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Cayley failure table

struct Table1Column {
  const char* label;
  double z;
  double t;
};

/// The eight (z, t) pairs of the Cayley experiment.
inline std::vector<Table1Column> table1_columns() {
  return {{"0.35", 0.35, 1.0},     {"0.36", 0.36, 1.0},         {"0.367", 0.367, 1.0},
          {"0.3678", 0.3678, 1.0}, {"0.36787", 0.36787, 1.0},   {"0.367879", 0.367879, 1.0},
          {"exp(-1)", std::exp(-1.0), 1.0}, {"0.367", 0.367, 0.98}};
}

struct Table1Row {
  Table1Column column;
  double theoretical = 0.0;
  std::uint64_t attempts = 0;
  std::uint64_t failures = 0;
  std::uint64_t accepts = 0;
  std::uint64_t overflows = 0;
  double mean_size = 0.0;
  std::uint64_t max_size = 0;

  double observed() const {
    const auto completed = failures + accepts;
    return completed ? static_cast<double>(failures) / static_cast<double>(completed) : 0.0;
  }
};

/// 1 - T(z)/t for every column; no sampling.
inline std::vector<double> table1_theoretical() {
  std::vector<double> out;
  for (const auto& c : table1_columns()) out.push_back(theoretical_failure(cayley_T(c.z), c.t));
  return out;
}

/// `calls` attempts per column; column k draws from derive_seed(seed, k).
inline std::vector<Table1Row> run_table1(std::uint64_t seed, std::uint64_t calls = 1000,
                                         std::uint64_t max_size = kDefaultMaxSize) {
  std::vector<Table1Row> rows;
  const auto cols = table1_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    Table1Row row;
    row.column = cols[k];
    row.theoretical = theoretical_failure(cayley_T(cols[k].z), cols[k].t);
    CayleySampler sampler(cols[k].z, cols[k].t);
    Rng rng(derive_seed(seed, k));
    long double total = 0;
    for (std::uint64_t i = 0; i < calls; ++i) {
      ++row.attempts;
      Outcome o = sampler.sample_once(rng, max_size);
      if (auto* ok = std::get_if<Accepted>(&o)) {
        ++row.accepts;
        total += static_cast<long double>(ok->size);
        row.max_size = std::max(row.max_size, ok->size);
      } else if (is_failure(o)) {
        ++row.failures;
      } else {
        ++row.overflows;
      }
    }
    row.mean_size = row.accepts ? static_cast<double>(total / static_cast<long double>(row.accepts)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

inline std::string table1_csv(const std::vector<Table1Row>& rows) {
  std::ostringstream os;
  os << "z,t,theoretical_failure_pct,observed_failure_pct,average_size,maximal_size,overflows\n";
  for (const auto& r : rows)
    os << r.column.label << ',' << fixed(r.column.t, 2) << ',' << fixed(100.0 * r.theoretical, 1) << ','
       << fixed(100.0 * r.observed(), 1) << ',' << fixed(r.mean_size, 1) << ',' << r.max_size << ','
       << r.overflows << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Conditional uniformity

struct UniformityRun {
  ChiSquareResult chi2;
  std::uint64_t samples = 0;
  std::uint64_t attempts = 0;
  std::map<std::string, std::uint64_t> counts;
};

/// Draws `samples` objects of size exactly n and tests them for uniformity
/// over the `universe` objects of that size.
template <typename Source, RandomSource R>
UniformityRun run_uniformity(const Source& source, R& rng, std::uint64_t n, std::uint64_t universe,
                             std::uint64_t samples, std::uint64_t max_attempts = kDefaultTargetAttempts) {
  UniformityRun run;
  for (std::uint64_t i = 0; i < samples; ++i) {
    auto t = sample_targeted(source, rng, n, 0.0, max_attempts);
    run.attempts += t.stats.attempts;
    ++run.counts[canonical_serialize(t.tree)];
  }
  run.samples = samples;
  run.chi2 = chi_square_uniform(run.counts, universe);
  return run;
}

}  // namespace anasamp
