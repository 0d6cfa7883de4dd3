#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hetbench/data.hpp"
#include "hetbench/engine.hpp"
#include "hetbench/error.hpp"

namespace hetbench {

struct DataConfig {
  std::string source = "synthetic";  // synthetic | idx
  int classes = 10;
  int dim = 16;
  int per_class = 1000;
  double spread = 2.0;
  std::uint64_t seed = 0;
  std::string images;
  std::string labels;
};

struct EvalConfig {
  std::string split = "local";  // local | global
  double holdout = 0.2;         // global only: stratified fraction held out before partitioning
};

struct ExperimentConfig {
  std::vector<Scheme> schemes{std::begin(kAllSchemes), std::end(kAllSchemes)};
  std::string partition = "iid";
  std::vector<std::uint64_t> seeds{1};
  int num_clients = 10;
  TrainingConfig training;
  DataConfig data;
  EvalConfig eval;
  SchemeConfig scheme;
  std::string out = "results";

  PartitionSpec partition_spec(std::uint64_t seed) const {
    auto spec = parse_partition(partition);
    require(spec.has_value(), ErrorKind::ConfigError, "bad partition '" + partition + "'");
    spec->num_clients = num_clients;
    spec->seed = derive_seed(seed, {0x9a27});
    return *spec;
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] inline void config_fail(const std::string& where, const std::string& msg) {
  throw Error(ErrorKind::ConfigError, where + ": " + msg);
}

inline long long to_int(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    config_fail(where, "expected an integer, got '" + v + "'");
  }
  if (pos != v.size()) config_fail(where, "expected an integer, got '" + v + "'");
  return out;
}

inline double to_real(const std::string& v, const std::string& where) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    config_fail(where, "expected a number, got '" + v + "'");
  }
  if (pos != v.size() || !std::isfinite(out)) config_fail(where, "expected a finite number, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  config_fail(where, "expected a boolean, got '" + v + "'");
}

struct Setter {
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> apply;
};

inline const std::map<std::string, Setter>& setters() {
  using C = ExperimentConfig;
  using S = std::string;
  auto int_in = [](long long lo, long long hi, auto field) {
    return Setter{[=](C& c, const S& v, const S& w) {
      const long long x = to_int(v, w);
      if (x < lo || x > hi) config_fail(w, "value " + v + " out of range [" + std::to_string(lo) + ", " +
                                               std::to_string(hi) + "]");
      field(c) = static_cast<std::remove_reference_t<decltype(field(c))>>(x);
    }};
  };
  // open=true excludes the lower bound.
  auto real_in = [](double lo, double hi, bool open, auto field) {
    return Setter{[=](C& c, const S& v, const S& w) {
      const double x = to_real(v, w);
      if (x < lo || x > hi || (open && x == lo)) config_fail(w, "value " + v + " out of range");
      field(c) = x;
    }};
  };
  auto flag = [](auto field) { return Setter{[=](C& c, const S& v, const S& w) { field(c) = to_bool(v, w); }}; };
  constexpr long long kBig = 1'000'000'000;
  constexpr double kInf = 1e300;

  static const std::map<std::string, Setter> table = {
      {"scheme", {[](C& c, const S& v, const S& w) {
         c.schemes.clear();
         for (const auto& name : split_list(v)) {
           if (name == "all") {
             c.schemes.insert(c.schemes.end(), std::begin(kAllSchemes), std::end(kAllSchemes));
             continue;
           }
           auto s = parse_scheme(name);
           if (!s) config_fail(w, "unknown scheme '" + name + "'");
           c.schemes.push_back(*s);
         }
         if (c.schemes.empty()) config_fail(w, "scheme list is empty");
         std::vector<Scheme> seen;
         for (auto s : c.schemes)
           if (std::find(seen.begin(), seen.end(), s) == seen.end()) seen.push_back(s);
         c.schemes = seen;
       }}},
      {"partition", {[](C& c, const S& v, const S& w) {
         if (!parse_partition(v)) config_fail(w, "bad partition '" + v + "'");
         c.partition = v;
       }}},
      {"seeds", {[](C& c, const S& v, const S& w) {
         c.seeds.clear();
         for (const auto& s : split_list(v)) {
           const long long x = to_int(s, w);
           if (x < 0) config_fail(w, "seed must be >= 0");
           c.seeds.push_back(std::uint64_t(x));
         }
         if (c.seeds.empty()) config_fail(w, "seed list is empty");
       }}},
      {"num_clients", int_in(2, 1000, [](C& c) -> int& { return c.num_clients; })},
      {"rounds", int_in(1, kBig, [](C& c) -> int& { return c.training.rounds; })},
      {"local_epochs", int_in(1, kBig, [](C& c) -> int& { return c.training.local_epochs; })},
      {"batch_size", int_in(1, kBig, [](C& c) -> int& { return c.training.batch_size; })},
      {"learning_rate", real_in(0.0, kInf, true, [](C& c) -> double& { return c.training.learning_rate; })},
      {"momentum", real_in(0.0, 0.999999, false, [](C& c) -> double& { return c.training.momentum; })},
      {"hidden", {[](C& c, const S& v, const S& w) {
         c.training.hidden.clear();
         for (const auto& s : split_list(v)) {
           const long long x = to_int(s, w);
           if (x < 1 || x > 100000) config_fail(w, "hidden width out of range");
           c.training.hidden.push_back(std::size_t(x));
         }
         if (c.training.hidden.size() > 3) config_fail(w, "at most 3 hidden layers");
       }}},
      {"out", {[](C& c, const S& v, const S& w) {
         if (v.empty()) config_fail(w, "output directory is empty");
         c.out = v;
       }}},

      {"data.source", {[](C& c, const S& v, const S& w) {
         if (v != "synthetic" && v != "idx") config_fail(w, "data.source must be synthetic or idx");
         c.data.source = v;
       }}},
      {"data.classes", int_in(2, 100000, [](C& c) -> int& { return c.data.classes; })},
      {"data.dim", int_in(2, 1000000, [](C& c) -> int& { return c.data.dim; })},
      {"data.per_class", int_in(2, kBig, [](C& c) -> int& { return c.data.per_class; })},
      {"data.spread", real_in(0.0, kInf, false, [](C& c) -> double& { return c.data.spread; })},
      {"data.seed", int_in(0, std::numeric_limits<long long>::max(),
                           [](C& c) -> std::uint64_t& { return c.data.seed; })},
      {"data.images", {[](C& c, const S& v, const S&) { c.data.images = v; }}},
      {"data.labels", {[](C& c, const S& v, const S&) { c.data.labels = v; }}},

      {"eval.split", {[](C& c, const S& v, const S& w) {
         if (v != "local" && v != "global") config_fail(w, "eval.split must be local or global");
         c.eval.split = v;
       }}},
      {"eval.holdout", real_in(0.0, 0.9, true, [](C& c) -> double& { return c.eval.holdout; })},

      {"pfedjs.q1", real_in(0.0, kInf, false, [](C& c) -> double& { return c.scheme.pfedjs.q1; })},
      {"pfedjs.q2", real_in(0.0, kInf, false, [](C& c) -> double& { return c.scheme.pfedjs.q2; })},
      {"pfedjs.space", {[](C& c, const S& v, const S& w) {
         if (v == "label") c.scheme.pfedjs.space = JsSpace::Label;
         else if (v == "joint") c.scheme.pfedjs.space = JsSpace::Joint;
         else config_fail(w, "pfedjs.space must be label or joint");
       }}},
      {"pfedjs.bins", int_in(1, 1024, [](C& c) -> int& { return c.scheme.pfedjs.feature_bins; })},
      {"pfedjs.steps", int_in(1, kBig, [](C& c) -> int& { return c.scheme.pfedjs.solver_steps; })},
      {"pfedjs.lr", real_in(0.0, kInf, true, [](C& c) -> double& { return c.scheme.pfedjs.solver_lr; })},

      {"fedcollab.q1", real_in(0.0, kInf, false, [](C& c) -> double& { return c.scheme.fedcollab.q1; })},
      {"fedcollab.q2", real_in(0.0, kInf, false, [](C& c) -> double& { return c.scheme.fedcollab.q2; })},
      {"fedcollab.steps", int_in(1, kBig, [](C& c) -> int& { return c.scheme.fedcollab.classifier.steps; })},
      {"fedcollab.lr", real_in(0.0, kInf, true, [](C& c) -> double& { return c.scheme.fedcollab.classifier.learning_rate; })},
      {"fedcollab.weight_by_beta", flag([](C& c) -> bool& { return c.scheme.fedcollab.weight_by_beta; })},

      {"race.K", int_in(1, 1000, [](C& c) -> int& { return c.scheme.race.sample_k; })},
      {"race.R", int_in(1, 100000, [](C& c) -> int& { return c.scheme.race.num_hashes; })},
      {"race.bits", int_in(1, 20, [](C& c) -> int& { return c.scheme.race.bits; })},
      {"race.gamma", real_in(0.0, kInf, false, [](C& c) -> double& { return c.scheme.race.label_scale; })},
      {"race.finetune", int_in(0, kBig, [](C& c) -> int& { return c.scheme.race.finetune_epochs; })},

      {"pfedsv.K", int_in(1, int(kMaxShapleyPlayers), [](C& c) -> int& { return c.scheme.pfedsv.top_k; })},
      {"pfedsv.eta", real_in(0.0, 1.0, false, [](C& c) -> double& { return c.scheme.pfedsv.eta; })},
      {"pfedsv.self_weight", real_in(0.0, 0.999999, false, [](C& c) -> double& { return c.scheme.pfedsv.self_weight; })},

      {"pfedgraph.lambda", real_in(0.0, kInf, false, [](C& c) -> double& { return c.scheme.pfedgraph.lambda; })},
      {"pfedgraph.inner_steps", int_in(1, kBig, [](C& c) -> int& { return c.scheme.pfedgraph.inner_steps; })},
      {"pfedgraph.inner_lr", real_in(0.0, kInf, true, [](C& c) -> double& { return c.scheme.pfedgraph.inner_lr; })},
      {"pfedgraph.loss_batch", int_in(1, kBig, [](C& c) -> int& { return c.scheme.pfedgraph.loss_batch; })},

      {"ce.steps", int_in(1, kBig, [](C& c) -> int& { return c.scheme.ce.steps; })},
      {"ce.lr", real_in(0.0, kInf, true, [](C& c) -> double& { return c.scheme.ce.lr; })},
      {"ce.batch", int_in(1, kBig, [](C& c) -> int& { return c.scheme.ce.batch_size; })},
      {"ce.pref_steps", int_in(0, kBig, [](C& c) -> int& { return c.scheme.ce.pref_steps; })},
      {"ce.pref_lr", real_in(0.0, kInf, true, [](C& c) -> double& { return c.scheme.ce.pref_lr; })},
  };
  return table;
}

}  // namespace detail

/// Sets one key; `where` prefixes any error message (e.g. "run.cfg:7").
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                          const std::string& where) {
  const auto& table = detail::setters();
  const auto it = table.find(key);
  if (it == table.end()) detail::config_fail(where, "unknown key '" + key + "'");
  it->second.apply(cfg, value, where);
}

/// Flat `key = value` lines; '#' starts a comment.
inline void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) detail::config_fail(where, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) detail::config_fail(where, "missing key");
    apply_setting(cfg, key, value, where);
  }
}

/// Cross-field checks that single-key setters cannot make.
inline void validate_config(const ExperimentConfig& cfg) {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::ConfigError, "config: " + msg); };
  if (cfg.data.source == "idx" && (cfg.data.images.empty() || cfg.data.labels.empty()))
    fail("data.source = idx needs data.images and data.labels");
  const auto spec = parse_partition(cfg.partition);
  if (!spec) fail("bad partition '" + cfg.partition + "'");
  if (cfg.data.source == "synthetic" && spec->strategy == Strategy::LabelQuantity && spec->k > cfg.data.classes)
    fail("partition label count exceeds data.classes");
  if (std::size_t(cfg.scheme.pfedsv.top_k) > std::size_t(cfg.num_clients - 1))
    fail("pfedsv.K must be <= num_clients - 1");
  if (cfg.scheme.race.sample_k > cfg.num_clients) fail("race.K must be <= num_clients");
  if (cfg.training.hidden.empty()) fail("hidden needs at least one layer");
}

/// Config file (optional) then overrides, in order; later settings win.
inline ExperimentConfig parse_config(const std::optional<std::string>& path,
                                     const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
  ExperimentConfig cfg;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorKind::ConfigError, *path + ": cannot open config file");
    std::stringstream buf;
    buf << in.rdbuf();
    apply_config_text(cfg, buf.str(), *path);
  }
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v, "--" + k);
  validate_config(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Execution

inline Dataset load_dataset(const DataConfig& d) {
  if (d.source == "idx") return load_idx(d.images, d.labels);
  return generate_synthetic(d.classes, d.dim, d.per_class, d.spread, d.seed);
}

/// Builds the federation for one seed from the shared dataset.
inline FederationState build_federation(const ExperimentConfig& cfg, const Dataset& data, std::uint64_t seed) {
  Dataset pool = data;
  std::optional<Dataset> holdout;
  if (cfg.eval.split == "global") {
    auto [p, h] = split_holdout(data, cfg.eval.holdout, derive_seed(cfg.data.seed, {0x401d}));
    pool = std::move(p);
    holdout = std::move(h);
  }
  const PartitionedData parts = partition(pool, cfg.partition_spec(seed));
  return setup_federation(parts, data.num_classes, cfg.training, seed, std::move(holdout));
}

inline SchemeRun run_cell(const ExperimentConfig& cfg, const Dataset& data, Scheme scheme, std::uint64_t seed) {
  return run_scheme(scheme, build_federation(cfg, data, seed), cfg.scheme);
}

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline constexpr const char* kResultsHeader = "scheme,partition,seed,round,client_id,test_accuracy,test_loss\n";

inline void append_rows(std::string& out, const SchemeRun& run, const std::string& partition, std::uint64_t seed) {
  for (const auto& r : run.rounds)
    for (const auto& c : r.per_client) {
      out += std::string(to_string(run.scheme)) + ',' + partition + ',' + std::to_string(seed) + ',' +
             std::to_string(r.round) + ',' + std::to_string(c.client) + ',' + fixed6(c.accuracy) + ',' +
             fixed6(c.loss) + '\n';
    }
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + p.string());
  out << content;
  if (!out) throw Error(ErrorKind::IoError, "write failed for " + p.string());
}

inline int thread_budget(std::size_t cells) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HETBENCH_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v >= 1) hw = unsigned(v);
  }
  return int(std::min<std::size_t>(hw, std::max<std::size_t>(cells, 1)));
}

}  // namespace detail

struct ExperimentResult {
  std::vector<SchemeRun> runs;  // scheme-major, seed-minor, in config order
  std::vector<std::uint64_t> seeds;
};

inline double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= double(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / double(v.size()));
}

inline nlohmann::ordered_json summarize(const ExperimentConfig& cfg, const ExperimentResult& res) {
  nlohmann::ordered_json j;
  j["partition"] = cfg.partition;
  j["rounds"] = cfg.training.rounds;
  j["num_clients"] = cfg.num_clients;
  j["eval_split"] = cfg.eval.split;
  nlohmann::ordered_json schemes = nlohmann::ordered_json::object();
  for (std::size_t s = 0; s < cfg.schemes.size(); ++s) {
    std::vector<double> finals;
    nlohmann::ordered_json per_seed = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < res.seeds.size(); ++k) {
      const auto& run = res.runs[s * res.seeds.size() + k];
      const double acc = run.rounds.back().mean_accuracy;
      finals.push_back(acc);
      per_seed[std::to_string(res.seeds[k])] = acc;
    }
    double mean = 0.0;
    for (double x : finals) mean += x;
    mean /= double(finals.size());
    schemes[std::string(to_string(cfg.schemes[s]))] = {
        {"final_mean_accuracy", per_seed}, {"mean", mean}, {"std", population_std(finals)}};
  }
  j["schemes"] = schemes;
  return j;
}

/// Runs every (scheme, seed) cell and writes results.csv, summary.json and
/// efficiency.csv under cfg.out, plus one subdirectory per cell.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  validate_config(cfg);
  namespace fs = std::filesystem;
  const fs::path out(cfg.out);
  std::error_code ec;
  fs::create_directories(out / "cells", ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + (out / "cells").string() + ": " + ec.message());

  const Dataset data = load_dataset(cfg.data);
  const std::size_t cells = cfg.schemes.size() * cfg.seeds.size();
  ExperimentResult res;
  res.seeds = cfg.seeds;
  res.runs.resize(cells);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t c = next++; c < cells; c = next++) {
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      const Scheme scheme = cfg.schemes[c / cfg.seeds.size()];
      const std::uint64_t seed = cfg.seeds[c % cfg.seeds.size()];
      try {
        SchemeRun run = run_cell(cfg, data, scheme, seed);
        std::string rows = detail::kResultsHeader;
        detail::append_rows(rows, run, cfg.partition, seed);
        const fs::path dir = out / "cells" / (std::string(to_string(scheme)) + "-seed" + std::to_string(seed));
        fs::create_directories(dir);
        detail::write_file(dir / "results.csv", rows);
        std::lock_guard lock(mu);
        if (log)
          *log << to_string(scheme) << " seed " << seed << ": final mean accuracy "
               << detail::fixed6(run.rounds.back().mean_accuracy) << '\n';
        res.runs[c] = std::move(run);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int threads = detail::thread_budget(cells);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::string rows = detail::kResultsHeader;
  std::string eff = "scheme,seed,alpha_compute_seconds,comm_bytes_total\n";
  for (std::size_t c = 0; c < cells; ++c) {
    const std::uint64_t seed = cfg.seeds[c % cfg.seeds.size()];
    detail::append_rows(rows, res.runs[c], cfg.partition, seed);
    const auto& e = res.runs[c].efficiency;
    eff += std::string(to_string(e.scheme)) + ',' + std::to_string(seed) + ',' + detail::fixed6(e.alpha_compute_seconds) +
           ',' + std::to_string(e.comm_bytes_total) + '\n';
  }
  detail::write_file(out / "results.csv", rows);
  detail::write_file(out / "efficiency.csv", eff);
  detail::write_file(out / "summary.json", summarize(cfg, res).dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------------------
// Reports

struct SummaryCell {
  double mean = 0.0;
  double std = 0.0;
};

struct PartitionSummary {
  std::string partition;
  std::vector<std::string> schemes;
  std::vector<SummaryCell> cells;
};

inline PartitionSummary read_summary(const std::filesystem::path& dir) {
  const auto path = dir / "summary.json";
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ReportError, "missing " + path.string());
  nlohmann::ordered_json j;
  try {
    in >> j;
    PartitionSummary s;
    s.partition = j.at("partition").get<std::string>();
    for (const auto& [name, v] : j.at("schemes").items()) {
      s.schemes.push_back(name);
      s.cells.push_back({v.at("mean").get<double>(), v.at("std").get<double>()});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ReportError, path.string() + ": malformed summary (" + e.what() + ")");
  }
}

/// Within a row, a scheme is marked best when its mean is at least the top
/// mean minus the top scheme's std (ties within one std share the mark).
inline std::vector<bool> best_marks(const std::vector<SummaryCell>& row) {
  std::size_t top = 0;
  for (std::size_t s = 1; s < row.size(); ++s)
    if (row[s].mean > row[top].mean) top = s;
  std::vector<bool> marks(row.size());
  for (std::size_t s = 0; s < row.size(); ++s) marks[s] = row[s].mean >= row[top].mean - row[top].std;
  return marks;
}

inline std::string compare_report(const std::vector<PartitionSummary>& rows) {
  require(rows.size() >= 2, ErrorKind::ReportError, "report needs at least two result sets");
  const auto& schemes = rows.front().schemes;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<std::string> a = rows[r].schemes, b = schemes;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    require(a == b, ErrorKind::ReportError, "scheme sets differ between result sets ('" + rows[r].partition + "')");
    for (std::size_t q = 0; q < r; ++q)
      require(rows[q].partition != rows[r].partition, ErrorKind::ReportError,
              "partition '" + rows[r].partition + "' appears twice");
  }
  std::vector<int> counts(schemes.size(), 0);
  std::ostringstream md;
  md << "<!-- best: highest mean final accuracy; schemes within one std of the best are also marked -->\n\n";
  md << "| partition |";
  for (const auto& s : schemes) md << ' ' << s << " |";
  md << "\n|---|";
  for (std::size_t s = 0; s < schemes.size(); ++s) md << "---|";
  md << '\n';
  for (const auto& row : rows) {
    std::vector<SummaryCell> ordered;
    for (const auto& s : schemes) {
      const auto it = std::find(row.schemes.begin(), row.schemes.end(), s);
      ordered.push_back(row.cells[std::size_t(it - row.schemes.begin())]);
    }
    const auto marks = best_marks(ordered);
    md << "| " << row.partition << " |";
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f%%±%.2f%%", 100.0 * ordered[s].mean, 100.0 * ordered[s].std);
      md << ' ' << (marks[s] ? "**" : "") << buf << (marks[s] ? "**" : "") << " |";
      counts[s] += marks[s] ? 1 : 0;
    }
    md << '\n';
  }
  md << "| best count |";
  for (int c : counts) md << ' ' << c << " |";
  md << '\n';
  return md.str();
}

inline std::string compare_report(const std::vector<std::string>& dirs) {
  require(dirs.size() >= 2, ErrorKind::ReportError, "report needs at least two result directories");
  std::vector<PartitionSummary> rows;
  for (const auto& d : dirs) rows.push_back(read_summary(d));
  return compare_report(rows);
}

}  // namespace hetbench
