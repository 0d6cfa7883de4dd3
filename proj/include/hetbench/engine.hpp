#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hetbench/cdiv.hpp"
#include "hetbench/core_math.hpp"
#include "hetbench/data.hpp"
#include "hetbench/divergence.hpp"
#include "hetbench/error.hpp"
#include "hetbench/graph.hpp"
#include "hetbench/hypernet.hpp"
#include "hetbench/model.hpp"
#include "hetbench/rng.hpp"
#include "hetbench/shapley.hpp"
#include "hetbench/sketch.hpp"

namespace hetbench {

enum class Scheme { PFedJS, FedCollab, Race, PFedSV, PFedGraph, CE, FedAvg };

/// The six collaboration schemes, in report column order.
inline constexpr Scheme kAllSchemes[] = {Scheme::PFedGraph, Scheme::PFedSV, Scheme::PFedJS,
                                         Scheme::FedCollab, Scheme::Race,   Scheme::CE};

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::PFedJS: return "pfedjs";
    case Scheme::FedCollab: return "fedcollab";
    case Scheme::Race: return "race";
    case Scheme::PFedSV: return "pfedsv";
    case Scheme::PFedGraph: return "pfedgraph";
    case Scheme::CE: return "ce";
    case Scheme::FedAvg: return "fedavg";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(std::string_view s) {
  for (Scheme k : {Scheme::PFedJS, Scheme::FedCollab, Scheme::Race, Scheme::PFedSV, Scheme::PFedGraph, Scheme::CE,
                   Scheme::FedAvg})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

enum class SchemeFlow { PrecomputedAlpha, PerRoundAlpha, GlobalSampled };

inline SchemeFlow flow_of(Scheme s) {
  switch (s) {
    case Scheme::PFedJS:
    case Scheme::FedCollab:
    case Scheme::CE: return SchemeFlow::PrecomputedAlpha;
    case Scheme::PFedSV:
    case Scheme::PFedGraph: return SchemeFlow::PerRoundAlpha;
    case Scheme::Race:
    case Scheme::FedAvg: return SchemeFlow::GlobalSampled;
  }
  return SchemeFlow::PrecomputedAlpha;
}

struct TrainingConfig {
  int rounds = 50;
  int local_epochs = 10;
  int batch_size = 64;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::vector<std::size_t> hidden = {64};
};

struct FedCollabConfig {
  double q1 = 1.0;
  double q2 = 5.0;
  bool weight_by_beta = false;
  ClassifierConfig classifier;
};

struct RaceConfig {
  int sample_k = 5;
  int num_hashes = 50;
  int bits = 4;
  double label_scale = 1.0;
  int finetune_epochs = 5;
};

struct SvConfig {
  int top_k = 3;
  double eta = 0.5;
  double self_weight = 0.4;
};

struct CeConfig {
  int steps = 2000;
  double lr = 0.05;
  int batch_size = 64;
  int pref_steps = 300;
  double pref_lr = 0.1;
};

struct SchemeConfig {
  JsConfig pfedjs;
  FedCollabConfig fedcollab;
  RaceConfig race;
  SvConfig pfedsv;
  GraphConfig pfedgraph;
  CeConfig ce;
};

struct ClientMetrics {
  std::size_t client = 0;
  double accuracy = 0.0;
  double loss = 0.0;
};

struct RoundMetrics {
  int round = 0;
  std::vector<ClientMetrics> per_client;
  double mean_accuracy = 0.0;
};

struct EfficiencyReport {
  Scheme scheme = Scheme::PFedGraph;
  double alpha_compute_seconds = 0.0;
  std::uint64_t comm_bytes_total = 0;
};

/// Everything one simulated federation owns between rounds.
struct FederationState {
  std::vector<ClientSplits> clients;
  std::optional<Dataset> global_test;  // when set, clients are evaluated on it instead of their local test split
  std::vector<MlpModel> models;
  int num_classes = 0;
  std::uint64_t seed = 0;
  TrainingConfig training;

  std::size_t size() const noexcept { return clients.size(); }

  const Dataset& eval_split(std::size_t i) const { return global_test ? *global_test : clients[i].test; }

  std::vector<ParamVector> snapshot() const {
    std::vector<ParamVector> out;
    out.reserve(models.size());
    for (const auto& m : models) out.push_back(m.params());
    return out;
  }

  std::vector<Dataset> train_splits() const {
    std::vector<Dataset> out;
    for (const auto& c : clients) out.push_back(c.train);
    return out;
  }

  std::vector<Dataset> validation_splits() const {
    std::vector<Dataset> out;
    for (const auto& c : clients) out.push_back(c.validation);
    return out;
  }

  std::vector<double> train_sizes() const {
    std::vector<double> out;
    for (const auto& c : clients) out.push_back(double(c.train.size()));
    return out;
  }
};

/// Splits every client's data and gives all clients the same seeded initial model.
inline FederationState setup_federation(const PartitionedData& data, int num_classes, const TrainingConfig& training,
                                        std::uint64_t seed, std::optional<Dataset> global_test = std::nullopt) {
  require(data.clients.size() >= 2, ErrorKind::InvalidInput, "need at least two clients");
  FederationState st;
  st.num_classes = num_classes;
  st.seed = seed;
  st.training = training;
  st.global_test = std::move(global_test);
  for (std::size_t i = 0; i < data.clients.size(); ++i)
    st.clients.push_back(split_client(data.clients[i], derive_seed(seed, {0xc11e, i})));
  const MlpModel init = init_mlp(data.clients.front().dim(), training.hidden, std::size_t(num_classes),
                                 derive_seed(seed, {0x1417}));
  st.models.assign(data.clients.size(), init);
  return st;
}

/// sum_j row_j * w_j over a single-round snapshot.
inline ParamVector aggregate_personalized(const ProbVector& row, std::span<const ParamVector> models) {
  require(row.size() == models.size() && !models.empty(), ErrorKind::InvalidInput, "row/model count mismatch");
  double sum = 0.0;
  for (double a : row) {
    require(a >= -1e-6, ErrorKind::InvalidInput, "aggregation weight off the simplex");
    sum += a;
  }
  require(std::abs(sum - 1.0) <= 1e-6, ErrorKind::InvalidInput, "aggregation row off the simplex");
  ParamVector out{std::vector<double>(models.front().size(), 0.0), models.front().shapes};
  for (std::size_t j = 0; j < models.size(); ++j) {
    const double a = row[j];
    if (a == 0.0) continue;
    const auto& f = models[j].flat;
    require(f.size() == out.flat.size(), ErrorKind::ShapeMismatch, "model sizes differ");
    if (a == 1.0) {
      out.flat = f;
      continue;
    }
    for (std::size_t p = 0; p < f.size(); ++p) out.flat[p] += a * f[p];
  }
  return out;
}

inline RoundMetrics summarize_round(int round, std::vector<ClientMetrics> per_client) {
  RoundMetrics rm{round, std::move(per_client), 0.0};
  double acc = 0.0;
  for (const auto& c : rm.per_client) acc += c.accuracy;
  rm.mean_accuracy = rm.per_client.empty() ? 0.0 : acc / double(rm.per_client.size());
  return rm;
}

namespace detail {

inline MlpModel train_client(const FederationState& st, MlpModel start, std::size_t client, int round, int epochs) {
  SgdState sgd{st.training.learning_rate, st.training.momentum, {}};
  return local_train(std::move(start), st.clients[client].train, epochs, st.training.batch_size, sgd,
                     derive_seed(st.seed, {0x7a1, std::uint64_t(round), client}));
}

inline ClientMetrics eval_client(const FederationState& st, const MlpModel& m, std::size_t client) {
  const auto rep = evaluate(m, st.eval_split(client));
  return {client, rep.accuracy, rep.mean_loss};
}

}  // namespace detail

/// One personalized round: snapshot, per-client aggregation with `alpha`,
/// local training, evaluation.
inline RoundMetrics run_round_personalized(FederationState& st, const CollaborationMatrix& alpha, int round) {
  require(alpha.size() == st.size(), ErrorKind::InvalidInput, "alpha size differs from client count");
  const auto snap = st.snapshot();
  std::vector<ClientMetrics> metrics;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const ParamVector start = aggregate_personalized(alpha.row(i), snap);
    st.models[i] = detail::train_client(st, MlpModel::from_params(start), i, round, st.training.local_epochs);
    metrics.push_back(detail::eval_client(st, st.models[i], i));
  }
  return summarize_round(round, std::move(metrics));
}

/// Global-model flow: sample K clients per round by `probs`, average their
/// locally trained models into the global one; after the last round every
/// client fine-tunes the global model for `finetune_epochs`. Rounds before
/// the last report global-model accuracy; the last reports personalized accuracy.
inline std::vector<RoundMetrics> run_race_flow(FederationState& st, const ProbVector& probs, std::size_t k,
                                               int finetune_epochs) {
  require(k >= 1 && k <= st.size(), ErrorKind::InvalidInput, "K must lie in [1, N]");
  require(finetune_epochs >= 0, ErrorKind::InvalidInput, "fine-tune epochs must be >= 0");
  std::vector<RoundMetrics> stream;
  MlpModel global = st.models.front();
  for (int t = 1; t <= st.training.rounds; ++t) {
    auto chosen = sample_clients(probs, k, derive_seed(st.seed, {0x5e1, std::uint64_t(t)}));
    std::sort(chosen.begin(), chosen.end());
    std::vector<ParamVector> trained;
    for (auto c : chosen) trained.push_back(detail::train_client(st, global, c, t, st.training.local_epochs).params());
    global = MlpModel::from_params(aggregate_personalized(ProbVector::uniform(trained.size()), trained));

    std::vector<ClientMetrics> metrics;
    const bool last = t == st.training.rounds;
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (last) {
        st.models[i] = finetune_epochs > 0 ? detail::train_client(st, global, i, t + 1, finetune_epochs) : global;
        metrics.push_back(detail::eval_client(st, st.models[i], i));
      } else {
        metrics.push_back(detail::eval_client(st, global, i));
      }
    }
    stream.push_back(summarize_round(t, std::move(metrics)));
  }
  return stream;
}

// ---------------------------------------------------------------------------
// Communication accounting (analytical; 4 bytes per parameter)

struct CommModel {
  Scheme scheme = Scheme::PFedGraph;
  std::uint64_t num_clients = 10;
  std::uint64_t params = 0;
  std::uint64_t rounds = 50;
  std::uint64_t k = 0;                  // pFedSV coalition size or RACE sample size
  std::uint64_t classifier_params = 0;  // FedCollab pairwise discriminator size
  std::uint64_t sketch_cells = 0;       // RACE sketch size R * B
};

inline constexpr std::uint64_t kBytesPerParam = 4;

/// Per round per client: upload + download for the base flow; pFedSV
/// downloads K peers instead of one personalized model; RACE moves only the
/// K sampled clients; CE exchanges hypernetwork-sized payloads ((N + 1) P).
inline std::uint64_t account_communication(const CommModel& c) {
  const std::uint64_t b = kBytesPerParam;
  const std::uint64_t base = c.rounds * c.num_clients * 2 * c.params * b;
  switch (c.scheme) {
    case Scheme::PFedGraph:
    case Scheme::PFedJS:
    case Scheme::FedAvg: return base;
    case Scheme::FedCollab:
      return base + c.num_clients * (c.num_clients - (c.num_clients > 0 ? 1 : 0)) * 2 * c.classifier_params * b;
    case Scheme::PFedSV: return c.rounds * c.num_clients * (1 + c.k) * c.params * b;
    case Scheme::Race: return c.rounds * 2 * c.k * c.params * b + c.num_clients * c.sketch_cells * b;
    case Scheme::CE: return c.rounds * c.num_clients * 2 * (c.num_clients + 1) * c.params * b;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Scheme runs

struct SchemeRun {
  Scheme scheme = Scheme::PFedGraph;
  std::vector<RoundMetrics> rounds;
  EfficiencyReport efficiency;
  std::optional<CollaborationMatrix> final_alpha;
  double max_sv_efficiency_residual = 0.0;
};

namespace detail {

class StopWatch {
 public:
  template <class F>
  decltype(auto) time(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Guard {
      StopWatch* w;
      std::chrono::steady_clock::time_point t0;
      ~Guard() { w->seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); }
    } guard{this, t0};
    return f();
  }
  double seconds() const noexcept { return seconds_; }

 private:
  double seconds_ = 0.0;
};

inline std::uint64_t classifier_param_count(const FederationState& st) {
  return std::uint64_t(st.clients.front().train.dim()) + std::uint64_t(st.num_classes) + 1;
}

}  // namespace detail

/// Precomputes the fixed alpha of pFedJS / FedCollab / CE. Client-side data
/// summaries (histograms) are built outside the timed region.
inline CollaborationMatrix precompute_alpha(Scheme scheme, const FederationState& st, const SchemeConfig& cfg,
                                            detail::StopWatch& watch) {
  const auto train = st.train_splits();
  const auto m = st.train_sizes();
  switch (scheme) {
    case Scheme::PFedJS: {
      const auto dists = client_distributions(train, st.num_classes, cfg.pfedjs);
      return watch.time([&] { return pfedjs_alpha_from_distributions(dists, m, cfg.pfedjs); });
    }
    case Scheme::FedCollab:
      return watch.time([&] {
        const auto d = estimate_cdiv_matrix(train, cfg.fedcollab.classifier, derive_seed(st.seed, {0xfc}));
        const auto structure = optimize_coalitions(d, m, cfg.fedcollab.q1, cfg.fedcollab.q2, st.seed,
                                                   cfg.fedcollab.weight_by_beta);
        return coalitions_to_alpha(structure, m);
      });
    case Scheme::CE:
      return watch.time([&] {
        HyperNetwork hn = make_hypernet(st.size(), st.models.front().params(), derive_seed(st.seed, {0xce}));
        hn = hn_train(std::move(hn), train, cfg.ce.steps, cfg.ce.lr, derive_seed(st.seed, {0xce, 1}),
                      cfg.ce.batch_size);
        return ce_alpha_matrix(hn, train, cfg.ce.pref_steps, cfg.ce.pref_lr).alpha;
      });
    default: throw Error(ErrorKind::InvalidInput, "scheme has no precomputed alpha");
  }
}

/// Runs one scheme end to end on an initialized federation.
inline SchemeRun run_scheme(Scheme scheme, FederationState st, const SchemeConfig& cfg) {
  require(st.training.rounds >= 1, ErrorKind::InvalidInput, "rounds must be >= 1");
  SchemeRun run;
  run.scheme = scheme;
  detail::StopWatch watch;
  const std::size_t n = st.size();
  const std::uint64_t params = st.models.front().params().size();

  CommModel comm{scheme, n, params, std::uint64_t(st.training.rounds), 0, 0, 0};

  switch (flow_of(scheme)) {
    case SchemeFlow::PrecomputedAlpha: {
      const CollaborationMatrix alpha = precompute_alpha(scheme, st, cfg, watch);
      for (int t = 1; t <= st.training.rounds; ++t) run.rounds.push_back(run_round_personalized(st, alpha, t));
      run.final_alpha = alpha;
      if (scheme == Scheme::FedCollab) comm.classifier_params = detail::classifier_param_count(st);
      break;
    }
    case SchemeFlow::PerRoundAlpha: {
      std::optional<CollaborationMatrix> alpha;
      if (scheme == Scheme::PFedSV) {
        const std::size_t k = std::min<std::size_t>(std::size_t(std::max(cfg.pfedsv.top_k, 0)), n - 1);
        RelevanceState rel = RelevanceState::uniform(n, cfg.pfedsv.eta, k);
        const auto val = st.validation_splits();
        comm.k = k;
        for (int t = 1; t <= st.training.rounds; ++t) {
          const auto snap = st.snapshot();
          auto res = watch.time([&] { return pfedsv_round(rel, snap, val, cfg.pfedsv.self_weight); });
          run.max_sv_efficiency_residual = std::max(run.max_sv_efficiency_residual, res.max_efficiency_residual);
          alpha = res.alpha;
          run.rounds.push_back(run_round_personalized(st, *alpha, t));
        }
      } else {
        std::vector<Dataset> batches;
        for (std::size_t i = 0; i < n; ++i)
          batches.push_back(fixed_batch(st.clients[i].validation, cfg.pfedgraph.loss_batch,
                                        derive_seed(st.seed, {0x9a, i})));
        for (int t = 1; t <= st.training.rounds; ++t) {
          const auto snap = st.snapshot();
          alpha = watch.time([&] { return pfedgraph_round(snap, batches, cfg.pfedgraph, alpha); });
          run.rounds.push_back(run_round_personalized(st, *alpha, t));
        }
      }
      run.final_alpha = alpha;
      break;
    }
    case SchemeFlow::GlobalSampled: {
      ProbVector probs = ProbVector::uniform(n);
      std::size_t k = n;
      int finetune = 0;
      if (scheme == Scheme::Race) {
        const auto train = st.train_splits();
        const LshFamily lsh(cfg.race.num_hashes, cfg.race.bits, int(train.front().dim()), st.num_classes,
                            cfg.race.label_scale, derive_seed(st.seed, {0x7ace}));
        std::vector<RaceSketch> sketches;
        for (const auto& t : train) sketches.push_back(sketch_dataset(t, lsh));
        probs = watch.time([&] { return selection_probabilities(global_sketch(sketches), sketches); });
        k = std::size_t(std::clamp<int>(cfg.race.sample_k, 1, int(n)));
        finetune = cfg.race.finetune_epochs;
        comm.sketch_cells = std::uint64_t(cfg.race.num_hashes) * lsh.num_bins();
      }
      comm.k = k;
      run.rounds = run_race_flow(st, probs, k, finetune);
      break;
    }
  }
  run.efficiency = {scheme, watch.seconds(), account_communication(comm)};
  return run;
}

}  // namespace hetbench
