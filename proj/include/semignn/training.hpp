#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_map>
#include <vector>

#include "semignn/batched.hpp"
#include "semignn/model.hpp"
#include "semignn/walker.hpp"

namespace semignn {

struct TrainConfig {
  double alpha = 0.8;    // supervised/unsupervised balance
  double lambda = 1e-4;  // L2 weight
  double lr = 0.002;
  double lr_decay = 0.95;  // per epoch
  int batch_size = 128;
  int epochs = 3;
  int q = 3;  // negatives per pair
  WalkConfig walk;
  ModelDims dims;
  EdgeWeightTransform transform = EdgeWeightTransform::none;
  ViewAttentionMode view_attention = ViewAttentionMode::shared;
  bool walks_once = false;       // one corpus for all epochs instead of per-epoch regeneration
  bool include_graph_term = true;  // structural sup-only mode used by equivalence tests
  bool tape_engine = false;      // per-user tape passes instead of the batched engine
  int threads = 2;
  std::uint64_t rng_seed = 0;
  std::string corpus_dump;       // when set, the first epoch's walk corpus is written here

  void validate() const {
    if (alpha < 0.0 || alpha > 1.0) fail(ErrorCode::InvalidConfig, "alpha must be in [0,1]");
    if (lambda < 0.0) fail(ErrorCode::InvalidConfig, "lambda must be >= 0");
    if (lr <= 0.0) fail(ErrorCode::InvalidConfig, "lr must be positive");
    if (lr_decay <= 0.0) fail(ErrorCode::InvalidConfig, "lr_decay must be positive");
    if (batch_size < 1) fail(ErrorCode::InvalidConfig, "batch_size must be >= 1");
    if (epochs < 0) fail(ErrorCode::InvalidConfig, "epochs must be >= 0");
    if (q < 1) fail(ErrorCode::InvalidConfig, "q must be >= 1");
    if (threads < 1) fail(ErrorCode::InvalidConfig, "threads must be >= 1");
    walk.validate();
  }
};

struct StepReport {
  int step = 0;
  double sup = 0.0;
  double graph = 0.0;
  double reg = 0.0;
  double total = 0.0;
  int labeled_in_batch = 0;
};

// Sigmoid arguments are clamped to +/-30 before the log so saturated pairs
// cannot produce -inf.
constexpr double kSigmoidClamp = 30.0;

// Long-lived workers with condition-variable handoff; spawning threads per
// training phase costs more than the phases save on this hardware.
class WorkerPool {
 public:
  explicit WorkerPool(int workers) {
    for (int i = 0; i < workers; ++i) {
      auto w = std::make_unique<Worker>();
      Worker* p = w.get();
      p->thread = std::thread([p] {
        std::unique_lock lk(p->mu);
        for (;;) {
          p->cv.wait(lk, [p] { return p->job || p->quit; });
          if (p->quit) return;
          const auto* job = p->job;
          const int arg = p->arg;
          lk.unlock();
          (*job)(arg);
          lk.lock();
          p->job = nullptr;
          p->done = true;
          p->cv.notify_all();
        }
      });
      workers_.push_back(std::move(w));
    }
  }

  ~WorkerPool() {
    for (auto& w : workers_) {
      {
        std::lock_guard lk(w->mu);
        w->quit = true;
      }
      w->cv.notify_all();
      w->thread.join();
    }
  }

  // Runs fn(0..jobs-1); the last job executes on the calling thread.
  void run(const std::function<void(int)>& fn, int jobs) {
    const int assigned = std::min<int>(jobs - 1, static_cast<int>(workers_.size()));
    for (int i = 0; i < assigned; ++i) {
      auto& w = workers_[i];
      std::lock_guard lk(w->mu);
      w->job = &fn;
      w->arg = i;
      w->done = false;
      w->cv.notify_all();
    }
    for (int i = assigned; i < jobs; ++i) fn(i);
    for (int i = 0; i < assigned; ++i) {
      auto& w = workers_[i];
      std::unique_lock lk(w->mu);
      w->cv.wait(lk, [&] { return w->done; });
    }
  }

 private:
  struct Worker {
    std::thread thread;
    std::mutex mu;
    std::condition_variable cv;
    const std::function<void(int)>* job = nullptr;
    int arg = 0;
    bool done = true;
    bool quit = false;
  };
  std::vector<std::unique_ptr<Worker>> workers_;
};

// Mean cross-entropy over the given labeled users; the denominator is the
// given batch count.
inline double sup_loss(const MultiViewGraph& g, const ModelParams& p, const std::vector<NodeId>& users,
                       EdgeWeightTransform transform = EdgeWeightTransform::none) {
  if (users.empty()) fail(ErrorCode::EmptyBatch, "sup_loss over an empty user list");
  double total = 0.0;
  for (NodeId u : users) {
    const int y = g.label_of(u);
    if (y < 0) fail(ErrorCode::ValidationError, "sup_loss user " + std::to_string(u) + " is unlabeled");
    const auto tr = forward(g, p, u, transform);
    total += -std::log(predict_proba(p, tr.a)[y]);
  }
  return total / static_cast<double>(users.size());
}

namespace detail {

inline double log_sigmoid_clamped(double x) {
  const double c = std::min(kSigmoidClamp, std::max(-kSigmoidClamp, x));
  // log(1/(1+e^-c)) computed stably
  return c >= 0.0 ? -std::log1p(std::exp(-c)) : c - std::log1p(std::exp(c));
}

}  // namespace detail

// Mean skip-gram loss over (center, context) pairs with the given negatives:
// -log s(a_u.a_v) - sum_q log s(-a_u.a_q).
inline double graph_loss_with_negatives(const MultiViewGraph& g, const ModelParams& p,
                                        const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                        const std::vector<std::vector<NodeId>>& negatives,
                                        EdgeWeightTransform transform = EdgeWeightTransform::none) {
  if (pairs.empty()) fail(ErrorCode::EmptyBatch, "graph_loss over an empty pair list");
  std::unordered_map<NodeId, std::vector<double>> cache;
  auto embed = [&](NodeId u) -> const std::vector<double>& {
    auto it = cache.find(u);
    if (it == cache.end()) it = cache.emplace(u, forward(g, p, u, transform).a).first;
    return it->second;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& au = embed(pairs[i].first);
    const auto& av = embed(pairs[i].second);
    double d = 0.0;
    for (std::size_t j = 0; j < au.size(); ++j) d += au[j] * av[j];
    double item = -detail::log_sigmoid_clamped(d);
    for (NodeId q : negatives[i]) {
      const auto& aq = embed(q);
      double dq = 0.0;
      for (std::size_t j = 0; j < au.size(); ++j) dq += au[j] * aq[j];
      item += -detail::log_sigmoid_clamped(-dq);
    }
    total += item;
  }
  return total / static_cast<double>(pairs.size());
}

// Same, drawing Q negatives per pair from the sampler.
inline double graph_loss(const MultiViewGraph& g, const ModelParams& p,
                         const std::vector<std::pair<NodeId, NodeId>>& pairs, const NegativeSampler& sampler,
                         Rng& rng, EdgeWeightTransform transform = EdgeWeightTransform::none) {
  std::vector<std::vector<NodeId>> negatives;
  negatives.reserve(pairs.size());
  for (const auto& pr : pairs) negatives.push_back(sampler.sample_negatives(pr.first, rng));
  return graph_loss_with_negatives(g, p, pairs, negatives, transform);
}

// Squared entries of the L2-regularized parameters present in the grad map:
// whole tensors for dense parameters, touched rows for embedding tables.
inline double touched_sq_norm(const ParamStore& store, const GradMap& grads) {
  double total = 0.0;
  for (int id : grads.dense_order()) {
    if (!store.meta(id).regularized) continue;
    for (double v : store.tensor(id).data) total += v * v;
  }
  for (const auto& [id, row] : grads.sparse_order()) {
    if (!store.meta(id).regularized) continue;
    const double* r = store.tensor(id).row(row);
    const int cols = store.tensor(id).cols;
    for (int i = 0; i < cols; ++i) total += r[i] * r[i];
  }
  return total;
}

inline double total_loss(double sup, double graph_l, double touched_sq, const TrainConfig& cfg) {
  return cfg.alpha * sup + (1.0 - cfg.alpha) * graph_l + cfg.lambda * touched_sq;
}

// One minibatch: the pair slice, per-pair negatives, the distinct labeled
// endpoint users, and the distinct users to forward.
struct StepBatch {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::vector<std::vector<NodeId>> negatives;
  std::vector<NodeId> sup_users;
  std::vector<NodeId> distinct_users;
};

// Builds the batch in place so inner buffers keep their capacity across steps.
inline void fill_step_batch(StepBatch& batch, const std::vector<std::pair<NodeId, NodeId>>& all_pairs,
                            std::size_t begin, std::size_t end, const NegativeSampler& sampler, Rng& neg_rng,
                            const std::vector<int>& label_of) {
  batch.pairs.assign(all_pairs.begin() + begin, all_pairs.begin() + end);
  batch.negatives.resize(batch.pairs.size());
  batch.distinct_users.clear();
  batch.sup_users.clear();
  auto& users = batch.distinct_users;
  for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
    const auto& [u, v] = batch.pairs[i];
    users.push_back(u);
    users.push_back(v);
    sampler.sample_negatives_into(u, neg_rng, batch.negatives[i]);
    for (NodeId q : batch.negatives[i]) users.push_back(q);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  for (const auto& [u, v] : batch.pairs) {
    if (label_of[u] >= 0) batch.sup_users.push_back(u);
    if (label_of[v] >= 0) batch.sup_users.push_back(v);
  }
  std::sort(batch.sup_users.begin(), batch.sup_users.end());
  batch.sup_users.erase(std::unique(batch.sup_users.begin(), batch.sup_users.end()), batch.sup_users.end());
}

inline StepBatch make_step_batch(const std::vector<std::pair<NodeId, NodeId>>& all_pairs, std::size_t begin,
                                 std::size_t end, const NegativeSampler& sampler, Rng& neg_rng,
                                 const std::vector<int>& label_of) {
  StepBatch batch;
  fill_step_batch(batch, all_pairs, begin, end, sampler, neg_rng, label_of);
  return batch;
}

struct StepOutcome {
  double sup = 0.0;
  double graph = 0.0;
  double reg = 0.0;
  double total = 0.0;
  int labeled_in_batch = 0;
};

// Executes one training step: sharded user forwards, a serial loss tape over
// the user embeddings, sharded seeded backwards, a deterministic merge, the
// L2 fold and optionally the SGD update. Buffers are reused across steps.
// User passes run on the blocked batched engine by default; the per-user tape
// engine remains available and the two are pinned against each other in tests.
class StepEngine {
 public:
  StepEngine(const MultiViewGraph& g, ModelParams& params, const TrainConfig& cfg)
      : g_(g), params_(params), cfg_(cfg), pool_(cfg.threads - 1), label_of_(g.user_count, -1),
        loss_tape_(params.store), loss_grads_(params.store), grads_(params.store) {
    for (const auto& [u, y] : g.labeled) label_of_[u] = y;
    for (int t = 0; t < cfg.threads; ++t) {
      if (cfg.tape_engine) {
        shard_tapes_.emplace_back(params.store);
      } else {
        shard_pass_.emplace_back(g, params, cfg.transform);
        shard_pass_.back().set_shared_scores(&shared_scores_);
      }
      shard_grads_.emplace_back(params.store);
      shard_seeds_.emplace_back();
    }
    shared_scores_.resize(g.views.size());
  }

  const std::vector<int>& label_of() const { return label_of_; }

  // Folded gradient of the full objective (task terms plus L2) for the last
  // step; entries are exactly what the SGD update consumes.
  const GradMap& grads() const { return grads_; }

  StepOutcome run(const StepBatch& batch, double lr, bool apply_update) {
    const auto& users = batch.distinct_users;
    const int nthreads = static_cast<int>(shard_grads_.size());
    slot_of_.assign(users.size(), {0, 0});
    compute_shard_bounds(users, nthreads);

    // Score dots are user-independent; compute them once for all shards.
    if (!cfg_.tape_engine) {
      pool_.run(
          [&](int v) {
            const Tensor& M = params_.store.tensor(params_.M[v]);
            const Tensor& H = params_.store.tensor(params_.H[v]);
            auto& mh = shared_scores_[v];
            mh.assign(M.rows, 0.0);
            for (int i = 0; i < M.rows; ++i) mh[i] = dot4(M.row(i), H.row(i), params_.dims.d0);
          },
          static_cast<int>(g_.views.size()));
    }

    // Phase 1: forward each distinct user on its shard.
    auto forward_range = [&](int shard, std::size_t lo, std::size_t hi) {
      if (cfg_.tape_engine) {
        Tape& tape = shard_tapes_[shard];
        tape.clear();
        for (std::size_t i = lo; i < hi; ++i)
          slot_of_[i] = {shard, tape_forward(tape, g_, params_, users[i], cfg_.transform)};
      } else {
        shard_pass_[shard].forward(users, lo, hi);
      }
    };
    run_sharded(nthreads, forward_range);

    // Phase 2: losses over user-embedding leaves on a small serial tape.
    Tape& lt = loss_tape_;
    lt.clear();
    std::unordered_map<NodeId, int> leaf_of;
    leaf_of.reserve(users.size() * 2);
    {
      int shard = 0;
      for (std::size_t i = 0; i < users.size(); ++i) {
        while (i >= bounds_[shard + 1]) ++shard;
        if (cfg_.tape_engine) {
          const auto [sh, slot] = slot_of_[i];
          leaf_of[users[i]] = lt.input(shard_tapes_[sh].value(slot), shard_tapes_[sh].len(slot));
        } else {
          leaf_of[users[i]] = lt.input(shard_pass_[shard].a(i - bounds_[shard]), params_.dims.d_final);
        }
      }
    }

    StepOutcome out;
    out.labeled_in_batch = static_cast<int>(batch.sup_users.size());
    std::vector<int> terms, item;
    int sup_slot = -1;
    if (!batch.sup_users.empty()) {
      terms.clear();
      for (NodeId u : batch.sup_users) {
        const int probs = lt.softmax(lt.matvec(params_.theta, leaf_of[u]));
        terms.push_back(lt.neg(lt.log(lt.index(probs, label_of_[u]))));
      }
      sup_slot = lt.scale_const(1.0 / static_cast<double>(terms.size()), lt.add_n(terms));
      out.sup = lt.scalar(sup_slot);
    }
    int graph_slot = -1;
    if (cfg_.include_graph_term && !batch.pairs.empty()) {
      terms.clear();
      for (std::size_t i = 0; i < batch.pairs.size(); ++i) {
        const int au = leaf_of[batch.pairs[i].first];
        const int av = leaf_of[batch.pairs[i].second];
        item.clear();
        item.push_back(lt.neg(lt.log(lt.sigmoid(lt.clamp_sym(lt.dot(au, av), kSigmoidClamp)))));
        for (NodeId q : batch.negatives[i])
          item.push_back(lt.neg(lt.log(lt.sigmoid(lt.clamp_sym(lt.neg(lt.dot(au, leaf_of[q])), kSigmoidClamp)))));
        terms.push_back(lt.add_n(item));
      }
      graph_slot = lt.scale_const(1.0 / static_cast<double>(batch.pairs.size()), lt.add_n(terms));
      out.graph = lt.scalar(graph_slot);
    }

    terms.clear();
    if (sup_slot >= 0) terms.push_back(lt.scale_const(cfg_.alpha, sup_slot));
    if (graph_slot >= 0) terms.push_back(lt.scale_const(1.0 - cfg_.alpha, graph_slot));
    grads_.clear();
    if (!terms.empty()) {
      const int combined = terms.size() == 1 ? terms[0] : lt.add_n(terms);
      loss_grads_.clear();
      lt.backward(combined, loss_grads_);

      // Phase 3: push embedding adjoints back through the shard passes.
      auto backward_range = [&](int shard, std::size_t lo, std::size_t hi) {
        shard_grads_[shard].clear();
        if (cfg_.tape_engine) {
          std::vector<std::pair<int, const double*>> seeds;
          seeds.reserve(hi - lo);
          for (std::size_t i = lo; i < hi; ++i)
            seeds.emplace_back(slot_of_[i].second, lt.adjoint(leaf_of.at(users[i])));
          shard_tapes_[shard].backward_from(seeds, shard_grads_[shard]);
        } else {
          const int df = params_.dims.d_final;
          auto& seeds = shard_seeds_[shard];
          seeds.assign((hi - lo) * df, 0.0);
          for (std::size_t i = lo; i < hi; ++i) {
            const double* adj = lt.adjoint(leaf_of.at(users[i]));
            std::copy(adj, adj + df, seeds.begin() + (i - lo) * df);
          }
          shard_pass_[shard].backward(seeds.data(), shard_grads_[shard]);
        }
      };
      run_sharded(nthreads, backward_range);
      out.reg = merge_fold_update(nthreads, lr, apply_update);
    }
    out.total = total_loss(out.sup, out.graph, out.reg, cfg_);
    return out;
  }

 private:
  // Shard boundaries balanced by neighbor count, so both workers finish
  // their ragged attention work at about the same time. Deterministic: a
  // pure function of the batch's user list.
  void compute_shard_bounds(const std::vector<NodeId>& users, int nthreads) {
    bounds_.assign(nthreads + 1, users.size());
    bounds_[0] = 0;
    if (nthreads == 1) return;
    double total = 0.0;
    cost_prefix_.assign(users.size() + 1, 0.0);
    for (std::size_t i = 0; i < users.size(); ++i) {
      double cost = 24.0;  // fixed per-user dense work, in neighbor units
      for (const auto& view : g_.views) cost += static_cast<double>(view.neighbor_count(users[i]));
      cost_prefix_[i + 1] = total += cost;
    }
    std::size_t at = 0;
    for (int s = 1; s < nthreads; ++s) {
      const double target = total * s / nthreads;
      while (at < users.size() && cost_prefix_[at + 1] < target) ++at;
      bounds_[s] = std::max(bounds_[s - 1], at);
    }
  }

  void run_sharded(int nthreads, const std::function<void(int, std::size_t, std::size_t)>& fn) {
    pool_.run([&](int s) { fn(s, bounds_[s], bounds_[s + 1]); }, nthreads);
  }

  // Single streaming pass over the union of touched rows: sums the per-shard
  // contributions, accumulates the touched L2 norm, folds the 2*lambda*p term
  // and applies the SGD step while each row is cache-hot. Source order per
  // row is fixed (loss tape, then shards in index order), so the result is
  // deterministic.
  double merge_fold_update(int nthreads, double lr, bool apply_update) {
    const double two_lambda = 2.0 * cfg_.lambda;
    double reg = 0.0;
    auto register_rows = [&](const GradMap& src) {
      for (int id : src.dense_order()) grads_.dense_acc(id);
      for (const auto& [id, row] : src.sparse_order()) grads_.row_acc(id, row);
    };
    register_rows(loss_grads_);
    for (int s = 0; s < nthreads; ++s) register_rows(shard_grads_[s]);

    // Row-disjoint halves run in parallel; every row was registered above, so
    // the shared map is structurally read-only here. Partial L2 norms combine
    // in worker order.
    const auto& sparse = grads_.sparse_order();
    const auto& dense = grads_.dense_order();
    std::size_t dense_rows = 0;
    for (int id : dense) dense_rows += params_.store.tensor(id).rows;
    std::vector<double> reg_part(nthreads, 0.0);
    pool_.run(
        [&](int part) {
          double local = 0.0;
          auto process = [&](int id, int row, double* g, double* p, int cols) {
            const double* src = loss_grads_.row_data(id, row);
            if (src)
              for (int i = 0; i < cols; ++i) g[i] += src[i];
            for (int s = 0; s < nthreads; ++s) {
              src = shard_grads_[s].row_data(id, row);
              if (src)
                for (int i = 0; i < cols; ++i) g[i] += src[i];
            }
            if (params_.store.meta(id).regularized) {
              for (int i = 0; i < cols; ++i) local += p[i] * p[i];
              if (two_lambda != 0.0)
                for (int i = 0; i < cols; ++i) g[i] += two_lambda * p[i];
            }
            if (apply_update)
              for (int i = 0; i < cols; ++i) p[i] -= lr * g[i];
          };
          std::size_t flat = 0;
          const std::size_t d_lo = dense_rows * part / nthreads, d_hi = dense_rows * (part + 1) / nthreads;
          for (int id : dense) {
            Tensor& t = params_.store.tensor(id);
            for (int r = 0; r < t.rows; ++r, ++flat) {
              if (flat < d_lo || flat >= d_hi) continue;
              process(id, r, grads_.dense_acc(id) + static_cast<std::size_t>(r) * t.cols, t.row(r), t.cols);
            }
          }
          const std::size_t s_lo = sparse.size() * part / nthreads, s_hi = sparse.size() * (part + 1) / nthreads;
          for (std::size_t k = s_lo; k < s_hi; ++k) {
            const auto [id, row] = sparse[k];
            process(id, row, grads_.row_acc(id, row), params_.store.tensor(id).row(row),
                    params_.store.tensor(id).cols);
          }
          reg_part[part] = local;
        },
        nthreads);
    for (double r : reg_part) reg += r;
    return reg;
  }

  const MultiViewGraph& g_;
  ModelParams& params_;
  const TrainConfig& cfg_;
  WorkerPool pool_;
  std::vector<int> label_of_;
  std::vector<Tape> shard_tapes_;
  std::vector<BatchedUserPass> shard_pass_;
  std::vector<std::vector<double>> shard_seeds_;
  std::vector<GradMap> shard_grads_;
  std::vector<std::vector<double>> shared_scores_;
  std::vector<std::size_t> bounds_;
  std::vector<double> cost_prefix_;
  Tape loss_tape_;
  GradMap loss_grads_;
  GradMap grads_;
  std::vector<std::pair<int, int>> slot_of_;  // (shard, slot) per distinct user
};

struct TrainResult {
  ModelParams params;
  std::vector<StepReport> reports;
  std::vector<double> epoch_seconds;
  std::vector<NodeId> active_users;
};

// Alg-style training loop: per epoch regenerate walks, shuffle the pair set,
// then minibatch SGD over pairs with per-batch supervised and graph terms.
inline TrainResult train(const MultiViewGraph& g, const TrainConfig& cfg) {
  cfg.validate();
  g.validate();
  if (g.labeled.empty()) fail(ErrorCode::NoLabeledUsers, "training needs at least one labeled user");
  if (g.views.empty() || g.views[0].kind != ViewKind::relation)
    fail(ErrorCode::NoRelationView, "training needs the relation view");

  TrainResult result;
  result.params = init_params(g, cfg.dims, cfg.view_attention, cfg.rng_seed);
  const ViewGraph& relation = g.views[0];
  result.active_users = expand_unlabeled(relation, g.labeled_users());
  NegativeSampler sampler(relation, result.active_users, cfg.q);

  StepEngine engine(g, result.params, cfg);
  WalkConfig wcfg = cfg.walk;
  wcfg.rng_seed = cfg.rng_seed;

  double lr = cfg.lr;
  int step = 0;
  std::vector<std::pair<NodeId, NodeId>> pairs;
  StepBatch batch;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (epoch == 0 || !cfg.walks_once) {
      const auto corpus = generate_walks(relation, result.active_users, wcfg, cfg.walks_once ? 0 : epoch);
      if (epoch == 0 && !cfg.corpus_dump.empty()) dump_corpus(corpus, cfg.corpus_dump);
      pairs = window_pairs(corpus, wcfg.window);
    }
    Rng shuffle_rng = substream(cfg.rng_seed, stream::kShuffle, epoch);
    for (std::size_t i = pairs.size(); i > 1; --i) std::swap(pairs[i - 1], pairs[shuffle_rng.next_below(i)]);
    Rng neg_rng = substream(cfg.rng_seed, stream::kNegatives, epoch);

    for (std::size_t begin = 0; begin < pairs.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(pairs.size(), begin + cfg.batch_size);
      fill_step_batch(batch, pairs, begin, end, sampler, neg_rng, engine.label_of());
      const StepOutcome out = engine.run(batch, lr, true);
      result.reports.push_back({step++, out.sup, out.graph, out.reg, out.total, out.labeled_in_batch});
    }
    lr *= cfg.lr_decay;
    result.epoch_seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return result;
}

// One telemetry line per step: `step sup graph reg total labeled_in_batch`.
inline void write_telemetry(const std::vector<StepReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingArtifact, "cannot write telemetry " + path);
  char buf[160];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%.17g\t%.17g\t%d\n", r.step, r.sup, r.graph, r.reg,
                  r.total, r.labeled_in_batch);
    out << buf;
  }
}

}  // namespace semignn
