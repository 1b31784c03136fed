#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "semignn/checkpoint.hpp"
#include "semignn/config.hpp"
#include "semignn/eval.hpp"
#include "semignn/interpret.hpp"
#include "semignn/synthgen.hpp"
#include "semignn/training.hpp"

namespace fs = std::filesystem;
using namespace semignn;

namespace {

// Exit codes: 0 success, 2 config/usage, 3 missing artifact, 4 data validation.
int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidConfig: return 2;
    case ErrorCode::MissingArtifact: return 3;
    default: return 4;
  }
}

struct Cli {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;  // applied after the config file

  RunConfig resolve() const {
    RunConfig cfg;
    cfg.out_dir.clear();
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    return cfg;
  }
};

// Registers --config, --set and per-key flags that stage config overrides.
void add_common(CLI::App* cmd, Cli& cli, const std::vector<std::pair<std::string, std::string>>& flags,
                const std::vector<std::pair<std::string, std::string>>& switches) {
  cmd->add_option("--config", cli.config_file, "key-value config file");
  cmd->add_option_function<std::vector<std::string>>(
      "--set",
      [&cli](const std::vector<std::string>& kvs) {
        for (const auto& kv : kvs) {
          const auto eq = kv.find('=');
          if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value");
          cli.overrides.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
        }
      },
      "config override key=value (repeatable)");
  for (const auto& [flag, key] : flags) {
    const std::string k = key;
    cmd->add_option_function<std::string>(
        "--" + flag, [&cli, k](const std::string& v) { cli.overrides.emplace_back(k, v); }, "sets " + key);
  }
  for (const auto& [flag, key] : switches) {
    const std::string k = key;
    cmd->add_flag_function(
        "--" + flag, [&cli, k](std::int64_t) { cli.overrides.emplace_back(k, "true"); }, "sets " + key);
  }
}

MultiViewGraph load_graph(const RunConfig& cfg, std::vector<ViewSummary>* summaries = nullptr) {
  if (cfg.data_manifest.empty()) fail(ErrorCode::InvalidConfig, "no data manifest given (use --data)");
  return load_multiview(cfg.data_manifest, summaries);
}

std::string default_splits_path(const RunConfig& cfg) {
  if (!cfg.splits_path.empty()) return cfg.splits_path;
  const auto sibling = fs::path(cfg.data_manifest).parent_path() / "splits.tsv";
  return fs::exists(sibling) ? sibling.string() : std::string();
}

// Training supervises only the train split; test/validation labels stay held out.
void restrict_labels_to_train_split(MultiViewGraph& g, const std::string& splits_path) {
  if (splits_path.empty()) return;
  std::set<NodeId> train_users;
  for (const auto& [u, s] : load_splits(splits_path))
    if (s == Split::train) train_users.insert(u);
  std::vector<std::pair<NodeId, int>> kept;
  for (const auto& [u, y] : g.labeled)
    if (train_users.count(u)) kept.emplace_back(u, y);
  g.labeled = std::move(kept);
}

std::string out_dir_or(const RunConfig& cfg, const char* fallback) {
  return cfg.out_dir.empty() ? fallback : cfg.out_dir;
}

int cmd_gen(const RunConfig& cfg) {
  if (cfg.out_dir.empty()) fail(ErrorCode::InvalidConfig, "gen requires --out");
  const auto data = generate(cfg.synth);
  write_dataset(data, cfg.out_dir);
  std::size_t labeled_fraud = 0;
  for (const auto& [u, y] : data.graph.labeled) labeled_fraud += y == 1;
  std::printf("generated %u users, %zu relation edges, %d bipartite view(s)\n", data.graph.user_count,
              data.graph.views[0].edge_count(), static_cast<int>(data.graph.views.size()) - 1);
  std::printf("labeled %zu (%zu fraud), manifest %s\n", data.graph.labeled.size(), labeled_fraud,
              (fs::path(cfg.out_dir) / "manifest.txt").string().c_str());
  return 0;
}

int cmd_train(RunConfig cfg) {
  std::vector<ViewSummary> summaries;
  auto graph = load_graph(cfg, &summaries);
  for (const auto& vs : summaries)
    std::printf("view %s: %zu nodes, %zu edges\n", vs.name.c_str(), vs.node_count, vs.edge_count);
  restrict_labels_to_train_split(graph, default_splits_path(cfg));
  cfg.train.dims.m = static_cast<int>(graph.views.size());
  cfg.train.dims.k = graph.class_count;

  const auto result = train(graph, cfg.train);

  const std::string out = out_dir_or(cfg, ".");
  fs::create_directories(out);
  const std::string ckpt = cfg.checkpoint_path.empty() ? (fs::path(out) / "checkpoint.txt").string()
                                                       : cfg.checkpoint_path;
  const std::string telem = cfg.telemetry_path.empty() ? (fs::path(out) / "telemetry.tsv").string()
                                                       : cfg.telemetry_path;
  save_checkpoint(result.params, cfg.train.rng_seed, ckpt, cfg.train.transform);
  write_telemetry(result.reports, telem);

  const std::size_t steps_per_epoch = cfg.train.epochs > 0 ? result.reports.size() / cfg.train.epochs : 0;
  for (int e = 0; e < cfg.train.epochs; ++e) {
    double mean = 0.0;
    for (std::size_t s = e * steps_per_epoch; s < (e + 1) * steps_per_epoch; ++s) mean += result.reports[s].total;
    std::printf("epoch %d: mean total loss %.6f (%zu steps, %.1fs)\n", e,
                steps_per_epoch ? mean / steps_per_epoch : 0.0, steps_per_epoch, result.epoch_seconds[e]);
  }
  std::printf("checkpoint %s\ntelemetry %s\n", ckpt.c_str(), telem.c_str());
  return 0;
}

ScoredSet scored_set_for(const RunConfig& cfg, const MultiViewGraph& graph, const ModelParams& params) {
  ScoredSet s;
  auto score_of = [&](NodeId u) {
    const auto tr = forward(graph, params, u, cfg.train.transform);
    return predict_proba(params, tr.a)[cfg.positive_class];
  };
  if (cfg.eval_on_truth) {
    // Metrics over never-labeled users, scored against the ground-truth file.
    const auto truth_path = fs::path(cfg.data_manifest).parent_path() / "truth.tsv";
    const auto truth = load_truth(truth_path.string());
    std::set<NodeId> labeled;
    for (const auto& [u, y] : graph.labeled) labeled.insert(u);
    for (const auto& [u, y] : truth)
      if (!labeled.count(u)) s.add(score_of(u), y == cfg.positive_class ? 1 : 0);
  } else {
    const auto splits_path = default_splits_path(cfg);
    if (splits_path.empty()) fail(ErrorCode::MissingArtifact, "no splits file found; pass --splits or --truth");
    Split want = Split::test;
    if (cfg.eval_split == "train") want = Split::train;
    if (cfg.eval_split == "validation") want = Split::validation;
    std::map<NodeId, int> label_of(graph.labeled.begin(), graph.labeled.end());
    for (const auto& [u, sp] : load_splits(splits_path)) {
      if (sp != want) continue;
      const auto it = label_of.find(u);
      if (it == label_of.end()) fail(ErrorCode::ValidationError, "split user " + std::to_string(u) + " is unlabeled");
      s.add(score_of(u), it->second == cfg.positive_class ? 1 : 0);
    }
  }
  return s;
}

int cmd_eval(const RunConfig& cfg) {
  auto graph = load_graph(cfg);
  if (cfg.checkpoint_path.empty()) fail(ErrorCode::InvalidConfig, "eval requires --checkpoint");
  const auto ck = load_checkpoint(cfg.checkpoint_path);
  validate_against(ck.params, graph);
  RunConfig ecfg = cfg;
  ecfg.train.transform = ck.transform;

  const auto scored = scored_set_for(ecfg, graph, ck.params);
  const auto report = evaluate(scored, cfg.threshold, cfg.topk_fraction);
  const std::string line = format_report(report);
  std::printf("%s %s\n", cfg.eval_on_truth ? "truth" : cfg.eval_split.c_str(), line.c_str());

  const std::string out = out_dir_or(cfg, ".");
  fs::create_directories(out);
  const std::string path = cfg.report_path.empty()
                               ? (fs::path(out) / ("eval_" + (cfg.eval_on_truth ? std::string("truth") : cfg.eval_split)
                                                   + ".txt"))
                                     .string()
                               : cfg.report_path;
  write_report(report, path);
  return 0;
}

int cmd_explain(const RunConfig& cfg) {
  auto graph = load_graph(cfg);
  if (cfg.checkpoint_path.empty()) fail(ErrorCode::InvalidConfig, "explain requires --checkpoint");
  const auto ck = load_checkpoint(cfg.checkpoint_path);
  validate_against(ck.params, graph);
  const EdgeWeightTransform transform = ck.transform;

  std::vector<NodeId> users;
  for (const auto& [u, y] : graph.labeled)
    if (!cfg.fraud_only || y == cfg.positive_class) users.push_back(u);
  if (users.empty()) fail(ErrorCode::ValidationError, "no users selected for the report");

  const std::string out = out_dir_or(cfg, ".");
  fs::create_directories(out);
  for (std::size_t v = 1; v < graph.views.size(); ++v) {
    if (cfg.explain_view > 0 && static_cast<int>(v) != cfg.explain_view) continue;
    const auto ranking =
        node_importance(graph, ck.params, users, static_cast<int>(v), transform, cfg.explain_mean);
    const std::string path = (fs::path(out) / ("importance_" + graph.view_names[v] + ".tsv")).string();
    write_importance_report(ranking, graph.view_names[v], path, cfg.top_n);
    std::printf("view %s: top node %u (importance %.4f), report %s\n", graph.view_names[v].c_str(),
                ranking.empty() ? 0 : ranking[0].node, ranking.empty() ? 0.0 : ranking[0].importance, path.c_str());
  }

  const auto vi = view_importance(graph, ck.params, users, transform);
  std::string vi_line = "view importance:";
  for (std::size_t v = 0; v < vi.size(); ++v) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), " %s=%.6f", graph.view_names[v].c_str(), vi[v]);
    vi_line += buf;
  }
  std::printf("%s\n", vi_line.c_str());
  {
    std::ofstream viout(fs::path(out) / "view_importance.txt");
    viout << vi_line << '\n';
    if (cfg.by_class) {
      const auto by_class = view_importance_by_class(graph, ck.params, users, transform);
      for (std::size_t c = 0; c < by_class.size(); ++c) {
        viout << "predicted class " << c << ":";
        for (std::size_t v = 0; v < by_class[c].size(); ++v) viout << ' ' << by_class[c][v];
        viout << '\n';
      }
    }
  }
  return 0;
}

int cmd_sweep(const RunConfig& base, const std::string& param, const std::vector<std::string>& values) {
  if (param.empty() || values.empty()) fail(ErrorCode::InvalidConfig, "sweep requires --param and --values");
  {
    RunConfig probe = base;  // reject unknown parameters before any training run
    for (const auto& v : values) probe.set(param, v);
  }
  const std::string out = out_dir_or(base, ".");
  fs::create_directories(out);
  const std::string table_path = (fs::path(out) / ("sweep_" + param + ".tsv")).string();
  std::ofstream table(table_path);
  std::printf("%-16s auc      ks       f1       precision recall   topk\n", param.c_str());
  for (const auto& value : values) {
    RunConfig cfg = base;
    cfg.set(param, value);
    auto graph = load_graph(cfg);
    restrict_labels_to_train_split(graph, default_splits_path(cfg));
    cfg.train.dims.m = static_cast<int>(graph.views.size());
    cfg.train.dims.k = graph.class_count;
    const auto result = train(graph, cfg.train);

    auto full = load_graph(cfg);
    const auto scored = scored_set_for(cfg, full, result.params);
    const auto rep = evaluate(scored, cfg.threshold, cfg.topk_fraction);
    std::printf("%-16s %.6f %.6f %.6f %.6f  %.6f %.6f\n", value.c_str(), rep.auc, rep.ks, rep.f1, rep.precision,
                rep.recall, rep.topk);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\n", value.c_str(), rep.auc, rep.ks,
                  rep.f1, rep.precision, rep.recall, rep.topk);
    table << buf;
  }
  std::printf("table %s\n", table_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semignn: semi-supervised multiview graph attention for fraud scoring"};
  app.require_subcommand(1);

  Cli cli;
  std::string sweep_param;
  std::vector<std::string> sweep_values;

  auto* gen = app.add_subcommand("gen", "generate a planted-signal synthetic dataset");
  add_common(gen, cli,
             {{"seed", "seed"},
              {"out", "out"},
              {"users", "synth.users"},
              {"fraud-rate", "synth.fraud_rate"},
              {"labeled-fraction", "synth.labeled_fraction"},
              {"p-in", "synth.p_in"},
              {"p-out", "synth.p_out"},
              {"views", "synth.views"},
              {"vocab", "synth.vocab_size"},
              {"draws", "synth.draws_per_user"},
              {"signal", "synth.signal"},
              {"background", "synth.background"}},
             {});

  auto* tr = app.add_subcommand("train", "train a model on a dataset manifest");
  add_common(tr, cli,
             {{"seed", "seed"},
              {"out", "out"},
              {"data", "data"},
              {"splits", "splits"},
              {"checkpoint", "checkpoint"},
              {"telemetry", "telemetry"},
              {"alpha", "alpha"},
              {"lambda", "lambda"},
              {"lr", "lr"},
              {"lr-decay", "lr_decay"},
              {"batch-size", "batch_size"},
              {"epochs", "epochs"},
              {"q", "q"},
              {"threads", "threads"},
              {"d0", "dims.d0"},
              {"mlp", "dims.mlp"},
              {"d-final", "dims.d_final"},
              {"walks-per-node", "walk.walks_per_node"},
              {"walk-length", "walk.walk_length"},
              {"window", "walk.window"},
              {"dump-corpus", "walk.dump"},
              {"transform", "edge_weight_transform"},
              {"view-attention", "view_attention"}},
             {{"walks-once", "walks_once"}});

  auto* ev = app.add_subcommand("eval", "score a split or the truth holdout with a checkpoint");
  add_common(ev, cli,
             {{"seed", "seed"},
              {"out", "out"},
              {"data", "data"},
              {"splits", "splits"},
              {"checkpoint", "checkpoint"},
              {"report", "report"},
              {"split", "eval.split"},
              {"threshold", "eval.threshold"},
              {"topk", "eval.topk_fraction"},
              {"positive-class", "eval.positive_class"},
              {"transform", "edge_weight_transform"}},
             {{"truth", "eval.use_truth"}});

  auto* ex = app.add_subcommand("explain", "attention-based importance reports");
  add_common(ex, cli,
             {{"seed", "seed"},
              {"out", "out"},
              {"data", "data"},
              {"checkpoint", "checkpoint"},
              {"view", "explain.view"},
              {"top-n", "explain.top_n"},
              {"positive-class", "eval.positive_class"},
              {"transform", "edge_weight_transform"}},
             {{"mean", "explain.mean"}, {"fraud-only", "explain.fraud_only"}, {"by-class", "explain.by_class"}});

  auto* sw = app.add_subcommand("sweep", "train/eval over a list of parameter values");
  add_common(sw, cli,
             {{"seed", "seed"},
              {"out", "out"},
              {"data", "data"},
              {"splits", "splits"},
              {"split", "eval.split"},
              {"epochs", "epochs"},
              {"alpha", "alpha"}},
             {});
  sw->add_option("--param", sweep_param, "config key to sweep")->required();
  sw->add_option("--values", sweep_values, "comma-separated values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = cli.resolve();
    if (gen->parsed()) return cmd_gen(cfg);
    if (tr->parsed()) return cmd_train(cfg);
    if (ev->parsed()) return cmd_eval(cfg);
    if (ex->parsed()) return cmd_explain(cfg);
    if (sw->parsed()) return cmd_sweep(cfg, sweep_param, sweep_values);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
