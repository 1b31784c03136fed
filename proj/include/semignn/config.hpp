#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "semignn/synthgen.hpp"
#include "semignn/training.hpp"

namespace semignn {

// Flat key-value run configuration: `key = value` lines, '#' comments, dotted
// keys for nested knobs. Every key must be recognized; command-line flags win
// over file values because they are applied afterwards.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string data_manifest;
  std::string splits_path;
  std::string checkpoint_path;
  std::string telemetry_path;
  std::string report_path;
  TrainConfig train;
  SynthConfig synth;
  std::string eval_split = "test";
  double threshold = 0.5;
  double topk_fraction = 0.01;
  int positive_class = 1;
  bool eval_on_truth = false;
  int explain_view = 1;
  int top_n = 15;
  bool explain_mean = false;
  bool fraud_only = false;
  bool by_class = false;

  void set(const std::string& key, const std::string& value) {
    auto bad = [&](const std::string& why) -> double {
      fail(ErrorCode::InvalidConfig, "key `" + key + "`: " + why);
    };
    auto as_double = [&](const std::string& s) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || end != s.c_str() + s.size()) bad("expected a number, got `" + s + "`");
      return v;
    };
    auto as_int = [&](const std::string& s) {
      const double v = as_double(s);
      if (v != static_cast<long long>(v)) bad("expected an integer, got `" + s + "`");
      return static_cast<long long>(v);
    };
    auto as_bool = [&](const std::string& s) {
      if (s == "true" || s == "1" || s == "yes") return true;
      if (s == "false" || s == "0" || s == "no") return false;
      bad("expected a boolean, got `" + s + "`");
      return false;
    };

    if (key == "seed") {
      seed = static_cast<std::uint64_t>(as_int(value));
      train.rng_seed = seed;
      synth.rng_seed = seed;
    } else if (key == "out") {
      out_dir = value;
    } else if (key == "data") {
      data_manifest = value;
    } else if (key == "splits") {
      splits_path = value;
    } else if (key == "checkpoint") {
      checkpoint_path = value;
    } else if (key == "telemetry") {
      telemetry_path = value;
    } else if (key == "report") {
      report_path = value;
    } else if (key == "alpha") {
      train.alpha = as_double(value);
    } else if (key == "lambda") {
      train.lambda = as_double(value);
    } else if (key == "lr") {
      train.lr = as_double(value);
    } else if (key == "lr_decay") {
      train.lr_decay = as_double(value);
    } else if (key == "batch_size") {
      train.batch_size = static_cast<int>(as_int(value));
    } else if (key == "epochs") {
      train.epochs = static_cast<int>(as_int(value));
    } else if (key == "q") {
      train.q = static_cast<int>(as_int(value));
    } else if (key == "threads") {
      train.threads = static_cast<int>(as_int(value));
    } else if (key == "walks_once") {
      train.walks_once = as_bool(value);
    } else if (key == "walk.dump") {
      train.corpus_dump = value;
    } else if (key == "walk.walks_per_node") {
      train.walk.walks_per_node = static_cast<int>(as_int(value));
    } else if (key == "walk.walk_length") {
      train.walk.walk_length = static_cast<int>(as_int(value));
    } else if (key == "walk.window") {
      train.walk.window = static_cast<int>(as_int(value));
    } else if (key == "dims.d0") {
      train.dims.d0 = static_cast<int>(as_int(value));
    } else if (key == "dims.mlp") {
      train.dims.mlp.clear();
      std::istringstream iss(value);
      std::string tok;
      while (std::getline(iss, tok, ','))
        if (!tok.empty()) train.dims.mlp.push_back(static_cast<int>(as_int(tok)));
    } else if (key == "dims.d_final") {
      train.dims.d_final = static_cast<int>(as_int(value));
    } else if (key == "edge_weight_transform") {
      if (value == "none")
        train.transform = EdgeWeightTransform::none;
      else if (value == "log1p")
        train.transform = EdgeWeightTransform::log1p;
      else if (value == "per_user_normalize")
        train.transform = EdgeWeightTransform::per_user_normalize;
      else
        bad("expected none|log1p|per_user_normalize");
    } else if (key == "view_attention") {
      if (value == "shared")
        train.view_attention = ViewAttentionMode::shared;
      else if (value == "per_user")
        train.view_attention = ViewAttentionMode::per_user;
      else
        bad("expected shared|per_user");
    } else if (key == "synth.users") {
      synth.user_count = static_cast<NodeId>(as_int(value));
    } else if (key == "synth.fraud_rate") {
      synth.fraud_rate = as_double(value);
    } else if (key == "synth.labeled_fraction") {
      synth.labeled_fraction = as_double(value);
    } else if (key == "synth.p_in") {
      synth.p_in = as_double(value);
    } else if (key == "synth.p_out") {
      synth.p_out = as_double(value);
    } else if (key == "synth.fraud_p_in") {
      synth.fraud_p_in = as_double(value);
    } else if (key == "synth.fraud_p_cross") {
      synth.fraud_p_cross = as_double(value);
    } else if (key == "synth.views") {
      synth.bipartite_views = static_cast<int>(as_int(value));
    } else if (key == "synth.vocab_size") {
      synth.vocab_size = static_cast<NodeId>(as_int(value));
    } else if (key == "synth.planted_words") {
      synth.planted_words = static_cast<int>(as_int(value));
    } else if (key == "synth.draws_per_user") {
      synth.draws_per_user = static_cast<int>(as_int(value));
    } else if (key == "synth.attr_coverage") {
      synth.attr_coverage = as_double(value);
    } else if (key == "synth.signal") {
      synth.signal = as_double(value);
    } else if (key == "synth.background") {
      synth.background = as_double(value);
    } else if (key == "eval.split") {
      if (value != "train" && value != "test" && value != "validation") bad("expected train|test|validation");
      eval_split = value;
    } else if (key == "eval.threshold") {
      threshold = as_double(value);
    } else if (key == "eval.topk_fraction") {
      topk_fraction = as_double(value);
    } else if (key == "eval.positive_class") {
      positive_class = static_cast<int>(as_int(value));
    } else if (key == "eval.use_truth") {
      eval_on_truth = as_bool(value);
    } else if (key == "explain.view") {
      explain_view = static_cast<int>(as_int(value));
    } else if (key == "explain.top_n") {
      top_n = static_cast<int>(as_int(value));
    } else if (key == "explain.mean") {
      explain_mean = as_bool(value);
    } else if (key == "explain.fraud_only") {
      fraud_only = as_bool(value);
    } else if (key == "explain.by_class") {
      by_class = as_bool(value);
    } else {
      fail(ErrorCode::InvalidConfig, "unknown config key `" + key + "`");
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::MissingArtifact, "cannot open config " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrorCode::InvalidConfig, path + ":" + std::to_string(lineno) + ": expected `key = value`");
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        const auto p = s.find_last_not_of(" \t\r");
        s.erase(p == std::string::npos ? 0 : p + 1);
        return s;
      };
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
};

}  // namespace semignn
