#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "semignn/graph.hpp"
#include "semignn/rng.hpp"

namespace semignn {

// Planted-signal multiview fraud dataset: a two-block SBM relation graph with
// fraud concentrated in block 1, plus bipartite views where fraud users draw
// words from a planted vocabulary at rate `signal` against `background` for
// everyone else.
struct SynthConfig {
  NodeId user_count = 2000;
  double fraud_rate = 0.05;
  double labeled_fraction = 0.5;  // split 50/30/20 train/test/validation
  double p_in = 0.02;
  double p_out = 0.002;
  double fraud_p_in = 0.25;   // edge probability inside the fraud subcommunity
  double fraud_p_cross = 1.0;  // scale on fraud-to-clean edge probabilities
  int bipartite_views = 1;
  NodeId vocab_size = 200;
  int planted_words = 10;
  int draws_per_user = 20;
  double attr_coverage = 1.0;  // fraction of users with any attribute draws
  double signal = 0.6;       // planted-draw probability for fraud users
  double background = 0.05;  // planted-draw probability for everyone else
  double fraud_block_bias = 0.9;  // share of fraud users placed in block 1
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (user_count < 4) fail(ErrorCode::InvalidConfig, "need at least 4 users");
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in01(fraud_rate) || !in01(labeled_fraction) || !in01(signal) || !in01(background) || !in01(p_in) ||
        !in01(p_out) || !in01(fraud_block_bias) || !in01(fraud_p_in) || !in01(attr_coverage) ||
        !in01(fraud_p_cross))
      fail(ErrorCode::InvalidConfig, "rates must be in [0,1]");
    if (p_in < p_out) fail(ErrorCode::InvalidConfig, "need p_in >= p_out");
    if (bipartite_views < 1) fail(ErrorCode::InvalidConfig, "need at least one bipartite view");
    if (vocab_size < static_cast<NodeId>(planted_words) + 1 || planted_words < 1)
      fail(ErrorCode::InvalidConfig, "vocabulary must exceed the planted word count");
    if (draws_per_user < 1) fail(ErrorCode::InvalidConfig, "draws_per_user must be positive");
  }
};

enum class Split : int { train = 0, test = 1, validation = 2 };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::validation: return "validation";
  }
  return "train";
}

struct SynthData {
  MultiViewGraph graph;                       // labels contain only the revealed subset
  std::vector<int> truth;                     // fraud label for every user
  std::vector<NodeId> planted;                // planted word ids (shared by every bipartite view)
  std::vector<std::pair<NodeId, Split>> splits;  // one entry per labeled user
};

namespace detail {

template <typename T>
inline void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.next_below(static_cast<std::uint32_t>(i))]);
}

}  // namespace detail

inline SynthData generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthData data;
  const NodeId n = cfg.user_count;
  const NodeId half = n / 2;  // users [0, half) are block 0

  // Ground-truth fraud labels, concentrated in block 1.
  data.truth.assign(n, 0);
  const int n_fraud = static_cast<int>(std::lround(cfg.fraud_rate * n));
  {
    std::vector<NodeId> block0(half), block1(n - half);
    std::iota(block0.begin(), block0.end(), 0);
    std::iota(block1.begin(), block1.end(), half);
    Rng rng = substream(cfg.rng_seed, stream::kSynth, 1);
    detail::shuffle(block0, rng);
    detail::shuffle(block1, rng);
    const int from_block1 = std::min<int>(static_cast<int>(std::lround(cfg.fraud_block_bias * n_fraud)),
                                          static_cast<int>(block1.size()));
    for (int i = 0; i < from_block1; ++i) data.truth[block1[i]] = 1;
    for (int i = 0; i < n_fraud - from_block1; ++i) data.truth[block0[i]] = 1;
  }

  // Relation graph from the two-block SBM; fraud pairs link at fraud_p_in,
  // giving the fraud population its own dense local neighborhood.
  std::vector<EdgeInput> rel;
  {
    Rng rng = substream(cfg.rng_seed, stream::kSynth, 2);
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v) {
        const bool same = (u < half) == (v < half);
        double p = same ? cfg.p_in : cfg.p_out;
        if (data.truth[u] && data.truth[v])
          p = std::max(p, cfg.fraud_p_in);
        else if (data.truth[u] != data.truth[v])
          p *= cfg.fraud_p_cross;
        if (rng.next_double() < p) rel.push_back({u, v, 1.0});
      }
  }

  data.graph.user_count = n;
  data.graph.class_count = 2;
  data.graph.views.push_back(ViewGraph::build(0, ViewKind::relation, n, 0, rel));
  data.graph.view_names.push_back("relation");

  // Bipartite views: multinomial word draws with the fraud-tilted mixture.
  data.planted.resize(cfg.planted_words);
  std::iota(data.planted.begin(), data.planted.end(), 0);
  static const char* kViewNames[] = {"app", "addr", "nick"};
  for (int v = 0; v < cfg.bipartite_views; ++v) {
    std::vector<EdgeInput> edges;
    std::vector<int> counts(cfg.vocab_size);
    for (NodeId u = 0; u < n; ++u) {
      Rng rng = substream(cfg.rng_seed, stream::kSynth, 10 + static_cast<std::uint64_t>(v) * n + u);
      if (cfg.attr_coverage < 1.0 && rng.next_double() >= cfg.attr_coverage) continue;  // user has no draws here
      std::fill(counts.begin(), counts.end(), 0);
      const double planted_prob = data.truth[u] ? cfg.signal : cfg.background;
      for (int d = 0; d < cfg.draws_per_user; ++d) {
        NodeId word;
        if (rng.next_double() < planted_prob)
          word = rng.next_below(cfg.planted_words);
        else
          word = cfg.planted_words + rng.next_below(cfg.vocab_size - cfg.planted_words);
        ++counts[word];
      }
      for (NodeId w = 0; w < cfg.vocab_size; ++w)
        if (counts[w] > 0) edges.push_back({u, w, static_cast<double>(counts[w])});
    }
    data.graph.views.push_back(ViewGraph::build(v + 1, ViewKind::bipartite, n, cfg.vocab_size, edges));
    data.graph.view_names.push_back(v < 3 ? kViewNames[v] : "view" + std::to_string(v + 1));
  }

  // Reveal labels for a stratified fraction of users; assign 50/30/20 splits
  // stratified by class so small labeled sets stay balanced.
  {
    std::vector<NodeId> fraud, clean;
    for (NodeId u = 0; u < n; ++u) (data.truth[u] ? fraud : clean).push_back(u);
    Rng rng = substream(cfg.rng_seed, stream::kSynth, 3);
    detail::shuffle(fraud, rng);
    detail::shuffle(clean, rng);
    const int n_labeled = static_cast<int>(std::lround(cfg.labeled_fraction * n));
    int lab_fraud = std::min<int>(static_cast<int>(std::lround(cfg.labeled_fraction * fraud.size())),
                                  static_cast<int>(fraud.size()));
    lab_fraud = std::min(lab_fraud, n_labeled);
    const int lab_clean = std::min<int>(n_labeled - lab_fraud, static_cast<int>(clean.size()));

    auto assign = [&](const std::vector<NodeId>& pool, int count) {
      const int n_train = static_cast<int>(std::lround(0.5 * count));
      const int n_test = static_cast<int>(std::lround(0.3 * count));
      for (int i = 0; i < count; ++i) {
        const Split s = i < n_train ? Split::train : (i < n_train + n_test ? Split::test : Split::validation);
        data.graph.labeled.emplace_back(pool[i], data.truth[pool[i]]);
        data.splits.emplace_back(pool[i], s);
      }
    };
    assign(fraud, lab_fraud);
    assign(clean, lab_clean);
    std::sort(data.graph.labeled.begin(), data.graph.labeled.end());
    std::sort(data.splits.begin(), data.splits.end());
  }
  data.graph.validate();
  return data;
}

// Emits the graph-core file formats plus truth.tsv, planted_words.txt and
// splits.tsv.
inline void write_dataset(const SynthData& data, const std::string& dir) {
  namespace fs = std::filesystem;
  save_multiview(data.graph, dir);
  const fs::path base(dir);
  {
    std::ofstream out(base / "truth.tsv");
    for (NodeId u = 0; u < data.truth.size(); ++u) out << u << '\t' << data.truth[u] << '\n';
  }
  {
    std::ofstream out(base / "planted_words.txt");
    for (NodeId w : data.planted) out << w << '\n';
  }
  {
    std::ofstream out(base / "splits.tsv");
    for (const auto& [u, s] : data.splits) out << u << '\t' << to_string(s) << '\n';
  }
}

inline std::vector<std::pair<NodeId, Split>> load_splits(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open splits file " + path);
  std::vector<std::pair<NodeId, Split>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto toks = detail::split_ws(line);
    NodeId u;
    if (toks.size() != 2 || !detail::parse_u32(toks[0], u))
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": expected `user<TAB>split`");
    Split s;
    if (toks[1] == "train")
      s = Split::train;
    else if (toks[1] == "test")
      s = Split::test;
    else if (toks[1] == "validation")
      s = Split::validation;
    else
      fail(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": unknown split `" + toks[1] + "`");
    out.emplace_back(u, s);
  }
  return out;
}

inline std::vector<std::pair<NodeId, int>> load_truth(const std::string& path) {
  return detail::read_label_file(path);
}

}  // namespace semignn
