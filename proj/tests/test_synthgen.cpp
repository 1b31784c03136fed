#include <catch2/catch.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "semignn/synthgen.hpp"

using namespace semignn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("generation is deterministic per seed, down to the emitted bytes") {
  SynthConfig cfg;
  cfg.user_count = 300;
  cfg.rng_seed = 42;
  const auto d1 = generate(cfg);
  const auto d2 = generate(cfg);
  REQUIRE(d1.truth == d2.truth);
  REQUIRE(d1.graph.labeled == d2.graph.labeled);

  auto dir1 = std::filesystem::temp_directory_path() / "semignn_gen_a";
  auto dir2 = std::filesystem::temp_directory_path() / "semignn_gen_b";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  write_dataset(d1, dir1.string());
  write_dataset(d2, dir2.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir1)) {
    const auto name = entry.path().filename();
    REQUIRE(slurp(entry.path()) == slurp(dir2 / name));
  }

  cfg.rng_seed = 43;
  const auto d3 = generate(cfg);
  REQUIRE(d1.truth != d3.truth);
}

TEST_CASE("labeled fraud rate tracks the configured rate") {
  SynthConfig cfg;
  cfg.rng_seed = 7;
  const auto data = generate(cfg);
  std::size_t fraud = 0;
  for (const auto& [u, y] : data.graph.labeled) fraud += y == 1;
  const double rate = static_cast<double>(fraud) / data.graph.labeled.size();
  REQUIRE(std::abs(rate - cfg.fraud_rate) < 0.015);

  std::size_t truth_fraud = 0;
  for (int y : data.truth) truth_fraud += y == 1;
  REQUIRE(truth_fraud == static_cast<std::size_t>(std::lround(cfg.fraud_rate * cfg.user_count)));
}

TEST_CASE("relation mean degree lands near the SBM expectation") {
  SynthConfig cfg;
  cfg.rng_seed = 11;
  const auto data = generate(cfg);
  double total = 0.0;
  for (NodeId u = 0; u < cfg.user_count; ++u) total += data.graph.views[0].degree(u);
  const double mean = total / cfg.user_count;
  const double expected = cfg.user_count * (cfg.p_in + cfg.p_out) / 2.0;
  REQUIRE(mean > 0.8 * expected);
  REQUIRE(mean < 1.2 * expected);
}

TEST_CASE("splits partition the labeled users 50/30/20") {
  SynthConfig cfg;
  cfg.user_count = 1000;
  cfg.rng_seed = 13;
  const auto data = generate(cfg);
  REQUIRE(data.splits.size() == data.graph.labeled.size());
  std::set<NodeId> labeled;
  for (const auto& [u, y] : data.graph.labeled) labeled.insert(u);
  std::size_t train = 0, test = 0, val = 0;
  std::set<NodeId> seen;
  for (const auto& [u, s] : data.splits) {
    REQUIRE(labeled.count(u) == 1);
    REQUIRE(seen.insert(u).second);
    if (s == Split::train) ++train;
    if (s == Split::test) ++test;
    if (s == Split::validation) ++val;
  }
  REQUIRE(seen.size() == labeled.size());
  const double n = static_cast<double>(data.splits.size());
  REQUIRE(std::abs(train / n - 0.5) < 0.01);
  REQUIRE(std::abs(test / n - 0.3) < 0.01);
  REQUIRE(std::abs(val / n - 0.2) < 0.01);
}

TEST_CASE("every labeled fraud user carries at least one planted-word edge at defaults") {
  SynthConfig cfg;
  cfg.rng_seed = 17;
  const auto data = generate(cfg);
  const auto& view = data.graph.views[1];
  for (const auto& [u, y] : data.graph.labeled) {
    if (y != 1) continue;
    bool planted_edge = false;
    for (const auto& nb : view.neighbors(u))
      if (nb.node < static_cast<NodeId>(cfg.planted_words)) planted_edge = true;
    REQUIRE(planted_edge);
  }
}

TEST_CASE("null configuration wipes out the planted signal") {
  SynthConfig cfg;
  cfg.user_count = 400;
  cfg.signal = 0.0;
  cfg.background = 0.0;
  cfg.p_in = 0.011;
  cfg.p_out = 0.011;
  cfg.rng_seed = 19;
  const auto data = generate(cfg);
  const auto& view = data.graph.views[1];
  for (NodeId u = 0; u < cfg.user_count; ++u)
    for (const auto& nb : view.neighbors(u)) REQUIRE(nb.node >= static_cast<NodeId>(cfg.planted_words));
}

TEST_CASE("multiple bipartite views are emitted with distinct names") {
  SynthConfig cfg;
  cfg.user_count = 120;
  cfg.bipartite_views = 3;
  cfg.rng_seed = 23;
  const auto data = generate(cfg);
  REQUIRE(data.graph.views.size() == 4);
  REQUIRE(data.graph.view_names == std::vector<std::string>{"relation", "app", "addr", "nick"});
  data.graph.validate();
}

TEST_CASE("dataset round-trips through the manifest loader") {
  SynthConfig cfg;
  cfg.user_count = 150;
  cfg.rng_seed = 29;
  const auto data = generate(cfg);
  auto dir = std::filesystem::temp_directory_path() / "semignn_gen_rt";
  std::filesystem::remove_all(dir);
  write_dataset(data, dir.string());
  const auto loaded = load_multiview((dir / "manifest.txt").string());
  REQUIRE(loaded.user_count == data.graph.user_count);
  REQUIRE(loaded.labeled == data.graph.labeled);
  for (NodeId u = 0; u < loaded.user_count; ++u)
    REQUIRE(loaded.views[1].neighbors(u) == data.graph.views[1].neighbors(u));
  const auto splits = load_splits((dir / "splits.tsv").string());
  REQUIRE(splits == data.splits);
  const auto truth = load_truth((dir / "truth.tsv").string());
  REQUIRE(truth.size() == data.truth.size());
  for (const auto& [u, y] : truth) REQUIRE(y == data.truth[u]);
}
