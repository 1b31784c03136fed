#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "semignn/model.hpp"

namespace semignn {

inline constexpr const char* kCheckpointMagic = "semignn-checkpoint";
inline constexpr int kCheckpointVersion = 1;

// Text container: a header with the model configuration followed by every
// parameter tensor in row-major order. Values are written as C hex floats,
// so save/load round-trips bit-exactly and files are byte-stable across runs.
inline void save_checkpoint(const ModelParams& p, std::uint64_t rng_seed, const std::string& path,
                            EdgeWeightTransform transform = EdgeWeightTransform::none) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::MissingArtifact, "cannot write checkpoint " + path);
  out << kCheckpointMagic << " v" << kCheckpointVersion << '\n';
  out << "d0 = " << p.dims.d0 << '\n';
  out << "mlp =";
  for (int w : p.dims.mlp) out << ' ' << w;
  out << '\n';
  out << "d_final = " << p.dims.d_final << '\n';
  out << "m = " << p.dims.m << '\n';
  out << "k = " << p.dims.k << '\n';
  out << "view_attention = " << to_string(p.view_mode) << '\n';
  out << "edge_weight_transform = " << to_string(transform) << '\n';
  out << "rng_seed = " << rng_seed << '\n';
  out << "tensors = " << p.store.count() << '\n';
  char buf[40];
  for (int id = 0; id < p.store.count(); ++id) {
    const Tensor& t = p.store.tensor(id);
    const auto& meta = p.store.meta(id);
    out << "tensor " << meta.name << ' ' << t.rows << ' ' << t.cols << '\n';
    for (int r = 0; r < t.rows; ++r) {
      const double* row = t.row(r);
      for (int c = 0; c < t.cols; ++c) {
        std::snprintf(buf, sizeof(buf), "%a", row[c]);
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
  }
}

struct Checkpoint {
  ModelParams params;
  EdgeWeightTransform transform = EdgeWeightTransform::none;
  std::uint64_t rng_seed = 0;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MissingArtifact, "cannot open checkpoint " + path);
  std::string magic, version;
  in >> magic >> version;
  if (magic != kCheckpointMagic || version != "v" + std::to_string(kCheckpointVersion))
    fail(ErrorCode::ValidationError, path + ": not a version-" + std::to_string(kCheckpointVersion) + " checkpoint");

  Checkpoint ck;
  ModelParams& p = ck.params;
  int tensor_count = 0;
  std::string key, eq;
  auto expect_kv = [&](const char* want) {
    in >> key >> eq;
    if (key != want || eq != "=") fail(ErrorCode::ParseError, path + ": expected `" + want + " =`");
  };
  expect_kv("d0");
  in >> p.dims.d0;
  in >> key;  // "mlp"
  std::string rest;
  std::getline(in, rest);
  {
    std::istringstream iss(rest);
    iss >> eq;
    p.dims.mlp.clear();
    int w;
    while (iss >> w) p.dims.mlp.push_back(w);
  }
  expect_kv("d_final");
  in >> p.dims.d_final;
  expect_kv("m");
  in >> p.dims.m;
  expect_kv("k");
  in >> p.dims.k;
  expect_kv("view_attention");
  std::string mode;
  in >> mode;
  if (mode == "shared")
    p.view_mode = ViewAttentionMode::shared;
  else if (mode == "per_user")
    p.view_mode = ViewAttentionMode::per_user;
  else
    fail(ErrorCode::ParseError, path + ": unknown view_attention mode " + mode);
  expect_kv("edge_weight_transform");
  std::string tname;
  in >> tname;
  if (tname == "none")
    ck.transform = EdgeWeightTransform::none;
  else if (tname == "log1p")
    ck.transform = EdgeWeightTransform::log1p;
  else if (tname == "per_user_normalize")
    ck.transform = EdgeWeightTransform::per_user_normalize;
  else
    fail(ErrorCode::ParseError, path + ": unknown edge_weight_transform " + tname);
  expect_kv("rng_seed");
  in >> ck.rng_seed;
  expect_kv("tensors");
  in >> tensor_count;
  p.dims.validate();

  p.W.resize(p.dims.m);
  p.b.resize(p.dims.m);
  for (int i = 0; i < tensor_count; ++i) {
    std::string tag, name;
    int rows, cols;
    if (!(in >> tag >> name >> rows >> cols) || tag != "tensor")
      fail(ErrorCode::ParseError, path + ": bad tensor header");
    const bool sparse = name[0] == 'M' || name[0] == 'H' || (name.rfind("phi", 0) == 0 && rows > 1);
    const bool regularized = name[0] != 'b';
    const int id = p.store.add(name, rows, cols, sparse, regularized);
    Tensor& t = p.store.tensor(id);
    for (auto& v : t.data) {
      std::string tok;
      if (!(in >> tok)) fail(ErrorCode::ParseError, path + ": truncated tensor " + name);
      char* end = nullptr;
      v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) fail(ErrorCode::ParseError, path + ": bad value in tensor " + name);
    }
    if (name[0] == 'M')
      p.M.push_back(id);
    else if (name[0] == 'H')
      p.H.push_back(id);
    else if (name == "W_f")
      p.W_f = id;
    else if (name == "b_f")
      p.b_f = id;
    else if (name == "theta")
      p.theta = id;
    else if (name.rfind("phi", 0) == 0)
      p.phi.push_back(id);
    else if (name[0] == 'W' || name[0] == 'b') {
      const auto sep = name.find('_');
      if (sep == std::string::npos) fail(ErrorCode::ParseError, path + ": unknown tensor name " + name);
      const int v = std::stoi(name.substr(1, sep - 1));
      if (v < 0 || v >= p.dims.m) fail(ErrorCode::ParseError, path + ": tensor view out of range " + name);
      (name[0] == 'W' ? p.W : p.b)[v].push_back(id);
    } else
      fail(ErrorCode::ParseError, path + ": unknown tensor name " + name);
  }
  if (static_cast<int>(p.M.size()) != p.dims.m || static_cast<int>(p.phi.size()) != p.dims.m || p.theta < 0)
    fail(ErrorCode::ValidationError, path + ": tensor set does not match declared dims");
  return ck;
}

// A checkpoint is only usable against a graph with matching table sizes.
inline void validate_against(const ModelParams& p, const MultiViewGraph& g) {
  if (p.dims.m != static_cast<int>(g.views.size()))
    fail(ErrorCode::ValidationError, "checkpoint view count does not match graph");
  if (p.dims.k != g.class_count) fail(ErrorCode::ValidationError, "checkpoint class count does not match graph");
  for (int v = 0; v < p.dims.m; ++v) {
    const int n_v = g.views[v].kind == ViewKind::relation ? static_cast<int>(g.user_count)
                                                          : static_cast<int>(g.views[v].attr_node_count);
    if (p.store.tensor(p.M[v]).rows != n_v)
      fail(ErrorCode::ValidationError, "checkpoint embedding table size does not match view " + std::to_string(v));
  }
}

}  // namespace semignn
