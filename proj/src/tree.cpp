#include "rflab/tree.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "rflab/stats.hpp"

namespace rflab {

bool Cell::contains(std::span<const double> x) const {
  for (std::size_t j = 0; j < lower.size(); ++j) {
    if (x[j] < lower[j]) return false;
    if (x[j] > upper[j]) return false;
    if (x[j] == upper[j] && upper[j] != 1.0) return false;
  }
  return true;
}

double Cell::diameter() const {
  double d = 0.0;
  for (std::size_t j = 0; j < lower.size(); ++j)
    d = std::max(d, upper[j] - lower[j]);
  return d;
}

void BuilderConfig::validate(int dim, int n) const {
  if (dim < 1) throw std::invalid_argument("builder: dim must be >= 1");
  switch (kind) {
    case BuilderKind::Uniform:
      if (uniform.levels < 0)
        throw std::invalid_argument("builder: levels must be >= 0");
      break;
    case BuilderKind::Quantile: {
      if (quantile.q < 0.5 || quantile.q >= 1.0)
        throw std::invalid_argument("builder: q must lie in [1/2, 1)");
      if (quantile.subsample < 0 || quantile.subsample > n)
        throw std::invalid_argument("builder: subsample must lie in [0, n]");
      int a_n = quantile.subsample == 0 ? n : quantile.subsample;
      if (a_n < 3)
        throw std::invalid_argument("builder: quantile needs >= 3 points");
      if (quantile.fixed_qn >= 0.0 &&
          (quantile.fixed_qn < 1.0 - quantile.q ||
           quantile.fixed_qn > quantile.q))
        throw std::invalid_argument("builder: fixed q_n outside [1-q, q]");
      break;
    }
    case BuilderKind::Breiman:
      if (breiman.mtry < 0 || breiman.mtry > dim)
        throw std::invalid_argument("builder: mtry must lie in [0, d]");
      if (breiman.nodesize < 1)
        throw std::invalid_argument("builder: nodesize must be >= 1");
      if (breiman.resample == Resample::Subsample &&
          (breiman.subsample < 1 || breiman.subsample > n))
        throw std::invalid_argument("builder: subsample must lie in [1, n]");
      break;
  }
}

std::string BuilderConfig::describe() const {
  switch (kind) {
    case BuilderKind::Uniform:
      return "uniform(levels=" + std::to_string(uniform.levels) + ")";
    case BuilderKind::Quantile:
      return "quantile(q=" + std::to_string(quantile.q) +
             ",subsample=" + std::to_string(quantile.subsample) + ")";
    case BuilderKind::Breiman: {
      const char* rs = breiman.resample == Resample::None ? "none"
                       : breiman.resample == Resample::Subsample ? "subsample"
                                                                 : "bootstrap";
      return "breiman(mtry=" + std::to_string(breiman.mtry) +
             ",nodesize=" + std::to_string(breiman.nodesize) + ",resample=" +
             rs + ")";
    }
  }
  return "?";
}

std::size_t Tree::leaf_count() const {
  std::size_t c = 0;
  for (const auto& n : nodes) c += n.dim < 0;
  return c;
}

const TreeNode& Tree::leaf_at(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes[i].dim >= 0)
    i = x[nodes[i].dim] < nodes[i].value ? nodes[i].a : nodes[i].b;
  return nodes[i];
}

QuantilePick empirical_quantile(std::span<const double> values, double q_n) {
  std::size_t n = values.size();
  if (n < 2) throw std::invalid_argument("empirical_quantile: need >= 2 values");
  double nn = static_cast<double>(n);
  if (!(q_n > 1.0 / nn) || !(q_n < 1.0 - 1.0 / nn))
    throw std::invalid_argument(
        "empirical_quantile: q_n must lie strictly inside (1/N, 1-1/N)");
  for (std::size_t i = 1; i < n; ++i)
    if (values[i] < values[i - 1])
      throw std::invalid_argument("empirical_quantile: values not sorted");
  int rank = static_cast<int>(std::floor(q_n * nn)) + 1;
  if (rank < 2) rank = 2;                        // fp guard; unreachable in
  if (rank > static_cast<int>(n) - 1)            // exact arithmetic
    rank = static_cast<int>(n) - 1;
  QuantilePick p;
  p.rank = rank;
  p.value = values[rank - 1];
  return p;
}

void attach_data(Tree& tree, const TrainingSet& data) {
  if (tree.kind != BuilderKind::Uniform)
    throw std::invalid_argument(
        "attach_data: only uniform partitions accept late attachment");
  if (data.dim != tree.dim)
    throw std::invalid_argument("attach_data: dimension mismatch");
  int n = data.size();
  // Pass 1: leaf of every point; per-leaf counts.
  std::vector<std::int32_t> leaf_of(n);
  std::vector<std::int32_t> counts(tree.nodes.size(), 0);
  for (int i = 0; i < n; ++i) {
    std::span<const double> x = data.point(i);
    std::int32_t node = 0;
    while (tree.nodes[node].dim >= 0) {
      const TreeNode& nd = tree.nodes[node];
      node = x[nd.dim] < nd.value ? nd.a : nd.b;
    }
    leaf_of[i] = node;
    ++counts[node];
  }
  // Pass 2: offsets, membership, means.
  tree.items.assign(n, 0);
  std::vector<std::int32_t> offset(tree.nodes.size(), 0);
  std::int32_t at = 0;
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    if (tree.nodes[v].dim >= 0) continue;
    offset[v] = at;
    tree.nodes[v].a = at;
    tree.nodes[v].b = counts[v];
    at += counts[v];
  }
  for (int i = 0; i < n; ++i) tree.items[offset[leaf_of[i]]++] = i;
  for (auto& nd : tree.nodes) {
    if (nd.dim >= 0) continue;
    if (nd.b == 0) {
      nd.value = 0.0;  // empty-cell convention
      continue;
    }
    KahanSum s;
    for (std::int32_t t = 0; t < nd.b; ++t) s.add(data.ys[tree.items[nd.a + t]]);
    nd.value = s.value() / nd.b;
  }
  tree.n_data = n;
}

double tree_predict(const Tree& tree, const TrainingSet& data,
                    std::span<const double> x) {
  if (tree.n_data != data.size() || tree.dim != data.dim)
    throw std::invalid_argument("tree_predict: tree not attached to this data");
  return tree.leaf_at(x).value;
}

std::vector<double> tree_weights(const Tree& tree, const TrainingSet& data,
                                 std::span<const double> x) {
  if (tree.n_data != data.size() || tree.dim != data.dim)
    throw std::invalid_argument("tree_weights: tree not attached to this data");
  std::vector<double> w(data.size(), 0.0);
  const TreeNode& leaf = tree.leaf_at(x);
  if (leaf.b == 0) return w;
  double share = 1.0 / leaf.b;
  for (std::int32_t t = 0; t < leaf.b; ++t) w[tree.items[leaf.a + t]] += share;
  return w;
}

Cell leaf_cell_of(const Tree& tree, std::span<const double> x) {
  Cell c;
  c.lower.assign(tree.dim, 0.0);
  c.upper.assign(tree.dim, 1.0);
  std::int32_t i = 0;
  while (tree.nodes[i].dim >= 0) {
    const TreeNode& nd = tree.nodes[i];
    if (x[nd.dim] < nd.value) {
      c.upper[nd.dim] = nd.value;
      i = nd.a;
    } else {
      c.lower[nd.dim] = nd.value;
      i = nd.b;
    }
  }
  return c;
}

std::string tree_to_json(const Tree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const TreeNode& nd = tree.nodes[v];
    nlohmann::json j;
    if (nd.dim >= 0) {
      j["dim"] = nd.dim;
      j["pos"] = nd.value;
      j["left"] = nd.a;
      j["right"] = nd.b;
      if (nd.excluded >= 0) j["excluded"] = nd.excluded;
    } else {
      j["leaf"] = true;
      j["value"] = nd.value;
      auto items = nlohmann::json::array();
      for (std::int32_t t = 0; t < nd.b; ++t)
        items.push_back(tree.items[nd.a + t]);
      j["items"] = std::move(items);
    }
    nodes.push_back(std::move(j));
  }
  nlohmann::json out;
  out["dim"] = tree.dim;
  out["kind"] = tree.kind == BuilderKind::Uniform    ? "uniform"
                : tree.kind == BuilderKind::Quantile ? "quantile"
                                                     : "breiman";
  out["nodes"] = std::move(nodes);
  return out.dump(2);
}

Tree build_tree(const TrainingSet& data, const BuilderConfig& cfg, Rng theta) {
  cfg.validate(data.dim, data.size());
  switch (cfg.kind) {
    case BuilderKind::Uniform: {
      Tree t = build_uniform_tree(data.dim, cfg.uniform.levels, theta);
      attach_data(t, data);
      return t;
    }
    case BuilderKind::Quantile:
      return build_quantile_tree(data, cfg.quantile, theta);
    case BuilderKind::Breiman:
      return build_breiman_tree(data, cfg.breiman, theta);
  }
  throw std::invalid_argument("build_tree: unknown builder");
}

}  // namespace rflab
