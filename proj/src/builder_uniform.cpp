#include <functional>

#include "rflab/tree.hpp"

namespace rflab {

Tree build_uniform_tree(int dim, int levels, Rng theta) {
  Tree t;
  t.dim = dim;
  t.kind = BuilderKind::Uniform;
  t.nodes.reserve((std::size_t{2} << levels) - 1);
  std::vector<double> lo(dim, 0.0), hi(dim, 1.0);
  // Preorder: each node draws (dimension, position) before its subtrees, so
  // the stream consumption order is fixed by the shape alone.
  std::function<std::int32_t(int)> rec = [&](int depth) -> std::int32_t {
    std::int32_t idx = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    if (depth == 0) return idx;
    int j = static_cast<int>(theta.next_below(dim));
    double pos = lo[j] + theta.next_double() * (hi[j] - lo[j]);
    t.nodes[idx].dim = j;
    t.nodes[idx].value = pos;
    double keep = hi[j];
    hi[j] = pos;
    std::int32_t left = rec(depth - 1);
    hi[j] = keep;
    keep = lo[j];
    lo[j] = pos;
    std::int32_t right = rec(depth - 1);
    lo[j] = keep;
    t.nodes[idx].a = left;
    t.nodes[idx].b = right;
    return idx;
  };
  rec(levels);
  return t;
}

}  // namespace rflab
