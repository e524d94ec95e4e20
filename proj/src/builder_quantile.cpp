#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "rflab/stats.hpp"
#include "rflab/tree.hpp"

namespace rflab {

namespace {

// Sorts the index span by (coordinate along j, index).  The index tiebreak
// makes the order, and hence the whole partition, deterministic under ties.
void sort_span(std::uint32_t* b, std::uint32_t* e, const TrainingSet& data,
               int j) {
  std::sort(b, e, [&](std::uint32_t p, std::uint32_t q) {
    double xp = data.xs[static_cast<std::size_t>(p) * data.dim + j];
    double xq = data.xs[static_cast<std::size_t>(q) * data.dim + j];
    if (xp != xq) return xp < xq;
    return p < q;
  });
}

double coord(const TrainingSet& data, std::uint32_t i, int j) {
  return data.xs[static_cast<std::size_t>(i) * data.dim + j];
}

}  // namespace

Tree build_quantile_tree(const TrainingSet& data, const QuantileConfig& cfg,
                         Rng theta) {
  int n = data.size();
  int d = data.dim;
  int a_n = cfg.subsample == 0 ? n : cfg.subsample;
  if (a_n < 3 || a_n > n)
    throw std::invalid_argument("quantile builder: needs 3 <= subsample <= n");
  if (cfg.q < 0.5 || cfg.q >= 1.0)
    throw std::invalid_argument("quantile builder: q must lie in [1/2, 1)");

  Tree t;
  t.dim = d;
  t.kind = BuilderKind::Quantile;
  t.n_data = n;
  std::vector<std::uint32_t> work(a_n);
  theta.sample_without_replacement(n, a_n, work.data());

  auto make_leaf = [&](std::uint32_t* b, std::uint32_t* e) -> std::int32_t {
    std::int32_t idx = static_cast<std::int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    t.audit.push_back(std::nan(""));
    TreeNode& nd = t.nodes[idx];
    nd.a = static_cast<std::int32_t>(t.items.size());
    nd.b = static_cast<std::int32_t>(e - b);
    KahanSum s;
    for (std::uint32_t* p = b; p != e; ++p) {
      t.items.push_back(*p);
      s.add(data.ys[*p]);
    }
    nd.value = nd.b > 0 ? s.value() / nd.b : 0.0;
    return idx;
  };

  std::function<std::int32_t(std::uint32_t*, std::uint32_t*)> rec =
      [&](std::uint32_t* b, std::uint32_t* e) -> std::int32_t {
    std::ptrdiff_t N = e - b;
    if (N <= 1) return make_leaf(b, e);

    if (N == 2) {
      // Midpoint rule; both points are kept.  A tied coordinate forces a
      // dimension redraw (up to d times) before giving up on the cell.
      for (int attempt = 0; attempt <= d; ++attempt) {
        int j = static_cast<int>(theta.next_below(d));
        sort_span(b, e, data, j);
        double x0 = coord(data, b[0], j), x1 = coord(data, b[1], j);
        if (x0 == x1) continue;
        std::int32_t idx = static_cast<std::int32_t>(t.nodes.size());
        t.nodes.emplace_back();
        t.audit.push_back(std::nan(""));
        std::int32_t left = rec(b, b + 1);
        std::int32_t right = rec(b + 1, e);
        TreeNode& nd = t.nodes[idx];
        nd.dim = j;
        nd.value = 0.5 * (x0 + x1);
        nd.a = left;
        nd.b = right;
        return idx;
      }
      return make_leaf(b, e);
    }

    double nn = static_cast<double>(N);
    for (int attempt = 0; attempt <= d; ++attempt) {
      int j = static_cast<int>(theta.next_below(d));
      sort_span(b, e, data, j);
      if (coord(data, b[0], j) == coord(data, e[-1], j)) continue;  // zero range
      double lo = std::max(1.0 - cfg.q, 1.0 / nn);
      double hi = std::min(cfg.q, 1.0 - 1.0 / nn);
      double q_n = cfg.fixed_qn >= 0.0
                       ? std::min(std::max(cfg.fixed_qn, lo), hi)
                       : lo + theta.next_double() * (hi - lo);
      // Keep q_n strictly inside (1/N, 1-1/N); the draw can land on a closed
      // endpoint only through rounding or clamping.
      if (q_n <= 1.0 / nn) q_n = std::nextafter(1.0 / nn, 1.0);
      if (q_n >= 1.0 - 1.0 / nn) q_n = std::nextafter(1.0 - 1.0 / nn, 0.0);
      int rank = static_cast<int>(std::floor(q_n * nn)) + 1;
      if (rank < 2) rank = 2;
      if (rank > static_cast<int>(N) - 1) rank = static_cast<int>(N) - 1;
      std::uint32_t* cut = b + (rank - 1);  // the quantile point itself
      std::int32_t idx = static_cast<std::int32_t>(t.nodes.size());
      t.nodes.emplace_back();
      t.audit.push_back(q_n);
      std::uint32_t excluded = *cut;
      double pos = coord(data, excluded, j);
      std::int32_t left = rec(b, cut);
      std::int32_t right = rec(cut + 1, e);
      TreeNode& nd = t.nodes[idx];
      nd.dim = j;
      nd.value = pos;
      nd.a = left;
      nd.b = right;
      nd.excluded = static_cast<std::int32_t>(excluded);
      return idx;
    }
    return make_leaf(b, e);  // every dimension degenerate
  };

  rec(work.data(), work.data() + a_n);
  return t;
}

}  // namespace rflab
