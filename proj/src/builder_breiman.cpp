#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "rflab/stats.hpp"
#include "rflab/tree.hpp"

namespace rflab {

namespace {

void sort_span(std::uint32_t* b, std::uint32_t* e, const TrainingSet& data,
               int j) {
  std::sort(b, e, [&](std::uint32_t p, std::uint32_t q) {
    double xp = data.xs[static_cast<std::size_t>(p) * data.dim + j];
    double xq = data.xs[static_cast<std::size_t>(q) * data.dim + j];
    if (xp != xq) return xp < xq;
    return p < q;
  });
}

struct BestSplit {
  double gain = 0.0;
  int dim = -1;
  double pos = 0.0;
  std::ptrdiff_t left_count = 0;
};

}  // namespace

Tree build_breiman_tree(const TrainingSet& data, const BreimanConfig& cfg,
                        Rng theta) {
  int n = data.size();
  int d = data.dim;
  int mtry = cfg.mtry == 0 ? d : cfg.mtry;
  if (mtry < 1 || mtry > d)
    throw std::invalid_argument("breiman builder: mtry out of range");
  if (cfg.nodesize < 1)
    throw std::invalid_argument("breiman builder: nodesize must be >= 1");

  Tree t;
  t.dim = d;
  t.kind = BuilderKind::Breiman;
  t.n_data = n;

  std::vector<std::uint32_t> work;
  switch (cfg.resample) {
    case Resample::None:
      work.resize(n);
      for (int i = 0; i < n; ++i) work[i] = static_cast<std::uint32_t>(i);
      break;
    case Resample::Subsample:
      if (cfg.subsample < 1 || cfg.subsample > n)
        throw std::invalid_argument("breiman builder: subsample out of range");
      work.resize(cfg.subsample);
      theta.sample_without_replacement(n, cfg.subsample, work.data());
      break;
    case Resample::Bootstrap:
      work.resize(n);
      for (int i = 0; i < n; ++i)
        work[i] = static_cast<std::uint32_t>(theta.next_below(n));
      break;
  }

  std::vector<std::uint32_t> dims(d);
  std::vector<double> cs, ys;  // per-node sorted coordinates / responses

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
    if (N <= cfg.nodesize) return make_leaf(b, e);

    double sum_all = 0.0, sum2_all = 0.0;
    for (std::uint32_t* p = b; p != e; ++p) {
      sum_all += data.ys[*p];
      sum2_all += data.ys[*p] * data.ys[*p];
    }
    double parent_score = sum_all * sum_all / static_cast<double>(N);
    // Improvements at or below this are floating-point noise, not signal.
    double gain_floor = 1e-12 * std::max(1.0, sum2_all);

    // Candidate dimensions are redrawn (up to d times) if every drawn one is
    // degenerate (zero coordinate range, hence no midpoint candidates).
    for (int attempt = 0; attempt <= d; ++attempt) {
      theta.sample_without_replacement(d, mtry, dims.data());
      std::sort(dims.begin(), dims.begin() + mtry);  // tie-break: smallest dim
      BestSplit best;
      bool any_candidate = false;
      for (int m = 0; m < mtry; ++m) {
        int j = static_cast<int>(dims[m]);
        sort_span(b, e, data, j);
        cs.resize(N);
        ys.resize(N);
        for (std::ptrdiff_t i = 0; i < N; ++i) {
          cs[i] = data.xs[static_cast<std::size_t>(b[i]) * d + j];
          ys[i] = data.ys[b[i]];
        }
        double sum_l = 0.0;
        for (std::ptrdiff_t i = 0; i + 1 < N; ++i) {
          sum_l += ys[i];
          if (cs[i] == cs[i + 1]) continue;
          any_candidate = true;
          double nl = static_cast<double>(i + 1);
          double nr = static_cast<double>(N - i - 1);
          double sum_r = sum_all - sum_l;
          double gain =
              sum_l * sum_l / nl + sum_r * sum_r / nr - parent_score;
          // Strict > keeps the earlier (smaller dim, smaller position)
          // candidate on exact ties.
          if (gain > best.gain && gain > gain_floor) {
            best.gain = gain;
            best.dim = j;
            best.pos = 0.5 * (cs[i] + cs[i + 1]);
            best.left_count = i + 1;
          }
        }
      }
      if (best.dim >= 0) {
        if (best.dim != static_cast<int>(dims[mtry - 1]))
          sort_span(b, e, data, best.dim);
        std::int32_t idx = static_cast<std::int32_t>(t.nodes.size());
        t.nodes.emplace_back();
        t.audit.push_back(best.gain);
        std::int32_t left = rec(b, b + best.left_count);
        std::int32_t right = rec(b + best.left_count, e);
        TreeNode& nd = t.nodes[idx];
        nd.dim = best.dim;
        nd.value = best.pos;
        nd.a = left;
        nd.b = right;
        return idx;
      }
      if (any_candidate) break;  // candidates existed, none improved: stop
    }
    return make_leaf(b, e);
  };

  rec(work.data(), work.data() + work.size());
  return t;
}

}  // namespace rflab
