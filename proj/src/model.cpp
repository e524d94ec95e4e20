#include "rflab/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rflab/parallel.hpp"
#include "rflab/stats.hpp"

namespace rflab {

double RegressionModel::mean_at(std::span<const double> x) const {
  switch (mean) {
    case MeanKind::Constant:
      return constant;
    case MeanKind::Linear: {
      double s = 0.0;
      for (int j = 0; j < dim; ++j)
        s += (j < static_cast<int>(coeffs.size()) ? coeffs[j] : 1.0) * x[j];
      return s;
    }
    case MeanKind::SineProduct: {
      double p = 1.0;
      for (int j = 0; j < dim; ++j)
        p *= std::sin(2.0 * std::numbers::pi * x[j]);
      return p;
    }
    case MeanKind::Step:
      return x[0] >= 0.5 ? step_hi : step_lo;
  }
  return 0.0;
}

double RegressionModel::sup_norm() const {
  switch (mean) {
    case MeanKind::Constant:
      return std::abs(constant);
    case MeanKind::Linear: {
      // |m| is maximized at a corner of the cube.
      double pos = 0.0, neg = 0.0;
      for (int j = 0; j < dim; ++j) {
        double a = j < static_cast<int>(coeffs.size()) ? coeffs[j] : 1.0;
        if (a > 0.0) pos += a;
        else neg -= a;
      }
      return std::max(pos, neg);
    }
    case MeanKind::SineProduct:
      return 1.0;
    case MeanKind::Step:
      return std::max(std::abs(step_lo), std::abs(step_hi));
  }
  return 0.0;
}

std::string RegressionModel::tag() const {
  const char* mk = "?";
  switch (mean) {
    case MeanKind::Constant: mk = "constant"; break;
    case MeanKind::Linear: mk = "linear"; break;
    case MeanKind::SineProduct: mk = "sines"; break;
    case MeanKind::Step: mk = "step"; break;
  }
  return std::string(mk) + "_d" + std::to_string(dim) +
         (xdist == XDist::Uniform ? "_uniform" : "_mixture");
}

RegressionModel parse_model(const std::string& mean_kind, int dim, double sigma,
                            const std::string& xdist) {
  if (dim < 1) throw std::invalid_argument("model: dim must be >= 1");
  if (sigma < 0.0) throw std::invalid_argument("model: sigma must be >= 0");
  RegressionModel m;
  m.dim = dim;
  m.sigma = sigma;
  if (mean_kind == "constant") m.mean = MeanKind::Constant;
  else if (mean_kind == "linear") m.mean = MeanKind::Linear;
  else if (mean_kind == "sines") m.mean = MeanKind::SineProduct;
  else if (mean_kind == "step") m.mean = MeanKind::Step;
  else throw std::invalid_argument("model: unknown mean '" + mean_kind + "'");
  if (xdist == "uniform") m.xdist = XDist::Uniform;
  else if (xdist == "mixture") m.xdist = XDist::NestedMixture;
  else throw std::invalid_argument("model: unknown xdist '" + xdist + "'");
  return m;
}

void sample_x(const RegressionModel& model, Rng& rng, double* out) {
  bool inner = model.xdist == XDist::NestedMixture && rng.next_double() < 0.5;
  for (int j = 0; j < model.dim; ++j) out[j] = rng.next_double();
  if (inner) out[0] *= 0.5;
}

TrainingSet sample_dataset(const RegressionModel& model, int n,
                           std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  TrainingSet data;
  data.dim = model.dim;
  data.seed = seed;
  data.model_tag = model.tag();
  data.xs.resize(static_cast<std::size_t>(n) * model.dim);
  data.ys.resize(n);
  Rng master(seed);
  parallel_for(n, [&](std::size_t i) {
    Rng r = master.derive("point", i);
    double* x = data.xs.data() + i * model.dim;
    sample_x(model, r, x);
    double eps = r.next_gaussian();
    data.ys[i] = model.mean_at({x, static_cast<std::size_t>(model.dim)}) +
                 model.sigma * eps;
  });
  return data;
}

NoiseMaxCheck max_noise_square_check(int n, double sigma, int replicates,
                                     std::uint64_t seed) {
  if (n < 1 || replicates < 2)
    throw std::invalid_argument("max_noise_square_check: bad n/replicates");
  std::vector<double> maxima(replicates);
  Rng master(seed);
  parallel_for(replicates, [&](std::size_t r) {
    Rng rng = master.derive("replicate", r);
    double mx = 0.0;
    for (int i = 0; i < n; ++i) {
      double e = sigma * rng.next_gaussian();
      mx = std::max(mx, e * e);
    }
    maxima[r] = mx;
  });
  Moments m = moments(maxima);
  NoiseMaxCheck out;
  out.estimate = m.mean;
  out.se = m.se_mean;
  out.bound = sigma * sigma * (1.0 + 4.0 * std::log(static_cast<double>(n)));
  out.ok = out.estimate <= out.bound + 3.0 * out.se;
  return out;
}

}  // namespace rflab
