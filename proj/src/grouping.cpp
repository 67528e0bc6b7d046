#include "ovgs/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "ovgs/error.hpp"

namespace ovgs {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double identity_loss_2d(std::span<const float> features, const IdentityClassifier& clf,
                        const IdMaskImage& gt) {
  const std::size_t pixels = gt.labels.labels.size();
  if (features.size() != pixels * kIdentityDim)
    throw InputError("identity_loss_2d: feature map does not match mask " + gt.view_id);

  std::vector<double> terms;
  std::vector<double> logp(clf.num_classes());
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::int32_t label = gt.labels.labels[p];
    if (label == kUnassigned) continue;
    if (label < 0 || label >= clf.num_objects())
      throw InputError("identity_loss_2d: label " + std::to_string(label) + " out of range");
    clf.logits(features.subspan(p * kIdentityDim, kIdentityDim), logp);
    log_softmax_inplace(logp);
    terms.push_back(-logp[static_cast<std::size_t>(label)]);
  }
  if (terms.empty()) throw InputError("identity_loss_2d: mask " + gt.view_id + " has no labeled pixels");
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

double symmetric_kl(std::span<const double> p, std::span<const double> q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    // (p - q)(log p - log q) is KL(p||q) + KL(q||p) term by term.
    if (p[i] == q[i]) continue;
    acc += (p[i] - q[i]) * (std::log(p[i]) - std::log(q[i]));
  }
  return acc;
}

std::vector<std::size_t> nearest_neighbors(const GroupedScene& scene, std::size_t index,
                                           std::size_t m) {
  const auto& gs = scene.gaussians;
  const auto& c = gs[index].position;
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(gs.size() - 1);
  for (std::size_t j = 0; j < gs.size(); ++j) {
    if (j == index) continue;
    double s = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double diff = static_cast<double>(gs[j].position[a]) - c[a];
      s += diff * diff;
    }
    d.emplace_back(s, j);
  }
  m = std::min(m, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(m), d.end());
  std::vector<std::size_t> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = d[i].second;
  return out;
}

double knn_regularization_3d(const GroupedScene& scene, const IdentityClassifier& clf,
                             const KnnRegularizationOptions& options) {
  const std::size_t n = scene.gaussians.size();
  if (options.neighbors < 1) throw InputError("knn regularization needs at least one neighbor");
  if (options.neighbors >= n)
    throw InputError("knn regularization: neighbor count " + std::to_string(options.neighbors) +
                     " must be smaller than the Gaussian count " + std::to_string(n));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t sample = options.sample == 0 ? n : std::min(options.sample, n);
  if (sample < n) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(sample);
    std::sort(order.begin(), order.end());
  }

  auto features = [&](std::size_t i) {
    if (options.divergence == NeighborDivergence::kL2) {
      const auto& e = scene.gaussians[i].identity;
      return std::vector<double>(e.begin(), e.end());
    }
    return clf.probabilities(scene.gaussians[i].identity);
  };

  std::vector<double> terms;
  terms.reserve(sample * options.neighbors);
  for (std::size_t i : order) {
    const auto p = features(i);
    for (std::size_t j : nearest_neighbors(scene, i, options.neighbors)) {
      const auto q = features(j);
      if (options.divergence == NeighborDivergence::kL2) {
        double s = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) s += (p[c] - q[c]) * (p[c] - q[c]);
        terms.push_back(std::sqrt(s));
      } else {
        terms.push_back(symmetric_kl(p, q));
      }
    }
  }
  return pairwise_sum(terms) / static_cast<double>(terms.size());
}

std::vector<VisibilityStats> visibility_stats_from_masks(std::span<const IdMaskImage> masks,
                                                         std::int32_t num_objects,
                                                         std::size_t min_pixels) {
  std::vector<VisibilityStats> out(static_cast<std::size_t>(std::max(num_objects, 0)));
  for (std::int32_t id = 0; id < num_objects; ++id) {
    out[id].object_id = id;
    out[id].total_views = masks.size();
  }
  std::vector<std::size_t> counts(out.size());
  for (const auto& mask : masks) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::int32_t l : mask.labels.labels)
      if (l >= 0 && l < num_objects) ++counts[l];
    for (std::size_t id = 0; id < out.size(); ++id)
      if (counts[id] >= std::max<std::size_t>(min_pixels, 1)) ++out[id].views_visible;
  }
  return out;
}

}  // namespace ovgs
