#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ovgs/classifier.hpp"
#include "ovgs/embedding.hpp"
#include "ovgs/image.hpp"
#include "ovgs/scene.hpp"

namespace ovgs {

struct IdMaskImage {
  std::string view_id;
  LabelImage labels;
};

// Mean over labeled pixels of -log softmax(clf(feature))[label].
// `features` is H*W*16 matching gt. Throws when no pixel is labeled.
double identity_loss_2d(std::span<const float> features, const IdentityClassifier& clf,
                        const IdMaskImage& gt);

enum class NeighborDivergence { kSymmetricKl, kL2 };

struct KnnRegularizationOptions {
  std::size_t neighbors = 5;
  std::size_t sample = 0;  // 0 = every Gaussian
  std::uint64_t seed = 0;
  NeighborDivergence divergence = NeighborDivergence::kSymmetricKl;
};

// Mean divergence between each sampled Gaussian and its exact k nearest
// neighbours (by position), over classifier probabilities or raw encodings.
double knn_regularization_3d(const GroupedScene& scene, const IdentityClassifier& clf,
                             const KnnRegularizationOptions& options = {});

// Indices of the m nearest other Gaussians to `index`, ties by index.
std::vector<std::size_t> nearest_neighbors(const GroupedScene& scene, std::size_t index,
                                           std::size_t m);

double symmetric_kl(std::span<const double> p, std::span<const double> q);

std::vector<VisibilityStats> visibility_stats_from_masks(std::span<const IdMaskImage> masks,
                                                         std::int32_t num_objects,
                                                         std::size_t min_pixels = 1);

// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

}  // namespace ovgs
