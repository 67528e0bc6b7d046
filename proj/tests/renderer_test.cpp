#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "ovgs/classifier.hpp"
#include "ovgs/error.hpp"
#include "ovgs/renderer.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace ovgs {
namespace {

SplatGaussian isotropic(std::array<float, 3> pos, float scale, float opacity, std::array<float, 3> color) {
  SplatGaussian g;
  g.position = pos;
  g.rotation = {1, 0, 0, 0};
  g.scale = {scale, scale, scale};
  g.opacity = opacity;
  g.color = color;
  return g;
}

GroupedScene single(const SplatGaussian& g, std::int32_t k = 1) {
  GroupedScene s;
  s.num_objects = k;
  s.gaussians.push_back(g);
  s.cameras.push_back(testing::test_camera());
  s.rebuild_object_table();
  return s;
}

TEST(Project, IsotropicOnAxisCovariance) {
  // Camera at z=-6, f=40: a Gaussian at the origin sits at depth 6.
  const auto cam = testing::test_camera();
  const float scale = 0.2f;
  const auto s = project_gaussian(isotropic({0, 0, 0}, scale, 1.0f, {1, 1, 1}), cam);
  ASSERT_TRUE(s);
  const double expected = std::pow(40.0 * scale / 6.0, 2) + 0.3;
  EXPECT_NEAR(s->cov[0], expected, 1e-9);
  EXPECT_NEAR(s->cov[2], expected, 1e-9);
  EXPECT_NEAR(s->cov[1], 0.0, 1e-12);
  EXPECT_NEAR(s->mean[0], cam.cx, 1e-12);
  EXPECT_NEAR(s->mean[1], cam.cy, 1e-12);
  EXPECT_NEAR(s->depth, 6.0, 1e-12);
}

TEST(Project, BehindCameraIsCulled) {
  const auto cam = testing::test_camera();
  EXPECT_FALSE(project_gaussian(isotropic({0, 0, -7}, 0.2f, 1.0f, {1, 1, 1}), cam));
  EXPECT_FALSE(project_gaussian(isotropic({0, 0, -6}, 0.2f, 1.0f, {1, 1, 1}), cam));
}

TEST(Project, FarOutsideImageIsCulled) {
  const auto cam = testing::test_camera();
  EXPECT_FALSE(project_gaussian(isotropic({40, 0, 0}, 0.1f, 1.0f, {1, 1, 1}), cam));
}

TEST(Project, MatchesReferenceCovarianceForRotatedSplats) {
  std::mt19937_64 rng(2);
  const auto cam = look_at("c", {1.0, 2.0, -5.0}, {0, 0, 0}, {0, 1, 0}, 48, 40, 50.0);
  for (int i = 0; i < 200; ++i) {
    const auto g = testing::random_gaussian(rng, 0);
    const auto s = project_gaussian(g, cam);
    if (!s) continue;
    // Reference covariance: T Sigma T^T with T = J W.
    oracle::M3 w{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w[r][c] = cam.rotation[r * 3 + c];
    const auto t = cam.to_camera({g.position[0], g.position[1], g.position[2]});
    oracle::M3 jac{};
    jac[0][0] = cam.fx / t[2];
    jac[0][2] = -cam.fx * t[0] / (t[2] * t[2]);
    jac[1][1] = cam.fy / t[2];
    jac[1][2] = -cam.fy * t[1] / (t[2] * t[2]);
    const auto rot = oracle::quat_to_matrix(g.rotation);
    oracle::M3 s2{};
    for (int k = 0; k < 3; ++k) s2[k][k] = static_cast<double>(g.scale[k]) * g.scale[k];
    const auto tm = oracle::mul(jac, w);
    const auto cov = oracle::mul(oracle::mul(tm, oracle::mul(oracle::mul(rot, s2), oracle::transpose(rot))),
                                 oracle::transpose(tm));
    EXPECT_NEAR(s->cov[0], cov[0][0] + 0.3, 1e-9 * (1 + cov[0][0]));
    EXPECT_NEAR(s->cov[1], cov[0][1], 1e-9 * (1 + std::abs(cov[0][1])));
    EXPECT_NEAR(s->cov[2], cov[1][1] + 0.3, 1e-9 * (1 + cov[1][1]));
  }
}

TEST(Render, SingleSplatCenterPixel) {
  // 33x33 puts the principal point on pixel (16, 16).
  auto scene = single(isotropic({0, 0, 0}, 0.2f, 0.8f, {1, 0, 0}));
  scene.cameras[0] = testing::test_camera(33, 33);
  const auto out = render(scene, scene.cameras[0], IdentityClassifier::one_hot(1));
  const std::size_t c = 16 * 33 + 16;
  EXPECT_NEAR(out.rgb[c * 3 + 0], 0.8, 1e-6);
  EXPECT_NEAR(out.rgb[c * 3 + 1], 0.0, 1e-9);
  EXPECT_NEAR(out.rgb[c * 3 + 2], 0.0, 1e-9);
  EXPECT_NEAR(out.alpha[c], 0.8, 1e-6);
}

TEST(Render, TwoSplatsFrontToBack) {
  GroupedScene s;
  s.num_objects = 1;
  s.gaussians.push_back(isotropic({0, 0, 1}, 0.2f, 0.5f, {0, 0, 1}));   // behind
  s.gaussians.push_back(isotropic({0, 0, -1}, 0.2f, 0.5f, {1, 0, 0}));  // in front
  s.cameras.push_back(testing::test_camera(33, 33));
  const auto out = render(s, s.cameras[0], IdentityClassifier::one_hot(1));
  const std::size_t c = 16 * 33 + 16;
  EXPECT_NEAR(out.rgb[c * 3 + 0], 0.5, 1e-6);
  EXPECT_NEAR(out.rgb[c * 3 + 1], 0.0, 1e-9);
  EXPECT_NEAR(out.rgb[c * 3 + 2], 0.25, 1e-6);
  EXPECT_NEAR(out.alpha[c], 0.75, 1e-6);
}

TEST(Render, EmptySceneIsBlack) {
  GroupedScene s;
  s.num_objects = 2;
  s.cameras.push_back(testing::test_camera());
  const auto out = render(s, s.cameras[0], IdentityClassifier::one_hot(2));
  for (float v : out.rgb) EXPECT_EQ(v, 0.0f);
  for (float v : out.alpha) EXPECT_EQ(v, 0.0f);
  for (auto id : out.id_map) EXPECT_EQ(id, kUnassigned);
}

TEST(Render, ClassifierMismatchRejected) {
  auto s = single(isotropic({0, 0, 0}, 0.2f, 0.8f, {1, 0, 0}), 3);
  try {
    render(s, s.cameras[0], IdentityClassifier::one_hot(2));
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("classifier dimension mismatch"), std::string::npos);
  }
}

void expect_matches_reference(const GroupedScene& scene, const RenderedView& out, double tol) {
  const auto ref = oracle::reference_render(scene, scene.cameras[0]);
  for (std::size_t i = 0; i < ref.rgb.size(); ++i) ASSERT_NEAR(out.rgb[i], ref.rgb[i], tol) << "rgb " << i;
  for (std::size_t i = 0; i < ref.alpha.size(); ++i) ASSERT_NEAR(out.alpha[i], ref.alpha[i], tol) << "alpha " << i;
  for (std::size_t i = 0; i < ref.feat.size(); ++i)
    ASSERT_NEAR(out.identity_features[i], ref.feat[i], tol * std::max(1.0, std::abs(ref.feat[i]))) << "feat " << i;
}

TEST(Render, MatchesNaiveReference) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto scene = testing::random_scene(rng, 50, 4);
    const auto out = render(scene, scene.cameras[0], IdentityClassifier::one_hot(4));
    expect_matches_reference(scene, out, 1e-5);
  }
}

TEST(Render, DenseOverlapHitsTermination) {
  // Many opaque splats stacked on the axis drive transmittance below 1e-4.
  GroupedScene s;
  s.num_objects = 1;
  for (int i = 0; i < 12; ++i) s.gaussians.push_back(isotropic({0, 0, 0.1f * i}, 0.4f, 0.95f, {0.1f * i, 0.5f, 1.0f}));
  s.cameras.push_back(testing::test_camera(33, 33));
  const auto out = render(s, s.cameras[0], IdentityClassifier::one_hot(1));
  expect_matches_reference(s, out, 1e-5);
}

TEST(Render, TileSizeDoesNotChangeOutput) {
  std::mt19937_64 rng(18);
  const auto scene = testing::random_scene(rng, 80, 3);
  const auto clf = IdentityClassifier::one_hot(3);
  const auto a = render(scene, scene.cameras[0], clf, {.tile_size = 8});
  for (int tile : {1, 5, 16, 32, 64}) {
    const auto b = render(scene, scene.cameras[0], clf, {.tile_size = tile});
    EXPECT_EQ(a.rgb, b.rgb) << tile;
    EXPECT_EQ(a.alpha, b.alpha) << tile;
    EXPECT_EQ(a.identity_features, b.identity_features) << tile;
    EXPECT_EQ(a.id_map, b.id_map) << tile;
  }
}

TEST(Render, DeterministicAcrossThreadCounts) {
  std::mt19937_64 rng(19);
  const auto scene = testing::random_scene(rng, 60, 3);
  const auto clf = IdentityClassifier::one_hot(3);
  const auto a = render(scene, scene.cameras[0], clf, {.tile_size = 8, .threads = 1});
  const auto b = render(scene, scene.cameras[0], clf, {.tile_size = 8, .threads = 4});
  EXPECT_EQ(a.rgb, b.rgb);
  EXPECT_EQ(a.identity_features, b.identity_features);
  EXPECT_EQ(render(scene, scene.cameras[0], clf).rgb, a.rgb);
}

TEST(Render, AlphaWithinUnitInterval) {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 5; ++trial) {
    const auto scene = testing::random_scene(rng, 100, 2);
    const auto out = render(scene, scene.cameras[0], IdentityClassifier::one_hot(2));
    for (float a : out.alpha) {
      EXPECT_GE(a, 0.0f);
      EXPECT_LE(a, 1.0f);
    }
  }
}

TEST(Render, ConstantEncodingBlendsLinearly) {
  std::mt19937_64 rng(21);
  auto scene = testing::random_scene(rng, 60, 2);
  IdentityEncoding e{};
  for (std::size_t c = 0; c < kIdentityDim; ++c) e[c] = 0.25f * static_cast<float>(c) - 1.0f;
  for (auto& g : scene.gaussians) g.identity = e;
  const auto out = render(scene, scene.cameras[0], IdentityClassifier::one_hot(2));
  for (std::size_t p = 0; p < out.alpha.size(); ++p)
    for (std::size_t c = 0; c < kIdentityDim; ++c)
      EXPECT_NEAR(out.identity_features[p * kIdentityDim + c], e[c] * out.alpha[p], 1e-5);
}

TEST(Render, WriteOutputsArePlanarAndSized) {
  auto scene = single(isotropic({0, 0, 0}, 0.3f, 0.9f, {0, 1, 0}));
  const auto out = render(scene, scene.cameras[0], IdentityClassifier::one_hot(1));
  EXPECT_EQ(out.rgb.size(), 32u * 32u * 3u);
  EXPECT_EQ(out.identity_features.size(), 32u * 32u * 16u);
  EXPECT_EQ(out.id_map.size(), 32u * 32u);
  EXPECT_EQ(out.rgb_image().width, 32);
  EXPECT_EQ(out.id_image().labels, out.id_map);
}

TEST(Classify, FloorAndArgmax) {
  const auto clf = IdentityClassifier::one_hot(3, 0.5);
  std::vector<float> feat(3 * kIdentityDim, 0.0f);
  feat[0 * kIdentityDim + 1] = 2.0f;  // pixel 0 -> object 1
  feat[1 * kIdentityDim + 2] = 2.0f;  // pixel 1 -> object 2 but transparent
  // pixel 2: all zero, background bias wins
  const std::vector<float> alpha{0.9f, 0.3f, 0.9f};
  const auto ids = classify_pixels(feat, alpha, clf);
  EXPECT_EQ(ids, (std::vector<std::int32_t>{1, kUnassigned, kUnassigned}));
  // Exactly at the floor is not above it.
  const std::vector<float> edge{0.5f, 0.5f, 0.5f};
  EXPECT_EQ(classify_pixels(feat, edge, clf), (std::vector<std::int32_t>{kUnassigned, kUnassigned, kUnassigned}));
}

TEST(Classify, TiesGoToLowestIndex) {
  const auto clf = IdentityClassifier::one_hot(3);
  std::vector<float> feat(kIdentityDim, 0.0f);
  feat[1] = 1.0f;
  feat[2] = 1.0f;
  const std::vector<float> alpha{1.0f};
  EXPECT_EQ(classify_pixels(feat, alpha, clf), (std::vector<std::int32_t>{1}));
}

TEST(Classify, RenderedIdsMatchPerPixelClassification) {
  std::mt19937_64 rng(22);
  const auto scene = testing::random_scene(rng, 70, 4);
  const auto clf = IdentityClassifier::one_hot(4, 1.0);
  const auto out = render(scene, scene.cameras[0], clf);
  for (std::size_t p = 0; p < out.alpha.size(); ++p) {
    const std::span<const float> f(out.identity_features.data() + p * kIdentityDim, kIdentityDim);
    const auto expected = out.alpha[p] > 0.5f ? clf.classify(f) : kUnassigned;
    EXPECT_EQ(out.id_map[p], expected);
  }
}

}  // namespace
}  // namespace ovgs
