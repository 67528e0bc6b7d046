#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include <json.hpp>

#include "ovgs/classifier.hpp"
#include "ovgs/error.hpp"
#include "ovgs/scene.hpp"
#include "ovgs/scene_io.hpp"
#include "test_support.hpp"

namespace ovgs {
namespace {

using testing::TempDir;

GroupedScene one_gaussian_scene() {
  GroupedScene s;
  s.num_objects = 1;
  SplatGaussian g;
  g.object_id = 0;
  g.scale = {0.1f, 0.1f, 0.1f};
  g.opacity = 0.5f;
  s.gaussians.push_back(g);
  s.cameras.push_back(testing::test_camera());
  s.rebuild_object_table();
  return s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TEST(SceneIo, MinimalContainerLoads) {
  TempDir dir("minimal");
  save_scene(one_gaussian_scene(), dir / "s.gsg");
  const auto s = load_scene(dir / "s.gsg");
  EXPECT_EQ(s.num_objects, 1);
  EXPECT_EQ(s.gaussians.size(), 1u);
  EXPECT_EQ(s.cameras.size(), 1u);
  EXPECT_EQ(s.object_table.at(0).gaussian_count, 1u);
}

TEST(SceneIo, OpacityOutOfRangeIsRejectedWithIndex) {
  TempDir dir("opacity");
  auto scene = one_gaussian_scene();
  save_scene(scene, dir / "s.gsg");
  // Patch opacity (first value after positions, rotations, scales) to 1.5.
  auto bin = slurp(dir / "s.gsg/arrays.bin");
  const float bad = 1.5f;
  std::memcpy(bin.data() + 4 * (3 + 4 + 3), &bad, 4);
  std::ofstream(dir / "s.gsg/arrays.bin", std::ios::binary) << bin;
  try {
    load_scene(dir / "s.gsg");
    FAIL() << "expected rejection";
  } catch (const InputError& e) {
    EXPECT_STREQ(e.what(), "opacity out of range at index 0");
  }
}

TEST(SceneIo, NanIsRejectedWithFieldAndIndex) {
  TempDir dir("nan");
  GroupedScene scene = one_gaussian_scene();
  scene.gaussians.push_back(scene.gaussians[0]);
  scene.rebuild_object_table();
  save_scene(scene, dir / "s.gsg");
  auto bin = slurp(dir / "s.gsg/arrays.bin");
  const float nan = std::nanf("");
  // identity block starts after 2*(3+4+3+1+3) floats; second Gaussian's 4th channel.
  std::memcpy(bin.data() + 4 * (2 * 14 + 16 + 3), &nan, 4);
  std::ofstream(dir / "s.gsg/arrays.bin", std::ios::binary) << bin;
  try {
    load_scene(dir / "s.gsg");
    FAIL() << "expected rejection";
  } catch (const InputError& e) {
    EXPECT_STREQ(e.what(), "identity is not finite at index 1");
  }
}

TEST(SceneIo, ArrayLengthMismatchIsRejected) {
  TempDir dir("short");
  save_scene(one_gaussian_scene(), dir / "s.gsg");
  auto bin = slurp(dir / "s.gsg/arrays.bin");
  bin.resize(bin.size() - 4);
  std::ofstream(dir / "s.gsg/arrays.bin", std::ios::binary) << bin;
  EXPECT_THROW(load_scene(dir / "s.gsg"), InputError);
}

TEST(SceneIo, MalformedManifestIsRejected) {
  TempDir dir("manifest");
  save_scene(one_gaussian_scene(), dir / "s.gsg");
  std::ofstream(dir / "s.gsg/manifest.json") << "{\"format\": \"gsg\"";
  EXPECT_THROW(load_scene(dir / "s.gsg"), InputError);
  std::ofstream(dir / "s.gsg/manifest.json") << R"({"format": "gsg", "num_gaussians": 1})";
  EXPECT_THROW(load_scene(dir / "s.gsg"), InputError);
}

TEST(SceneIo, RotationIsRenormalizedOnIngest) {
  TempDir dir("rot");
  auto scene = one_gaussian_scene();
  save_scene(scene, dir / "s.gsg");
  auto bin = slurp(dir / "s.gsg/arrays.bin");
  const float q[4] = {2.0f, 0.0f, 0.0f, 0.0f};
  std::memcpy(bin.data() + 4 * 3, q, sizeof q);
  std::ofstream(dir / "s.gsg/arrays.bin", std::ios::binary) << bin;
  const auto s = load_scene(dir / "s.gsg");
  EXPECT_FLOAT_EQ(s.gaussians[0].rotation[0], 1.0f);
}

TEST(SceneIo, EmptySceneRoundTrips) {
  TempDir dir("empty");
  GroupedScene scene;
  scene.num_objects = 0;
  save_scene(scene, dir / "e.gsg");
  EXPECT_EQ(std::filesystem::file_size(dir / "e.gsg/arrays.bin"), 0u);
  EXPECT_EQ(load_scene(dir / "e.gsg"), scene);
}

TEST(SceneIo, ThreeGaussianRoundTripIsFieldEqual) {
  TempDir dir("three");
  std::mt19937_64 rng(3);
  const auto scene = testing::random_scene(rng, 3, 2);
  save_scene(scene, dir / "t.gsg");
  const auto back = load_scene(dir / "t.gsg");
  ASSERT_EQ(back.gaussians.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.gaussians[i], scene.gaussians[i]) << i;
  EXPECT_EQ(back.cameras, scene.cameras);
}

TEST(SceneIo, ThousandGaussianRoundTripIsBitIdentical) {
  TempDir dir("k1");
  std::mt19937_64 rng(1000);
  const auto scene = testing::random_scene(rng, 1000, 7);
  save_scene(scene, dir / "a.gsg");
  save_scene(load_scene(dir / "a.gsg"), dir / "b.gsg");
  EXPECT_EQ(slurp(dir / "a.gsg/arrays.bin"), slurp(dir / "b.gsg/arrays.bin"));
  EXPECT_EQ(slurp(dir / "a.gsg/manifest.json"), slurp(dir / "b.gsg/manifest.json"));
}

TEST(SceneIo, FileSizeIsManifestPlusFourBytesPerValue) {
  TempDir dir("10k");
  std::mt19937_64 rng(10);
  const auto scene = testing::random_scene(rng, 10000, 5);
  save_scene(scene, dir / "s.gsg");
  const auto manifest = std::filesystem::file_size(dir / "s.gsg/manifest.json");
  const auto arrays = std::filesystem::file_size(dir / "s.gsg/arrays.bin");
  // 3 + 4 + 3 + 1 + 3 + 16 float components plus one int32 id per Gaussian.
  EXPECT_EQ(arrays, 4u * 31u * 10000u);
  std::size_t total = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir / "s.gsg")) total += e.file_size();
  EXPECT_EQ(total, manifest + 4u * 31u * 10000u);
}

TEST(SceneIo, RoundTripPropertyOverRandomScenes) {
  TempDir dir("prop");
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, 64)(rng);
    const auto k = std::uniform_int_distribution<std::int32_t>(0, 6)(rng);
    const auto scene = testing::random_scene(rng, n, k);
    const auto path = dir / ("s" + std::to_string(trial) + ".gsg");
    save_scene(scene, path);
    EXPECT_EQ(load_scene(path), scene) << "trial " << trial;
  }
}

TEST(SceneIo, ZipIsRejected) {
  EXPECT_THROW(load_scene("scene.zip"), InputError);
}

GroupedScene ids_scene(std::initializer_list<std::int32_t> ids, std::int32_t k) {
  GroupedScene s;
  s.num_objects = k;
  float x = 0.0f;
  for (std::int32_t id : ids) {
    SplatGaussian g;
    g.position = {x, 0.0f, 0.0f};
    x += 1.0f;
    g.object_id = id;
    s.gaussians.push_back(g);
  }
  s.cameras.push_back(testing::test_camera());
  s.rebuild_object_table();
  return s;
}

TEST(Filter, AllIdsIsIdentity) {
  const auto s = ids_scene({0, 1, 0, 2}, 3);
  EXPECT_EQ(filter_by_object_ids(s, {0, 1, 2}).gaussians, s.gaussians);
}

TEST(Filter, EmptySetKeepsCameras) {
  const auto s = ids_scene({0, 1, 0, 2}, 3);
  const auto f = filter_by_object_ids(s, {});
  EXPECT_TRUE(f.gaussians.empty());
  EXPECT_EQ(f.cameras, s.cameras);
}

TEST(Filter, KeepsOriginalOrder) {
  const auto s = ids_scene({0, 1, 0, 2}, 3);
  const auto f = filter_by_object_ids(s, {0, 2});
  ASSERT_EQ(f.gaussians.size(), 3u);
  EXPECT_EQ(f.gaussians[0].position[0], 0.0f);
  EXPECT_EQ(f.gaussians[1].position[0], 2.0f);
  EXPECT_EQ(f.gaussians[2].position[0], 3.0f);
  EXPECT_EQ(f.object_table.at(0).gaussian_count, 2u);
  EXPECT_EQ(f.object_table.at(1).gaussian_count, 0u);
}

TEST(Filter, OutOfRangeIdsAreListed) {
  const auto s = ids_scene({0, 1}, 2);
  try {
    filter_by_object_ids(s, {1, 5, 9});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("5 9"), std::string::npos) << e.what();
  }
}

TEST(Filter, UnassignedOnlyOnRequest) {
  const auto s = ids_scene({0, kUnassigned, 1}, 2);
  EXPECT_EQ(filter_by_object_ids(s, {0, 1}).gaussians.size(), 2u);
  EXPECT_EQ(filter_by_object_ids(s, {0}, true).gaussians.size(), 2u);
}

TEST(Filter, DisjointUnionPreservesOrder) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto scene = testing::random_scene(rng, 80, 6);
    ObjectIdSet a, b;
    for (std::int32_t id = 0; id < 6; ++id) {
      const int pick = std::uniform_int_distribution<int>(0, 2)(rng);
      if (pick == 1) a.insert(id);
      if (pick == 2) b.insert(id);
    }
    ObjectIdSet both = a;
    both.insert(b.begin(), b.end());
    const auto fa = filter_by_object_ids(scene, a);
    const auto fb = filter_by_object_ids(scene, b);
    // Merge the two filtered lists back by original position.
    std::vector<SplatGaussian> merged;
    std::size_t ia = 0, ib = 0;
    for (const auto& g : scene.gaussians) {
      if (ia < fa.gaussians.size() && fa.gaussians[ia] == g && a.contains(g.object_id)) {
        merged.push_back(fa.gaussians[ia++]);
      } else if (ib < fb.gaussians.size() && fb.gaussians[ib] == g && b.contains(g.object_id)) {
        merged.push_back(fb.gaussians[ib++]);
      }
    }
    EXPECT_EQ(ia, fa.gaussians.size());
    EXPECT_EQ(ib, fb.gaussians.size());
    EXPECT_EQ(filter_by_object_ids(scene, both).gaussians, merged);
  }
}

TEST(ResolveIds, OneHotEncodingPicksItsClass) {
  auto s = ids_scene({kUnassigned}, 16);
  s.gaussians[0].identity[5] = 1.0f;
  const auto r = resolve_gaussian_ids(s, IdentityClassifier::one_hot(16));
  EXPECT_EQ(r.gaussians[0].object_id, 5);
  EXPECT_EQ(r.object_table.at(5).gaussian_count, 1u);
}

TEST(ResolveIds, ZeroEncodingTiesToLowestClass) {
  auto s = ids_scene({kUnassigned}, 16);
  const auto r = resolve_gaussian_ids(s, IdentityClassifier::one_hot(16));
  EXPECT_EQ(r.gaussians[0].object_id, 0);
}

TEST(ResolveIds, BackgroundClassMeansUnassigned) {
  auto s = ids_scene({0}, 3);
  const auto r = resolve_gaussian_ids(s, IdentityClassifier::one_hot(3, 1.0));
  EXPECT_EQ(r.gaussians[0].object_id, kUnassigned);
}

TEST(ResolveIds, DimensionMismatchThrows) {
  auto s = ids_scene({0}, 3);
  EXPECT_THROW(resolve_gaussian_ids(s, IdentityClassifier::one_hot(4)), InputError);
}

TEST(ResolveIds, MatchesMatmulArgmaxOracle) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::int32_t k = 9;
  std::vector<double> w((k + 1) * 16), b(k + 1);
  for (auto& v : w) v = n(rng);
  for (auto& v : b) v = n(rng);
  const IdentityClassifier clf(k, w, b);
  auto scene = testing::random_scene(rng, 100, k);
  const auto resolved = resolve_gaussian_ids(scene, clf);
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    const auto& e = scene.gaussians[i].identity;
    std::size_t best = 0;
    double best_v = -1e300;
    for (std::size_t c = 0; c <= static_cast<std::size_t>(k); ++c) {
      double z = b[c];
      for (std::size_t d = 0; d < 16; ++d) z += w[c * 16 + d] * e[d];
      if (z > best_v) {
        best_v = z;
        best = c;
      }
    }
    const std::int32_t expected = best == static_cast<std::size_t>(k) ? kUnassigned : static_cast<std::int32_t>(best);
    EXPECT_EQ(resolved.gaussians[i].object_id, expected) << i;
  }
}

TEST(ResolveIds, ArgmaxInvariantToPositiveLogitScaling) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::int32_t k = 5;
  std::vector<double> w((k + 1) * 16), b(k + 1);
  for (auto& v : w) v = n(rng);
  for (auto& v : b) v = n(rng);
  for (double c : {0.01, 0.5, 3.0, 250.0}) {
    std::vector<double> ws = w, bs = b;
    for (auto& v : ws) v *= c;
    for (auto& v : bs) v *= c;
    const IdentityClassifier a(k, w, b), scaled(k, ws, bs);
    for (int t = 0; t < 200; ++t) {
      IdentityEncoding e;
      for (auto& v : e) v = static_cast<float>(n(rng));
      EXPECT_EQ(a.predict_class(e), scaled.predict_class(e));
    }
  }
}

TEST(Camera, ValidationRejectsBadIntrinsics) {
  auto cam = testing::test_camera();
  cam.fx = 0.0;
  EXPECT_THROW(cam.validate(), InputError);
  cam = testing::test_camera();
  cam.rotation[0] = 2.0;
  EXPECT_THROW(cam.validate(), InputError);
  cam = testing::test_camera();
  cam.width = 0;
  EXPECT_THROW(cam.validate(), InputError);
}

}  // namespace
}  // namespace ovgs
