#include "ovgs/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "ovgs/embedder.hpp"
#include "ovgs/grouping.hpp"
#include "ovgs/renderer.hpp"
#include "ovgs/scene_io.hpp"

namespace ovgs::synthetic {

namespace fs = std::filesystem;

BinaryMask ball_footprint(const Ball& ball, const Camera& cam) {
  const auto c = cam.to_camera(ball.center);
  BinaryMask m(cam.width, cam.height);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const double dx = (x - cam.cx) / cam.fx, dy = (y - cam.cy) / cam.fy;
      const double n = std::sqrt(dx * dx + dy * dy + 1.0);
      const double along = (c[0] * dx + c[1] * dy + c[2]) / n;
      const double c2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
      if (along > 0.0 && c2 - along * along <= ball.radius * ball.radius) m.set(x, y);
    }
  }
  return m;
}

Benchmark make_color_benchmark(const BenchmarkOptions& o) {
  Benchmark b;
  b.balls = {{"red", {0.9f, 0.1f, 0.1f}, {-1.4, 0.0, 0.0}, 0.5},
             {"green", {0.1f, 0.85f, 0.15f}, {0.0, 0.0, 0.0}, 0.5},
             {"blue", {0.1f, 0.2f, 0.9f}, {1.4, 0.0, 0.0}, 0.5}};

  GroupedScene& scene = b.scene;
  scene.num_objects = static_cast<std::int32_t>(b.balls.size());
  const std::array<double, 3> origin{0.0, 0.0, 0.0}, up{0.0, 1.0, 0.0};
  scene.cameras = {
      look_at("front", {0.0, 0.0, -5.0}, origin, up, o.width, o.height, o.focal),
      look_at("back", {0.0, 0.0, 5.0}, origin, up, o.width, o.height, o.focal),
      look_at("above", {0.0, 2.5, -4.33}, origin, up, o.width, o.height, o.focal),
      look_at("below", {0.0, -2.5, 4.33}, origin, up, o.width, o.height, o.focal),
  };

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> jitter(-0.2 * o.spacing, 0.2 * o.spacing);
  const double sigma = o.sigma_factor * o.spacing;
  for (std::size_t id = 0; id < b.balls.size(); ++id) {
    const Ball& ball = b.balls[id];
    const double inner = ball.radius - sigma;
    const int steps = static_cast<int>(std::ceil(ball.radius / o.spacing));
    for (int i = -steps; i <= steps; ++i) {
      for (int j = -steps; j <= steps; ++j) {
        for (int k = -steps; k <= steps; ++k) {
          const std::array<double, 3> off{i * o.spacing + jitter(rng), j * o.spacing + jitter(rng),
                                          k * o.spacing + jitter(rng)};
          if (off[0] * off[0] + off[1] * off[1] + off[2] * off[2] > inner * inner) continue;
          SplatGaussian g;
          for (int a = 0; a < 3; ++a) {
            g.position[a] = static_cast<float>(ball.center[a] + off[a]);
            g.scale[a] = static_cast<float>(sigma);
          }
          g.opacity = o.opacity;
          g.color = ball.color;
          g.identity[id] = o.encoding_gain;
          g.object_id = static_cast<std::int32_t>(id);
          scene.gaussians.push_back(g);
        }
      }
    }
  }
  scene.rebuild_object_table();

  // Logit of object i is gain * alpha at covered pixels; the background bias
  // sits below the gain at the 0.5 alpha floor.
  b.classifier = IdentityClassifier::one_hot(scene.num_objects, 0.25 * o.encoding_gain);

  std::vector<RgbImage> images;
  std::vector<LabelImage> masks;
  std::vector<IdMaskImage> id_masks;
  std::vector<std::string> view_ids;
  for (const auto& cam : scene.cameras) {
    const RenderedView v = render(scene, cam, b.classifier);
    images.push_back(v.rgb_image());
    masks.push_back(v.id_image());
    id_masks.push_back({cam.view_id, v.id_image()});
    view_ids.push_back(cam.view_id);
  }
  const auto views = masked_views(images, masks, view_ids);
  b.bank = build_bank(views, ToyEmbedder{});
  for (const auto& s : visibility_stats_from_masks(id_masks, scene.num_objects))
    scene.object_table[s.object_id].views_visible = s.views_visible;

  for (const auto& cam : scene.cameras)
    for (const auto& ball : b.balls) b.cases.push_back({cam.view_id, ball.color_word, ball_footprint(ball, cam)});
  return b;
}

void write_benchmark(const Benchmark& bench, const fs::path& dir) {
  fs::create_directories(dir / "gt");
  save_scene(bench.scene, dir / "scene.gsg");
  write_bank(bench.bank, dir / "bank.emb");
  save_classifier(bench.classifier, dir / "classifier.json");

  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : bench.cases) {
    const std::string gt = "gt/" + c.view_id + "_" + c.query + ".pgm";
    write_mask_pgm(c.gt, dir / gt);
    cases.push_back({{"view_id", c.view_id}, {"query", c.query}, {"gt", gt}});
  }
  const nlohmann::json manifest = {{"scene", "scene.gsg"},
                                   {"bank", "bank.emb"},
                                   {"classifier", "classifier.json"},
                                   {"embedder", "toy"},
                                   {"cases", cases}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

}  // namespace ovgs::synthetic
