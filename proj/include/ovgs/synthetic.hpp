#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ovgs/classifier.hpp"
#include "ovgs/embedding.hpp"
#include "ovgs/eval.hpp"
#include "ovgs/scene.hpp"

namespace ovgs::synthetic {

struct Ball {
  std::string color_word;
  std::array<float, 3> color{};
  std::array<double, 3> center{};
  double radius = 0.5;
};

struct BenchmarkOptions {
  int width = 256;
  int height = 160;
  double focal = 220.0;
  double spacing = 0.06;      // lattice step of Gaussian centers
  double sigma_factor = 0.6;  // Gaussian std dev as a fraction of spacing
  float opacity = 0.9f;
  float encoding_gain = 4.0f;
  std::uint64_t seed = 7;
};

struct Benchmark {
  std::vector<Ball> balls;  // ball i has object id i
  GroupedScene scene;
  IdentityClassifier classifier;
  EmbeddingBank bank;
  std::vector<EvalCase> cases;  // one per (camera, ball), query = color word
};

// Three separated colored balls filled with small Gaussians, four cameras,
// toy-embedded bank built from rendered masked views, and ground truth masks
// from exact ray/sphere intersection.
Benchmark make_color_benchmark(const BenchmarkOptions& options = {});

// Pixels whose center ray hits the ball.
BinaryMask ball_footprint(const Ball& ball, const Camera& cam);

// Writes scene.gsg/, bank.emb/, classifier.json, gt/*.pgm and manifest.json.
void write_benchmark(const Benchmark& bench, const std::filesystem::path& dir);

}  // namespace ovgs::synthetic
