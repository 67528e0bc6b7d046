#include "ovgs/renderer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ovgs/error.hpp"

namespace ovgs {
namespace {

using Mat3 = std::array<double, 9>;

Mat3 rotation_matrix(const std::array<float, 4>& q) {
  double w = q[0], x = q[1], y = q[2], z = q[3];
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

// Pixels [x0, x1] x [y0, y1] (inclusive) of one tile.
struct Tile {
  int x0, y0, x1, y1;
};

bool overlaps(const ProjectedSplat& s, const Tile& t) {
  return s.mean[0] + s.support[0] >= t.x0 && s.mean[0] - s.support[0] <= t.x1 &&
         s.mean[1] + s.support[1] >= t.y0 && s.mean[1] - s.support[1] <= t.y1;
}

void shade_tile(const std::vector<ProjectedSplat>& sorted, const Tile& tile, RenderedView& out) {
  std::vector<const ProjectedSplat*> local;
  for (const auto& s : sorted)
    if (overlaps(s, tile)) local.push_back(&s);

  for (int y = tile.y0; y <= tile.y1; ++y) {
    for (int x = tile.x0; x <= tile.x1; ++x) {
      double transmittance = 1.0;
      std::array<double, 3> rgb{};
      std::array<double, kIdentityDim> feat{};
      for (const ProjectedSplat* s : local) {
        const double a = std::min(kMaxAlpha, splat_alpha(*s, x, y));
        if (a < kMinAlpha) continue;
        const double next = transmittance * (1.0 - a);
        if (next < kMinTransmittance) break;
        const double w = a * transmittance;
        for (int c = 0; c < 3; ++c) rgb[c] += w * s->color[c];
        for (std::size_t c = 0; c < kIdentityDim; ++c) feat[c] += w * s->identity[c];
        transmittance = next;
      }
      const std::size_t p = static_cast<std::size_t>(y) * out.width + x;
      for (int c = 0; c < 3; ++c) out.rgb[p * 3 + c] = static_cast<float>(rgb[c]);
      for (std::size_t c = 0; c < kIdentityDim; ++c)
        out.identity_features[p * kIdentityDim + c] = static_cast<float>(feat[c]);
      out.alpha[p] = static_cast<float>(1.0 - transmittance);
    }
  }
}

}  // namespace

std::optional<ProjectedSplat> project_gaussian(const SplatGaussian& g, const Camera& cam,
                                               std::size_t source_index) {
  const auto t = cam.to_camera({g.position[0], g.position[1], g.position[2]});
  const double z = t[2];
  if (!(z > kNearPlane)) return std::nullopt;

  // World covariance R S^2 R^T.
  const Mat3 r = rotation_matrix(g.rotation);
  Mat3 sigma{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        sigma[i * 3 + j] += r[i * 3 + k] * r[j * 3 + k] * static_cast<double>(g.scale[k]) * g.scale[k];

  // M = J W, J the perspective Jacobian at the camera-space mean.
  const double j00 = cam.fx / z, j02 = -cam.fx * t[0] / (z * z);
  const double j11 = cam.fy / z, j12 = -cam.fy * t[1] / (z * z);
  const auto& w = cam.rotation;
  std::array<double, 6> m{};
  for (int c = 0; c < 3; ++c) {
    m[c] = j00 * w[c] + j02 * w[6 + c];
    m[3 + c] = j11 * w[3 + c] + j12 * w[6 + c];
  }
  std::array<double, 3> cov{};  // M sigma M^T
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      const double s = sigma[a * 3 + b];
      cov[0] += m[a] * s * m[b];
      cov[1] += m[a] * s * m[3 + b];
      cov[2] += m[3 + a] * s * m[3 + b];
    }
  }
  cov[0] += kCovDilation;
  cov[2] += kCovDilation;

  const double det = cov[0] * cov[2] - cov[1] * cov[1];
  if (!(det > 0.0)) return std::nullopt;

  ProjectedSplat s;
  s.mean = {cam.fx * t[0] / z + cam.cx, cam.fy * t[1] / z + cam.cy};
  s.cov = cov;
  s.conic = {cov[2] / det, -cov[1] / det, cov[0] / det};
  s.depth = z;
  s.color = g.color;
  s.opacity = g.opacity;
  s.identity = g.identity;
  s.source_index = source_index;

  const double mid = 0.5 * (cov[0] + cov[2]);
  const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
  const double r3 = 3.0 * std::sqrt(lambda_max);
  if (s.mean[0] + r3 < -0.5 || s.mean[0] - r3 > cam.width - 0.5 || s.mean[1] + r3 < -0.5 ||
      s.mean[1] - r3 > cam.height - 0.5) {
    return std::nullopt;
  }

  // alpha >= kMinAlpha  <=>  d^T cov^-1 d <= 2 ln(255 opacity); the box of that
  // ellipse bounds every pixel the splat can touch. One pixel of slack absorbs
  // rounding in the per-pixel evaluation.
  const double level = 2.0 * std::log(static_cast<double>(g.opacity) / kMinAlpha);
  if (level > 0.0) {
    s.support = {std::sqrt(level * cov[0]) + 1.0, std::sqrt(level * cov[2]) + 1.0};
  } else {
    s.support = {-1.0, -1.0};
  }
  return s;
}

double splat_alpha(const ProjectedSplat& s, double px, double py) {
  const double dx = s.mean[0] - px;
  const double dy = s.mean[1] - py;
  const double power = -0.5 * (s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy);
  if (power > 0.0) return 0.0;
  return s.opacity * std::exp(power);
}

RgbImage RenderedView::rgb_image() const {
  RgbImage img(width, height);
  img.data = rgb;
  return img;
}

LabelImage RenderedView::id_image() const { return LabelImage{width, height, id_map}; }

RenderedView render(const GroupedScene& scene, const Camera& cam, const IdentityClassifier& clf,
                    const RenderOptions& options) {
  cam.validate();
  if (clf.num_objects() != scene.num_objects) {
    throw InputError("classifier dimension mismatch: classifier has " +
                     std::to_string(clf.num_objects()) + " objects, scene has " +
                     std::to_string(scene.num_objects));
  }
  if (options.tile_size < 1) throw InputError("tile size must be positive");

  std::vector<ProjectedSplat> splats;
  splats.reserve(scene.gaussians.size());
  for (std::size_t i = 0; i < scene.gaussians.size(); ++i) {
    if (auto s = project_gaussian(scene.gaussians[i], cam, i); s && s->support[0] >= 0.0)
      splats.push_back(*s);
  }
  // Front to back; the index tie-break makes the order total.
  std::sort(splats.begin(), splats.end(), [](const ProjectedSplat& a, const ProjectedSplat& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.source_index < b.source_index;
  });

  RenderedView out;
  out.width = cam.width;
  out.height = cam.height;
  out.camera = cam;
  const std::size_t pixels = static_cast<std::size_t>(cam.width) * cam.height;
  out.rgb.assign(pixels * 3, 0.0f);
  out.alpha.assign(pixels, 0.0f);
  out.identity_features.assign(pixels * kIdentityDim, 0.0f);

  std::vector<Tile> tiles;
  for (int y = 0; y < cam.height; y += options.tile_size)
    for (int x = 0; x < cam.width; x += options.tile_size)
      tiles.push_back({x, y, std::min(x + options.tile_size, cam.width) - 1,
                       std::min(y + options.tile_size, cam.height) - 1});

  unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
  workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(tiles.size()));
  std::atomic<std::size_t> next{0};
  auto run = [&] {
    for (std::size_t t = next++; t < tiles.size(); t = next++) shade_tile(splats, tiles[t], out);
  };
  if (workers == 1) {
    run();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(run);
  }

  out.id_map = classify_pixels(out.identity_features, out.alpha, clf, options.alpha_floor);
  return out;
}

std::vector<std::int32_t> classify_pixels(std::span<const float> features,
                                          std::span<const float> alpha,
                                          const IdentityClassifier& clf, double alpha_floor) {
  if (features.size() != alpha.size() * kIdentityDim)
    throw InputError("classify_pixels: features must be H*W*16 matching alpha");
  std::vector<std::int32_t> ids(alpha.size(), kUnassigned);
  for (std::size_t p = 0; p < alpha.size(); ++p) {
    if (alpha[p] > alpha_floor) ids[p] = clf.classify(features.subspan(p * kIdentityDim, kIdentityDim));
  }
  return ids;
}

}  // namespace ovgs
