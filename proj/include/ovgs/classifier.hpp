#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

namespace ovgs {

/// Linear 16 -> K+1 map followed by softmax. Class K is the background
/// (reject) class. Weights are row-major, one row of 16 per class.
class IdentityClassifier {
 public:
  IdentityClassifier() = default;
  IdentityClassifier(std::int32_t num_objects, std::vector<double> weights,
                     std::vector<double> bias);

  // Row i is the unit vector e_i for i < min(K, 16); the background row is
  // zero with bias `background_bias`.
  static IdentityClassifier one_hot(std::int32_t num_objects, double background_bias = 0.0);

  std::int32_t num_objects() const { return num_objects_; }
  std::size_t num_classes() const { return static_cast<std::size_t>(num_objects_) + 1; }
  std::size_t background_class() const { return static_cast<std::size_t>(num_objects_); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& bias() const { return bias_; }

  // `feature` must hold exactly 16 values; `out` num_classes().
  void logits(std::span<const float> feature, std::span<double> out) const;
  std::vector<double> probabilities(std::span<const float> feature) const;
  // Argmax class index (lowest index wins ties).
  std::size_t predict_class(std::span<const float> feature) const;
  // Argmax as an object id; background -> kUnassigned.
  std::int32_t classify(std::span<const float> feature) const;

 private:
  std::int32_t num_objects_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

// Stable softmax, in place.
void softmax_inplace(std::span<double> values);
// log-softmax, in place.
void log_softmax_inplace(std::span<double> values);
std::size_t argmax_lowest(std::span<const double> values);

nlohmann::json to_json(const IdentityClassifier& clf);
IdentityClassifier classifier_from_json(const nlohmann::json& j);
IdentityClassifier load_classifier(const std::filesystem::path& path);
void save_classifier(const IdentityClassifier& clf, const std::filesystem::path& path);

}  // namespace ovgs
