#include "ovgs/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "ovgs/error.hpp"
#include "ovgs/scene.hpp"

namespace ovgs {

IdentityClassifier::IdentityClassifier(std::int32_t num_objects, std::vector<double> weights,
                                       std::vector<double> bias)
    : num_objects_(num_objects), weights_(std::move(weights)), bias_(std::move(bias)) {
  if (num_objects_ < 0) throw InputError("classifier: num_objects must be nonnegative");
  if (bias_.size() != num_classes())
    throw InputError("classifier: bias must have num_objects + 1 entries");
  if (weights_.size() != num_classes() * kIdentityDim)
    throw InputError("classifier: weights must be (num_objects + 1) x 16");
  for (double v : weights_)
    if (!std::isfinite(v)) throw InputError("classifier: non-finite weight");
  for (double v : bias_)
    if (!std::isfinite(v)) throw InputError("classifier: non-finite bias");
}

IdentityClassifier IdentityClassifier::one_hot(std::int32_t num_objects, double background_bias) {
  const std::size_t classes = static_cast<std::size_t>(num_objects) + 1;
  std::vector<double> w(classes * kIdentityDim, 0.0);
  std::vector<double> b(classes, 0.0);
  for (std::size_t c = 0; c < std::min<std::size_t>(num_objects, kIdentityDim); ++c)
    w[c * kIdentityDim + c] = 1.0;
  b[classes - 1] = background_bias;
  return IdentityClassifier(num_objects, std::move(w), std::move(b));
}

void IdentityClassifier::logits(std::span<const float> feature, std::span<double> out) const {
  if (feature.size() != kIdentityDim)
    throw InputError("classifier: feature must have 16 components");
  if (out.size() != num_classes()) throw InputError("classifier: output size mismatch");
  for (std::size_t c = 0; c < num_classes(); ++c) {
    const double* row = weights_.data() + c * kIdentityDim;
    double acc = bias_[c];
    for (std::size_t d = 0; d < kIdentityDim; ++d) acc += row[d] * feature[d];
    out[c] = acc;
  }
}

std::vector<double> IdentityClassifier::probabilities(std::span<const float> feature) const {
  std::vector<double> p(num_classes());
  logits(feature, p);
  softmax_inplace(p);
  return p;
}

std::size_t IdentityClassifier::predict_class(std::span<const float> feature) const {
  // softmax is monotone, so the argmax of the logits is the argmax of the
  // probabilities; ties stay ties.
  std::vector<double> z(num_classes());
  logits(feature, z);
  return argmax_lowest(z);
}

std::int32_t IdentityClassifier::classify(std::span<const float> feature) const {
  const std::size_t c = predict_class(feature);
  return c == background_class() ? kUnassigned : static_cast<std::int32_t>(c);
}

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double m = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double& v : values) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : values) v /= sum;
}

void log_softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const double m = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - m);
  const double lse = m + std::log(sum);
  for (double& v : values) v -= lse;
}

std::size_t argmax_lowest(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

nlohmann::json to_json(const IdentityClassifier& clf) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t c = 0; c < clf.num_classes(); ++c) {
    rows.push_back(std::vector<double>(clf.weights().begin() + c * kIdentityDim,
                                       clf.weights().begin() + (c + 1) * kIdentityDim));
  }
  return {{"num_objects", clf.num_objects()}, {"weights", rows}, {"bias", clf.bias()}};
}

IdentityClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    const auto k = j.at("num_objects").get<std::int32_t>();
    std::vector<double> w;
    for (const auto& row : j.at("weights")) {
      const auto r = row.get<std::vector<double>>();
      if (r.size() != kIdentityDim)
        throw InputError("classifier: weight rows must have 16 entries");
      w.insert(w.end(), r.begin(), r.end());
    }
    return IdentityClassifier(k, std::move(w), j.at("bias").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("classifier: ") + e.what());
  }
}

IdentityClassifier load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open classifier " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("classifier " + path.string() + ": " + e.what());
  }
  return classifier_from_json(j);
}

void save_classifier(const IdentityClassifier& clf, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write classifier " + path.string());
  out << to_json(clf).dump(2) << '\n';
}

}  // namespace ovgs
