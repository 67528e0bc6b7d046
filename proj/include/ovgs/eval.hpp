#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ovgs/classifier.hpp"
#include "ovgs/embedder.hpp"
#include "ovgs/embedding.hpp"
#include "ovgs/relevancy.hpp"
#include "ovgs/scene.hpp"
#include "ovgs/tasks.hpp"

namespace ovgs {

enum class EmptyMaskPolicy { kVacuousOne, kSkip };

struct PipelineConfig {
  std::size_t k = kDefaultTopK;
  SelectionRule rule = SelectionRule::top1();
  double alpha_floor = kAlphaFloor;
  int tile_size = 16;
  EmptyMaskPolicy empty_policy = EmptyMaskPolicy::kVacuousOne;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

struct EvalCase {
  std::string view_id;
  std::string query;
  BinaryMask gt;
};

struct CaseResult {
  std::string view_id;
  std::string query;
  double iou = 0.0;
  bool hit = false;
  bool vacuous = false;  // both masks empty
  bool skipped = false;  // excluded from the means by EmptyMaskPolicy::kSkip
  std::vector<std::int32_t> selected;
};

struct EvalReport {
  std::vector<CaseResult> cases;
  double miou = 0.0;
  double localization_accuracy = 0.0;
  PipelineConfig config;

  nlohmann::json to_json() const;
  std::string table() const;
};

// In-memory evaluation; cases are independent and the report does not depend
// on scheduling.
EvalReport evaluate_cases(const GroupedScene& scene, const IdentityClassifier& clf,
                          const EmbeddingBank& bank, const Embedder& embedder,
                          std::span<const EvalCase> cases, const PipelineConfig& config,
                          const std::optional<std::filesystem::path>& artifact_dir = {});

// Dataset manifest (JSON, paths relative to the manifest's directory):
//   {"scene": "...", "bank": "...", "classifier": "...",
//    "embedder": "toy" | "<table.json>",            (optional, default toy)
//    "cases": [{"view_id": "...", "query": "...", "gt": "<mask.pgm>"}]}
// Missing assets are collected and reported together in one InputError.
EvalReport evaluate(const std::filesystem::path& manifest, const PipelineConfig& config,
                    const std::optional<std::filesystem::path>& artifact_dir = {});

BinaryMask read_mask_pgm(const std::filesystem::path& path);
void write_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path);

}  // namespace ovgs
