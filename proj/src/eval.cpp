#include "ovgs/eval.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "binary_io.hpp"
#include "ovgs/error.hpp"
#include "ovgs/renderer.hpp"
#include "ovgs/scene_io.hpp"

namespace ovgs {

namespace fs = std::filesystem;
using nlohmann::json;

json PipelineConfig::to_json() const {
  return {{"k", k},
          {"rule", rule.to_string()},
          {"alpha_floor", alpha_floor},
          {"tile_size", tile_size},
          {"empty_policy", empty_policy == EmptyMaskPolicy::kSkip ? "skip" : "vacuous_one"},
          {"seed", seed}};
}

json EvalReport::to_json() const {
  json rows = json::array();
  for (const auto& c : cases) {
    rows.push_back({{"view_id", c.view_id},
                    {"query", c.query},
                    {"iou", c.iou},
                    {"hit", c.hit},
                    {"vacuous", c.vacuous},
                    {"skipped", c.skipped},
                    {"selected", c.selected}});
  }
  return {{"config", config.to_json()},
          {"cases", rows},
          {"miou", miou},
          {"localization_accuracy", localization_accuracy}};
}

std::string EvalReport::table() const {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-24s %8s %5s\n", "view", "query", "IoU", "hit");
  os << line;
  for (const auto& c : cases) {
    std::snprintf(line, sizeof line, "%-12s %-24s %8.4f %5s%s\n", c.view_id.c_str(),
                  c.query.c_str(), c.iou, c.hit ? "yes" : "no",
                  c.skipped ? "  (skipped)" : (c.vacuous ? "  (vacuous)" : ""));
    os << line;
  }
  std::snprintf(line, sizeof line, "mIoU %.4f  localization accuracy %.4f  (k=%zu, rule=%s)\n",
                miou, localization_accuracy, config.k, config.rule.to_string().c_str());
  os << line;
  return os.str();
}

BinaryMask read_mask_pgm(const fs::path& path) {
  const LabelImage img = read_label_pgm(path);
  BinaryMask m(img.width, img.height);
  for (std::size_t p = 0; p < img.labels.size(); ++p) m.pixels[p] = img.labels[p] != 0 ? 1 : 0;
  return m;
}

void write_mask_pgm(const BinaryMask& mask, const fs::path& path) {
  std::string out = "P5\n" + std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  for (std::uint8_t v : mask.pixels) out.push_back(static_cast<char>(v ? 255 : 0));
  detail::write_file(path.string(), out);
}

EvalReport evaluate_cases(const GroupedScene& scene, const IdentityClassifier& clf,
                          const EmbeddingBank& bank, const Embedder& embedder,
                          std::span<const EvalCase> cases, const PipelineConfig& config,
                          const std::optional<fs::path>& artifact_dir) {
  config.rule.validate();
  std::vector<std::string> missing;
  for (const auto& c : cases)
    if (!scene.find_camera(c.view_id)) missing.push_back("view '" + c.view_id + "'");
  if (!missing.empty()) {
    std::string msg = "evaluation references unknown views:";
    for (const auto& m : missing) msg += " " + m;
    throw InputError(msg);
  }
  if (artifact_dir) fs::create_directories(*artifact_dir);

  RenderOptions ropts;
  ropts.tile_size = config.tile_size;
  ropts.alpha_floor = config.alpha_floor;
  std::map<std::string, RenderedView> views;
  for (const auto& c : cases)
    if (!views.contains(c.view_id)) views.emplace(c.view_id, render(scene, *scene.find_camera(c.view_id), clf, ropts));

  EvalReport report;
  report.config = config;
  std::vector<double> ious;
  std::size_t hits = 0, scored = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    const RenderedView& view = views.at(c.view_id);
    if (c.gt.width != view.width || c.gt.height != view.height)
      throw InputError("ground truth for case " + std::to_string(i) + " does not match view size");
    const QueryResult q = rank_objects(bank, c.query, embedder, config.k, config.rule);
    const BinaryMask pred = mask_from_ids(view.id_map, view.width, view.height,
                                          ObjectIdSet(q.selected.begin(), q.selected.end()));

    CaseResult r;
    r.view_id = c.view_id;
    r.query = c.query;
    r.selected = q.selected;
    r.vacuous = pred.empty() && c.gt.empty();
    r.skipped = r.vacuous && config.empty_policy == EmptyMaskPolicy::kSkip;
    r.iou = iou(pred, c.gt);
    r.hit = localization_hit(pred, c.gt, view.alpha);
    if (!r.skipped) {
      ious.push_back(r.iou);
      hits += r.hit ? 1 : 0;
      ++scored;
    }
    if (artifact_dir) write_mask_pgm(pred, *artifact_dir / ("case_" + std::to_string(i) + ".pgm"));
    report.cases.push_back(std::move(r));
  }
  if (scored > 0) {
    double sum = 0.0;
    for (double v : ious) sum += v;
    report.miou = sum / static_cast<double>(scored);
    report.localization_accuracy = static_cast<double>(hits) / static_cast<double>(scored);
  }
  return report;
}

EvalReport evaluate(const fs::path& manifest_path, const PipelineConfig& config,
                    const std::optional<fs::path>& artifact_dir) {
  json m;
  try {
    m = json::parse(detail::read_file(manifest_path.string()));
  } catch (const json::exception& e) {
    throw InputError("malformed dataset manifest: " + std::string(e.what()));
  }
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  std::vector<std::string> missing;
  fs::path scene_path, bank_path, clf_path, embedder_path;
  struct PendingCase {
    std::string view_id, query;
    fs::path gt;
  };
  std::vector<PendingCase> pending;
  try {
    scene_path = resolve(m.at("scene").get<std::string>());
    bank_path = resolve(m.at("bank").get<std::string>());
    clf_path = resolve(m.at("classifier").get<std::string>());
    const std::string emb = m.value("embedder", std::string("toy"));
    if (emb != "toy") embedder_path = resolve(emb);
    for (const auto& c : m.at("cases"))
      pending.push_back({c.at("view_id").get<std::string>(), c.at("query").get<std::string>(),
                         resolve(c.at("gt").get<std::string>())});
  } catch (const json::exception& e) {
    throw InputError("malformed dataset manifest: " + std::string(e.what()));
  }

  auto need = [&](const fs::path& p, const char* what) {
    if (!fs::exists(p)) missing.push_back(std::string(what) + " " + p.string());
  };
  need(scene_path, "scene");
  need(bank_path, "bank");
  need(clf_path, "classifier");
  if (!embedder_path.empty()) need(embedder_path, "embedder table");
  for (std::size_t i = 0; i < pending.size(); ++i)
    need(pending[i].gt, ("case " + std::to_string(i) + " ground truth").c_str());
  if (!missing.empty()) {
    std::string msg = "missing evaluation assets:";
    for (const auto& s : missing) msg += "\n  " + s;
    throw InputError(msg);
  }

  const GroupedScene scene = load_scene(scene_path);
  const EmbeddingBank bank = ingest_bank(bank_path);
  const IdentityClassifier clf = load_classifier(clf_path);
  std::unique_ptr<Embedder> embedder;
  if (embedder_path.empty()) {
    embedder = std::make_unique<ToyEmbedder>();
  } else {
    embedder = std::make_unique<TableEmbedder>(embedder_path);
  }

  std::vector<EvalCase> cases;
  for (const auto& p : pending) cases.push_back({p.view_id, p.query, read_mask_pgm(p.gt)});
  return evaluate_cases(scene, clf, bank, *embedder, cases, config, artifact_dir);
}

}  // namespace ovgs
