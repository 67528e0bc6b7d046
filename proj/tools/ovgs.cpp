// ovgs: batch CLI and HTTP service for open-vocabulary queries over grouped
// Gaussian scenes.
//
// Exit codes: 0 success, 1 input error (bad flags, bad files), 2 internal.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>

#include <json.hpp>

#include "ovgs/classifier.hpp"
#include "ovgs/embedder.hpp"
#include "ovgs/embedding.hpp"
#include "ovgs/error.hpp"
#include "ovgs/eval.hpp"
#include "ovgs/grouping.hpp"
#include "ovgs/relevancy.hpp"
#include "ovgs/renderer.hpp"
#include "ovgs/scene_io.hpp"
#include "ovgs/service.hpp"
#include "ovgs/synthetic.hpp"
#include "ovgs/tasks.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::unique_ptr<ovgs::Embedder> make_embedder(const std::string& table) {
  if (table.empty()) return std::make_unique<ovgs::ToyEmbedder>();
  return std::make_unique<ovgs::TableEmbedder>(table);
}

void write_scene_output(const ovgs::GroupedScene& scene, const fs::path& out) {
  if (out.extension() == ".tar") {
    std::ofstream f(out, std::ios::binary);
    if (!f) throw ovgs::InputError("cannot write " + out.string());
    f << ovgs::pack_gsg(scene);
  } else {
    ovgs::save_scene(scene, out);
  }
}

// Views found in both directories, matched by file stem (<view>.ppm / <view>.pgm).
std::vector<std::string> matched_views(const fs::path& images, const fs::path& masks) {
  if (!fs::is_directory(masks)) throw ovgs::InputError("mask directory not found: " + masks.string());
  std::set<std::string> views;
  for (const auto& e : fs::directory_iterator(masks))
    if (e.path().extension() == ".pgm") views.insert(e.path().stem().string());
  if (!images.empty()) {
    for (const auto& v : views)
      if (!fs::exists(images / (v + ".ppm")))
        throw ovgs::InputError("no image " + (images / (v + ".ppm")).string() + " for mask " + v);
  }
  return {views.begin(), views.end()};
}

struct Globals {
  bool json_out = false;
};

void emit(const Globals& g, const json& data, const std::string& text) {
  if (g.json_out) {
    std::cout << ovgs::ok_envelope(data).dump() << '\n';
  } else if (!text.empty()) {
    std::cout << text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-vocabulary search over grouped Gaussian-splat scenes"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_flag("--json", g.json_out, "Machine-readable JSON on stdout");

  // query
  struct {
    std::string scene, bank, classifier, text, rule = "top1", mode = "3d", view, out, table;
    std::size_t k = ovgs::kDefaultTopK;
  } q;
  auto* query = app.add_subcommand("query", "Rank objects for a text query; extract (3d) or segment (2d)");
  query->add_option("--scene", q.scene, "GSG scene directory")->required();
  query->add_option("--bank", q.bank, "EMB bank directory")->required();
  query->add_option("--classifier", q.classifier, "Identity classifier JSON (2d mode)");
  query->add_option("--text", q.text, "Query text")->required();
  query->add_option("--k", q.k, "Top-k views averaged per object")->check(CLI::PositiveNumber);
  query->add_option("--rule", q.rule, "top1 | top_n:<n> | threshold:<tau>");
  query->add_option("--mode", q.mode, "2d or 3d")->check(CLI::IsMember({"2d", "3d"}));
  query->add_option("--view", q.view, "Camera view id (2d mode)");
  query->add_option("--out", q.out, "3d: GSG directory (or .tar); 2d: mask PGM");
  query->add_option("--embedder-table", q.table, "Precomputed embedding table (default: toy)");

  // render
  struct {
    std::string scene, classifier, view, out_dir, ids;
    int tile = 16;
  } r;
  auto* rend = app.add_subcommand("render", "Render rgb, id map and identity features for a view");
  rend->add_option("--scene", r.scene)->required();
  rend->add_option("--classifier", r.classifier)->required();
  rend->add_option("--view", r.view)->required();
  rend->add_option("--out-dir", r.out_dir)->required();
  rend->add_option("--ids", r.ids, "Comma-separated ids to highlight in overlay.ppm");
  rend->add_option("--tile-size", r.tile)->check(CLI::PositiveNumber);

  // eval
  struct {
    std::string manifest, out_report, rule = "top1", empty = "vacuous_one", artifacts;
    std::size_t k = ovgs::kDefaultTopK;
  } e;
  auto* eval = app.add_subcommand("eval", "Evaluate mIoU and localization accuracy over a dataset manifest");
  eval->add_option("--manifest", e.manifest)->required();
  eval->add_option("--out-report", e.out_report, "Write the JSON report here");
  eval->add_option("--k", e.k)->check(CLI::PositiveNumber);
  eval->add_option("--rule", e.rule);
  eval->add_option("--empty-policy", e.empty)->check(CLI::IsMember({"vacuous_one", "skip"}));
  eval->add_option("--artifacts", e.artifacts, "Directory for predicted masks");

  // bank
  auto* bank = app.add_subcommand("bank", "Embedding bank tools");
  bank->require_subcommand(1);
  struct {
    std::string masks, images, embedder = "toy", table, out;
    std::vector<std::string> canonical = ovgs::default_canonical_phrases();
  } bb;
  auto* build = bank->add_subcommand("build", "Build a bank from per-view images and id masks");
  build->add_option("--masks", bb.masks, "Directory of <view>.pgm id masks")->required();
  build->add_option("--images", bb.images, "Directory of <view>.ppm images")->required();
  build->add_option("--embedder", bb.embedder)->check(CLI::IsMember({"toy", "file"}));
  build->add_option("--table", bb.table, "Embedding table JSON for --embedder file");
  build->add_option("--canonical", bb.canonical, "Canonical phrases");
  build->add_option("--out", bb.out)->required();
  struct {
    std::string bank, masks, out;
    double threshold = 0.2;
  } bf;
  auto* filt = bank->add_subcommand("filter-visibility", "Drop objects visible in too few views");
  filt->add_option("--bank", bf.bank)->required();
  filt->add_option("--masks", bf.masks, "Directory of <view>.pgm id masks")->required();
  filt->add_option("--threshold", bf.threshold)->check(CLI::Range(0.0, 1.0));
  filt->add_option("--out", bf.out)->required();

  // scene
  auto* scene = app.add_subcommand("scene", "Scene tools");
  scene->require_subcommand(1);
  struct {
    std::string scene, ids, out;
    bool unassigned = false;
  } se;
  auto* extract = scene->add_subcommand("extract", "Keep only the Gaussians of the given object ids");
  extract->add_option("--scene", se.scene)->required();
  extract->add_option("--ids", se.ids, "Comma-separated object ids")->required();
  extract->add_option("--out", se.out, "GSG directory (or .tar)")->required();
  extract->add_flag("--include-unassigned", se.unassigned);

  // serve
  struct {
    std::string host, scene, bank, classifier, table;
    int port = -1;  // -1: OVGS_PORT or 8765; 0: ephemeral
  } sv;
  auto* serve = app.add_subcommand("serve", "HTTP service (OVGS_HOST / OVGS_PORT set the defaults)");
  serve->add_option("--host", sv.host);
  serve->add_option("--port", sv.port);
  serve->add_option("--scene", sv.scene);
  serve->add_option("--bank", sv.bank);
  serve->add_option("--classifier", sv.classifier);
  serve->add_option("--embedder-table", sv.table);

  // fixture
  std::string fixture_out;
  auto* fixture = app.add_subcommand("fixture", "Write the synthetic three-ball benchmark");
  fixture->add_option("--out", fixture_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return 1;
  }

  try {
    if (query->parsed()) {
      const auto rule = ovgs::SelectionRule::parse(q.rule);
      if (q.mode == "3d" && (!q.view.empty() || !q.classifier.empty()))
        throw ovgs::InputError("--view/--classifier conflict with --mode 3d");
      if (q.mode == "2d" && (q.view.empty() || q.classifier.empty()))
        throw ovgs::InputError("--mode 2d needs --view and --classifier");
      const auto sc = ovgs::load_scene(q.scene);
      const auto bk = ovgs::ingest_bank(q.bank);
      const auto embedder = make_embedder(q.table);
      const json response = ovgs::query_response(bk, *embedder, q.text, q.k, rule);
      const auto selected = response["data"]["selected"].get<std::vector<std::int32_t>>();
      const ovgs::ObjectIdSet ids(selected.begin(), selected.end());

      std::string text;
      for (const auto& row : response["data"]["ranked"])
        text += std::to_string(row["object_id"].get<int>()) + "\t" + std::to_string(row["score"].get<double>()) + "\n";
      if (q.mode == "3d" && !q.out.empty()) {
        write_scene_output(ovgs::filter_by_object_ids(sc, ids), q.out);
      } else if (q.mode == "2d") {
        const auto* cam = sc.find_camera(q.view);
        if (!cam) throw ovgs::InputError("unknown view '" + q.view + "'");
        const auto view = ovgs::render(sc, *cam, ovgs::load_classifier(q.classifier));
        const auto mask = ovgs::mask_from_ids(view.id_map, view.width, view.height, ids);
        if (!q.out.empty()) ovgs::write_mask_pgm(mask, q.out);
        text += "mask pixels: " + std::to_string(mask.count()) + "\n";
      }
      if (g.json_out) {
        std::cout << response.dump() << '\n';
      } else {
        std::cout << text;
      }
    } else if (rend->parsed()) {
      const auto sc = ovgs::load_scene(r.scene);
      const auto* cam = sc.find_camera(r.view);
      if (!cam) throw ovgs::InputError("unknown view '" + r.view + "'");
      ovgs::RenderOptions opts;
      opts.tile_size = r.tile;
      const auto view = ovgs::render(sc, *cam, ovgs::load_classifier(r.classifier), opts);
      const fs::path dir(r.out_dir);
      fs::create_directories(dir);
      ovgs::write_ppm(view.rgb_image(), dir / "rgb.ppm");
      ovgs::write_label_pgm(view.id_image(), dir / "ids.pgm");
      ovgs::write_planar_f32(view.identity_features, view.width, view.height, 16, dir / "identity.f32");
      ovgs::write_planar_f32(view.alpha, view.width, view.height, 1, dir / "alpha.f32");
      if (!r.ids.empty()) {
        ovgs::write_ppm(ovgs::overlay_composite(view.rgb_image(), view.id_map, ovgs::parse_id_list(r.ids)),
                        dir / "overlay.ppm");
      }
      emit(g, {{"view_id", r.view}, {"width", view.width}, {"height", view.height}, {"out_dir", r.out_dir}},
           "wrote " + r.out_dir + "\n");
    } else if (eval->parsed()) {
      ovgs::PipelineConfig cfg;
      cfg.k = e.k;
      cfg.rule = ovgs::SelectionRule::parse(e.rule);
      cfg.empty_policy = e.empty == "skip" ? ovgs::EmptyMaskPolicy::kSkip : ovgs::EmptyMaskPolicy::kVacuousOne;
      std::optional<fs::path> artifacts;
      if (!e.artifacts.empty()) artifacts = e.artifacts;
      const auto report = ovgs::evaluate(e.manifest, cfg, artifacts);
      if (!e.out_report.empty()) std::ofstream(e.out_report) << report.to_json().dump(2) << '\n';
      emit(g, report.to_json(), report.table());
    } else if (build->parsed()) {
      if (bb.embedder == "file" && bb.table.empty()) throw ovgs::InputError("--embedder file needs --table");
      if (bb.embedder == "toy" && !bb.table.empty()) throw ovgs::InputError("--table conflicts with --embedder toy");
      const auto views = matched_views(bb.images, bb.masks);
      std::vector<ovgs::RgbImage> images;
      std::vector<ovgs::LabelImage> masks;
      for (const auto& v : views) {
        images.push_back(ovgs::read_ppm(fs::path(bb.images) / (v + ".ppm")));
        masks.push_back(ovgs::read_label_pgm(fs::path(bb.masks) / (v + ".pgm")));
      }
      const auto embedder = make_embedder(bb.table);
      const auto mv = ovgs::masked_views(images, masks, views);
      const auto bk = ovgs::build_bank(mv, *embedder, bb.canonical);
      ovgs::write_bank(bk, bb.out);
      emit(g, {{"objects", bk.bags.size()}, {"entries", bk.entry_count()}, {"total_views", bk.total_views}},
           "bank with " + std::to_string(bk.bags.size()) + " objects, " + std::to_string(bk.entry_count()) +
               " embeddings\n");
    } else if (filt->parsed()) {
      const auto bk = ovgs::ingest_bank(bf.bank);
      std::vector<ovgs::IdMaskImage> masks;
      for (const auto& v : matched_views({}, bf.masks))
        masks.push_back({v, ovgs::read_label_pgm(fs::path(bf.masks) / (v + ".pgm"))});
      const std::int32_t k = bk.bags.empty() ? 0 : bk.bags.rbegin()->first + 1;
      const auto stats = ovgs::visibility_stats_from_masks(masks, k);
      const auto filtered = ovgs::visibility_filter(bk, stats, bf.threshold);
      ovgs::write_bank(filtered, bf.out);
      json kept = json::array();
      for (const auto& [id, bag] : filtered.bags) kept.push_back(id);
      emit(g, {{"kept", kept}, {"removed", bk.bags.size() - filtered.bags.size()}},
           "kept " + std::to_string(filtered.bags.size()) + " of " + std::to_string(bk.bags.size()) + " objects\n");
    } else if (extract->parsed()) {
      const auto sc = ovgs::load_scene(se.scene);
      const auto sub = ovgs::filter_by_object_ids(sc, ovgs::parse_id_list(se.ids), se.unassigned);
      write_scene_output(sub, se.out);
      emit(g, {{"gaussians", sub.gaussians.size()}}, "kept " + std::to_string(sub.gaussians.size()) + " Gaussians\n");
    } else if (serve->parsed()) {
      std::string host = sv.host;
      if (host.empty()) host = std::getenv("OVGS_HOST") ? std::getenv("OVGS_HOST") : "127.0.0.1";
      int port = sv.port;
      if (port < 0) port = std::getenv("OVGS_PORT") ? std::atoi(std::getenv("OVGS_PORT")) : 8765;
      ovgs::Service service;
      if (!sv.scene.empty() || !sv.bank.empty() || !sv.classifier.empty()) {
        if (sv.scene.empty() || sv.bank.empty() || sv.classifier.empty())
          throw ovgs::InputError("preloading needs --scene, --bank and --classifier");
        service.load({sv.scene, sv.bank, sv.classifier, sv.table});
      }
      const int bound = service.bind(host, port);
      std::cerr << "listening on " << host << ":" << bound << std::endl;
      service.listen();
    } else if (fixture->parsed()) {
      ovgs::synthetic::write_benchmark(ovgs::synthetic::make_color_benchmark(), fixture_out);
      emit(g, {{"out", fixture_out}}, "wrote " + fixture_out + "\n");
    }
  } catch (const ovgs::InputError& err) {
    if (g.json_out) std::cout << ovgs::error_envelope(400, err.what()).dump() << '\n';
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    if (g.json_out) std::cout << ovgs::error_envelope(500, err.what()).dump() << '\n';
    std::cerr << "internal error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
