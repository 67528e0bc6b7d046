#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <memory>

#include "ovgs/classifier.hpp"
#include "ovgs/embedder.hpp"
#include "ovgs/embedding.hpp"
#include "ovgs/error.hpp"
#include "ovgs/eval.hpp"
#include "ovgs/relevancy.hpp"
#include "ovgs/renderer.hpp"
#include "ovgs/scene_io.hpp"
#include "ovgs/synthetic.hpp"
#include "ovgs/tasks.hpp"

namespace py = pybind11;

namespace {

py::object to_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::unique_ptr<ovgs::Embedder> embedder_for(const std::string& table) {
  if (table.empty()) return std::make_unique<ovgs::ToyEmbedder>();
  return std::make_unique<ovgs::TableEmbedder>(table);
}

template <typename T>
py::array_t<T> image_array(const std::vector<T>& data, int h, int w, int c) {
  std::vector<py::ssize_t> shape{h, w};
  if (c > 1) shape.push_back(c);
  py::array_t<T> out(shape);
  std::copy(data.begin(), data.end(), out.mutable_data());
  return out;
}

ovgs::BinaryMask to_mask(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw ovgs::InputError("mask must be a 2-D array");
  ovgs::BinaryMask m(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.size(); ++i) m.pixels[i] = a.data()[i] ? 1 : 0;
  return m;
}

std::vector<ovgs::Embedding> to_embeddings(const std::vector<std::vector<float>>& v) {
  return {v.begin(), v.end()};
}

}  // namespace

PYBIND11_MODULE(_ovgs, m) {
  m.doc() = "Open-vocabulary object search over grouped Gaussian-splat scenes";

  py::register_exception<ovgs::InputError>(m, "InputError", PyExc_ValueError);

  py::class_<ovgs::GroupedScene>(m, "Scene")
      .def_property_readonly("num_gaussians", [](const ovgs::GroupedScene& s) { return s.gaussians.size(); })
      .def_readonly("num_objects", &ovgs::GroupedScene::num_objects)
      .def_property_readonly("view_ids",
                             [](const ovgs::GroupedScene& s) {
                               std::vector<std::string> ids;
                               for (const auto& c : s.cameras) ids.push_back(c.view_id);
                               return ids;
                             })
      .def_property_readonly("object_ids",
                             [](const ovgs::GroupedScene& s) {
                               std::vector<std::int32_t> ids;
                               for (const auto& g : s.gaussians) ids.push_back(g.object_id);
                               return py::array_t<std::int32_t>(static_cast<py::ssize_t>(ids.size()), ids.data());
                             })
      .def_property_readonly("positions", [](const ovgs::GroupedScene& s) {
        py::array_t<float> out({static_cast<py::ssize_t>(s.gaussians.size()), py::ssize_t{3}});
        auto* p = out.mutable_data();
        for (const auto& g : s.gaussians)
          for (float v : g.position) *p++ = v;
        return out;
      });

  py::class_<ovgs::EmbeddingBank>(m, "EmbeddingBank")
      .def_readonly("dim", &ovgs::EmbeddingBank::dim)
      .def_readonly("total_views", &ovgs::EmbeddingBank::total_views)
      .def_property_readonly("object_ids",
                             [](const ovgs::EmbeddingBank& b) {
                               std::vector<std::int32_t> ids;
                               for (const auto& [id, bag] : b.bags) ids.push_back(id);
                               return ids;
                             })
      .def_property_readonly("canonical_phrases", [](const ovgs::EmbeddingBank& b) {
        std::vector<std::string> out;
        for (const auto& c : b.canonical) out.push_back(c.phrase);
        return out;
      });

  py::class_<ovgs::IdentityClassifier>(m, "IdentityClassifier")
      .def_static("one_hot", &ovgs::IdentityClassifier::one_hot, py::arg("num_objects"),
                  py::arg("background_bias") = 0.0)
      .def_property_readonly("num_objects", &ovgs::IdentityClassifier::num_objects)
      .def("classify", [](const ovgs::IdentityClassifier& c, const std::vector<float>& f) { return c.classify(f); });

  m.def("load_scene", &ovgs::load_scene, py::arg("path"));
  m.def("save_scene", &ovgs::save_scene, py::arg("scene"), py::arg("path"));
  m.def("filter_by_object_ids", &ovgs::filter_by_object_ids, py::arg("scene"), py::arg("ids"),
        py::arg("include_unassigned") = false);
  m.def("resolve_gaussian_ids", &ovgs::resolve_gaussian_ids, py::arg("scene"), py::arg("classifier"));
  m.def("ingest_bank", &ovgs::ingest_bank, py::arg("path"));
  m.def("write_bank", &ovgs::write_bank, py::arg("bank"), py::arg("path"));
  m.def("load_classifier", &ovgs::load_classifier, py::arg("path"));

  m.def("toy_embed_text", [](const std::string& t) { return ovgs::toy_embed_text(t); }, py::arg("text"));
  m.def(
      "toy_embed_image",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& img) {
        if (img.ndim() != 3 || img.shape(2) != 3) throw ovgs::InputError("image must be H x W x 3");
        ovgs::RgbImage im(static_cast<int>(img.shape(1)), static_cast<int>(img.shape(0)));
        std::copy(img.data(), img.data() + img.size(), im.data.begin());
        return ovgs::toy_embed_image(im);
      },
      py::arg("image"));

  m.def(
      "pairwise_relevancy",
      [](const std::vector<float>& obj, const std::vector<float>& query,
         const std::vector<std::vector<float>>& canon) {
        return ovgs::pairwise_relevancy(obj, query, to_embeddings(canon));
      },
      py::arg("object"), py::arg("query"), py::arg("canonical"));
  m.def(
      "object_relevancy",
      [](const std::vector<std::vector<float>>& views, const std::vector<float>& query,
         const std::vector<std::vector<float>>& canon, std::size_t k) {
        ovgs::EmbeddingBag bag;
        for (std::size_t i = 0; i < views.size(); ++i) bag.entries.push_back({std::to_string(i), views[i]});
        return ovgs::object_relevancy(bag, query, to_embeddings(canon), k);
      },
      py::arg("views"), py::arg("query"), py::arg("canonical"), py::arg("k") = ovgs::kDefaultTopK);
  m.def(
      "rank_objects",
      [](const ovgs::EmbeddingBank& bank, const std::string& text, std::size_t k, const std::string& rule,
         const std::string& table) {
        const auto e = embedder_for(table);
        return to_python(ovgs::to_json(ovgs::rank_objects(bank, text, *e, k, ovgs::SelectionRule::parse(rule))));
      },
      py::arg("bank"), py::arg("text"), py::arg("k") = ovgs::kDefaultTopK, py::arg("rule") = "top1",
      py::arg("embedder_table") = "");

  m.def(
      "render",
      [](const ovgs::GroupedScene& scene, const std::string& view_id, const ovgs::IdentityClassifier& clf,
         int tile_size) {
        const auto* cam = scene.find_camera(view_id);
        if (!cam) throw ovgs::InputError("unknown view '" + view_id + "'");
        ovgs::RenderOptions opts;
        opts.tile_size = tile_size;
        ovgs::RenderedView v;
        {
          py::gil_scoped_release release;
          v = ovgs::render(scene, *cam, clf, opts);
        }
        py::dict out;
        out["rgb"] = image_array(v.rgb, v.height, v.width, 3);
        out["alpha"] = image_array(v.alpha, v.height, v.width, 1);
        out["identity"] = image_array(v.identity_features, v.height, v.width, 16);
        out["id_map"] = image_array(v.id_map, v.height, v.width, 1);
        return out;
      },
      py::arg("scene"), py::arg("view_id"), py::arg("classifier"), py::arg("tile_size") = 16);

  m.def(
      "segment_2d",
      [](const ovgs::GroupedScene& scene, const std::string& view_id, const ovgs::IdentityClassifier& clf,
         const ovgs::EmbeddingBank& bank, const std::string& text, std::size_t k, const std::string& rule) {
        const auto* cam = scene.find_camera(view_id);
        if (!cam) throw ovgs::InputError("unknown view '" + view_id + "'");
        const ovgs::ToyEmbedder embedder;
        const auto mask =
            ovgs::segment_2d(scene, *cam, clf, bank, text, embedder, k, ovgs::SelectionRule::parse(rule));
        py::array_t<bool> out({static_cast<py::ssize_t>(mask.height), static_cast<py::ssize_t>(mask.width)});
        std::transform(mask.pixels.begin(), mask.pixels.end(), out.mutable_data(), [](std::uint8_t v) { return v != 0; });
        return out;
      },
      py::arg("scene"), py::arg("view_id"), py::arg("classifier"), py::arg("bank"), py::arg("text"),
      py::arg("k") = ovgs::kDefaultTopK, py::arg("rule") = "top1");
  m.def(
      "extract_3d",
      [](const ovgs::GroupedScene& scene, const ovgs::EmbeddingBank& bank, const std::string& text, std::size_t k,
         const std::string& rule) {
        const ovgs::ToyEmbedder embedder;
        return ovgs::extract_3d(scene, bank, text, embedder, k, ovgs::SelectionRule::parse(rule));
      },
      py::arg("scene"), py::arg("bank"), py::arg("text"), py::arg("k") = ovgs::kDefaultTopK,
      py::arg("rule") = "top1");

  m.def(
      "iou", [](const py::array_t<bool, py::array::c_style | py::array::forcecast>& a,
                const py::array_t<bool, py::array::c_style | py::array::forcecast>& b) {
        return ovgs::iou(to_mask(a), to_mask(b));
      },
      py::arg("pred"), py::arg("gt"));
  m.def(
      "localization_hit",
      [](const py::array_t<bool, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<bool, py::array::c_style | py::array::forcecast>& b) {
        return ovgs::localization_hit(to_mask(a), to_mask(b));
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "evaluate",
      [](const std::filesystem::path& manifest, std::size_t k, const std::string& rule) {
        ovgs::PipelineConfig cfg;
        cfg.k = k;
        cfg.rule = ovgs::SelectionRule::parse(rule);
        return to_python(ovgs::evaluate(manifest, cfg).to_json());
      },
      py::arg("manifest"), py::arg("k") = ovgs::kDefaultTopK, py::arg("rule") = "top1");

  m.def(
      "write_synthetic_benchmark",
      [](const std::filesystem::path& dir) {
        ovgs::synthetic::write_benchmark(ovgs::synthetic::make_color_benchmark(), dir);
      },
      py::arg("out_dir"));
}
