#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ovgs/embedder.hpp"
#include "ovgs/error.hpp"
#include "ovgs/scene_io.hpp"
#include "ovgs/service.hpp"
#include "ovgs/synthetic.hpp"
#include "test_support.hpp"

namespace ovgs {
namespace {

using nlohmann::json;

synthetic::BenchmarkOptions small_options() {
  synthetic::BenchmarkOptions opt;
  opt.width = 96;
  opt.height = 60;
  opt.focal = 80.0;
  opt.spacing = 0.1;
  return opt;
}

// A running service on an ephemeral port with a client attached.
class ServiceTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("service");
    synthetic::write_benchmark(synthetic::make_color_benchmark(small_options()), dir_->path());
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  void SetUp() override {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::jthread([this] { service_.listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200; ++i) {
      if (client_->Get("/health")) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    FAIL() << "service did not come up";
  }
  void TearDown() override {
    service_.stop();
    thread_ = {};
  }

  void load() { service_.load(paths()); }
  static SessionPaths paths() {
    return {dir_->path() / "scene.gsg", dir_->path() / "bank.emb", dir_->path() / "classifier.json", {}};
  }

  static json body(const httplib::Result& r) { return json::parse(r->body); }

  static testing::TempDir* dir_;
  Service service_;
  int port_ = 0;
  std::jthread thread_;
  std::unique_ptr<httplib::Client> client_;
};
testing::TempDir* ServiceTest::dir_ = nullptr;

TEST_F(ServiceTest, HealthBeforeLoad) {
  const auto r = client_->Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(body(r), json::parse(R"({"ok":true,"data":{"scene_loaded":false}})"));
}

TEST_F(ServiceTest, EndpointsNeedAScene) {
  for (const char* path : {"/views", "/render/front", "/extract?ids=0"}) {
    const auto r = client_->Get(path);
    ASSERT_TRUE(r) << path;
    EXPECT_EQ(r->status, 409) << path;
    EXPECT_EQ(body(r)["ok"], false);
  }
  const auto q = client_->Post("/query", R"({"text":"red"})", "application/json");
  EXPECT_EQ(q->status, 409);
}

TEST_F(ServiceTest, LoadThroughHttp) {
  const json req = {{"scene", paths().scene.string()},
                    {"bank", paths().bank.string()},
                    {"classifier", paths().classifier.string()}};
  auto r = client_->Post("/load", req.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  r = client_->Get("/health");
  EXPECT_EQ(body(r)["data"]["scene_loaded"], true);
  EXPECT_EQ(body(r)["data"]["num_objects"], 3);

  const json bad = {{"scene", "/nonexistent"}, {"bank", "/x"}, {"classifier", "/y"}};
  r = client_->Post("/load", bad.dump(), "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(body(r)["error"]["status"], 400);
  r = client_->Post("/load", "not json", "application/json");
  EXPECT_EQ(r->status, 400);
}

TEST_F(ServiceTest, ViewsListsCameras) {
  load();
  const auto r = client_->Get("/views");
  ASSERT_EQ(r->status, 200);
  const auto views = body(r)["data"];
  ASSERT_EQ(views.size(), 4u);
  EXPECT_EQ(views[0]["view_id"], "front");
  EXPECT_EQ(views[0]["width"], 96);
}

TEST_F(ServiceTest, QueryMatchesLibrary) {
  load();
  const auto r = client_->Post("/query", R"({"text":"blue","k":3})", "application/json");
  ASSERT_EQ(r->status, 200);
  const auto s = service_.session();
  const auto expected = query_response(s->bank, *s->embedder, "blue", 3, SelectionRule::top1());
  EXPECT_EQ(body(r), expected);
  EXPECT_EQ(body(r)["data"]["selected"], json::array({2}));
  EXPECT_EQ(body(r)["data"]["k"], 3);
}

TEST_F(ServiceTest, QueryValidation) {
  load();
  for (const char* b : {R"({})", R"({"text":""})", R"({"text":"red","k":0})", R"({"text":"red","k":"5"})",
                        R"({"text":"red","rule":"best"})", R"([1,2])", "garbage"}) {
    const auto r = client_->Post("/query", b, "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 400) << b;
    EXPECT_EQ(body(r)["ok"], false) << b;
  }
  const auto r = client_->Post("/query", R"({"text":"red","rule":"threshold:0.3"})", "application/json");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["data"]["rule"], "threshold:0.3");
}

TEST_F(ServiceTest, RenderReturnsPngAndCaches) {
  load();
  auto r = client_->Get("/render/front?ids=0,2");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "image/png");
  ASSERT_GT(r->body.size(), 8u);
  EXPECT_EQ(r->body.substr(0, 8), std::string("\x89PNG\r\n\x1a\n", 8));
  EXPECT_EQ(service_.render_cache_size(), 1u);
  const auto again = client_->Get("/render/front?ids=2,0");
  EXPECT_EQ(again->body, r->body);
  EXPECT_EQ(service_.render_cache_size(), 1u);
  r = client_->Get("/render/front");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(service_.render_cache_size(), 2u);

  EXPECT_EQ(client_->Get("/render/nowhere")->status, 404);
  EXPECT_EQ(client_->Get("/render/front?ids=a,b")->status, 400);
}

TEST_F(ServiceTest, ExtractReturnsGsgArchive) {
  load();
  const auto r = client_->Get("/extract?ids=1");
  ASSERT_EQ(r->status, 200);
  EXPECT_EQ(r->get_header_value("Content-Type"), "application/x-tar");
  const auto sub = unpack_gsg(r->body);
  const auto expected = filter_by_object_ids(service_.session()->scene, {1});
  EXPECT_EQ(sub.gaussians, expected.gaussians);
  EXPECT_EQ(sub.num_objects, 3);
  for (const auto& g : sub.gaussians) EXPECT_EQ(g.object_id, 1);

  EXPECT_EQ(client_->Get("/extract?ids=7")->status, 400);
  EXPECT_EQ(client_->Get("/extract")->status, 400);
}

TEST_F(ServiceTest, UnknownRouteGivesJsonError) {
  const auto r = client_->Get("/nope");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(body(r)["error"]["status"], 404);
}

TEST_F(ServiceTest, ConcurrentQueriesAgree) {
  load();
  std::vector<std::jthread> workers;
  std::vector<std::string> results(8);
  for (int i = 0; i < 8; ++i) {
    workers.emplace_back([&, i] {
      httplib::Client c("127.0.0.1", port_);
      const auto r = c.Post("/query", R"({"text":"green"})", "application/json");
      results[i] = r ? r->body : "";
    });
  }
  workers.clear();
  for (const auto& r : results) EXPECT_EQ(r, results[0]);
  EXPECT_EQ(json::parse(results[0])["data"]["selected"], json::array({1}));
}

TEST(PackGsg, DeterministicRoundTrip) {
  std::mt19937_64 rng(51);
  const auto scene = testing::random_scene(rng, 25, 3);
  const auto a = pack_gsg(scene);
  EXPECT_EQ(a, pack_gsg(scene));
  EXPECT_EQ(a.size() % 512, 0u);
  EXPECT_EQ(unpack_gsg(a), scene);
  EXPECT_THROW(unpack_gsg("short"), InputError);
}

TEST(ParseIdList, Cases) {
  EXPECT_EQ(parse_id_list(""), ObjectIdSet{});
  EXPECT_EQ(parse_id_list("3,1,3"), (ObjectIdSet{1, 3}));
  EXPECT_EQ(parse_id_list("1,,2"), (ObjectIdSet{1, 2}));
  EXPECT_THROW(parse_id_list("x"), InputError);
  EXPECT_THROW(parse_id_list("-1"), InputError);
}

TEST(Overlay, BlendsOnlySelectedPixels) {
  RgbImage rgb(2, 1);
  rgb.data = {0.2f, 0.4f, 0.6f, 0.2f, 0.4f, 0.6f};
  const auto out = overlay_composite(rgb, {1, 0}, {1});
  EXPECT_FLOAT_EQ(out.data[0], 0.5f * 0.2f + 0.5f * kHighlightColor[0]);
  EXPECT_FLOAT_EQ(out.data[1], 0.5f * 0.4f + 0.5f * kHighlightColor[1]);
  EXPECT_FLOAT_EQ(out.data[3], 0.2f);
}

}  // namespace
}  // namespace ovgs
