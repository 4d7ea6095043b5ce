// Copyright 2026 The Declutter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "declutter/guidance/session.hpp"
#include "declutter/server/service.hpp"
#include "fixtures.hpp"
#include "support.hpp"

namespace declutter::server {
namespace {

using nlohmann::json;

class ServerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    decomposer_ = new decomposer::DecomposerModel(decomposer::DecomposerModel::create(64, testing::kDecomposerSeed));
    inpainter_ = new inpaint::InpainterModel(inpaint::InpainterModel::create(testing::kInpainterSeed));
  }
  static void TearDownTestSuite() {
    delete decomposer_;
    delete inpainter_;
  }

  void SetUp() override { start(ServerConfig{}); }
  void TearDown() override { stop(); }

  void start(ServerConfig config) {
    config.max_sessions = 4;
    service_ = std::make_unique<Service>(*decomposer_, *inpainter_, config);
    server_ = std::make_unique<httplib::Server>();
    service_->install(*server_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void stop() {
    server_->stop();
    thread_.join();
  }

  /// Uploads a scene as multipart with its oracle masks.
  httplib::Result upload(const scenes::SceneSample& scene) {
    json masks = json::array();
    for (const auto& m : scene.masks) masks.push_back({{"label", m.label}, {"mask", mask_to_rle(m.mask)}});
    const auto png = encode_png(scene.image);
    httplib::MultipartFormDataItems items = {
        {"image", std::string(png.begin(), png.end()), "scene.png", "image/png"},
        {"masks", masks.dump(), "", "application/json"},
    };
    return client_->Post("/sessions", items);
  }

  static json body(const httplib::Result& r) { return json::parse(r->body); }

  static inline decomposer::DecomposerModel* decomposer_ = nullptr;
  static inline inpaint::InpainterModel* inpainter_ = nullptr;
  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Server> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(ServerTest, Healthz) {
  const auto r = client_->Get("/healthz");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["status"], "ok");
}

TEST_F(ServerTest, CreateMatchesLibrary) {
  const auto scene = testing::three_object_scene();
  const auto r = upload(scene);
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 201) << r->body;
  const json created = body(r);
  EXPECT_EQ(r->get_header_value("Location"), "/sessions/" + created["id"].get<std::string>());
  const Image decoded = decode_png(encode_png(scene.image));
  const auto direct = guidance::analyze(*decomposer_, decoded, segmentation::DetectionMode::kOracle, scene.masks, created["id"]);
  EXPECT_EQ(created, guidance::session_to_json(direct));
}

TEST_F(ServerTest, RawPngUsesHeuristicDetection) {
  Image img(64, 64);
  for (int y = 20; y < 30; ++y) {
    for (int x = 20; x < 30; ++x) img.at(y, x, 0) = 1.0f;
  }
  const auto png = encode_png(img);
  const auto r = client_->Post("/sessions", std::string(png.begin(), png.end()), "image/png");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 201) << r->body;
  EXPECT_EQ(body(r)["objects"].size(), 1u);
}

TEST_F(ServerTest, GetSessionAndImage) {
  const auto scene = testing::three_object_scene();
  const json created = body(upload(scene));
  const std::string id = created["id"];
  const auto got = client_->Get("/sessions/" + id);
  ASSERT_EQ(got->status, 200);
  EXPECT_EQ(body(got), created);
  const auto image = client_->Get("/sessions/" + id + "/image.png");
  ASSERT_EQ(image->status, 200);
  EXPECT_EQ(image->get_header_value("Content-Type"), "image/png");
  const auto png = encode_png(scene.image);
  EXPECT_EQ(image->body, std::string(png.begin(), png.end()));
}

TEST_F(ServerTest, FlipTogglesAndIsInvolution) {
  const json created = body(upload(testing::three_object_scene()));
  const std::string id = created["id"];
  const bool before = created["objects"][1]["is_clutter"];
  const std::string path = "/sessions/" + id + "/objects/1/flip";
  const auto first = client_->Post(path);
  ASSERT_EQ(first->status, 200) << first->body;
  EXPECT_EQ(body(first)["is_clutter"].get<bool>(), !before);
  const json session = body(client_->Get("/sessions/" + id));
  EXPECT_TRUE(session["objects"][1]["overridden"].get<bool>());
  EXPECT_EQ(session["objects"][1]["is_clutter"].get<bool>(), !before);
  const auto second = client_->Post(path);
  EXPECT_EQ(body(second)["is_clutter"].get<bool>(), before);
  EXPECT_EQ(body(second)["mask_color"], created["objects"][1]["mask_color"]);
}

TEST_F(ServerTest, SuggestionsMatchLibrary) {
  const auto scene = testing::three_object_scene();
  const json created = body(upload(scene));
  for (int oid = 0; oid < 3; ++oid) {
    const auto r = client_->Get("/sessions/" + created["id"].get<std::string>() + "/objects/" + std::to_string(oid) +
                                "/suggestions");
    ASSERT_EQ(r->status, 200);
    const auto direct = guidance::suggestions_for_mask(scene.masks[static_cast<std::size_t>(oid)].mask);
    EXPECT_EQ(body(r)["kind"], guidance::suggestion_kind_name(direct.kind));
    EXPECT_EQ(body(r)["suggestions"], json(direct.items));
  }
}

TEST_F(ServerTest, CleanAndPreviewBytesMatchLibrary) {
  const auto scene = testing::three_object_scene();
  const json created = body(upload(scene));
  const std::string id = created["id"];
  EXPECT_EQ(client_->Get("/sessions/" + id + "/preview/capture.png")->status, 409);
  if (!created["objects"][1]["is_clutter"].get<bool>()) client_->Post("/sessions/" + id + "/objects/1/flip");
  const auto r = client_->Post("/sessions/" + id + "/clean", R"({"fidelity":"capture"})", "application/json");
  ASSERT_EQ(r->status, 200) << r->body;
  EXPECT_EQ(body(r)["preview_url"], "/sessions/" + id + "/preview/capture.png");
  const auto preview = client_->Get("/sessions/" + id + "/preview/capture.png");
  ASSERT_EQ(preview->status, 200);

  guidance::Session direct = guidance::analyze(*decomposer_, decode_png(encode_png(scene.image)),
                                               segmentation::DetectionMode::kOracle, scene.masks, id);
  if (!direct.objects[1].effective_clutter()) guidance::flip(direct, 1);
  const auto png = encode_png(guidance::clean(direct, *inpainter_, inpaint::Fidelity::kCapture));
  EXPECT_EQ(preview->body, std::string(png.begin(), png.end()));
  EXPECT_EQ(body(client_->Get("/sessions/" + id))["previews"]["capture"], "/sessions/" + id + "/preview/capture.png");
}

TEST_F(ServerTest, ErrorCodes) {
  auto code = [](const httplib::Result& r) { return json::parse(r->body)["code"].get<std::string>(); };
  auto r = client_->Get("/sessions/nope");
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(code(r), "session_not_found");

  const std::string id = body(upload(testing::three_object_scene()))["id"];
  r = client_->Post("/sessions/" + id + "/objects/42/flip");
  EXPECT_EQ(r->status, 404);
  EXPECT_EQ(code(r), "object_not_found");

  r = client_->Post("/sessions/" + id + "/clean", "{not json", "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(code(r), "malformed_json");
  r = client_->Post("/sessions/" + id + "/clean", R"({"fidelity":"ultra"})", "application/json");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(code(r), "invalid_fidelity");

  r = client_->Post("/sessions", "", "image/png");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(code(r), "empty_body");
  r = client_->Post("/sessions", "definitely not a png", "image/png");
  EXPECT_EQ(r->status, 422);
  EXPECT_EQ(code(r), "not_an_image");

  const auto png = encode_png(Image(16, 16));
  const std::string png_bytes(png.begin(), png.end());
  httplib::MultipartFormDataItems bad_masks = {
      {"image", png_bytes, "a.png", "image/png"}, {"masks", "[", "", "application/json"}};
  r = client_->Post("/sessions", bad_masks);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(code(r), "malformed_masks");
  const json wrong_size = json::array({{{"label", "x"}, {"mask", mask_to_rle(Mask(8, 8))}}});
  httplib::MultipartFormDataItems mismatched = {
      {"image", png_bytes, "a.png", "image/png"}, {"masks", wrong_size.dump(), "", "application/json"}};
  r = client_->Post("/sessions", mismatched);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(code(r), "malformed_masks");
  httplib::MultipartFormDataItems no_image = {{"masks", "[]", "", "application/json"}};
  r = client_->Post("/sessions", no_image);
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(code(r), "missing_image");

  r = client_->Get("/no/such/route");
  EXPECT_EQ(r->status, 404);
}

TEST_F(ServerTest, LruEvictsOldestSessions) {
  std::vector<std::string> ids;
  for (int i = 0; i < 5; ++i) ids.push_back(body(upload(testing::three_object_scene()))["id"]);
  EXPECT_EQ(service_->store().size(), 4u);
  EXPECT_EQ(client_->Get("/sessions/" + ids[0])->status, 404);
  EXPECT_EQ(client_->Get("/sessions/" + ids[4])->status, 200);
}

TEST_F(ServerTest, PersistedSessionsSurviveEviction) {
  stop();
  ServerConfig config;
  config.persist_dir = testing::scratch_dir("server_persist");
  start(config);
  std::vector<std::string> ids;
  for (int i = 0; i < 5; ++i) ids.push_back(body(upload(testing::three_object_scene()))["id"]);
  client_->Post("/sessions/" + ids[0] + "/objects/2/flip");
  for (int i = 1; i < 5; ++i) client_->Get("/sessions/" + ids[i]);
  const auto r = client_->Get("/sessions/" + ids[0]);
  ASSERT_EQ(r->status, 200);
  EXPECT_TRUE(body(r)["objects"][2]["overridden"].get<bool>());
}

TEST(SessionStoreTest, LruOrder) {
  SessionStore store(2);
  guidance::Session a;
  a.id = "a";
  guidance::Session b;
  b.id = "b";
  guidance::Session c;
  c.id = "c";
  store.put(a);
  store.put(b);
  ASSERT_TRUE(store.get("a"));  // a is now most recent
  store.put(c);
  EXPECT_TRUE(store.get("a"));
  EXPECT_FALSE(store.get("b"));
  EXPECT_TRUE(store.get("c"));
  EXPECT_EQ(store.size(), 2u);
}

}  // namespace
}  // namespace declutter::server
