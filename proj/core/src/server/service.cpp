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

#include "declutter/server/service.hpp"

#include <stdexcept>
#include <utility>

#include "declutter/image.hpp"
#include "declutter/scenes/dataset.hpp"
#include "httplib.h"

namespace declutter::server {
namespace {

using json = nlohmann::json;

class ApiException : public std::runtime_error {
 public:
  explicit ApiException(ApiError error) : std::runtime_error(error.message), error_(std::move(error)) {}
  const ApiError& error() const { return error_; }

 private:
  ApiError error_;
};

[[noreturn]] void fail(int status, std::string code, std::string message) {
  throw ApiException(ApiError{status, std::move(code), std::move(message)});
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_png(httplib::Response& res, const Image& image) {
  const auto bytes = encode_png(image);
  res.status = 200;
  res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
}

Image decode_upload(const std::string& bytes) {
  if (bytes.empty()) fail(400, "empty_body", "request carries no image");
  try {
    return decode_png(bytes);
  } catch (const ImageError& e) {
    fail(422, "not_an_image", std::string("upload is not a PNG image: ") + e.what());
  }
}

std::vector<ObjectMask> parse_masks(const std::string& text, const Image& image) {
  std::vector<ObjectMask> masks;
  try {
    masks = scenes::masks_from_json(json::parse(text));
  } catch (const std::exception& e) {
    fail(400, "malformed_masks", std::string("masks field is not valid mask JSON: ") + e.what());
  }
  for (const auto& m : masks) {
    if (m.mask.height != image.height || m.mask.width != image.width) {
      fail(400, "malformed_masks", "mask " + std::to_string(m.id) + " does not match the image size");
    }
  }
  return masks;
}

int parse_object_id(const std::string& text) {
  try {
    std::size_t used = 0;
    const int id = std::stoi(text, &used);
    if (used == text.size()) return id;
  } catch (const std::exception&) {
  }
  fail(404, "object_not_found", "no object '" + text + "'");
}

inpaint::Fidelity parse_fidelity_or_fail(const std::string& text) {
  try {
    return inpaint::parse_fidelity(text);
  } catch (const std::invalid_argument& e) {
    fail(400, "invalid_fidelity", e.what());
  }
}

}  // namespace

json ApiError::to_json() const { return json{{"status", status}, {"code", code}, {"message", message}}; }

SessionStore::SessionStore(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("session store capacity must be positive");
}

std::shared_ptr<SessionSlot> SessionStore::put(guidance::Session session) {
  auto slot = std::make_shared<SessionSlot>();
  slot->session = std::move(session);
  const std::string id = slot->session.id;
  std::lock_guard lock(mutex_);
  if (auto it = index_.find(id); it != index_.end()) {
    order_.erase(it->second);
    index_.erase(it);
  }
  order_.emplace_front(id, slot);
  index_[id] = order_.begin();
  while (order_.size() > capacity_) {
    index_.erase(order_.back().first);
    order_.pop_back();
  }
  return slot;
}

std::shared_ptr<SessionSlot> SessionStore::get(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  order_.splice(order_.begin(), order_, it->second);
  return it->second->second;
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mutex_);
  return order_.size();
}

Service::Service(const decomposer::DecomposerModel& decomposer, const inpaint::InpainterModel& inpainter,
                 ServerConfig config)
    : decomposer_(decomposer), inpainter_(inpainter), config_(std::move(config)), store_(config_.max_sessions) {}

std::shared_ptr<SessionSlot> Service::find(const std::string& id) {
  if (auto slot = store_.get(id)) return slot;
  if (config_.persist_dir && id.find_first_of("/\\.") == std::string::npos &&
      std::filesystem::exists(*config_.persist_dir / id / "session.json")) {
    return store_.put(guidance::load_session(*config_.persist_dir, id));
  }
  fail(404, "session_not_found", "no session '" + id + "'");
}

void Service::persist(const guidance::Session& session) const {
  if (config_.persist_dir) guidance::save_session(*config_.persist_dir, session);
}

void Service::install(httplib::Server& server) {
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    ApiError error{500, "internal_error", "unexpected failure"};
    try {
      std::rethrow_exception(ep);
    } catch (const ApiException& e) {
      error = e.error();
    } catch (const std::exception& e) {
      error.message = e.what();
    } catch (...) {
    }
    reply_json(res, error.status, error.to_json());
  });
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const bool missing = res.status == 404;
    ApiError error{res.status, missing ? "not_found" : "http_error",
                   missing ? "no route for " + req.method + " " + req.path : "request failed"};
    reply_json(res, res.status, error.to_json());
  });

  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    reply_json(res, 200, json{{"status", "ok"}});
  });

  server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    Image image;
    std::optional<std::vector<ObjectMask>> masks;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("image")) fail(400, "missing_image", "multipart upload needs an 'image' field");
      image = decode_upload(req.get_file_value("image").content);
      if (req.has_file("masks")) masks = parse_masks(req.get_file_value("masks").content, image);
    } else {
      image = decode_upload(req.body);
    }
    guidance::Session session =
        masks ? guidance::analyze(decomposer_, image, segmentation::DetectionMode::kOracle,
                                  std::span<const ObjectMask>(*masks))
              : guidance::analyze(decomposer_, image, config_.detection);
    const json body = guidance::session_to_json(session);
    persist(session);
    res.set_header("Location", "/sessions/" + session.id);
    store_.put(std::move(session));
    reply_json(res, 201, body);
  });

  server.Get(R"(/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    auto slot = find(req.matches[1]);
    std::lock_guard lock(slot->mutex);
    reply_json(res, 200, guidance::session_to_json(slot->session));
  });

  server.Post(R"(/sessions/([^/]+)/objects/([^/]+)/flip)", [this](const httplib::Request& req,
                                                                  httplib::Response& res) {
    auto slot = find(req.matches[1]);
    const int oid = parse_object_id(req.matches[2]);
    std::lock_guard lock(slot->mutex);
    try {
      guidance::flip(slot->session, oid);
    } catch (const guidance::UnknownObject& e) {
      fail(404, "object_not_found", e.what());
    }
    persist(slot->session);
    reply_json(res, 200, guidance::object_to_json(slot->session.object(oid)));
  });

  server.Get(R"(/sessions/([^/]+)/objects/([^/]+)/suggestions)", [this](const httplib::Request& req,
                                                                        httplib::Response& res) {
    auto slot = find(req.matches[1]);
    const int oid = parse_object_id(req.matches[2]);
    std::lock_guard lock(slot->mutex);
    guidance::Suggestions s;
    try {
      s = guidance::suggest(slot->session, oid);
    } catch (const guidance::UnknownObject& e) {
      fail(404, "object_not_found", e.what());
    }
    reply_json(res, 200, json{{"kind", guidance::suggestion_kind_name(s.kind)}, {"suggestions", s.items}});
  });

  server.Post(R"(/sessions/([^/]+)/clean)", [this](const httplib::Request& req, httplib::Response& res) {
    auto slot = find(req.matches[1]);
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      fail(400, "malformed_json", std::string("body is not JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("fidelity") || !body["fidelity"].is_string()) {
      fail(400, "malformed_json", "body must be {\"fidelity\": \"capture\"|\"high\"}");
    }
    const inpaint::Fidelity fidelity = parse_fidelity_or_fail(body["fidelity"].get<std::string>());
    std::lock_guard lock(slot->mutex);
    guidance::clean(slot->session, inpainter_, fidelity, config_.threshold);
    persist(slot->session);
    reply_json(res, 200, json{{"preview_url", guidance::preview_url(slot->session, fidelity)}});
  });

  server.Get(R"(/sessions/([^/]+)/preview/([^/]+)\.png)", [this](const httplib::Request& req,
                                                                 httplib::Response& res) {
    auto slot = find(req.matches[1]);
    const inpaint::Fidelity fidelity = parse_fidelity_or_fail(req.matches[2]);
    std::lock_guard lock(slot->mutex);
    auto it = slot->session.previews.find(fidelity);
    if (it == slot->session.previews.end()) {
      fail(409, "preview_not_ready", "no " + std::string(inpaint::fidelity_name(fidelity)) +
                                         " preview; POST /sessions/" + slot->session.id + "/clean first");
    }
    reply_png(res, it->second);
  });

  server.Get(R"(/sessions/([^/]+)/image\.png)", [this](const httplib::Request& req, httplib::Response& res) {
    auto slot = find(req.matches[1]);
    std::lock_guard lock(slot->mutex);
    reply_png(res, slot->session.image);
  });

  if (config_.static_dir && !server.set_mount_point("/", config_.static_dir->string())) {
    throw std::runtime_error("static directory " + config_.static_dir->string() + " does not exist");
  }
}

}  // namespace declutter::server
