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

#pragma once

#include <cstddef>
#include <filesystem>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "declutter/decomposer/model.hpp"
#include "declutter/guidance/session.hpp"
#include "declutter/inpaint/model.hpp"
#include "declutter/segmentation/segmentation.hpp"

namespace httplib {
class Server;
}

namespace declutter::server {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_sessions = 64;
  segmentation::DetectionMode detection = segmentation::DetectionMode::kHeuristic;
  double threshold = inpaint::kDefaultThreshold;
  /// Served at "/" when set.
  std::optional<std::filesystem::path> static_dir;
  /// Sessions are written here after every change and reloaded on a cache miss.
  std::optional<std::filesystem::path> persist_dir;
};

/// Error reply: HTTP status plus a machine-readable code.
struct ApiError {
  int status = 500;
  std::string code;
  std::string message;

  nlohmann::json to_json() const;
};

/// A session guarded by its own mutex.
struct SessionSlot {
  std::mutex mutex;
  guidance::Session session;
};

/// Least-recently-used session cache.
class SessionStore {
 public:
  explicit SessionStore(std::size_t capacity);

  /// Inserts and returns the slot, evicting the oldest entry when full.
  std::shared_ptr<SessionSlot> put(guidance::Session session);
  /// Null when absent. Marks the entry most recently used.
  std::shared_ptr<SessionSlot> get(const std::string& id);
  std::size_t size() const;

 private:
  using Entry = std::pair<std::string, std::shared_ptr<SessionSlot>>;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::list<Entry> order_;  // front = most recent
  std::unordered_map<std::string, std::list<Entry>::iterator> index_;
};

/// HTTP endpoints over guidance sessions. The models must outlive the service.
class Service {
 public:
  Service(const decomposer::DecomposerModel& decomposer, const inpaint::InpainterModel& inpainter,
          ServerConfig config);

  /// Registers every route, the error handlers and the optional static mount.
  void install(httplib::Server& server);
  SessionStore& store() { return store_; }
  const ServerConfig& config() const { return config_; }

 private:
  std::shared_ptr<SessionSlot> find(const std::string& id);
  void persist(const guidance::Session& session) const;

  const decomposer::DecomposerModel& decomposer_;
  const inpaint::InpainterModel& inpainter_;
  ServerConfig config_;
  SessionStore store_;
};

}  // namespace declutter::server
