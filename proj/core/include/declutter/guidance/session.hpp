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

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "declutter/decomposer/analysis.hpp"
#include "declutter/decomposer/model.hpp"
#include "declutter/image.hpp"
#include "declutter/inpaint/inpaint.hpp"
#include "declutter/inpaint/model.hpp"
#include "declutter/segmentation/segmentation.hpp"

namespace declutter::guidance {

class UnknownObject : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

enum class SuggestionKind { kBoundary, kInterior };
std::string_view suggestion_kind_name(SuggestionKind kind);

struct Suggestions {
  SuggestionKind kind = SuggestionKind::kInterior;
  std::vector<std::string> items;
};

/// Share of min(H, W) within which a bounding box counts as touching the edge.
inline constexpr double kBoundaryMarginFraction = 0.05;

/// Boundary advice when the mask's bounding box is strictly closer than the
/// margin to any edge, interior advice otherwise.
Suggestions suggestions_for_mask(const Mask& mask);

struct SessionObject {
  ObjectMask object;
  decomposer::ObjectContribution contribution;
  std::optional<bool> user_override;  // forced clutter flag

  bool effective_clutter() const { return user_override.value_or(contribution.q < 0.0); }
};

struct Session {
  std::string id;
  Image image;
  std::vector<SessionObject> objects;
  decomposer::ScorePair overall;
  std::map<inpaint::Fidelity, Image> previews;
  std::chrono::system_clock::time_point created_at;

  /// Throws UnknownObject.
  SessionObject& object(int object_id);
  const SessionObject& object(int object_id) const;
};

/// Random 16-hex-digit id.
std::string new_session_id();

/// Detects objects, scores their blurred sub-images and classifies them. An
/// empty `id` draws a fresh one.
Session analyze(const decomposer::DecomposerModel& model, const Image& image, segmentation::DetectionMode mode,
                std::optional<std::span<const ObjectMask>> oracle_masks = std::nullopt, std::string id = {});

Suggestions suggest(const Session& session, int object_id);

/// Negates the effective class, drops cached previews and returns the new class.
bool flip(Session& session, int object_id);

/// Union of effective-clutter masks; empty mask when there is none.
Mask clutter_mask(const Session& session);

/// Cached per fidelity until the next flip. Returns the input image when no
/// object is effective clutter.
const Image& clean(Session& session, const inpaint::InpainterModel& model, inpaint::Fidelity fidelity,
                   double threshold = inpaint::kDefaultThreshold);

/// Overlay colour reported to clients.
std::string_view mask_color(bool is_clutter);

std::string preview_url(const Session& session, inpaint::Fidelity fidelity);

nlohmann::json object_to_json(const SessionObject& object);
nlohmann::json session_to_json(const Session& session);

/// Writes <dir>/<id>/{session.json,image.png,preview_<fidelity>.png}. Previews are
/// stored as 8-bit PNG.
void save_session(const std::filesystem::path& dir, const Session& session);
/// Reads a session written by save_session from <dir>/<id>.
Session load_session(const std::filesystem::path& dir, std::string_view id);

}  // namespace declutter::guidance
