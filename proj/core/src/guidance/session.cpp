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

#include "declutter/guidance/session.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

#include "declutter/scenes/dataset.hpp"

namespace declutter::guidance {
namespace {

using json = nlohmann::json;

const std::vector<std::string>& boundary_suggestions() {
  static const std::vector<std::string> items{"zoom in", "change orientation portrait→landscape",
                                              "adjust camera angle"};
  return items;
}

const std::vector<std::string>& interior_suggestions() {
  static const std::vector<std::string> items{"move the object out of the scene", "remove via inpainting"};
  return items;
}

constexpr inpaint::Fidelity kFidelities[] = {inpaint::Fidelity::kCapture, inpaint::Fidelity::kHigh};

std::int64_t to_millis(std::chrono::system_clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

}  // namespace

std::string_view suggestion_kind_name(SuggestionKind kind) {
  return kind == SuggestionKind::kBoundary ? "boundary" : "interior";
}

Suggestions suggestions_for_mask(const Mask& mask) {
  const BoundingBox box = bounding_box(mask);
  const double margin = kBoundaryMarginFraction * std::min(mask.height, mask.width);
  bool boundary = false;
  if (!box.empty()) {
    const int gap = std::min({box.min_x, box.min_y, mask.width - 1 - box.max_x, mask.height - 1 - box.max_y});
    boundary = gap < margin;
  }
  if (boundary) return {SuggestionKind::kBoundary, boundary_suggestions()};
  return {SuggestionKind::kInterior, interior_suggestions()};
}

SessionObject& Session::object(int object_id) {
  for (auto& o : objects) {
    if (o.object.id == object_id) return o;
  }
  throw UnknownObject("session " + id + " has no object " + std::to_string(object_id));
}

const SessionObject& Session::object(int object_id) const {
  return const_cast<Session*>(this)->object(object_id);
}

std::string new_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

Session analyze(const decomposer::DecomposerModel& model, const Image& image, segmentation::DetectionMode mode,
                std::optional<std::span<const ObjectMask>> oracle_masks, std::string id) {
  if (image.empty()) throw ImageError("analyze: empty image");
  Session session;
  session.id = id.empty() ? new_session_id() : std::move(id);
  session.image = image;
  session.created_at = std::chrono::system_clock::now();

  std::vector<ObjectMask> masks = segmentation::detect_objects(image, mode, oracle_masks);
  if (masks.empty()) return session;
  const decomposer::ContributionReport report = decomposer::contribution(model, image, masks);
  session.overall = report.overall;
  for (std::size_t i = 0; i < masks.size(); ++i) {
    session.objects.push_back({std::move(masks[i]), report.objects[i], std::nullopt});
  }
  return session;
}

Suggestions suggest(const Session& session, int object_id) {
  return suggestions_for_mask(session.object(object_id).object.mask);
}

bool flip(Session& session, int object_id) {
  SessionObject& o = session.object(object_id);
  const bool next = !o.effective_clutter();
  o.user_override = next;
  session.previews.clear();
  return next;
}

Mask clutter_mask(const Session& session) {
  Mask out(session.image.height, session.image.width);
  for (const auto& o : session.objects) {
    if (o.effective_clutter()) out = mask_union(out, o.object.mask);
  }
  return out;
}

const Image& clean(Session& session, const inpaint::InpainterModel& model, inpaint::Fidelity fidelity,
                   double threshold) {
  if (auto it = session.previews.find(fidelity); it != session.previews.end()) return it->second;
  const Mask mask = clutter_mask(session);
  Image preview = mask.none() ? session.image
                              : inpaint::iterative_inpaint(model, session.image, mask,
                                                           inpaint::max_iterations(fidelity), threshold)
                                    .image;
  return session.previews.emplace(fidelity, std::move(preview)).first->second;
}

std::string_view mask_color(bool is_clutter) { return is_clutter ? "#ff3b30" : "#34c759"; }

std::string preview_url(const Session& session, inpaint::Fidelity fidelity) {
  return "/sessions/" + session.id + "/preview/" + std::string(inpaint::fidelity_name(fidelity)) + ".png";
}

json object_to_json(const SessionObject& o) {
  const bool clutter = o.effective_clutter();
  return json{
      {"id", o.object.id},
      {"label", o.object.label},
      {"q", o.contribution.q},
      {"beta", o.contribution.beta},
      {"gamma", o.contribution.gamma},
      {"s_aes_sub", o.contribution.sub.aes},
      {"s_content_sub", o.contribution.sub.content},
      {"is_clutter", clutter},
      {"overridden", o.user_override.has_value()},
      {"mask_rle", mask_to_rle(o.object.mask)},
      {"suggestions_kind", suggestion_kind_name(suggestions_for_mask(o.object.mask).kind)},
      {"mask_color", mask_color(clutter)},
  };
}

json session_to_json(const Session& session) {
  json objects = json::array();
  for (const auto& o : session.objects) objects.push_back(object_to_json(o));
  json previews = json::object();
  for (const auto& [fidelity, image] : session.previews) {
    previews[std::string(inpaint::fidelity_name(fidelity))] = preview_url(session, fidelity);
  }
  return json{{"id", session.id},
              {"width", session.image.width},
              {"height", session.image.height},
              {"objects", std::move(objects)},
              {"previews", std::move(previews)}};
}

void save_session(const std::filesystem::path& dir, const Session& session) {
  const auto root = dir / session.id;
  std::filesystem::create_directories(root);
  json doc = session_to_json(session);
  doc["overall"] = {{"aes", session.overall.aes}, {"content", session.overall.content}};
  doc["created_at_ms"] = to_millis(session.created_at);
  for (std::size_t i = 0; i < session.objects.size(); ++i) {
    const auto& o = session.objects[i];
    doc["objects"][i]["model_is_clutter"] = o.contribution.is_clutter;
    doc["objects"][i]["contribution_label"] = o.contribution.label;
  }
  write_png(root / "image.png", session.image);
  for (inpaint::Fidelity f : kFidelities) {
    const auto path = root / ("preview_" + std::string(inpaint::fidelity_name(f)) + ".png");
    if (auto it = session.previews.find(f); it != session.previews.end()) {
      write_png(path, it->second);
    } else {
      std::filesystem::remove(path);
    }
  }
  std::ofstream out(root / "session.json", std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + (root / "session.json").string());
  out << doc.dump(2) << '\n';
}

Session load_session(const std::filesystem::path& dir, std::string_view id) {
  const auto root = dir / std::string(id);
  std::ifstream in(root / "session.json");
  if (!in) throw std::runtime_error("cannot read " + (root / "session.json").string());
  const json doc = json::parse(in);

  Session session;
  session.id = doc.at("id").get<std::string>();
  session.image = read_png(root / "image.png");
  session.overall = {doc.at("overall").at("aes").get<double>(), doc.at("overall").at("content").get<double>()};
  session.created_at = std::chrono::system_clock::time_point(
      std::chrono::milliseconds(doc.at("created_at_ms").get<std::int64_t>()));
  for (const auto& j : doc.at("objects")) {
    SessionObject o;
    o.object = {j.at("id").get<int>(), j.at("label").get<std::string>(), mask_from_rle(j.at("mask_rle"))};
    o.contribution.object_id = o.object.id;
    o.contribution.label = j.at("contribution_label").get<std::string>();
    o.contribution.q = j.at("q").get<double>();
    o.contribution.beta = j.at("beta").get<double>();
    o.contribution.gamma = j.at("gamma").get<double>();
    o.contribution.sub = {j.at("s_aes_sub").get<double>(), j.at("s_content_sub").get<double>()};
    o.contribution.is_clutter = j.at("model_is_clutter").get<bool>();
    if (j.at("overridden").get<bool>()) o.user_override = j.at("is_clutter").get<bool>();
    session.objects.push_back(std::move(o));
  }
  for (inpaint::Fidelity f : kFidelities) {
    const auto path = root / ("preview_" + std::string(inpaint::fidelity_name(f)) + ".png");
    if (std::filesystem::exists(path)) session.previews.emplace(f, read_png(path));
  }
  return session;
}

}  // namespace declutter::guidance
