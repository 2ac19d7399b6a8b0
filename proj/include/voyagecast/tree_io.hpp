#pragma once

#include <json.hpp>

#include "voyagecast/trees.hpp"

namespace voyagecast::trees {

// nlohmann prints doubles with the shortest round-tripping form, so every
// model below reloads bit-identically.
void to_json(nlohmann::json& j, const TreeConfig& c);
void from_json(const nlohmann::json& j, TreeConfig& c);
void to_json(nlohmann::json& j, const Tree& t);
void from_json(const nlohmann::json& j, Tree& t);
void to_json(nlohmann::json& j, const ForestModel& m);
void from_json(const nlohmann::json& j, ForestModel& m);
void to_json(nlohmann::json& j, const GbdtModel& m);
void from_json(const nlohmann::json& j, GbdtModel& m);
void to_json(nlohmann::json& j, const XgbModel& m);
void from_json(const nlohmann::json& j, XgbModel& m);
void to_json(nlohmann::json& j, const BoostConfig& c);
void from_json(const nlohmann::json& j, BoostConfig& c);

}  // namespace voyagecast::trees
