#include "cdpr/model.hpp"

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cdpr/error.hpp"

namespace cdpr {

namespace {

using nlohmann::json;

const std::set<std::string> kRobotKeys = {
    "anchors",       "ee_width_mm",   "ee_height_mm", "ee_mass_kg",
    "tension_min_n", "tension_max_n", "dof",          "gravity_mps2"};

double require_number(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  const json& v = doc.at(key);
  if (!v.is_number()) throw ParseError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

}  // namespace

Vec2 RobotDescription::attachment(std::size_t i) const {
  Vec2 centroid;
  for (const auto& a : anchors) centroid += a;
  centroid *= 1.0 / static_cast<double>(anchors.size());
  const Vec2& a = anchors.at(i);
  const int sx = sign_of(a.x - centroid.x);
  int sy = sign_of(a.y - centroid.y);
  if (sy == 0) sy = 1;
  return {sx * ee_width / 2.0, sy * ee_height / 2.0};
}

RobotDescription reference_robot() {
  RobotDescription d;
  d.anchors = {{0.0, 1500.0}, {1500.0, 1500.0}};
  d.ee_width = 120.0;
  d.ee_height = 120.0;
  d.ee_mass = 1.0;
  d.gravity = 9.81;
  d.tension_min = 0.0;
  d.tension_max = 20.0;
  d.dof = 2;
  return d;
}

std::vector<Violation> validate(const RobotDescription& desc) {
  std::vector<Violation> out;
  auto error = [&](std::string msg) {
    out.push_back({Violation::Severity::kError, std::move(msg)});
  };
  if (desc.cable_count() < 1) error("cable_count must be >= 1");
  for (const auto& a : desc.anchors) {
    if (!a.finite()) {
      error("anchors must be finite");
      break;
    }
  }
  if (!(desc.ee_width > 0.0)) error("ee_width must be > 0");
  if (!(desc.ee_height > 0.0)) error("ee_height must be > 0");
  if (!(desc.ee_mass > 0.0)) error("ee_mass must be > 0");
  if (!(std::isfinite(desc.gravity) && desc.gravity >= 0.0)) error("gravity must be finite and >= 0");
  if (!(desc.tension_min >= 0.0)) error("tension_min must be >= 0");
  if (!(desc.tension_min < desc.tension_max)) error("tension_min must be < tension_max");
  if (desc.dof != 2 && desc.dof != 3 && desc.dof != 6) error("dof must be one of 2, 3, 6");
  if (desc.dof == 2 && desc.cable_count() == 2 && desc.anchors[0].y != desc.anchors[1].y) {
    out.push_back({Violation::Severity::kWarning,
                   "planar 2-cable anchors should share the same y"});
  }
  return out;
}

RobotDescription robot_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("robot description: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("robot description must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kRobotKeys.count(key)) throw ParseError("unknown key '" + key + "'");
  }

  RobotDescription d;
  if (!doc.contains("anchors") || !doc["anchors"].is_array())
    throw ParseError("key 'anchors' must be an array of [x, y]");
  for (const auto& a : doc["anchors"]) {
    if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
      throw ParseError("each anchor must be [x, y]");
    d.anchors.push_back({a[0].get<double>(), a[1].get<double>()});
  }
  d.ee_width = require_number(doc, "ee_width_mm");
  d.ee_height = require_number(doc, "ee_height_mm");
  d.ee_mass = require_number(doc, "ee_mass_kg");
  d.tension_min = require_number(doc, "tension_min_n");
  d.tension_max = require_number(doc, "tension_max_n");
  if (!doc.contains("dof") || !doc["dof"].is_number_integer())
    throw ParseError("key 'dof' must be an integer");
  d.dof = doc["dof"].get<int>();
  if (doc.contains("gravity_mps2")) d.gravity = require_number(doc, "gravity_mps2");

  std::string problems;
  for (const auto& v : validate(d)) {
    if (!v.is_error()) continue;
    if (!problems.empty()) problems += "; ";
    problems += v.message;
  }
  if (!problems.empty()) throw ValidationError(problems);
  return d;
}

std::string robot_to_json(const RobotDescription& desc) {
  json doc;
  json anchors = json::array();
  for (const auto& a : desc.anchors) anchors.push_back({a.x, a.y});
  doc["anchors"] = anchors;
  doc["ee_width_mm"] = desc.ee_width;
  doc["ee_height_mm"] = desc.ee_height;
  doc["ee_mass_kg"] = desc.ee_mass;
  doc["gravity_mps2"] = desc.gravity;
  doc["tension_min_n"] = desc.tension_min;
  doc["tension_max_n"] = desc.tension_max;
  doc["dof"] = desc.dof;
  return doc.dump(2);
}

RobotDescription load_robot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open robot description '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return robot_from_json(ss.str());
}

void save_robot(const RobotDescription& desc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write robot description '" + path.string() + "'");
  out << robot_to_json(desc) << '\n';
}

double robot_hash(const RobotDescription& desc) {
  // FNV-1a over the canonical (sorted-key) serialisation.
  const std::string canon = json::parse(robot_to_json(desc)).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return static_cast<double>(h & ((std::uint64_t{1} << 52) - 1));
}

}  // namespace cdpr
