#include "driveagent/scene.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace driveagent {

namespace {

// ---- checked JSON access with field-path diagnostics ----

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(path + ": " + what);
}

const Json& field(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

double num(const Json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected number");
  double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "expected finite number");
  return d;
}

int integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected integer");
  return v.get<int>();
}

std::string text(const Json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected string");
  return v.get<std::string>();
}

const Json& array(const Json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected array");
  return v;
}

Position position_from(const Json& v, const std::string& path) {
  Position p;
  p.x = num(field(v, "x", path), path + ".x");
  p.y = num(field(v, "y", path), path + ".y");
  return p;
}

Json position_to(const Position& p) { return Json{{"x", p.x}, {"y", p.y}}; }

std::string hex_encode(const std::vector<uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

std::vector<uint8_t> hex_decode(const std::string& hex, const std::string& path) {
  if (hex.size() % 2 != 0) fail(path, "hex string length must be even");
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail(path, std::string("invalid hex digit '") + c + "'");
  };
  std::vector<uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

int grid_cells(double lo, double hi, double res) {
  return static_cast<int>(std::llround((hi - lo) / res));
}

int axis_cell(double v, double lo, double res, int n) {
  int i = static_cast<int>(std::floor((v - lo) / res));
  return std::clamp(i, 0, n - 1);
}

}  // namespace

int OccupancyField::nx() const { return grid_cells(x_lo, x_hi, resolution); }
int OccupancyField::ny() const { return grid_cells(y_lo, y_hi, resolution); }

bool OccupancyField::contains(const Position& p) const {
  return p.x >= x_lo && p.x <= x_hi && p.y >= y_lo && p.y <= y_hi;
}

std::size_t OccupancyField::index(int ix, int iy, int t) const {
  return (static_cast<std::size_t>(t) * ny() + iy) * nx() + ix;
}

std::pair<int, int> OccupancyField::cell_of(const Position& p) const {
  return {axis_cell(p.x, x_lo, resolution, nx()), axis_cell(p.y, y_lo, resolution, ny())};
}

int MapLayers::nx() const { return grid_cells(x_lo, x_hi, resolution); }
int MapLayers::ny() const { return grid_cells(y_lo, y_hi, resolution); }

bool MapLayers::contains(const Position& p) const {
  return p.x >= x_lo && p.x <= x_hi && p.y >= y_lo && p.y <= y_hi;
}

std::pair<int, int> MapLayers::cell_of(const Position& p) const {
  return {axis_cell(p.x, x_lo, resolution, nx()), axis_cell(p.y, y_lo, resolution, ny())};
}

const SceneObject* Scene::find_object(const std::string& oid) const {
  for (const auto& o : objects) {
    if (o.id == oid) return &o;
  }
  return nullptr;
}

const Trajectory* Scene::find_trajectory(const std::string& object_id) const {
  for (const auto& t : trajectories) {
    if (t.object_id == object_id) return &t;
  }
  return nullptr;
}

const QAItem* Scene::find_qa(const std::string& qa_id) const {
  for (const auto& q : qa_items) {
    if (q.id == qa_id) return &q;
  }
  return nullptr;
}

std::vector<std::string> validate_scene(const Scene& scene) {
  std::vector<std::string> errors;
  auto err = [&](const std::string& m) { errors.push_back(m); };

  if (scene.id.empty()) err("id: must be non-empty");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    std::string p = "objects[" + std::to_string(i) + "]";
    if (o.id.empty()) err(p + ".id: must be non-empty");
    if (!ids.insert(o.id).second) err(p + ".id: duplicate id '" + o.id + "'");
    if (!std::isfinite(o.position.x) || !std::isfinite(o.position.y)) {
      err(p + ".position: must be finite");
    }
    if (!(o.width > 0.0)) err(p + ".size.width: must be > 0");
    if (!(o.length > 0.0)) err(p + ".size.length: must be > 0");
  }

  for (std::size_t i = 0; i < scene.trajectories.size(); ++i) {
    const auto& t = scene.trajectories[i];
    std::string p = "trajectories[" + std::to_string(i) + "]";
    if (!scene.find_object(t.object_id)) {
      err(p + ".object_id: unknown object '" + t.object_id + "'");
    }
    int prev = 0;
    for (std::size_t w = 0; w < t.waypoints.size(); ++w) {
      const auto& wp = t.waypoints[w];
      std::string wpath = p + ".waypoints[" + std::to_string(w) + "]";
      if (wp.timestep < 1) err(wpath + ".timestep: must be >= 1");
      if (wp.timestep <= prev) err(wpath + ".timestep: must be strictly increasing");
      prev = wp.timestep;
    }
  }

  const auto& occ = scene.occupancy;
  if (!(occ.resolution > 0.0)) err("occupancy.resolution: must be > 0");
  if (occ.timesteps < 1) err("occupancy.timesteps: must be >= 1");
  if (!(occ.x_lo < occ.x_hi) || !(occ.y_lo < occ.y_hi)) {
    err("occupancy: extents must satisfy lo < hi");
  } else if (occ.resolution > 0.0) {
    std::size_t want = static_cast<std::size_t>(occ.nx()) * occ.ny() *
                       std::max(occ.timesteps, 0);
    if (occ.values.size() != want) {
      err("occupancy.values: size " + std::to_string(occ.values.size()) +
          " inconsistent with extents/resolution (want " + std::to_string(want) + ")");
    }
  }
  for (std::size_t i = 0; i < occ.values.size(); ++i) {
    if (!(occ.values[i] >= 0.0 && occ.values[i] <= 1.0)) {
      err("occupancy.values[" + std::to_string(i) + "]: must be in [0,1]");
      break;
    }
  }

  const auto& map = scene.map;
  if (!(map.resolution > 0.0)) err("map.resolution: must be > 0");
  if (!(map.x_lo < map.x_hi) || !(map.y_lo < map.y_hi)) {
    err("map: extents must satisfy lo < hi");
  } else if (map.resolution > 0.0) {
    std::size_t want = static_cast<std::size_t>(map.nx()) * map.ny();
    if (map.drivable.size() != want) err("map.drivable: grid size mismatch");
    if (map.lane_category.size() != want) err("map.lane_category: grid size mismatch");
  }
  if (map.shoulder_lines) {
    if (!std::isfinite(map.shoulder_lines->first) || !std::isfinite(map.shoulder_lines->second)) {
      err("map.shoulder_lines: must be finite");
    } else if (!(map.shoulder_lines->first < map.shoulder_lines->second)) {
      err("map.shoulder_lines: left offset must be < right offset");
    }
  }
  for (double d : map.divider_lines) {
    if (!std::isfinite(d)) {
      err("map.divider_lines: must be finite");
      break;
    }
  }

  const auto& raster = scene.front_raster;
  if (raster.width < 1 || raster.height < 1) {
    err("front_raster: width and height must be >= 1");
  } else if (raster.pixels.size() !=
             static_cast<std::size_t>(raster.width) * raster.height) {
    err("front_raster.pixels: pixel count must equal width*height");
  }

  std::set<std::string> qa_ids;
  for (std::size_t i = 0; i < scene.qa_items.size(); ++i) {
    const auto& qa = scene.qa_items[i];
    std::string p = "qa_items[" + std::to_string(i) + "]";
    if (qa.id.empty()) err(p + ".id: must be non-empty");
    if (!qa_ids.insert(qa.id).second) err(p + ".id: duplicate id '" + qa.id + "'");
    if (!qa.options.empty()) {
      std::set<std::string> labels;
      for (const auto& opt : qa.options) labels.insert(opt.label);
      if (labels.size() != qa.options.size()) err(p + ".options: duplicate labels");
      if (!labels.count(qa.ground_truth_answer)) {
        err(p + ".ground_truth_answer: must equal one option label");
      }
    }
  }

  return errors;
}

Scene scene_from_json(const Json& doc) {
  Scene scene;
  int version = integer(field(doc, "format_version", "scene"), "scene.format_version");
  if (version != 1) fail("scene.format_version", "unsupported version " + std::to_string(version));
  scene.id = text(field(doc, "id", "scene"), "scene.id");

  const Json& objs = array(field(doc, "objects", "scene"), "scene.objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    std::string p = "objects[" + std::to_string(i) + "]";
    const Json& o = objs[i];
    SceneObject obj;
    obj.id = text(field(o, "id", p), p + ".id");
    obj.category = text(field(o, "category", p), p + ".category");
    obj.position = position_from(field(o, "position", p), p + ".position");
    const Json& size = field(o, "size", p);
    obj.width = num(field(size, "width", p + ".size"), p + ".size.width");
    obj.length = num(field(size, "length", p + ".size"), p + ".size.length");
    scene.objects.push_back(std::move(obj));
  }

  const Json& trajs = array(field(doc, "trajectories", "scene"), "scene.trajectories");
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    std::string p = "trajectories[" + std::to_string(i) + "]";
    const Json& t = trajs[i];
    Trajectory traj;
    traj.object_id = text(field(t, "object_id", p), p + ".object_id");
    const Json& wps = array(field(t, "waypoints", p), p + ".waypoints");
    for (std::size_t w = 0; w < wps.size(); ++w) {
      std::string wp_path = p + ".waypoints[" + std::to_string(w) + "]";
      TrajectoryWaypoint wp;
      wp.timestep = integer(field(wps[w], "timestep", wp_path), wp_path + ".timestep");
      wp.position = position_from(field(wps[w], "position", wp_path), wp_path + ".position");
      traj.waypoints.push_back(wp);
    }
    scene.trajectories.push_back(std::move(traj));
  }

  {
    const Json& occ = field(doc, "occupancy", "scene");
    const Json& xe = array(field(occ, "x_extent", "occupancy"), "occupancy.x_extent");
    const Json& ye = array(field(occ, "y_extent", "occupancy"), "occupancy.y_extent");
    if (xe.size() != 2 || ye.size() != 2) fail("occupancy", "extents must be [lo, hi]");
    scene.occupancy.x_lo = num(xe[0], "occupancy.x_extent[0]");
    scene.occupancy.x_hi = num(xe[1], "occupancy.x_extent[1]");
    scene.occupancy.y_lo = num(ye[0], "occupancy.y_extent[0]");
    scene.occupancy.y_hi = num(ye[1], "occupancy.y_extent[1]");
    scene.occupancy.resolution = num(field(occ, "resolution", "occupancy"), "occupancy.resolution");
    scene.occupancy.timesteps = integer(field(occ, "timesteps", "occupancy"), "occupancy.timesteps");
    const Json& values = array(field(occ, "values", "occupancy"), "occupancy.values");
    for (std::size_t t = 0; t < values.size(); ++t) {
      const Json& plane = array(values[t], "occupancy.values[" + std::to_string(t) + "]");
      for (std::size_t iy = 0; iy < plane.size(); ++iy) {
        const Json& row = array(plane[iy], "occupancy.values row");
        for (std::size_t ix = 0; ix < row.size(); ++ix) {
          scene.occupancy.values.push_back(num(row[ix], "occupancy.values cell"));
        }
      }
    }
  }

  {
    const Json& map = field(doc, "map", "scene");
    const Json& xe = array(field(map, "x_extent", "map"), "map.x_extent");
    const Json& ye = array(field(map, "y_extent", "map"), "map.y_extent");
    if (xe.size() != 2 || ye.size() != 2) fail("map", "extents must be [lo, hi]");
    scene.map.x_lo = num(xe[0], "map.x_extent[0]");
    scene.map.x_hi = num(xe[1], "map.x_extent[1]");
    scene.map.y_lo = num(ye[0], "map.y_extent[0]");
    scene.map.y_hi = num(ye[1], "map.y_extent[1]");
    scene.map.resolution = num(field(map, "resolution", "map"), "map.resolution");
    const Json& drv = array(field(map, "drivable", "map"), "map.drivable");
    for (std::size_t iy = 0; iy < drv.size(); ++iy) {
      const Json& row = array(drv[iy], "map.drivable row");
      for (const auto& cell : row) {
        if (!cell.is_boolean()) fail("map.drivable", "expected boolean cells");
        scene.map.drivable.push_back(cell.get<bool>() ? 1 : 0);
      }
    }
    const Json& lanes = array(field(map, "lane_category", "map"), "map.lane_category");
    for (std::size_t iy = 0; iy < lanes.size(); ++iy) {
      const Json& row = array(lanes[iy], "map.lane_category row");
      for (const auto& cell : row) {
        scene.map.lane_category.push_back(text(cell, "map.lane_category cell"));
      }
    }
    const Json& shoulders = field(map, "shoulder_lines", "map");
    if (!shoulders.is_null()) {
      const Json& s = array(shoulders, "map.shoulder_lines");
      if (s.size() != 2) fail("map.shoulder_lines", "expected [left, right]");
      scene.map.shoulder_lines = {num(s[0], "map.shoulder_lines[0]"),
                                  num(s[1], "map.shoulder_lines[1]")};
    }
    const Json& dividers = array(field(map, "divider_lines", "map"), "map.divider_lines");
    for (std::size_t i = 0; i < dividers.size(); ++i) {
      scene.map.divider_lines.push_back(num(dividers[i], "map.divider_lines"));
    }
    const Json& crossings = array(field(map, "crossings", "map"), "map.crossings");
    for (std::size_t i = 0; i < crossings.size(); ++i) {
      scene.map.crossings.push_back(
          position_from(crossings[i], "map.crossings[" + std::to_string(i) + "]"));
    }
  }

  {
    const Json& raster = field(doc, "front_raster", "scene");
    scene.front_raster.width = integer(field(raster, "width", "front_raster"), "front_raster.width");
    scene.front_raster.height =
        integer(field(raster, "height", "front_raster"), "front_raster.height");
    scene.front_raster.pixels =
        hex_decode(text(field(raster, "pixels", "front_raster"), "front_raster.pixels"),
                   "front_raster.pixels");
  }

  const Json& qas = array(field(doc, "qa_items", "scene"), "scene.qa_items");
  for (std::size_t i = 0; i < qas.size(); ++i) {
    std::string p = "qa_items[" + std::to_string(i) + "]";
    const Json& q = qas[i];
    QAItem qa;
    qa.id = text(field(q, "id", p), p + ".id");
    qa.question = text(field(q, "question", p), p + ".question");
    const Json& options = field(q, "options", p);
    if (!options.is_null()) {
      for (const auto& opt : array(options, p + ".options")) {
        QAOption o;
        o.label = text(field(opt, "label", p + ".options[]"), p + ".options[].label");
        o.text = text(field(opt, "text", p + ".options[]"), p + ".options[].text");
        qa.options.push_back(std::move(o));
      }
    }
    qa.ground_truth_answer =
        text(field(q, "ground_truth_answer", p), p + ".ground_truth_answer");
    const Json& ref = field(q, "reference_trace", p);
    if (!ref.is_null()) qa.reference_trace = ref;
    scene.qa_items.push_back(std::move(qa));
  }

  auto errors = validate_scene(scene);
  if (!errors.empty()) {
    std::string msg = "invalid scene '" + scene.id + "':";
    for (const auto& e : errors) msg += "\n  " + e;
    throw Error(msg);
  }
  return scene;
}

Scene load_scene(const std::string& path) {
  std::string raw = read_file(path);
  Json doc;
  try {
    doc = Json::parse(raw);
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset -> line number for the diagnostic
    std::size_t line = 1;
    for (std::size_t i = 0; i < raw.size() && i + 1 < e.byte; ++i) {
      if (raw[i] == '\n') ++line;
    }
    throw Error(path + ":" + std::to_string(line) + ": JSON parse error: " + e.what());
  }
  try {
    return scene_from_json(doc);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

Json scene_to_json(const Scene& scene) {
  Json doc;
  doc["format_version"] = 1;
  doc["id"] = scene.id;

  Json objs = Json::array();
  for (const auto& o : scene.objects) {
    objs.push_back(Json{{"id", o.id},
                        {"category", o.category},
                        {"position", position_to(o.position)},
                        {"size", Json{{"width", o.width}, {"length", o.length}}}});
  }
  doc["objects"] = std::move(objs);

  Json trajs = Json::array();
  for (const auto& t : scene.trajectories) {
    Json wps = Json::array();
    for (const auto& wp : t.waypoints) {
      wps.push_back(Json{{"timestep", wp.timestep}, {"position", position_to(wp.position)}});
    }
    trajs.push_back(Json{{"object_id", t.object_id}, {"waypoints", std::move(wps)}});
  }
  doc["trajectories"] = std::move(trajs);

  {
    const auto& occ = scene.occupancy;
    Json values = Json::array();
    for (int t = 0; t < occ.timesteps; ++t) {
      Json plane = Json::array();
      for (int iy = 0; iy < occ.ny(); ++iy) {
        Json row = Json::array();
        for (int ix = 0; ix < occ.nx(); ++ix) row.push_back(occ.values[occ.index(ix, iy, t)]);
        plane.push_back(std::move(row));
      }
      values.push_back(std::move(plane));
    }
    doc["occupancy"] = Json{{"x_extent", Json::array({occ.x_lo, occ.x_hi})},
                            {"y_extent", Json::array({occ.y_lo, occ.y_hi})},
                            {"resolution", occ.resolution},
                            {"timesteps", occ.timesteps},
                            {"values", std::move(values)}};
  }

  {
    const auto& map = scene.map;
    Json drv = Json::array();
    Json lanes = Json::array();
    for (int iy = 0; iy < map.ny(); ++iy) {
      Json drow = Json::array();
      Json lrow = Json::array();
      for (int ix = 0; ix < map.nx(); ++ix) {
        std::size_t i = static_cast<std::size_t>(iy) * map.nx() + ix;
        drow.push_back(map.drivable[i] != 0);
        lrow.push_back(map.lane_category[i]);
      }
      drv.push_back(std::move(drow));
      lanes.push_back(std::move(lrow));
    }
    Json shoulders;
    if (map.shoulder_lines) {
      shoulders = Json::array({map.shoulder_lines->first, map.shoulder_lines->second});
    }
    Json crossings = Json::array();
    for (const auto& c : map.crossings) crossings.push_back(position_to(c));
    doc["map"] = Json{{"x_extent", Json::array({map.x_lo, map.x_hi})},
                      {"y_extent", Json::array({map.y_lo, map.y_hi})},
                      {"resolution", map.resolution},
                      {"drivable", std::move(drv)},
                      {"lane_category", std::move(lanes)},
                      {"shoulder_lines", std::move(shoulders)},
                      {"divider_lines", map.divider_lines},
                      {"crossings", std::move(crossings)}};
  }

  doc["front_raster"] = Json{{"width", scene.front_raster.width},
                             {"height", scene.front_raster.height},
                             {"pixels", hex_encode(scene.front_raster.pixels)}};

  Json qas = Json::array();
  for (const auto& qa : scene.qa_items) {
    Json options;
    if (!qa.options.empty()) {
      options = Json::array();
      for (const auto& o : qa.options) options.push_back(Json{{"label", o.label}, {"text", o.text}});
    }
    Json item = Json{{"id", qa.id},
                     {"question", qa.question},
                     {"options", std::move(options)},
                     {"ground_truth_answer", qa.ground_truth_answer},
                     {"reference_trace", qa.reference_trace ? *qa.reference_trace : Json()}};
    qas.push_back(std::move(item));
  }
  doc["qa_items"] = std::move(qas);
  return doc;
}

void save_scene(const Scene& scene, const std::string& path) {
  write_file(path, scene_to_json(scene).dump(2) + "\n");
}

std::vector<SceneObject> objects_in_rect(const Scene& scene, double x_lo, double x_hi,
                                         double y_lo, double y_hi) {
  if (x_lo > x_hi || y_lo > y_hi) {
    throw Error("objects_in_rect: inverted bounds");
  }
  std::vector<SceneObject> out;
  for (const auto& o : scene.objects) {
    if (o.position.x >= x_lo && o.position.x <= x_hi && o.position.y >= y_lo &&
        o.position.y <= y_hi) {
      out.push_back(o);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const SceneObject& a, const SceneObject& b) { return a.id < b.id; });
  return out;
}

std::optional<double> occupancy_at(const Scene& scene, const Position& p, int t) {
  const auto& occ = scene.occupancy;
  if (t < 0 || t >= occ.timesteps || !occ.contains(p)) return std::nullopt;
  auto [ix, iy] = occ.cell_of(p);
  return occ.values[occ.index(ix, iy, t)];
}

std::optional<bool> drivable_at(const Scene& scene, const Position& p) {
  const auto& map = scene.map;
  if (!map.contains(p)) return std::nullopt;
  auto [ix, iy] = map.cell_of(p);
  return map.drivable[static_cast<std::size_t>(iy) * map.nx() + ix] != 0;
}

std::optional<std::string> lane_category_at(const Scene& scene, const Position& p) {
  const auto& map = scene.map;
  if (!map.contains(p)) return std::nullopt;
  auto [ix, iy] = map.cell_of(p);
  return map.lane_category[static_cast<std::size_t>(iy) * map.nx() + ix];
}

std::optional<std::pair<double, double>> shoulder_distances_at(const Scene& scene,
                                                               const Position& p) {
  const auto& map = scene.map;
  if (!map.contains(p)) return std::nullopt;
  const auto& s = *map.shoulder_lines;
  return std::make_pair(p.x - s.first, s.second - p.x);
}

std::optional<DividerDistances> divider_distances_at(const Scene& scene, const Position& p) {
  const auto& map = scene.map;
  if (!map.contains(p)) return std::nullopt;
  DividerDistances d;
  for (double div : map.divider_lines) {
    if (div <= p.x) {
      double dist = p.x - div;
      if (!d.left || dist < *d.left) d.left = dist;
    }
    if (div >= p.x) {
      double dist = div - p.x;
      if (!d.right || dist < *d.right) d.right = dist;
    }
  }
  return d;
}

}  // namespace driveagent
