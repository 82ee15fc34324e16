#include "vsgrasp/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/SVD>

#include "vsgrasp/error.hpp"

namespace vsgrasp {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr double kDegToRad = M_PI / 180.0;

struct Location {
  std::size_t line = 1;
  std::size_t column = 1;
};

Location location_of_offset(const std::string& text, std::size_t offset) {
  Location loc;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++loc.line;
      loc.column = 1;
    } else {
      ++loc.column;
    }
  }
  return loc;
}

// Reads typed fields out of the document and reports failures at the line of
// the offending key. Keys along `path` are searched in order, so nested fields
// resolve to the occurrence inside their parent.
class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::size_t offset = 0;
    bool found = false;
    for (const auto& key : path) {
      const auto pos = text_.find("\"" + key + "\"", offset);
      if (pos == std::string::npos) {
        break;
      }
      offset = pos;
      found = true;
    }
    const Location loc = location_of_offset(text_, found ? offset : 0);
    std::string dotted;
    for (const auto& key : path) {
      dotted += (dotted.empty() ? "" : ".") + key;
    }
    throw Error(ErrorCode::ScenarioInvalid, source_ + ":" + std::to_string(loc.line) + ":" +
                                                std::to_string(loc.column) + ": field '" + dotted +
                                                "': " + what);
  }

  void check_keys(const json& obj, const std::vector<std::string>& path,
                  const std::set<std::string>& allowed) const {
    if (!obj.is_object()) {
      fail(path, "expected an object");
    }
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) {
        auto p = path;
        p.push_back(key);
        fail(p, "unknown field");
      }
    }
  }

  double number(const json& obj, std::vector<std::string> path, const std::string& key) const {
    path.push_back(key);
    if (!obj.contains(key)) {
      fail(path, "missing required field");
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      fail(path, "expected a number");
    }
    return v.get<double>();
  }

  double number_or(const json& obj, const std::vector<std::string>& path, const std::string& key,
                   double fallback) const {
    return obj.contains(key) ? number(obj, path, key) : fallback;
  }

  std::string string_or(const json& obj, std::vector<std::string> path, const std::string& key,
                        const std::string& fallback) const {
    if (!obj.contains(key)) {
      return fallback;
    }
    path.push_back(key);
    if (!obj.at(key).is_string()) {
      fail(path, "expected a string");
    }
    return obj.at(key).get<std::string>();
  }

  Eigen::Vector3d vec3(const json& v, const std::vector<std::string>& path) const {
    if (!v.is_array() || v.size() != 3) {
      fail(path, "expected an array of 3 numbers");
    }
    Eigen::Vector3d out;
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) {
        fail(path, "expected an array of 3 numbers");
      }
      out(i) = v[i].get<double>();
    }
    return out;
  }

  Eigen::Vector3d vec3_field(const json& obj, std::vector<std::string> path,
                             const std::string& key) const {
    path.push_back(key);
    if (!obj.contains(key)) {
      fail(path, "missing required field");
    }
    return vec3(obj.at(key), path);
  }

  std::vector<Eigen::Vector3d> points(const json& obj, const std::string& key, bool required) const {
    std::vector<Eigen::Vector3d> out;
    if (!obj.contains(key)) {
      if (required) {
        fail({key}, "missing required field");
      }
      return out;
    }
    const json& arr = obj.at(key);
    if (!arr.is_array()) {
      fail({key}, "expected an array of [x, y, z] points");
    }
    for (const auto& p : arr) {
      out.push_back(vec3(p, {key}));
    }
    return out;
  }

  PoseSpec pose(const json& obj, const std::string& key, bool required) const {
    PoseSpec p;
    if (!obj.contains(key)) {
      if (required) {
        fail({key}, "missing required field");
      }
      return p;
    }
    const json& v = obj.at(key);
    check_keys(v, {key}, {"rotvec_deg", "translation_m"});
    if (v.contains("rotvec_deg")) {
      p.rotvec_deg = vec3(v.at("rotvec_deg"), {key, "rotvec_deg"});
    }
    if (v.contains("translation_m")) {
      p.translation_m = vec3(v.at("translation_m"), {key, "translation_m"});
    }
    return p;
  }

  CameraSpec camera(const json& v, const std::string& rig, std::size_t index) const {
    const std::vector<std::string> path{rig};
    check_keys(v, path,
               {"intrinsics", "image_size_px", "position_m", "look_at_m", "up", "world_to_camera"});
    CameraSpec c;
    if (!v.contains("intrinsics")) {
      fail(path, "camera " + std::to_string(index) + " has no intrinsics");
    }
    const json& k = v.at("intrinsics");
    auto kp = path;
    kp.push_back("intrinsics");
    check_keys(k, kp, {"alpha_u_px", "alpha_v_px", "u0_px", "v0_px"});
    c.intrinsics.alpha_u = number(k, kp, "alpha_u_px");
    c.intrinsics.alpha_v = number(k, kp, "alpha_v_px");
    c.intrinsics.u0 = number(k, kp, "u0_px");
    c.intrinsics.v0 = number(k, kp, "v0_px");
    if (v.contains("image_size_px")) {
      const json& sz = v.at("image_size_px");
      if (!sz.is_array() || sz.size() != 2 || !sz[0].is_number() || !sz[1].is_number()) {
        fail({rig, "image_size_px"}, "expected [width, height]");
      }
      c.sensor.width_px = sz[0].get<double>();
      c.sensor.height_px = sz[1].get<double>();
    }
    if (v.contains("world_to_camera")) {
      if (v.contains("position_m") || v.contains("look_at_m")) {
        fail({rig, "world_to_camera"}, "give either world_to_camera or position_m/look_at_m");
      }
      c.use_look_at = false;
      c.world_to_camera = pose(v, "world_to_camera", true);
    } else {
      c.use_look_at = true;
      c.position_m = vec3_field(v, path, "position_m");
      c.look_at_m = vec3_field(v, path, "look_at_m");
      if (v.contains("up")) {
        c.up = vec3(v.at("up"), {rig, "up"});
      }
    }
    return c;
  }

  std::vector<CameraSpec> rig(const json& obj, const std::string& key, bool required) const {
    std::vector<CameraSpec> out;
    if (!obj.contains(key)) {
      if (required) {
        fail({key}, "missing required field");
      }
      return out;
    }
    const json& arr = obj.at(key);
    if (!arr.is_array()) {
      fail({key}, "expected an array of cameras");
    }
    for (std::size_t i = 0; i < arr.size(); ++i) {
      out.push_back(camera(arr[i], key, i));
    }
    return out;
  }

 private:
  const std::string& text_;
  std::string source_;
};

ordered_json vec_json(const Eigen::Vector3d& v) { return ordered_json::array({v(0), v(1), v(2)}); }

ordered_json pose_json(const PoseSpec& p) {
  ordered_json j;
  j["rotvec_deg"] = vec_json(p.rotvec_deg);
  j["translation_m"] = vec_json(p.translation_m);
  return j;
}

ordered_json camera_json(const CameraSpec& c) {
  ordered_json j;
  j["intrinsics"] = {{"alpha_u_px", c.intrinsics.alpha_u},
                     {"alpha_v_px", c.intrinsics.alpha_v},
                     {"u0_px", c.intrinsics.u0},
                     {"v0_px", c.intrinsics.v0}};
  j["image_size_px"] = ordered_json::array({c.sensor.width_px, c.sensor.height_px});
  if (c.use_look_at) {
    j["position_m"] = vec_json(c.position_m);
    j["look_at_m"] = vec_json(c.look_at_m);
    j["up"] = vec_json(c.up);
  } else {
    j["world_to_camera"] = pose_json(c.world_to_camera);
  }
  return j;
}

struct FieldViolation {
  std::string field;
  std::string what;
};

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw FieldViolation{field, what};
}

void check_invariants(const Scenario& s);

}  // namespace

RigidTransform PoseSpec::transform() const {
  return RigidTransform::from_rotation_vector(rotvec_deg * kDegToRad, translation_m);
}

CameraPose CameraSpec::pose() const {
  CameraPose c;
  c.intrinsics = intrinsics;
  c.sensor = sensor;
  c.extrinsics = use_look_at ? look_at(position_m, look_at_m, up) : world_to_camera.transform();
  return c;
}

RigidTransform Scenario::ideal_gripper_pose() const {
  return compose(object_motion.transform(), goal_gripper_pose.transform());
}

ControlGains Scenario::gains(Eigen::Index rows) const {
  ControlGains g;
  g.g = gain_per_s;
  g.damping = damping;
  if (!weight_diag.empty()) {
    Eigen::VectorXd diag(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
      diag(i) = weight_diag[static_cast<std::size_t>(i) % weight_diag.size()];
    }
    g.weight = diag.asDiagonal();
  }
  return g;
}

void Scenario::validate() const {
  try {
    check_invariants(*this);
  } catch (const FieldViolation& v) {
    throw Error(ErrorCode::ScenarioInvalid, "field '" + v.field + "': " + v.what);
  }
}

namespace {

void check_invariants(const Scenario& s) {
  const auto& gripper_points_m = s.gripper_points_m;
  const auto& object_points_m = s.object_points_m;
  const auto& basis_indices = s.basis_indices;
  const auto& runtime_rig = s.runtime_rig;
  const auto& planning_rig = s.planning_rig;
  const auto& weight_diag = s.weight_diag;
  const int cameras_used = s.cameras_used;
  if (gripper_points_m.size() < 3) {
    invalid("gripper_points_m", "at least 3 gripper points are required");
  }
  {
    Eigen::MatrixXd centered(3, static_cast<Eigen::Index>(gripper_points_m.size()));
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& p : gripper_points_m) {
      mean += p;
    }
    mean /= static_cast<double>(gripper_points_m.size());
    for (std::size_t i = 0; i < gripper_points_m.size(); ++i) {
      centered.col(static_cast<Eigen::Index>(i)) = gripper_points_m[i] - mean;
    }
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(centered).singularValues();
    if (sv(0) == 0.0 || sv(1) < 1e-9 * sv(0)) {
      invalid("gripper_points_m", "gripper points are collinear");
    }
  }
  if (object_points_m.size() < 5) {
    invalid("object_points_m", "at least 5 object points are required");
  }
  std::set<int> distinct;
  for (const int i : basis_indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= object_points_m.size()) {
      invalid("basis_indices", "index " + std::to_string(i) + " is out of range");
    }
    distinct.insert(i);
  }
  if (distinct.size() != 5) {
    invalid("basis_indices", "indices must be distinct");
  }
  if (runtime_rig.empty() || runtime_rig.size() > 2) {
    invalid("runtime_rig", "one or two runtime cameras are required");
  }
  if (cameras_used < 1 || cameras_used > 2 ||
      static_cast<std::size_t>(cameras_used) > runtime_rig.size()) {
    invalid("cameras_used", "must be 1 or 2 and not exceed the runtime rig size");
  }
  if (s.setpoint_source == SetpointSource::transfer) {
    if (planning_rig.size() != 2) {
      invalid("planning_rig", "set-point transfer needs a two-camera planning rig");
    }
    if (runtime_rig.size() != 2) {
      invalid("runtime_rig", "set-point transfer needs a two-camera runtime rig");
    }
  }
  for (const auto* rig : {&planning_rig, &runtime_rig}) {
    for (const auto& c : *rig) {
      if (!(c.intrinsics.alpha_u > 0.0) || !(c.intrinsics.alpha_v > 0.0)) {
        invalid(rig == &planning_rig ? "planning_rig" : "runtime_rig", "alpha_u/alpha_v must be > 0");
      }
      if (!(c.sensor.width_px > 0.0) || !(c.sensor.height_px > 0.0)) {
        invalid(rig == &planning_rig ? "planning_rig" : "runtime_rig", "image size must be > 0");
      }
    }
  }
  if (!(s.gain_per_s > 0.0)) invalid("gains.g_per_s", "must be > 0");
  if (!(s.damping >= 0.0)) invalid("gains.damping", "must be >= 0");
  for (const double w : weight_diag) {
    if (!(w >= 0.0)) invalid("gains.weight_diag", "entries must be >= 0");
  }
  const std::size_t rows = 2 * gripper_points_m.size();
  if (!weight_diag.empty() && weight_diag.size() != rows &&
      weight_diag.size() != rows * static_cast<std::size_t>(cameras_used)) {
    invalid("gains.weight_diag", "needs 2 entries per gripper point");
  }
  if (!(s.noise_px >= 0.0)) invalid("noise_px", "must be >= 0");
  if (!(s.servo_noise_px >= 0.0)) invalid("servo_noise_px", "must be >= 0");
  if (!(s.actuation_noise_rel >= 0.0)) invalid("actuation_noise_rel", "must be >= 0");
  if (!(s.pose_init_perturbation.rotation_deg >= 0.0) ||
      !(s.pose_init_perturbation.translation_m >= 0.0)) {
    invalid("pose_init_perturbation", "magnitudes must be >= 0");
  }
  if (!(s.dt_s > 0.0)) invalid("dt_s", "must be > 0");
  if (s.max_steps < 0) invalid("max_steps", "must be >= 0");
  if (!(s.convergence_eps_px > 0.0)) invalid("convergence_eps_px", "must be > 0");
}

}  // namespace

std::string_view to_string(JacobianMode mode) {
  return mode == JacobianMode::constant ? "constant" : "variable";
}

std::string_view to_string(SetpointSource source) {
  return source == SetpointSource::goal_pose ? "goal_pose" : "transfer";
}

std::string_view to_string(TransferRoute route) {
  return route == TransferRoute::direct ? "direct" : "basis";
}

JacobianMode parse_jacobian_mode(std::string_view s) {
  if (s == "constant") return JacobianMode::constant;
  if (s == "variable") return JacobianMode::variable;
  throw Error(ErrorCode::ScenarioInvalid, "jacobian mode must be 'constant' or 'variable', got '" +
                                              std::string(s) + "'");
}

Scenario parse_scenario(const std::string& text, const std::string& source_name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const Location loc = location_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorCode::ScenarioInvalid, source_name + ":" + std::to_string(loc.line) + ":" +
                                                std::to_string(loc.column) + ": malformed JSON");
  }
  const Reader r(text, source_name);
  r.check_keys(doc, {},
               {"name", "gripper_points_m", "object_points_m", "scene_points_m", "basis_indices",
                "planning_rig", "runtime_rig", "initial_gripper_pose", "goal_gripper_pose",
                "object_motion", "setpoint_source", "transfer_route", "gains", "jacobian_mode",
                "cameras_used", "noise_px", "servo_noise_px", "actuation_noise_rel",
                "pose_init_perturbation", "dt_s", "max_steps", "convergence_eps_px", "seed"});

  Scenario s;
  s.name = r.string_or(doc, {}, "name", s.name);
  s.gripper_points_m = r.points(doc, "gripper_points_m", true);
  s.object_points_m = r.points(doc, "object_points_m", true);
  s.scene_points_m = r.points(doc, "scene_points_m", false);
  if (doc.contains("basis_indices")) {
    const json& b = doc.at("basis_indices");
    if (!b.is_array() || b.size() != 5) {
      r.fail({"basis_indices"}, "expected 5 integer indices");
    }
    for (std::size_t i = 0; i < 5; ++i) {
      if (!b[i].is_number_integer()) {
        r.fail({"basis_indices"}, "expected 5 integer indices");
      }
      s.basis_indices[i] = b[i].get<int>();
    }
  }
  s.planning_rig = r.rig(doc, "planning_rig", false);
  s.runtime_rig = r.rig(doc, "runtime_rig", true);
  s.initial_gripper_pose = r.pose(doc, "initial_gripper_pose", true);
  s.goal_gripper_pose = r.pose(doc, "goal_gripper_pose", true);
  s.object_motion = r.pose(doc, "object_motion", false);

  const std::string source = r.string_or(doc, {}, "setpoint_source", "goal_pose");
  if (source == "goal_pose") {
    s.setpoint_source = SetpointSource::goal_pose;
  } else if (source == "transfer") {
    s.setpoint_source = SetpointSource::transfer;
  } else {
    r.fail({"setpoint_source"}, "expected 'goal_pose' or 'transfer'");
  }
  const std::string route = r.string_or(doc, {}, "transfer_route", "direct");
  if (route == "direct") {
    s.transfer_route = TransferRoute::direct;
  } else if (route == "basis") {
    s.transfer_route = TransferRoute::basis;
  } else {
    r.fail({"transfer_route"}, "expected 'direct' or 'basis'");
  }

  if (doc.contains("gains")) {
    const json& g = doc.at("gains");
    r.check_keys(g, {"gains"}, {"g_per_s", "damping", "weight_diag"});
    s.gain_per_s = r.number_or(g, {"gains"}, "g_per_s", s.gain_per_s);
    s.damping = r.number_or(g, {"gains"}, "damping", s.damping);
    if (g.contains("weight_diag")) {
      const json& w = g.at("weight_diag");
      if (!w.is_array()) {
        r.fail({"gains", "weight_diag"}, "expected an array of numbers");
      }
      for (const auto& x : w) {
        if (!x.is_number()) {
          r.fail({"gains", "weight_diag"}, "expected an array of numbers");
        }
        s.weight_diag.push_back(x.get<double>());
      }
    }
  }

  const std::string mode = r.string_or(doc, {}, "jacobian_mode", "variable");
  if (mode != "constant" && mode != "variable") {
    r.fail({"jacobian_mode"}, "expected 'constant' or 'variable'");
  }
  s.jacobian_mode = parse_jacobian_mode(mode);

  if (doc.contains("cameras_used")) {
    if (!doc.at("cameras_used").is_number_integer()) {
      r.fail({"cameras_used"}, "expected 1 or 2");
    }
    s.cameras_used = doc.at("cameras_used").get<int>();
  }
  s.noise_px = r.number_or(doc, {}, "noise_px", s.noise_px);
  s.servo_noise_px = r.number_or(doc, {}, "servo_noise_px", s.servo_noise_px);
  s.actuation_noise_rel = r.number_or(doc, {}, "actuation_noise_rel", s.actuation_noise_rel);
  if (doc.contains("pose_init_perturbation")) {
    const json& p = doc.at("pose_init_perturbation");
    r.check_keys(p, {"pose_init_perturbation"}, {"rotation_deg", "translation_m"});
    s.pose_init_perturbation.rotation_deg =
        r.number_or(p, {"pose_init_perturbation"}, "rotation_deg", s.pose_init_perturbation.rotation_deg);
    s.pose_init_perturbation.translation_m =
        r.number_or(p, {"pose_init_perturbation"}, "translation_m", s.pose_init_perturbation.translation_m);
  }
  s.dt_s = r.number_or(doc, {}, "dt_s", s.dt_s);
  if (doc.contains("max_steps")) {
    if (!doc.at("max_steps").is_number_integer()) {
      r.fail({"max_steps"}, "expected an integer");
    }
    s.max_steps = doc.at("max_steps").get<int>();
  }
  s.convergence_eps_px = r.number_or(doc, {}, "convergence_eps_px", s.convergence_eps_px);
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned()) {
      r.fail({"seed"}, "expected a non-negative integer");
    }
    s.seed = doc.at("seed").get<std::uint64_t>();
  }

  try {
    check_invariants(s);
  } catch (const FieldViolation& v) {
    std::vector<std::string> path;
    std::stringstream ss(v.field);
    for (std::string part; std::getline(ss, part, '.');) {
      path.push_back(part);
    }
    r.fail(path, v.what);
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ScenarioInvalid, "cannot open scenario file '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

ordered_json scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["name"] = s.name;
  auto points = [](const std::vector<Eigen::Vector3d>& pts) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : pts) {
      arr.push_back(vec_json(p));
    }
    return arr;
  };
  j["gripper_points_m"] = points(s.gripper_points_m);
  j["object_points_m"] = points(s.object_points_m);
  j["scene_points_m"] = points(s.scene_points_m);
  j["basis_indices"] = s.basis_indices;
  auto rig = [](const std::vector<CameraSpec>& cams) {
    ordered_json arr = ordered_json::array();
    for (const auto& c : cams) {
      arr.push_back(camera_json(c));
    }
    return arr;
  };
  j["planning_rig"] = rig(s.planning_rig);
  j["runtime_rig"] = rig(s.runtime_rig);
  j["initial_gripper_pose"] = pose_json(s.initial_gripper_pose);
  j["goal_gripper_pose"] = pose_json(s.goal_gripper_pose);
  j["object_motion"] = pose_json(s.object_motion);
  j["setpoint_source"] = std::string(to_string(s.setpoint_source));
  j["transfer_route"] = std::string(to_string(s.transfer_route));
  j["gains"] = {{"g_per_s", s.gain_per_s}, {"damping", s.damping}, {"weight_diag", s.weight_diag}};
  j["jacobian_mode"] = std::string(to_string(s.jacobian_mode));
  j["cameras_used"] = s.cameras_used;
  j["noise_px"] = s.noise_px;
  j["servo_noise_px"] = s.servo_noise_px;
  j["actuation_noise_rel"] = s.actuation_noise_rel;
  j["pose_init_perturbation"] = {{"rotation_deg", s.pose_init_perturbation.rotation_deg},
                                 {"translation_m", s.pose_init_perturbation.translation_m}};
  j["dt_s"] = s.dt_s;
  j["max_steps"] = s.max_steps;
  j["convergence_eps_px"] = s.convergence_eps_px;
  j["seed"] = s.seed;
  return j;
}

std::string dump_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

}  // namespace vsgrasp
