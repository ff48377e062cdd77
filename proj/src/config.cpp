#include "teleop/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "teleop/digest.hpp"
#include "teleop/error.hpp"

namespace teleop {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double to_double(std::string_view tok) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || std::isnan(v)) {
    throw std::invalid_argument("expected a number, got '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<double> numbers(std::string_view value, std::size_t expected) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < value.size()) {
    while (pos < value.size() && (value[pos] == ' ' || value[pos] == '\t')) ++pos;
    if (pos >= value.size()) break;
    std::size_t end = pos;
    while (end < value.size() && value[end] != ' ' && value[end] != '\t') ++end;
    out.push_back(to_double(value.substr(pos, end - pos)));
    pos = end;
  }
  if (out.size() != expected) {
    throw std::invalid_argument("expected " + std::to_string(expected) + " numbers, got " +
                                std::to_string(out.size()));
  }
  return out;
}

double number(std::string_view v) { return numbers(v, 1)[0]; }

bool boolean(std::string_view v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw std::invalid_argument("expected true or false, got '" + std::string(v) + "'");
}

std::string join(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

Rect rect_from(std::string_view v) {
  const auto n = numbers(v, 4);
  return {n[0], n[1], n[2], n[3]};
}

std::string rect_text(const Rect& r) { return join({r.x_min, r.y_min, r.x_max, r.y_max}); }

struct Field {
  std::string key;
  std::function<void(Config&, std::string_view)> set;
  std::function<std::string(const Config&)> get;
};

void add_pid(std::vector<Field>& f, const char* name, PidConfig CascadeConfig::*loop) {
  const std::string gains_key = std::string("pid.") + name;
  const std::string limits_key = gains_key + ".limits";
  f.push_back({gains_key,
               [loop](Config& c, std::string_view v) {
                 const auto n = numbers(v, 3);
                 (c.cascade.*loop).gains = {n[0], n[1], n[2]};
               },
               [loop](const Config& c) {
                 const auto& g = (c.cascade.*loop).gains;
                 return join({g.p, g.i, g.d});
               }});
  f.push_back({limits_key,
               [loop](Config& c, std::string_view v) {
                 const auto n = numbers(v, 2);
                 (c.cascade.*loop).integral_limit = n[0];
                 (c.cascade.*loop).output_limit = n[1];
               },
               [loop](const Config& c) {
                 return join({(c.cascade.*loop).integral_limit, (c.cascade.*loop).output_limit});
               }});
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back({"pose.filter_window",
                 [](Config& c, std::string_view v) {
                   const double n = number(v);
                   if (n < 1 || n != std::floor(n) || n > 1000) {
                     throw std::invalid_argument("filter window must be an integer in 1..1000");
                   }
                   c.filter_window = static_cast<std::size_t>(n);
                 },
                 [](const Config& c) { return std::to_string(c.filter_window); }});
    f.push_back({"pose.sign",
                 [](Config& c, std::string_view v) {
                   const auto n = numbers(v, 4);
                   for (std::size_t i = 0; i < 4; ++i) {
                     if (n[i] != 1.0 && n[i] != -1.0) throw std::invalid_argument("signs must be 1 or -1");
                     c.pose_sign[i] = n[i];
                   }
                 },
                 [](const Config& c) {
                   const auto& s = c.pose_sign;
                   return join({s[0], s[1], s[2], s[3]});
                 }});
    f.push_back({"zone1.outer", [](Config& c, std::string_view v) { c.zone1.outer = rect_from(v); },
                 [](const Config& c) { return rect_text(c.zone1.outer); }});
    f.push_back({"zone1.dead", [](Config& c, std::string_view v) { c.zone1.dead = rect_from(v); },
                 [](const Config& c) { return rect_text(c.zone1.dead); }});
    f.push_back({"zone2.outer", [](Config& c, std::string_view v) { c.zone2.outer = rect_from(v); },
                 [](const Config& c) { return rect_text(c.zone2.outer); }});
    f.push_back({"zone2.dead", [](Config& c, std::string_view v) { c.zone2.dead = rect_from(v); },
                 [](const Config& c) { return rect_text(c.zone2.dead); }});
    f.push_back({"refgen.continuous",
                 [](Config& c, std::string_view v) { c.mapping.continuous = boolean(v); },
                 [](const Config& c) { return fmt_bool(c.mapping.continuous); }});
    f.push_back({"refgen.clamp_outside",
                 [](Config& c, std::string_view v) { c.mapping.clamp_outside = boolean(v); },
                 [](const Config& c) { return fmt_bool(c.mapping.clamp_outside); }});
    f.push_back({"scaling.z", [](Config& c, std::string_view v) { c.scaling.s_z = number(v); },
                 [](const Config& c) { return format_double(c.scaling.s_z); }});
    f.push_back({"scaling.phi", [](Config& c, std::string_view v) { c.scaling.s_phi = number(v); },
                 [](const Config& c) { return format_double(c.scaling.s_phi); }});
    f.push_back({"scaling.theta", [](Config& c, std::string_view v) { c.scaling.s_theta = number(v); },
                 [](const Config& c) { return format_double(c.scaling.s_theta); }});
    f.push_back({"scaling.psi", [](Config& c, std::string_view v) { c.scaling.s_psi = number(v); },
                 [](const Config& c) { return format_double(c.scaling.s_psi); }});
    f.push_back({"joystick.map",
                 [](Config& c, std::string_view v) {
                   const auto n = numbers(v, 4);
                   for (std::size_t i = 0; i < 4; ++i) {
                     if (n[i] != std::floor(n[i])) throw std::invalid_argument("axis index must be an integer");
                     c.joy_map.source[i] = static_cast<int>(n[i]);
                   }
                 },
                 [](const Config& c) {
                   const auto& s = c.joy_map.source;
                   return join({double(s[0]), double(s[1]), double(s[2]), double(s[3])});
                 }});
    f.push_back({"joystick.sign",
                 [](Config& c, std::string_view v) {
                   const auto n = numbers(v, 4);
                   for (std::size_t i = 0; i < 4; ++i) c.joy_map.sign[i] = n[i];
                 },
                 [](const Config& c) {
                   const auto& s = c.joy_map.sign;
                   return join({s[0], s[1], s[2], s[3]});
                 }});
    f.push_back({"vehicle.mass", [](Config& c, std::string_view v) { c.vehicle.mass = number(v); },
                 [](const Config& c) { return format_double(c.vehicle.mass); }});
    f.push_back({"vehicle.inertia",
                 [](Config& c, std::string_view v) {
                   const auto n = numbers(v, 3);
                   c.vehicle.inertia = {n[0], n[1], n[2]};
                 },
                 [](const Config& c) {
                   const auto& i = c.vehicle.inertia;
                   return join({i.x(), i.y(), i.z()});
                 }});
    f.push_back({"vehicle.thrust_max", [](Config& c, std::string_view v) { c.vehicle.thrust_max = number(v); },
                 [](const Config& c) { return format_double(c.vehicle.thrust_max); }});
    f.push_back({"vehicle.drag", [](Config& c, std::string_view v) { c.vehicle.drag = number(v); },
                 [](const Config& c) { return format_double(c.vehicle.drag); }});
    f.push_back({"vehicle.gravity", [](Config& c, std::string_view v) { c.vehicle.gravity = number(v); },
                 [](const Config& c) { return format_double(c.vehicle.gravity); }});
    f.push_back({"vehicle.torque_gain",
                 [](Config& c, std::string_view v) {
                   const auto n = numbers(v, 3);
                   c.vehicle.torque_gain = {n[0], n[1], n[2]};
                 },
                 [](const Config& c) {
                   const auto& g = c.vehicle.torque_gain;
                   return join({g.x(), g.y(), g.z()});
                 }});
    f.push_back({"vehicle.thrust_gain", [](Config& c, std::string_view v) { c.vehicle.thrust_gain = number(v); },
                 [](const Config& c) { return format_double(c.vehicle.thrust_gain); }});
    add_pid(f, "roll", &CascadeConfig::roll);
    add_pid(f, "roll_rate", &CascadeConfig::roll_rate);
    add_pid(f, "pitch", &CascadeConfig::pitch);
    add_pid(f, "pitch_rate", &CascadeConfig::pitch_rate);
    add_pid(f, "yaw", &CascadeConfig::yaw);
    add_pid(f, "yaw_rate", &CascadeConfig::yaw_rate);
    add_pid(f, "z", &CascadeConfig::z);
    add_pid(f, "z_rate", &CascadeConfig::z_rate);
    f.push_back({"session.physics_dt", [](Config& c, std::string_view v) { c.physics_dt = number(v); },
                 [](const Config& c) { return format_double(c.physics_dt); }});
    f.push_back({"session.cascade_rate", [](Config& c, std::string_view v) { c.cascade_rate = number(v); },
                 [](const Config& c) { return format_double(c.cascade_rate); }});
    f.push_back({"session.reference_rate", [](Config& c, std::string_view v) { c.reference_rate = number(v); },
                 [](const Config& c) { return format_double(c.reference_rate); }});
    f.push_back({"session.telemetry_rate", [](Config& c, std::string_view v) { c.telemetry_rate = number(v); },
                 [](const Config& c) { return format_double(c.telemetry_rate); }});
    f.push_back({"session.modality",
                 [](Config& c, std::string_view v) {
                   try {
                     c.modality = modality_from(v);
                   } catch (const Error& e) {
                     throw std::invalid_argument(e.what());
                   }
                 },
                 [](const Config& c) { return std::string(to_string(c.modality)); }});
    f.push_back({"session.hold_timeout", [](Config& c, std::string_view v) { c.hold_timeout = number(v); },
                 [](const Config& c) { return format_double(c.hold_timeout); }});
    f.push_back({"session.decay_time", [](Config& c, std::string_view v) { c.decay_time = number(v); },
                 [](const Config& c) { return format_double(c.decay_time); }});
    f.push_back({"session.ground_contact", [](Config& c, std::string_view v) { c.ground_contact = boolean(v); },
                 [](const Config& c) { return fmt_bool(c.ground_contact); }});
    f.push_back({"session.random_seed",
                 [](Config& c, std::string_view v) {
                   std::uint64_t seed = 0;
                   const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
                   if (ec != std::errc() || ptr != v.data() + v.size()) {
                     throw std::invalid_argument("seed must be a non-negative integer");
                   }
                   c.random_seed = seed;
                 },
                 [](const Config& c) { return std::to_string(c.random_seed); }});
    f.push_back({"world.maze", [](Config& c, std::string_view v) { c.maze_path = std::string(v); },
                 [](const Config& c) { return c.maze_path; }});
    f.push_back({"world.collision_radius", [](Config& c, std::string_view v) { c.collision_radius = number(v); },
                 [](const Config& c) { return format_double(c.collision_radius); }});
    f.push_back({"world.reset_on_collision",
                 [](Config& c, std::string_view v) { c.reset_on_collision = boolean(v); },
                 [](const Config& c) { return fmt_bool(c.reset_on_collision); }});
    f.push_back({"gateway.port",
                 [](Config& c, std::string_view v) {
                   const double p = number(v);
                   if (p < 0 || p > 65535 || p != std::floor(p)) throw std::invalid_argument("port must be 0..65535");
                   c.port = static_cast<int>(p);
                 },
                 [](const Config& c) { return std::to_string(c.port); }});
    f.push_back({"gateway.token", [](Config& c, std::string_view v) { c.token = std::string(v); },
                 [](const Config& c) { return c.token; }});
    f.push_back({"gateway.max_input_rate", [](Config& c, std::string_view v) { c.max_input_rate = number(v); },
                 [](const Config& c) { return format_double(c.max_input_rate); }});
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.key) return &f;
  }
  return nullptr;
}

bool is_integer_ratio(double ratio) {
  return ratio >= 1.0 && std::abs(ratio - std::round(ratio)) < 1e-9 * ratio;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  std::map<std::string, int> seen;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::Config, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    const Field* field = find_field(key);
    if (field == nullptr) {
      throw Error(ErrorCode::Config,
                  "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (const auto it = seen.find(key); it != seen.end()) {
      throw Error(ErrorCode::Config, "config line " + std::to_string(line_no) + ": duplicate key '" +
                                         key + "' (first on line " + std::to_string(it->second) + ")");
    }
    seen.emplace(key, line_no);
    try {
      field->set(c, value);
    } catch (const std::invalid_argument& e) {
      throw Error(ErrorCode::Config,
                  "config line " + std::to_string(line_no) + ": " + key + ": " + e.what());
    }
  }
  c.validate();
  c.zone1 = Zone::make(c.zone1.outer, c.zone1.dead);
  c.zone2 = Zone::make(c.zone2.outer, c.zone2.dead);
  return c;
}

void Config::set(std::string_view key, std::string_view value) {
  const std::string k(trim(key));
  const Field* field = find_field(k);
  if (field == nullptr) throw Error(ErrorCode::Config, "unknown key '" + k + "'");
  try {
    field->set(*this, trim(value));
  } catch (const std::invalid_argument& e) {
    throw Error(ErrorCode::Config, k + ": " + e.what());
  }
  zone1 = Zone::make(zone1.outer, zone1.dead);
  zone2 = Zone::make(zone2.outer, zone2.dead);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  Config c = parse(ss.str());
  c.base_dir = std::filesystem::path(path).parent_path().string();
  return c;
}

void Config::validate() const {
  try {
    (void)Zone::make(zone1.outer, zone1.dead);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("zone1: ") + e.what());
  }
  try {
    (void)Zone::make(zone2.outer, zone2.dead);
  } catch (const Error& e) {
    throw Error(ErrorCode::Config, std::string("zone2: ") + e.what());
  }
  scaling.validate();
  joy_map.validate();
  vehicle.validate();
  cascade.validate();

  if (!(physics_dt > 0.0 && physics_dt <= 0.01)) {
    throw Error(ErrorCode::Config, "session.physics_dt must be in (0, 0.01]");
  }
  if (!(cascade_rate > 0.0) || !(reference_rate > 0.0) || !(telemetry_rate > 0.0)) {
    throw Error(ErrorCode::Config, "rates must be > 0");
  }
  if (!is_integer_ratio(1.0 / (cascade_rate * physics_dt))) {
    throw Error(ErrorCode::Config, "session.physics_dt must divide the cascade period evenly");
  }
  if (!is_integer_ratio(cascade_rate / reference_rate)) {
    throw Error(ErrorCode::Config, "the cascade period must divide the reference period evenly");
  }
  if (!(hold_timeout >= 0.0) || !(decay_time >= 0.0)) {
    throw Error(ErrorCode::Config, "hold_timeout and decay_time must be >= 0");
  }
  if (!(collision_radius > 0.0)) throw Error(ErrorCode::Config, "world.collision_radius must be > 0");
  if (!(max_input_rate > 0.0)) throw Error(ErrorCode::Config, "gateway.max_input_rate must be > 0");
  if (maze_path.empty()) throw Error(ErrorCode::Config, "world.maze must name a map file");
}

std::map<std::string, std::string> Config::to_map() const {
  std::map<std::string, std::string> m;
  for (const auto& f : fields()) m.emplace(f.key, f.get(*this));
  return m;
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
  return out;
}

std::string Config::digest() const { return sha256_hex(canonical()); }

std::string Config::zone_digest() const {
  std::string doc;
  for (const auto& [k, v] : to_map()) {
    if (k.starts_with("zone") || k.starts_with("refgen.")) doc += k + " = " + v + "\n";
  }
  return sha256_hex(doc);
}

int Config::physics_steps_per_cascade() const {
  return static_cast<int>(std::lround(1.0 / (cascade_rate * physics_dt)));
}

int Config::cascades_per_reference() const {
  return static_cast<int>(std::lround(cascade_rate / reference_rate));
}

double Config::reference_period() const { return 1.0 / reference_rate; }
double Config::cascade_period() const { return 1.0 / cascade_rate; }

std::string Config::resolved_maze_path() const {
  const std::filesystem::path p(maze_path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

}  // namespace teleop
