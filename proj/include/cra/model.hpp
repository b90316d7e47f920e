#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "aging.hpp"
#include "error.hpp"
#include "measure.hpp"
#include "softerror.hpp"
#include "success_tree.hpp"
#include "thermal.hpp"

namespace cra {

enum class NodeKind { System, Subsystem, Component };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::System: return "System";
    case NodeKind::Subsystem: return "Subsystem";
    case NodeKind::Component: return "Component";
  }
  return "?";
}

/**
 * Leaf analysis inputs. File references are kept exactly as written; the
 * owning SystemModel resolves them against its base directory. The
 * permanent path starts from either a power trace or a ready-made
 * temperature profile, never both.
 */
struct ComponentPayload {
  ThermalParams thermal;
  AgingParams aging;
  std::optional<std::string> power_trace;
  std::optional<std::string> temperature_trace;
  std::string netlist;
  SerParams ser;
  std::optional<std::string> workload;

  bool operator==(const ComponentPayload&) const = default;
};

/// Compositional reliability node. Level 1 is the root.
struct CrnNode {
  std::string id;
  NodeKind kind = NodeKind::Component;
  int level = 1;
  std::vector<CrnNode> children;
  std::optional<ComponentPayload> payload;

  bool operator==(const CrnNode&) const = default;
};

/// Adapter chains on the edge above one node. Component edges carry one
/// chain per fault-type lane; subsystem edges carry a single chain.
struct EdgeAdapters {
  AdapterChain permanent;
  AdapterChain transient;
  AdapterChain upward;

  bool operator==(const EdgeAdapters&) const = default;
};

struct SystemModel {
  std::string name;
  double time_horizon_hours = 0.0;
  std::size_t grid_points = 512;
  CrnNode root;
  std::map<std::string, EdgeAdapters> adapters;
  SuccessTree success_tree;
  std::filesystem::path base_dir;

  bool operator==(const SystemModel&) const = default;

  /// Leaf components in depth-first order.
  std::vector<const CrnNode*> components() const {
    std::vector<const CrnNode*> out;
    auto walk = [&](auto&& self, const CrnNode& n) -> void {
      if (n.kind == NodeKind::Component) out.push_back(&n);
      for (const auto& c : n.children) self(self, c);
    };
    walk(walk, root);
    return out;
  }

  const CrnNode* find(const std::string& id) const {
    const CrnNode* hit = nullptr;
    auto walk = [&](auto&& self, const CrnNode& n) -> void {
      if (n.id == id) hit = &n;
      for (const auto& c : n.children) self(self, c);
    };
    walk(walk, root);
    return hit;
  }

  std::filesystem::path resolve(const std::string& ref) const {
    const std::filesystem::path p(ref);
    return p.is_absolute() ? p : base_dir / p;
  }

  /// `grid_points` uniform samples on [0, time_horizon_hours].
  std::vector<double> grid() const {
    std::vector<double> g(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
      g[i] = time_horizon_hours * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    return g;
  }
};

namespace detail {

using json = nlohmann::json;

// Field access with "node 'X': field 'a.b'" style errors and unknown-key rejection.
class Fields {
 public:
  Fields(const json& j, std::string where, std::string prefix = {})
      : j_(j), where_(std::move(where)), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw error(prefix_.empty() ? "(document)" : prefix_, "expected an object");
  }

  void allow_only(std::initializer_list<const char*> keys) const {
    for (const auto& [key, value] : j_.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        throw error(qualified(key), "unknown field");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  const json& raw(const char* key) const {
    if (!j_.contains(key)) throw error(qualified(key), "missing required field");
    return j_.at(key);
  }

  double number(const char* key) const {
    const json& v = raw(key);
    if (!v.is_number()) throw error(qualified(key), "expected a number");
    return v.get<double>();
  }

  std::optional<double> optional_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number(key);
  }

  double positive(const char* key) const {
    const double v = number(key);
    if (!(v > 0.0)) throw error(qualified(key), "must be > 0");
    return v;
  }

  std::string text(const char* key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw error(qualified(key), "expected a string");
    return v.get<std::string>();
  }

  std::optional<std::string> optional_text(const char* key) const {
    if (!has(key)) return std::nullopt;
    return text(key);
  }

  std::string qualified(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  InputError error(const std::string& field, const std::string& what) const {
    return InputError(where_ + ": field '" + field + "': " + what);
  }

 private:
  const json& j_;
  std::string where_;
  std::string prefix_;
};

inline bool is_identifier(const std::string& s) {
  return !s.empty() && std::none_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

inline ComponentPayload parse_payload(const Fields& f, const std::string& where) {
  ComponentPayload p;
  {
    Fields t(f.raw("thermal"), where, "thermal");
    t.allow_only({"r_th", "c_th", "t_ambient", "t_initial"});
    p.thermal.r_th = t.positive("r_th");
    p.thermal.c_th = t.positive("c_th");
    p.thermal.t_ambient = t.positive("t_ambient");
    p.thermal.t_initial = t.has("t_initial") ? t.positive("t_initial") : p.thermal.t_ambient;
  }
  {
    Fields a(f.raw("aging"), where, "aging");
    a.allow_only({"a_const", "j_density", "n_exp", "ea_ev", "weibull_beta"});
    p.aging.a_const = a.positive("a_const");
    p.aging.j_density = a.positive("j_density");
    p.aging.n_exp = a.number("n_exp");
    if (p.aging.n_exp < 0.0) throw a.error("aging.n_exp", "must be >= 0");
    p.aging.ea_ev = a.positive("ea_ev");
    if (a.has("weibull_beta")) p.aging.weibull_beta = a.positive("weibull_beta");
  }
  p.power_trace = f.optional_text("power_trace");
  p.temperature_trace = f.optional_text("temperature_trace");
  if (p.power_trace.has_value() == p.temperature_trace.has_value())
    throw f.error("power_trace", "exactly one of 'power_trace' or 'temperature_trace' is required");
  p.netlist = f.text("netlist");
  // An absent "ser" block means no transient faults (zero FIT everywhere).
  if (f.has("ser")) {
    Fields s(f.raw("ser"), where, "ser");
    s.allow_only({"fit_per_node", "default_fit", "workload"});
    p.ser.default_fit = s.has("default_fit") ? s.number("default_fit") : 0.0;
    if (p.ser.default_fit < 0.0) throw s.error("ser.default_fit", "must be >= 0");
    if (s.has("fit_per_node")) {
      const json& m = s.raw("fit_per_node");
      if (!m.is_object()) throw s.error("ser.fit_per_node", "expected an object of net -> FIT");
      for (const auto& [net, fit] : m.items()) {
        if (!fit.is_number() || fit.get<double>() < 0.0)
          throw s.error("ser.fit_per_node." + net, "FIT must be a number >= 0");
        p.ser.fit_per_node.emplace(net, fit.get<double>());
      }
    }
    p.workload = s.optional_text("workload");
  }
  return p;
}

inline CrnNode parse_node(const json& j, int level, const std::string& path) {
  if (!j.is_object()) throw InputError(path + ": expected a node object");
  std::string where = path;
  if (j.contains("id") && j["id"].is_string()) where = "node '" + j["id"].get<std::string>() + "'";
  Fields f(j, where);
  CrnNode n;
  n.id = f.text("id");
  if (!is_identifier(n.id)) throw f.error("id", "identifiers must be nonempty and contain no whitespace");
  n.level = level;
  const std::string kind = f.text("kind");
  if (kind == "System") n.kind = NodeKind::System;
  else if (kind == "Subsystem") n.kind = NodeKind::Subsystem;
  else if (kind == "Component") n.kind = NodeKind::Component;
  else throw f.error("kind", "expected System, Subsystem or Component, got '" + kind + "'");

  if (n.kind == NodeKind::Component) {
    f.allow_only({"id", "kind", "children", "thermal", "aging", "power_trace", "temperature_trace",
                  "netlist", "ser"});
    if (f.has("children") && !(f.raw("children").is_array() && f.raw("children").empty()))
      throw f.error("children", "a Component is a leaf and cannot have children");
    n.payload = parse_payload(f, where);
    return n;
  }
  f.allow_only({"id", "kind", "children"});
  const json& kids = f.raw("children");
  if (!kids.is_array()) throw f.error("children", "expected an array");
  if (kids.empty()) throw f.error("children", std::string(kind) + " needs at least one child");
  for (std::size_t i = 0; i < kids.size(); ++i) {
    CrnNode child = parse_node(kids[i], level + 1, where + ".children[" + std::to_string(i) + "]");
    if (child.kind == NodeKind::System)
      throw InputError("node '" + child.id + "': field 'kind': System is only valid at the root");
    n.children.push_back(std::move(child));
  }
  return n;
}

inline Adapter parse_adapter(const json& j, const std::string& where, const std::string& field) {
  auto err = [&](const std::string& what) { return InputError(where + ": field '" + field + "': " + what); };
  if (j.is_string()) {
    const auto kind = adapter_kind_from(j.get<std::string>());
    if (!kind) throw err("unknown adapter kind '" + j.get<std::string>() + "'");
    return Adapter::of(*kind);
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw err("expected an adapter name or an object with 'kind'");
  const auto kind = adapter_kind_from(j["kind"].get<std::string>());
  if (!kind) throw err("unknown adapter kind '" + j["kind"].get<std::string>() + "'");
  Adapter a = Adapter::of(*kind);
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") continue;
    if (*kind != AdapterKind::TimeUnitBridge || (key != "from" && key != "to"))
      throw err("unknown adapter parameter '" + key + "'");
    const auto unit = value.is_string() ? time_unit_from(value.get<std::string>()) : std::nullopt;
    if (!unit) throw err("'" + key + "' must be \"seconds\" or \"hours\"");
    (key == "from" ? a.from : a.to) = *unit;
  }
  return a;
}

inline AdapterChain parse_chain(const json& j, const std::string& where, const std::string& field) {
  if (!j.is_array()) throw InputError(where + ": field '" + field + "': expected an array of adapters");
  AdapterChain chain;
  for (std::size_t i = 0; i < j.size(); ++i)
    chain.push_back(parse_adapter(j[i], where, field + "[" + std::to_string(i) + "]"));
  return chain;
}

inline void collect_ids(const CrnNode& n, std::map<std::string, const CrnNode*>& seen) {
  if (!seen.emplace(n.id, &n).second)
    throw InputError("node '" + n.id + "': field 'id': duplicate identifier");
  for (const auto& c : n.children) collect_ids(c, seen);
}

inline nlohmann::ordered_json adapter_to_json(const Adapter& a) {
  if (a.kind != AdapterKind::TimeUnitBridge) return to_string(a.kind);
  return {{"kind", to_string(a.kind)}, {"from", to_string(a.from)}, {"to", to_string(a.to)}};
}

inline nlohmann::ordered_json chain_to_json(const AdapterChain& chain) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& a : chain) arr.push_back(adapter_to_json(a));
  return arr;
}

inline nlohmann::ordered_json node_to_json(const CrnNode& n) {
  nlohmann::ordered_json j;
  j["id"] = n.id;
  j["kind"] = to_string(n.kind);
  if (n.kind != NodeKind::Component) {
    j["children"] = nlohmann::ordered_json::array();
    for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
    return j;
  }
  const ComponentPayload& p = *n.payload;
  j["thermal"] = {{"r_th", p.thermal.r_th}, {"c_th", p.thermal.c_th},
                  {"t_ambient", p.thermal.t_ambient}, {"t_initial", p.thermal.t_initial}};
  j["aging"] = {{"a_const", p.aging.a_const}, {"j_density", p.aging.j_density},
                {"n_exp", p.aging.n_exp}, {"ea_ev", p.aging.ea_ev}};
  if (p.aging.weibull_beta) j["aging"]["weibull_beta"] = *p.aging.weibull_beta;
  if (p.power_trace) j["power_trace"] = *p.power_trace;
  if (p.temperature_trace) j["temperature_trace"] = *p.temperature_trace;
  j["netlist"] = p.netlist;
  j["ser"]["default_fit"] = p.ser.default_fit;
  j["ser"]["fit_per_node"] = nlohmann::ordered_json::object();
  for (const auto& [net, fit] : p.ser.fit_per_node) j["ser"]["fit_per_node"][net] = fit;
  if (p.workload) j["ser"]["workload"] = *p.workload;
  return j;
}

}  // namespace detail

/**
 * Parses and validates a system description. Relative file references are
 * resolved against `base_dir` and must exist.
 */
inline SystemModel load_system(const std::string& document, const std::filesystem::path& base_dir = ".") {
  detail::json j;
  try {
    j = detail::json::parse(document);
  } catch (const detail::json::parse_error& e) {
    throw InputError(std::string("malformed system description: ") + e.what());
  }
  detail::Fields top(j, "system");
  top.allow_only({"name", "time_horizon_hours", "grid_points", "hierarchy", "adapters", "success_tree"});

  SystemModel m;
  m.base_dir = base_dir;
  m.name = top.text("name");
  if (!detail::is_identifier(m.name)) throw top.error("name", "must be a nonempty token without whitespace");
  m.time_horizon_hours = top.positive("time_horizon_hours");
  if (top.has("grid_points")) {
    const auto& g = top.raw("grid_points");
    if (!g.is_number_integer() || g.get<long long>() < 2) throw top.error("grid_points", "must be an integer >= 2");
    m.grid_points = static_cast<std::size_t>(g.get<long long>());
  }

  m.root = detail::parse_node(top.raw("hierarchy"), 1, "hierarchy");
  if (m.root.kind != NodeKind::System)
    throw InputError("node '" + m.root.id + "': field 'kind': the root must be a System node");

  std::map<std::string, const CrnNode*> nodes;
  detail::collect_ids(m.root, nodes);

  for (const CrnNode* c : m.components()) {
    const ComponentPayload& p = *c->payload;
    const std::string where = "node '" + c->id + "'";
    auto check_file = [&](const std::optional<std::string>& ref, const std::string& field) {
      if (!ref) return;
      if (!std::filesystem::is_regular_file(m.resolve(*ref)))
        throw InputError(where + ": field '" + field + "': dangling file reference '" + *ref + "'");
    };
    check_file(p.power_trace, "power_trace");
    check_file(p.temperature_trace, "temperature_trace");
    check_file(p.netlist, "netlist");
    check_file(p.workload, "ser.workload");
  }

  if (top.has("adapters")) {
    const auto& a = top.raw("adapters");
    if (!a.is_object()) throw top.error("adapters", "expected an object keyed by child node id");
    for (const auto& [child, spec] : a.items()) {
      const auto it = nodes.find(child);
      if (it == nodes.end()) throw top.error("adapters." + child, "no node named '" + child + "'");
      const CrnNode* node = it->second;
      if (node == &m.root) throw top.error("adapters." + child, "the root has no parent edge");
      const std::string where = "node '" + child + "'";
      EdgeAdapters edge;
      if (node->kind == NodeKind::Component) {
        detail::Fields lanes(spec, where, "adapters");
        lanes.allow_only({"permanent", "transient"});
        if (lanes.has("permanent")) edge.permanent = detail::parse_chain(lanes.raw("permanent"), where, "adapters.permanent");
        if (lanes.has("transient")) edge.transient = detail::parse_chain(lanes.raw("transient"), where, "adapters.transient");
      } else {
        edge.upward = detail::parse_chain(spec, where, "adapters");
      }
      m.adapters.emplace(child, std::move(edge));
    }
  }

  m.success_tree = tree_from_json(top.raw("success_tree"));
  for (const auto& e : basic_events(m.success_tree)) {
    const auto it = nodes.find(e);
    if (it == nodes.end())
      throw InputError("success_tree: basic event '" + e + "' names no node in the hierarchy");
    if (it->second->kind != NodeKind::Component)
      throw InputError("success_tree: basic event '" + e + "' names a " +
                       to_string(it->second->kind) + ", not a Component");
  }
  return m;
}

inline SystemModel load_system_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open system description '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_system(buf.str(), path.parent_path().empty() ? "." : path.parent_path());
}

/// Canonical JSON form; load_system on the result rebuilds an equal model.
inline std::string serialize_system(const SystemModel& m) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["time_horizon_hours"] = m.time_horizon_hours;
  j["grid_points"] = m.grid_points;
  j["hierarchy"] = detail::node_to_json(m.root);
  j["adapters"] = nlohmann::ordered_json::object();
  for (const auto& [child, edge] : m.adapters) {
    const CrnNode* n = m.find(child);
    if (n && n->kind == NodeKind::Component)
      j["adapters"][child] = {{"permanent", detail::chain_to_json(edge.permanent)},
                              {"transient", detail::chain_to_json(edge.transient)}};
    else
      j["adapters"][child] = detail::chain_to_json(edge.upward);
  }
  j["success_tree"] = tree_to_json(m.success_tree);
  return j.dump(2) + "\n";
}

/// One mismatched edge lane.
struct MeasureViolation {
  std::string parent;
  std::string child;
  std::string lane;  // "permanent", "transient" or "upward"
  MeasureSignature produced;
  MeasureSignature consumed;
  std::string detail;

  bool operator==(const MeasureViolation&) const = default;

  std::string describe() const {
    std::string s = "edge " + parent + " -> " + child + " (" + lane + "): child produces " +
                    to_string(produced) + ", parent consumes " + to_string(consumed);
    if (!detail.empty()) s += "; " + detail;
    return s;
  }
};

/// Measure a component's permanent lane starts from.
inline MeasureSignature permanent_source(const ComponentPayload& p) {
  return p.power_trace ? MeasureSignature{MeasureTag::PowerTrace, TimeUnit::Seconds}
                       : MeasureSignature{MeasureTag::TemperatureProfile, TimeUnit::Seconds};
}

inline constexpr MeasureSignature kTransientSource{MeasureTag::FitRate, TimeUnit::Hours};
inline constexpr MeasureSignature kReliabilityHours{MeasureTag::Reliability, TimeUnit::Hours};

/// Checks one lane: does `chain` carry `produced` to `consumed`?
inline std::optional<MeasureViolation> check_lane(const std::string& parent, const std::string& child,
                                                  const std::string& lane, MeasureSignature produced,
                                                  const AdapterChain& chain, MeasureSignature consumed) {
  const auto outcome = trace_chain(produced, chain);
  if (outcome.result && *outcome.result == consumed) return std::nullopt;
  std::string detail = outcome.problem;
  if (outcome.result) detail = "chain ends at " + to_string(*outcome.result);
  return MeasureViolation{parent, child, lane, produced, consumed, detail};
}

/**
 * Every parent-child edge must carry adapters that turn the child's measure
 * into a system-hours Reliability. Component edges are checked per lane;
 * the two lanes then meet in the competing-risks combination. Sorted by
 * (child, lane).
 */
inline std::vector<MeasureViolation> check_measure_compatibility(const SystemModel& m) {
  std::vector<MeasureViolation> out;
  static const EdgeAdapters none{};
  auto walk = [&](auto&& self, const CrnNode& parent) -> void {
    for (const CrnNode& child : parent.children) {
      const auto it = m.adapters.find(child.id);
      const EdgeAdapters& edge = it == m.adapters.end() ? none : it->second;
      if (child.kind == NodeKind::Component) {
        if (auto v = check_lane(parent.id, child.id, "permanent", permanent_source(*child.payload),
                                edge.permanent, kReliabilityHours))
          out.push_back(*v);
        if (auto v = check_lane(parent.id, child.id, "transient", kTransientSource, edge.transient,
                                kReliabilityHours))
          out.push_back(*v);
      } else {
        if (auto v = check_lane(parent.id, child.id, "upward", kReliabilityHours, edge.upward,
                                kReliabilityHours))
          out.push_back(*v);
      }
      self(self, child);
    }
  };
  walk(walk, m.root);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.child, a.lane) < std::tie(b.child, b.lane);
  });
  return out;
}

}  // namespace cra
