#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "error.hpp"

namespace cra {

/**
 * Coherent structure function over component basic events. A node is a
 * gate (AND, OR, k-of-n) over children, or a basic event naming a component.
 * The same event may appear under several gates.
 */
struct SuccessNode {
  enum class Kind { And, Or, KofN, Event };

  Kind kind = Kind::Event;
  unsigned k = 0;
  std::vector<SuccessNode> children;
  std::string event;

  static SuccessNode basic(std::string id) { return {Kind::Event, 0, {}, std::move(id)}; }
  static SuccessNode all_of(std::vector<SuccessNode> c) { return {Kind::And, 0, std::move(c), {}}; }
  static SuccessNode any_of(std::vector<SuccessNode> c) { return {Kind::Or, 0, std::move(c), {}}; }
  static SuccessNode k_of_n(unsigned k, std::vector<SuccessNode> c) {
    return {Kind::KofN, k, std::move(c), {}};
  }

  bool operator==(const SuccessNode&) const = default;
};

using SuccessTree = SuccessNode;

inline void validate_tree(const SuccessNode& n) {
  if (n.kind == SuccessNode::Kind::Event) {
    if (n.event.empty()) throw InputError("success tree: basic event with empty id");
    return;
  }
  if (n.children.empty()) throw InputError("success tree: gate without inputs");
  if (n.kind == SuccessNode::Kind::KofN && (n.k < 1 || n.k > n.children.size()))
    throw InputError("success tree: KOFN needs 1 <= k <= " + std::to_string(n.children.size()) +
                     ", got k = " + std::to_string(n.k));
  for (const auto& c : n.children) validate_tree(c);
}

/// Distinct basic events in depth-first first-appearance order.
inline std::vector<std::string> basic_events(const SuccessNode& tree) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::size_t> seen;
  auto walk = [&](auto&& self, const SuccessNode& n) -> void {
    if (n.kind == SuccessNode::Kind::Event) {
      if (seen.emplace(n.event, order.size()).second) order.push_back(n.event);
      return;
    }
    for (const auto& c : n.children) self(self, c);
  };
  walk(walk, tree);
  return order;
}

/// Structure function on an event-state lookup.
template <typename IsUp>
bool structure_value(const SuccessNode& n, const IsUp& is_up) {
  switch (n.kind) {
    case SuccessNode::Kind::Event: return is_up(n.event);
    case SuccessNode::Kind::And:
      for (const auto& c : n.children)
        if (!structure_value(c, is_up)) return false;
      return true;
    case SuccessNode::Kind::Or:
      for (const auto& c : n.children)
        if (structure_value(c, is_up)) return true;
      return false;
    case SuccessNode::Kind::KofN: {
      unsigned up = 0;
      for (const auto& c : n.children) up += structure_value(c, is_up) ? 1 : 0;
      return up >= n.k;
    }
  }
  return false;
}

/**
 * Flattened tree whose events are positions in basic_events() order; used
 * where the structure function is evaluated many times.
 */
class IndexedTree {
 public:
  explicit IndexedTree(const SuccessTree& tree) {
    validate_tree(tree);
    const auto events = basic_events(tree);
    std::unordered_map<std::string, std::size_t> var;
    for (std::size_t i = 0; i < events.size(); ++i) var.emplace(events[i], i);
    root_ = add(tree, var);
  }

  /// `up[i]` is the state of event i.
  bool operator()(const std::vector<std::uint8_t>& up) const { return eval(root_, up); }

 private:
  struct Node {
    SuccessNode::Kind kind;
    unsigned k;
    std::size_t var;
    std::vector<std::size_t> children;
  };

  std::size_t add(const SuccessNode& n, const std::unordered_map<std::string, std::size_t>& var) {
    Node node{n.kind, n.k, n.kind == SuccessNode::Kind::Event ? var.at(n.event) : 0, {}};
    for (const auto& c : n.children) node.children.push_back(add(c, var));
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
  }

  bool eval(std::size_t i, const std::vector<std::uint8_t>& up) const {
    const Node& n = nodes_[i];
    switch (n.kind) {
      case SuccessNode::Kind::Event: return up[n.var] != 0;
      case SuccessNode::Kind::And:
        for (auto c : n.children)
          if (!eval(c, up)) return false;
        return true;
      case SuccessNode::Kind::Or:
        for (auto c : n.children)
          if (eval(c, up)) return true;
        return false;
      case SuccessNode::Kind::KofN: {
        unsigned count = 0;
        for (auto c : n.children) count += eval(c, up) ? 1 : 0;
        return count >= n.k;
      }
    }
    return false;
  }

  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

/**
 * The tree compiled into a reduced ordered binary decision diagram with
 * variable order = depth-first first appearance. Evaluating a probability is
 * a memoized Shannon expansion over the diagram, exact under independent
 * events regardless of how often an event is shared.
 */
class CompiledTree {
 public:
  explicit CompiledTree(const SuccessTree& tree) : events_(basic_events(tree)) {
    validate_tree(tree);
    for (std::size_t i = 0; i < events_.size(); ++i) var_of_.emplace(events_[i], i);
    nodes_.push_back({kTerminalVar, kFalse, kFalse});
    nodes_.push_back({kTerminalVar, kTrue, kTrue});
    root_ = build(tree);
    ite_cache_.clear();
  }

  /// Events in variable order; probabilities passed positionally follow it.
  const std::vector<std::string>& events() const { return events_; }

  std::size_t diagram_size() const { return nodes_.size(); }

  /// P(structure = 1) given per-variable success probabilities.
  double probability(const std::vector<double>& p) const {
    std::vector<double> memo(nodes_.size(), -1.0);
    memo[kFalse] = 0.0;
    memo[kTrue] = 1.0;
    auto eval = [&](auto&& self, Ref f) -> double {
      if (memo[f] >= 0.0) return memo[f];
      const Node& n = nodes_[f];
      const double pv = p[n.var];
      return memo[f] = pv * self(self, n.high) + (1.0 - pv) * self(self, n.low);
    };
    return eval(eval, root_);
  }

  /// Probability lookup by event id, with range checks.
  double probability(const std::map<std::string, double>& probs) const {
    std::vector<double> p;
    p.reserve(events_.size());
    for (const auto& e : events_) {
      const auto it = probs.find(e);
      if (it == probs.end()) throw InputError("no probability for basic event '" + e + "'");
      if (!(it->second >= 0.0 && it->second <= 1.0))
        throw InputError("probability for '" + e + "' outside [0,1]");
      p.push_back(it->second);
    }
    return probability(p);
  }

 private:
  using Ref = std::uint32_t;
  static constexpr Ref kFalse = 0;
  static constexpr Ref kTrue = 1;
  static constexpr std::size_t kTerminalVar = SIZE_MAX;

  struct Node {
    std::size_t var;
    Ref low;
    Ref high;
  };

  static std::uint64_t key(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xC2B2AE3D27D4EB4Full) ^ (c + 0x165667B19E3779F9ull);
  }

  struct Triple {
    std::uint64_t a, b, c;
    bool operator==(const Triple&) const = default;
  };
  struct TripleHash {
    std::size_t operator()(const Triple& t) const { return key(t.a, t.b, t.c); }
  };

  Ref make(std::size_t var, Ref low, Ref high) {
    if (low == high) return low;
    const Triple t{var, low, high};
    const auto it = unique_.find(t);
    if (it != unique_.end()) return it->second;
    const Ref r = static_cast<Ref>(nodes_.size());
    nodes_.push_back({var, low, high});
    unique_.emplace(t, r);
    return r;
  }

  // Cofactor of f with respect to `var` set to `value`.
  Ref cofactor(Ref f, std::size_t var, bool value) const {
    const Node& n = nodes_[f];
    if (n.var != var) return f;
    return value ? n.high : n.low;
  }

  Ref ite(Ref f, Ref g, Ref h) {
    if (f == kTrue) return g;
    if (f == kFalse) return h;
    if (g == h) return g;
    if (g == kTrue && h == kFalse) return f;
    const Triple t{f, g, h};
    if (const auto it = ite_cache_.find(t); it != ite_cache_.end()) return it->second;
    const std::size_t v =
        std::min({nodes_[f].var, nodes_[g].var, nodes_[h].var});
    const Ref hi = ite(cofactor(f, v, true), cofactor(g, v, true), cofactor(h, v, true));
    const Ref lo = ite(cofactor(f, v, false), cofactor(g, v, false), cofactor(h, v, false));
    const Ref r = make(v, lo, hi);
    ite_cache_.emplace(t, r);
    return r;
  }

  Ref build(const SuccessNode& n) {
    switch (n.kind) {
      case SuccessNode::Kind::Event: return make(var_of_.at(n.event), kFalse, kTrue);
      case SuccessNode::Kind::And: {
        Ref acc = kTrue;
        for (const auto& c : n.children) acc = ite(acc, build(c), kFalse);
        return acc;
      }
      case SuccessNode::Kind::Or: {
        Ref acc = kFalse;
        for (const auto& c : n.children) acc = ite(acc, kTrue, build(c));
        return acc;
      }
      case SuccessNode::Kind::KofN: {
        std::vector<Ref> kids;
        for (const auto& c : n.children) kids.push_back(build(c));
        // at_least[i][j]: at least j of kids[i..] are up.
        const std::size_t m = kids.size();
        std::vector<std::vector<Ref>> at_least(m + 1, std::vector<Ref>(n.k + 1, kFalse));
        for (std::size_t i = 0; i <= m; ++i) at_least[i][0] = kTrue;
        for (std::size_t i = m; i-- > 0;)
          for (std::size_t j = 1; j <= n.k; ++j)
            at_least[i][j] = ite(kids[i], at_least[i + 1][j - 1], at_least[i + 1][j]);
        return at_least[0][n.k];
      }
    }
    return kFalse;
  }

  std::vector<std::string> events_;
  std::unordered_map<std::string, std::size_t> var_of_;
  std::vector<Node> nodes_;
  std::unordered_map<Triple, Ref, TripleHash> unique_;
  std::unordered_map<Triple, Ref, TripleHash> ite_cache_;
  Ref root_ = kFalse;
};

inline double tree_probability(const SuccessTree& tree, const std::map<std::string, double>& probs) {
  return CompiledTree(tree).probability(probs);
}

inline constexpr std::size_t kMaxBruteForceEvents = 20;

/// Sum over all 2^n event states of structure value times state probability.
inline double brute_force_probability(const SuccessTree& tree,
                                      const std::map<std::string, double>& probs) {
  validate_tree(tree);
  const auto events = basic_events(tree);
  const std::size_t n = events.size();
  if (n > kMaxBruteForceEvents)
    throw InputError("brute force: " + std::to_string(n) + " events exceeds the limit of " +
                     std::to_string(kMaxBruteForceEvents));
  std::vector<double> p;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = probs.find(events[i]);
    if (it == probs.end()) throw InputError("no probability for basic event '" + events[i] + "'");
    if (!(it->second >= 0.0 && it->second <= 1.0))
      throw InputError("probability for '" + events[i] + "' outside [0,1]");
    p.push_back(it->second);
    index.emplace(events[i], i);
  }
  double total = 0.0;
  for (std::uint64_t state = 0; state < (std::uint64_t{1} << n); ++state) {
    auto up = [&](const std::string& e) { return ((state >> index.at(e)) & 1) != 0; };
    if (!structure_value(tree, up)) continue;
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= ((state >> i) & 1) ? p[i] : 1.0 - p[i];
    total += w;
  }
  return total;
}

// JSON form: {"gate":"AND"|"OR"|"KOFN","k":int,"inputs":[...]} or {"event":"id"}.

inline SuccessNode tree_from_json(const nlohmann::json& j, const std::string& path = "success_tree") {
  if (!j.is_object()) throw InputError(path + ": expected an object");
  if (j.contains("event")) {
    for (const auto& [key, value] : j.items())
      if (key != "event") throw InputError(path + ": unknown field '" + key + "' on basic event");
    if (!j["event"].is_string()) throw InputError(path + ".event: expected a string");
    return SuccessNode::basic(j["event"].get<std::string>());
  }
  for (const auto& [key, value] : j.items())
    if (key != "gate" && key != "k" && key != "inputs")
      throw InputError(path + ": unknown field '" + key + "'");
  if (!j.contains("gate") || !j["gate"].is_string())
    throw InputError(path + ": expected 'gate' or 'event'");
  if (!j.contains("inputs") || !j["inputs"].is_array())
    throw InputError(path + ".inputs: expected an array");
  const std::string gate = j["gate"].get<std::string>();
  std::vector<SuccessNode> kids;
  for (std::size_t i = 0; i < j["inputs"].size(); ++i)
    kids.push_back(tree_from_json(j["inputs"][i], path + ".inputs[" + std::to_string(i) + "]"));
  SuccessNode node;
  if (gate == "AND") {
    node = SuccessNode::all_of(std::move(kids));
  } else if (gate == "OR") {
    node = SuccessNode::any_of(std::move(kids));
  } else if (gate == "KOFN") {
    if (!j.contains("k") || !j["k"].is_number_integer() || j["k"].get<long long>() < 1)
      throw InputError(path + ".k: KOFN needs a positive integer k");
    node = SuccessNode::k_of_n(static_cast<unsigned>(j["k"].get<long long>()), std::move(kids));
  } else {
    throw InputError(path + ".gate: unknown gate '" + gate + "'");
  }
  if (gate != "KOFN" && j.contains("k")) throw InputError(path + ": 'k' is only valid on KOFN");
  validate_tree(node);
  return node;
}

inline nlohmann::ordered_json tree_to_json(const SuccessNode& n) {
  nlohmann::ordered_json j;
  switch (n.kind) {
    case SuccessNode::Kind::Event: j["event"] = n.event; return j;
    case SuccessNode::Kind::And: j["gate"] = "AND"; break;
    case SuccessNode::Kind::Or: j["gate"] = "OR"; break;
    case SuccessNode::Kind::KofN:
      j["gate"] = "KOFN";
      j["k"] = n.k;
      break;
  }
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& c : n.children) j["inputs"].push_back(tree_to_json(c));
  return j;
}

}  // namespace cra
