#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <variant>
#include <vector>

#include "error.hpp"
#include "random.hpp"
#include "reliability.hpp"

namespace cra {

enum class GateKind { And, Or, Not, Xor, Nand, Nor, Buf };

inline const char* to_string(GateKind k) {
  switch (k) {
    case GateKind::And: return "AND";
    case GateKind::Or: return "OR";
    case GateKind::Not: return "NOT";
    case GateKind::Xor: return "XOR";
    case GateKind::Nand: return "NAND";
    case GateKind::Nor: return "NOR";
    case GateKind::Buf: return "BUF";
  }
  return "?";
}

inline std::optional<GateKind> gate_kind_from(const std::string& s) {
  static const std::map<std::string, GateKind> kinds{
      {"AND", GateKind::And}, {"OR", GateKind::Or},     {"NOT", GateKind::Not},
      {"XOR", GateKind::Xor}, {"NAND", GateKind::Nand}, {"NOR", GateKind::Nor},
      {"BUF", GateKind::Buf}};
  const auto it = kinds.find(s);
  if (it == kinds.end()) return std::nullopt;
  return it->second;
}

using NetId = std::size_t;

struct Gate {
  NetId output;
  GateKind kind;
  std::vector<NetId> inputs;
};

/**
 * Combinational netlist. Nets are numbered in definition order (INPUT and
 * GATE lines), so every gate reads only lower-numbered nets and one pass
 * over `gates` is a topological evaluation.
 */
class Netlist {
 public:
  const std::vector<std::string>& net_names() const { return names_; }
  const std::vector<NetId>& inputs() const { return inputs_; }
  const std::vector<Gate>& gates() const { return gates_; }
  const std::vector<NetId>& outputs() const { return outputs_; }
  std::size_t net_count() const { return names_.size(); }

  std::optional<NetId> find(const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  NetId require(const std::string& name) const {
    if (auto id = find(name)) return *id;
    throw InputError("unknown net '" + name + "'");
  }

  const std::string& name(NetId id) const { return names_[id]; }

  /// Gate driving `net`, or nullptr for a primary input.
  const Gate* driver(NetId net) const {
    const auto g = driver_[net];
    return g < 0 ? nullptr : &gates_[static_cast<std::size_t>(g)];
  }

 private:
  friend Netlist parse_netlist(std::istream&, const std::string&);

  std::vector<std::string> names_;
  std::unordered_map<std::string, NetId> index_;
  std::vector<long> driver_;
  std::vector<NetId> inputs_;
  std::vector<Gate> gates_;
  std::vector<NetId> outputs_;
};

namespace detail {

inline std::uint8_t eval_gate(GateKind kind, const std::vector<NetId>& in,
                              const std::vector<std::uint8_t>& v) {
  switch (kind) {
    case GateKind::Buf: return v[in[0]];
    case GateKind::Not: return v[in[0]] ^ 1;
    case GateKind::And:
    case GateKind::Nand: {
      std::uint8_t r = 1;
      for (NetId n : in) r &= v[n];
      return kind == GateKind::And ? r : r ^ 1;
    }
    case GateKind::Or:
    case GateKind::Nor: {
      std::uint8_t r = 0;
      for (NetId n : in) r |= v[n];
      return kind == GateKind::Or ? r : r ^ 1;
    }
    case GateKind::Xor: {
      std::uint8_t r = 0;
      for (NetId n : in) r ^= v[n];
      return r;
    }
  }
  return 0;
}

inline std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream ss(line.substr(0, line.find('#')));
  std::vector<std::string> tokens;
  for (std::string tok; ss >> tok;) tokens.push_back(tok);
  return tokens;
}

}  // namespace detail

/**
 * Parses the line format
 *   INPUT <name>
 *   GATE <out> <KIND> <in1> [<in2> ...]
 *   OUTPUT <name>
 * with '#' comments. Every gate input must be defined on an earlier line.
 */
inline Netlist parse_netlist(std::istream& in, const std::string& source = "netlist") {
  struct Line {
    std::size_t number;
    std::vector<std::string> tokens;
  };
  std::vector<Line> lines;
  std::unordered_map<std::string, std::size_t> defined_on;
  auto fail = [&](std::size_t line, const std::string& msg) -> InputError {
    return InputError(source + ":" + std::to_string(line) + ": " + msg);
  };

  // First pass: shape of each line and where every net is defined.
  std::string text;
  for (std::size_t number = 1; std::getline(in, text); ++number) {
    auto tokens = detail::tokenize(text);
    if (tokens.empty()) continue;
    const std::string& kw = tokens[0];
    if (kw == "INPUT" || kw == "OUTPUT") {
      if (tokens.size() != 2) throw fail(number, kw + " takes exactly one net name");
    } else if (kw == "GATE") {
      if (tokens.size() < 4) throw fail(number, "GATE needs <out> <KIND> <inputs...>");
      const auto kind = gate_kind_from(tokens[2]);
      if (!kind) throw fail(number, "unknown gate kind '" + tokens[2] + "'");
      const std::size_t arity = tokens.size() - 3;
      const bool unary = *kind == GateKind::Not || *kind == GateKind::Buf;
      if (unary && arity != 1)
        throw fail(number, tokens[2] + " takes exactly 1 input, got " + std::to_string(arity));
      if (!unary && arity < 2)
        throw fail(number, tokens[2] + " takes at least 2 inputs, got " + std::to_string(arity));
    } else {
      throw fail(number, "unknown directive '" + kw + "'");
    }
    if (kw != "OUTPUT") {
      const std::string& net = tokens[1];
      const auto [it, fresh] = defined_on.emplace(net, number);
      if (!fresh)
        throw fail(number, "net '" + net + "' already defined on line " +
                               std::to_string(it->second));
    }
    lines.push_back({number, std::move(tokens)});
  }

  Netlist nl;
  auto add_net = [&](const std::string& name) {
    const NetId id = nl.names_.size();
    nl.names_.push_back(name);
    nl.index_.emplace(name, id);
    nl.driver_.push_back(-1);
    return id;
  };
  std::vector<std::pair<std::size_t, std::string>> declared_outputs;
  for (const auto& [number, tokens] : lines) {
    const std::string& kw = tokens[0];
    if (kw == "INPUT") {
      nl.inputs_.push_back(add_net(tokens[1]));
    } else if (kw == "OUTPUT") {
      declared_outputs.emplace_back(number, tokens[1]);
    } else {
      Gate g{0, *gate_kind_from(tokens[2]), {}};
      for (std::size_t i = 3; i < tokens.size(); ++i) {
        const std::string& net = tokens[i];
        if (auto id = nl.find(net)) {
          g.inputs.push_back(*id);
          continue;
        }
        const auto later = defined_on.find(net);
        if (later == defined_on.end())
          throw fail(number, "undeclared net '" + net + "'");
        throw fail(number, "net '" + net + "' is used before its definition on line " +
                               std::to_string(later->second) +
                               " (netlist must be in topological order)");
      }
      g.output = add_net(tokens[1]);
      nl.driver_[g.output] = static_cast<long>(nl.gates_.size());
      nl.gates_.push_back(std::move(g));
    }
  }
  for (const auto& [number, net] : declared_outputs) {
    const auto id = nl.find(net);
    if (!id) throw fail(number, "output '" + net + "' is never defined");
    if (std::find(nl.outputs_.begin(), nl.outputs_.end(), *id) != nl.outputs_.end())
      throw fail(number, "output '" + net + "' declared twice");
    nl.outputs_.push_back(*id);
  }
  if (nl.outputs_.empty()) throw InputError(source + ": netlist declares no OUTPUT");
  return nl;
}

inline Netlist parse_netlist(const std::string& text, const std::string& source = "netlist") {
  std::istringstream in(text);
  return parse_netlist(in, source);
}

inline Netlist read_netlist_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open netlist '" + path + "'");
  return parse_netlist(in, path);
}

using Bits = std::vector<std::uint8_t>;

/// Golden simulation: values of every net for one input vector.
inline Bits simulate_nets(const Netlist& nl, const Bits& input_bits) {
  if (input_bits.size() != nl.inputs().size())
    throw InputError("evaluate: expected " + std::to_string(nl.inputs().size()) +
                     " input bits, got " + std::to_string(input_bits.size()));
  Bits v(nl.net_count(), 0);
  for (std::size_t i = 0; i < input_bits.size(); ++i) v[nl.inputs()[i]] = input_bits[i] & 1;
  for (const Gate& g : nl.gates()) v[g.output] = detail::eval_gate(g.kind, g.inputs, v);
  return v;
}

/// Output bits, in OUTPUT declaration order.
inline Bits evaluate(const Netlist& nl, const Bits& input_bits) {
  const Bits v = simulate_nets(nl, input_bits);
  Bits out;
  out.reserve(nl.outputs().size());
  for (NetId o : nl.outputs()) out.push_back(v[o]);
  return out;
}

/// Gates in the transitive fan-out of `node`, in evaluation order.
inline std::vector<std::size_t> fanout_cone(const Netlist& nl, NetId node) {
  std::vector<std::uint8_t> reached(nl.net_count(), 0);
  reached[node] = 1;
  std::vector<std::size_t> cone;
  for (std::size_t gi = 0; gi < nl.gates().size(); ++gi) {
    const Gate& g = nl.gates()[gi];
    if (g.output <= node) continue;
    for (NetId n : g.inputs)
      if (reached[n]) {
        reached[g.output] = 1;
        cone.push_back(gi);
        break;
      }
  }
  return cone;
}

namespace detail {

/// Flips `node` on top of golden net values and reports whether any primary
/// output changes. `scratch` is overwritten.
inline bool flip_is_visible(const Netlist& nl, NetId node, const std::vector<std::size_t>& cone,
                            const Bits& golden, Bits& scratch) {
  scratch = golden;
  scratch[node] ^= 1;
  for (std::size_t gi : cone) {
    const Gate& g = nl.gates()[gi];
    scratch[g.output] = eval_gate(g.kind, g.inputs, scratch);
  }
  for (NetId o : nl.outputs())
    if (scratch[o] != golden[o]) return true;
  return false;
}

}  // namespace detail

/// Input vectors drawn uniformly over all 2^n assignments.
struct UniformWorkload {};

/// Input vectors drawn uniformly from an explicit list.
struct VectorWorkload {
  std::vector<Bits> vectors;
};

using Workload = std::variant<UniformWorkload, VectorWorkload>;

inline VectorWorkload parse_workload(std::istream& in, std::size_t width,
                                     const std::string& source = "workload") {
  VectorWorkload w;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    const auto tokens = detail::tokenize(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 1 || tokens[0].size() != width)
      throw InputError(source + ":" + std::to_string(number) + ": expected one " +
                       std::to_string(width) + "-bit vector");
    Bits bits;
    for (char c : tokens[0]) {
      if (c != '0' && c != '1')
        throw InputError(source + ":" + std::to_string(number) + ": vector must be 0/1 only");
      bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    w.vectors.push_back(std::move(bits));
  }
  if (w.vectors.empty()) throw InputError(source + ": workload has no vectors");
  return w;
}

inline VectorWorkload read_workload_file(const std::string& path, std::size_t width) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open workload '" + path + "'");
  return parse_workload(in, width, path);
}

struct Interval {
  double low;
  double high;
  double half_width() const { return 0.5 * (high - low); }
  bool contains(double x) const { return low <= x && x <= high; }
};

inline constexpr double kZ95 = 1.959963984540054;
inline constexpr double kZ99 = 2.5758293035489004;

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  // The bounds touch 0 and 1 exactly at the extremes; keep rounding out.
  const double low = successes == 0 ? 0.0 : std::max(0.0, center - half);
  const double high = successes == trials ? 1.0 : std::min(1.0, center + half);
  return {low, high};
}

struct InjectionResult {
  std::string node;
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  double derating = 0.0;
  Interval ci95{0.0, 1.0};

  double ci95_half_width() const { return ci95.half_width(); }
};

/**
 * Counts visible flips for trial indices [first, last). Trial i draws its
 * input vector from KeyedStream(seed, i), so any partition of the index
 * range merged by addition equals the sequential count.
 */
inline std::uint64_t count_visible_flips(const Netlist& nl, NetId node, const Workload& workload,
                                         std::uint64_t seed, std::uint64_t first,
                                         std::uint64_t last) {
  const auto cone = fanout_cone(nl, node);
  const auto* vectors = std::get_if<VectorWorkload>(&workload);
  Bits input(nl.inputs().size());
  Bits scratch;
  std::uint64_t errors = 0;
  for (std::uint64_t trial = first; trial < last; ++trial) {
    KeyedStream rng(seed, trial);
    if (vectors) {
      input = vectors->vectors[rng.below(vectors->vectors.size())];
    } else {
      for (auto& b : input) b = rng.bit();
    }
    const Bits golden = simulate_nets(nl, input);
    if (detail::flip_is_visible(nl, node, cone, golden, scratch)) ++errors;
  }
  return errors;
}

inline InjectionResult inject_campaign(const Netlist& nl, const std::string& node,
                                       std::uint64_t trials, std::uint64_t seed,
                                       const Workload& workload = UniformWorkload{},
                                       unsigned workers = 1) {
  const auto id = nl.find(node);
  if (!id) throw InputError("inject: unknown node '" + node + "'");
  if (trials == 0) throw InputError("inject: trials must be > 0");
  if (const auto* v = std::get_if<VectorWorkload>(&workload)) {
    if (v->vectors.empty()) throw InputError("inject: explicit workload is empty");
    for (const auto& bits : v->vectors)
      if (bits.size() != nl.inputs().size())
        throw InputError("inject: workload vector width does not match the netlist inputs");
  }

  std::uint64_t errors = 0;
  workers = std::max(1u, workers);
  if (workers == 1) {
    errors = count_visible_flips(nl, *id, workload, seed, 0, trials);
  } else {
    std::vector<std::uint64_t> partial(workers, 0);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t lo = trials * w / workers;
      const std::uint64_t hi = trials * (w + 1) / workers;
      pool.emplace_back([&, w, lo, hi] {
        partial[w] = count_visible_flips(nl, *id, workload, seed, lo, hi);
      });
    }
    for (auto& t : pool) t.join();
    for (auto c : partial) errors += c;
  }
  InjectionResult r;
  r.node = node;
  r.trials = trials;
  r.errors = errors;
  r.derating = static_cast<double>(errors) / static_cast<double>(trials);
  r.ci95 = wilson_interval(errors, trials, kZ95);
  return r;
}

/// Exact count of input vectors on which a flip at `node` is visible.
struct ExactFraction {
  std::uint64_t count;
  std::uint64_t total;
  double value() const { return static_cast<double>(count) / static_cast<double>(total); }
};

inline constexpr std::size_t kMaxExhaustiveInputs = 24;

inline ExactFraction exhaustive_derating(const Netlist& nl, const std::string& node) {
  const auto id = nl.find(node);
  if (!id) throw InputError("exhaustive: unknown node '" + node + "'");
  const std::size_t n = nl.inputs().size();
  if (n > kMaxExhaustiveInputs)
    throw InputError("exhaustive: " + std::to_string(n) + " inputs exceeds the limit of " +
                     std::to_string(kMaxExhaustiveInputs));
  const auto cone = fanout_cone(nl, *id);
  const std::uint64_t total = std::uint64_t{1} << n;
  Bits input(n), scratch;
  std::uint64_t count = 0;
  for (std::uint64_t v = 0; v < total; ++v) {
    for (std::size_t j = 0; j < n; ++j) input[j] = static_cast<std::uint8_t>((v >> j) & 1);
    if (detail::flip_is_visible(nl, *id, cone, simulate_nets(nl, input), scratch)) ++count;
  }
  return {count, total};
}

/// Raw FIT per net (failures per 1e9 device-hours).
struct SerParams {
  std::map<std::string, double> fit_per_node;
  double default_fit = 0.0;

  bool operator==(const SerParams&) const = default;

  double fit(const std::string& net) const {
    const auto it = fit_per_node.find(net);
    return it == fit_per_node.end() ? default_fit : it->second;
  }
};

inline void validate(const SerParams& ser, const Netlist& nl) {
  if (!(ser.default_fit >= 0.0) || !std::isfinite(ser.default_fit))
    throw InputError("ser: default_fit must be >= 0");
  for (const auto& [net, fit] : ser.fit_per_node) {
    if (!nl.find(net)) throw InputError("ser: FIT given for unknown net '" + net + "'");
    if (!(fit >= 0.0) || !std::isfinite(fit))
      throw InputError("ser: FIT for '" + net + "' must be >= 0");
  }
}

/// Nets carrying nonzero raw FIT, in net order.
inline std::vector<std::string> fit_bearing_nets(const Netlist& nl, const SerParams& ser) {
  std::vector<std::string> nets;
  for (const auto& name : nl.net_names())
    if (ser.fit(name) > 0.0) nets.push_back(name);
  return nets;
}

/// Derated FIT summed over nets, still in FIT units.
inline double effective_fit(const Netlist& nl, const SerParams& ser,
                            const std::map<std::string, double>& deratings) {
  validate(ser, nl);
  double total = 0.0;
  for (const auto& name : fit_bearing_nets(nl, ser)) {
    const auto it = deratings.find(name);
    if (it == deratings.end())
      throw InputError("ser: no derating for net '" + name + "' with nonzero FIT");
    if (!(it->second >= 0.0 && it->second <= 1.0))
      throw InputError("ser: derating for '" + name + "' outside [0,1]");
    total += ser.fit(name) * it->second;
  }
  return total;
}

inline constexpr double kHoursPerFit = 1e9;

/// Per-hour transient failure rate: sum of FIT * derating * 1e-9.
inline double transient_failure_rate(const Netlist& nl, const SerParams& ser,
                                     const std::map<std::string, double>& deratings) {
  return effective_fit(nl, ser, deratings) / kHoursPerFit;
}

inline ReliabilityFunction exponential_reliability(double lambda_per_hour) {
  if (!(lambda_per_hour >= 0.0) || !std::isfinite(lambda_per_hour))
    throw InputError("exponential_reliability: rate must be finite and >= 0");
  if (lambda_per_hour == 0.0) return ReliabilityFunction::constant_one();
  return ReliabilityFunction::exponential(lambda_per_hour);
}

}  // namespace cra
