#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "common.hpp"

namespace mcfft {

struct Tag {
  int channel = 0;
  long frame = 0;
  int index = 0;
  bool operator==(const Tag&) const = default;
};

// A sample in flight. Tokens without a tag are bubbles and always carry zero.
struct Token {
  Complex value{};
  std::optional<Tag> tag;

  bool is_bubble() const { return !tag.has_value(); }
  static Token bubble() { return {}; }
  static Token sample(Complex v, Tag t) { return {v, t}; }
};

// ------------------------------------------------------------ components

struct Delay {
  int length = 0;
  std::vector<Token> ring{};
  std::size_t head = 0;

  explicit Delay(int k = 0) : length(k), ring(static_cast<std::size_t>(std::max(k, 0))) {
    if (k < 0) throw CircuitError("negative delay length");
  }
  int inputs() const { return 1; }
  int outputs() const { return 1; }
  bool feedthrough() const { return length == 0; }
  long registers() const { return length; }
  void eval(long, const Token* in, Token* out) const { out[0] = length == 0 ? in[0] : ring[head]; }
  void commit(long, const Token* in) {
    if (length == 0) return;
    ring[head] = in[0];
    head = (head + 1) % ring.size();
  }
  void reset() {
    std::fill(ring.begin(), ring.end(), Token{});
    head = 0;
  }
  void shift(long) {}
  std::string describe() const { return "Delay(" + std::to_string(length) + ")"; }
};

// Periodic phase relative to an origin cycle.
struct PhaseClock {
  long period = 1;
  long origin = 0;
  long phase(long t) const { return floor_mod(t - origin, period); }
};

struct Switch2x2 {
  PhaseClock clock;
  std::vector<bool> crossed;  // per phase

  int inputs() const { return 2; }
  int outputs() const { return 2; }
  bool feedthrough() const { return true; }
  long registers() const { return 0; }
  void eval(long t, const Token* in, Token* out) const {
    const bool x = crossed[clock.phase(t)];
    out[0] = in[x ? 1 : 0];
    out[1] = in[x ? 0 : 1];
  }
  void commit(long, const Token*) {}
  void reset() {}
  void shift(long dt) { clock.origin += dt; }
  std::string describe() const {
    std::string s = "Switch2x2(period=" + std::to_string(clock.period) + ", crossed=";
    for (bool b : crossed) s += b ? '1' : '0';
    return s + ")";
  }
};

// Radix-2 butterfly. Operands must be partners: same channel and frame, indices span apart.
struct Butterfly2 {
  int span = 1;
  long fired = 0;
  long mismatches = 0;

  int inputs() const { return 2; }
  int outputs() const { return 2; }
  bool feedthrough() const { return true; }
  long registers() const { return 0; }
  bool partners(const Token& a, const Token& b) const {
    return a.tag && b.tag && a.tag->channel == b.tag->channel && a.tag->frame == b.tag->frame &&
           b.tag->index - a.tag->index == span;
  }
  void eval(long, const Token* in, Token* out) const {
    if (in[0].is_bubble() || in[1].is_bubble()) {
      out[0] = out[1] = Token{};
      return;
    }
    out[0] = {in[0].value + in[1].value, in[0].tag};
    out[1] = {in[0].value - in[1].value, in[1].tag};
  }
  void commit(long, const Token* in) {
    if (in[0].is_bubble() && in[1].is_bubble()) return;
    ++fired;
    if (!partners(in[0], in[1])) ++mismatches;
  }
  void reset() { fired = mismatches = 0; }
  void shift(long) {}
  std::string describe() const { return "Butterfly2(span=" + std::to_string(span) + ")"; }
};

struct TwiddleMul {
  PhaseClock clock;
  std::vector<Complex> factors;  // per phase

  int inputs() const { return 1; }
  int outputs() const { return 1; }
  bool feedthrough() const { return true; }
  long registers() const { return 0; }
  void eval(long t, const Token* in, Token* out) const {
    out[0] = in[0].is_bubble() ? Token{} : Token{in[0].value * factors[clock.phase(t)], in[0].tag};
  }
  void commit(long, const Token*) {}
  void reset() {}
  void shift(long dt) { clock.origin += dt; }
  std::string describe() const { return "TwiddleMul(period=" + std::to_string(clock.period) + ")"; }
};

// Elementary reordering circuit: a d-register delay line with a bypass. Stream position p
// (counted from clock.origin) trades places with position p + d whenever p mod period is
// a swap phase. Everything else is delayed by d.
struct Reoc {
  int distance = 1;
  PhaseClock clock;
  std::vector<bool> swap;
  std::vector<Token> ring{};
  std::size_t head = 0;

  Reoc(int d, long period, std::vector<bool> phases, long origin)
      : distance(d), clock{period, origin}, swap(std::move(phases)), ring(static_cast<std::size_t>(d)) {
    if (d < 1) throw CircuitError("reordering distance must be positive");
    if (static_cast<long>(swap.size()) != period) throw CircuitError("swap phase table does not match period");
    for (long p = 0; p < period; ++p) {
      if (!swap[p]) continue;
      if (swap[floor_mod(p + d, period)] || swap[floor_mod(p - d, period)])
        throw CircuitError("swap phase " + std::to_string(p) + " overlaps another swap at distance " +
                           std::to_string(d));
    }
  }
  int inputs() const { return 1; }
  int outputs() const { return 1; }
  bool feedthrough() const { return true; }
  long registers() const { return distance; }
  bool bypass(long t) const { return swap[clock.phase(t - distance)]; }
  void eval(long t, const Token* in, Token* out) const { out[0] = bypass(t) ? in[0] : ring[head]; }
  void commit(long t, const Token* in) {
    if (!bypass(t)) ring[head] = in[0];
    head = (head + 1) % ring.size();
  }
  void reset() {
    std::fill(ring.begin(), ring.end(), Token{});
    head = 0;
  }
  void shift(long dt) { clock.origin += dt; }
  std::string describe() const {
    return "Reoc(d=" + std::to_string(distance) + ", period=" + std::to_string(clock.period) + ")";
  }
};

struct Source {
  enum class Kind { None, Input, Register };
  Kind kind = Kind::None;
  int index = 0;
  static Source none() { return {}; }
  static Source input(int i) { return {Kind::Input, i}; }
  static Source reg(int r) { return {Kind::Register, r}; }
  bool operator==(const Source&) const = default;
};

// Register file with a periodic multiplexer schedule.
struct RegisterFile {
  int in_lanes = 1;
  int out_lanes = 1;
  PhaseClock clock;
  std::vector<std::vector<Source>> out_src;   // [phase][out lane]
  std::vector<std::vector<Source>> next_src;  // [phase][register]
  std::vector<Token> state{};

  int inputs() const { return in_lanes; }
  int outputs() const { return out_lanes; }
  bool feedthrough() const {
    for (const auto& row : out_src)
      for (const auto& s : row)
        if (s.kind == Source::Kind::Input) return true;
    return false;
  }
  long registers() const { return static_cast<long>(state.size()); }
  Token fetch(const Source& s, const Token* in) const {
    switch (s.kind) {
      case Source::Kind::Input: return in[s.index];
      case Source::Kind::Register: return state[s.index];
      default: return Token{};
    }
  }
  void eval(long t, const Token* in, Token* out) const {
    const auto& row = out_src[clock.phase(t)];
    for (int l = 0; l < out_lanes; ++l) out[l] = fetch(row[l], in);
  }
  void commit(long t, const Token* in) {
    const auto& row = next_src[clock.phase(t)];
    std::vector<Token> next(state.size());
    for (std::size_t r = 0; r < state.size(); ++r) next[r] = fetch(row[r], in);
    state = std::move(next);
  }
  void reset() { std::fill(state.begin(), state.end(), Token{}); }
  void shift(long dt) { clock.origin += dt; }
  std::string describe() const {
    return "RegisterFile(" + std::to_string(in_lanes) + "->" + std::to_string(out_lanes) +
           ", regs=" + std::to_string(state.size()) + ", period=" + std::to_string(clock.period) + ")";
  }
};

using Component = std::variant<Delay, Switch2x2, Butterfly2, TwiddleMul, Reoc, RegisterFile>;

// ------------------------------------------------------------ circuit

struct Instance {
  std::string name;
  std::string section;
  Component comp;
  std::vector<int> in;
  std::vector<int> out;
};

class Circuit {
 public:
  int add_input(const std::string& name) {
    const int n = new_net(name, -1);
    inputs_.push_back(n);
    return n;
  }

  std::vector<int> add(const std::string& name, const std::string& section, Component c,
                       const std::vector<int>& in) {
    const int ni = std::visit([](const auto& x) { return x.inputs(); }, c);
    const int no = std::visit([](const auto& x) { return x.outputs(); }, c);
    if (static_cast<int>(in.size()) != ni)
      throw CircuitError(name + ": expected " + std::to_string(ni) + " inputs, got " + std::to_string(in.size()));
    for (int n : in)
      if (n < 0 || n >= static_cast<int>(net_names_.size())) throw CircuitError(name + ": unknown net");
    Instance inst{name, section, std::move(c), in, {}};
    const int id = static_cast<int>(instances_.size());
    for (int k = 0; k < no; ++k) inst.out.push_back(new_net(no == 1 ? name : name + "." + std::to_string(k), id));
    instances_.push_back(std::move(inst));
    dirty_ = true;
    return instances_.back().out;
  }

  int add1(const std::string& name, const std::string& section, Component c, int in) {
    return add(name, section, std::move(c), {in}).front();
  }

  void add_output(int net, const std::string& name) {
    if (net < 0 || net >= static_cast<int>(net_names_.size())) throw CircuitError("unknown output net");
    outputs_.push_back(net);
    output_names_.push_back(name);
  }

  // Copies `sub` into this circuit. Its inputs are bound to `in`; returns nets for its outputs.
  std::vector<int> instantiate(const Circuit& sub, const std::vector<int>& in, const std::string& prefix,
                               const std::string& section_override = "") {
    if (in.size() != sub.inputs_.size()) throw CircuitError(prefix + ": input count mismatch");
    std::vector<int> map(sub.net_names_.size(), -1);
    for (std::size_t k = 0; k < in.size(); ++k) map[sub.inputs_[k]] = in[k];
    for (const Instance& x : sub.instances_) {
      std::vector<int> ins;
      for (int n : x.in) {
        if (map[n] < 0) throw CircuitError(prefix + ": sub-circuit is not in build order");
        ins.push_back(map[n]);
      }
      auto outs = add(prefix + x.name, section_override.empty() ? x.section : section_override, x.comp, ins);
      for (std::size_t k = 0; k < outs.size(); ++k) map[x.out[k]] = outs[k];
    }
    std::vector<int> res;
    for (int n : sub.outputs_) res.push_back(map[n]);
    return res;
  }

  std::size_t num_inputs() const { return inputs_.size(); }
  std::size_t num_outputs() const { return outputs_.size(); }
  const std::vector<int>& input_nets() const { return inputs_; }
  const std::vector<int>& output_nets() const { return outputs_; }
  const std::vector<std::string>& output_names() const { return output_names_; }
  const std::vector<std::string>& net_names() const { return net_names_; }
  const std::vector<Instance>& instances() const { return instances_; }
  // Mutable access; the evaluation order is rebuilt on the next step.
  std::vector<Instance>& instances() {
    dirty_ = true;
    return instances_;
  }
  long cycle() const { return cycle_; }

  int find_net(const std::string& name) const {
    for (std::size_t i = 0; i < output_names_.size(); ++i)
      if (output_names_[i] == name) return outputs_[i];
    for (std::size_t i = 0; i < net_names_.size(); ++i)
      if (net_names_[i] == name) return static_cast<int>(i);
    throw CircuitError("no net named " + name);
  }

  Instance& find_instance(const std::string& name) {
    for (auto& x : instances_)
      if (x.name == name) return x;
    throw CircuitError("no component named " + name);
  }

  int driver_of(int net) const { return drivers_.at(net); }

  std::vector<int> readers_of(int net) const {
    std::vector<int> r;
    for (std::size_t i = 0; i < instances_.size(); ++i)
      for (int n : instances_[i].in)
        if (n == net) r.push_back(static_cast<int>(i));
    for (int n : outputs_)
      if (n == net) r.push_back(-1);
    return r;
  }

  long register_count() const {
    long t = 0;
    for (const auto& x : instances_) t += std::visit([](const auto& c) { return c.registers(); }, x.comp);
    return t;
  }

  std::map<std::string, long> registers_by_section() const {
    std::map<std::string, long> m;
    for (const auto& x : instances_) m[x.section] += std::visit([](const auto& c) { return c.registers(); }, x.comp);
    return m;
  }

  long butterfly_mismatches() const {
    long t = 0;
    for (const auto& x : instances_)
      if (auto* b = std::get_if<Butterfly2>(&x.comp)) t += b->mismatches;
    return t;
  }

  // Checks drivers and combinational loops and fixes the evaluation order.
  void finalize() {
    if (!dirty_) return;
    std::vector<int> indeg(instances_.size(), 0);
    std::vector<std::vector<int>> succ(instances_.size());
    for (std::size_t i = 0; i < instances_.size(); ++i) {
      const bool ft = std::visit([](const auto& c) { return c.feedthrough(); }, instances_[i].comp);
      if (!ft) continue;
      for (int n : instances_[i].in) {
        const int d = drivers_[n];
        if (d >= 0) {
          succ[d].push_back(static_cast<int>(i));
          ++indeg[i];
        }
      }
    }
    std::queue<int> q;
    for (std::size_t i = 0; i < instances_.size(); ++i)
      if (indeg[i] == 0) q.push(static_cast<int>(i));
    order_.clear();
    while (!q.empty()) {
      const int i = q.front();
      q.pop();
      order_.push_back(i);
      for (int s : succ[i])
        if (--indeg[s] == 0) q.push(s);
    }
    if (order_.size() != instances_.size()) {
      for (std::size_t i = 0; i < instances_.size(); ++i)
        if (indeg[i] > 0) throw CircuitError("combinational cycle through " + instances_[i].name);
    }
    values_.assign(net_names_.size(), Token{});
    dirty_ = false;
  }

  std::vector<Token> step(const std::vector<Token>& in) {
    finalize();
    if (in.size() != inputs_.size()) throw CircuitError("wrong number of input tokens");
    for (std::size_t k = 0; k < in.size(); ++k) values_[inputs_[k]] = in[k];
    std::vector<Token> ibuf, obuf;
    for (int i : order_) {
      Instance& x = instances_[i];
      gather(x, ibuf);
      obuf.assign(x.out.size(), Token{});
      std::visit([&](const auto& c) { c.eval(cycle_, ibuf.data(), obuf.data()); }, x.comp);
      for (std::size_t k = 0; k < x.out.size(); ++k) values_[x.out[k]] = obuf[k];
    }
    for (Instance& x : instances_) {
      gather(x, ibuf);
      std::visit([&](auto& c) { c.commit(cycle_, ibuf.data()); }, x.comp);
    }
    ++cycle_;
    std::vector<Token> out;
    for (int n : outputs_) out.push_back(values_[n]);
    return out;
  }

  // Values carried by every net during the most recent cycle.
  const std::vector<Token>& net_values() const { return values_; }

  void reset() {
    for (auto& x : instances_) std::visit([](auto& c) { c.reset(); }, x.comp);
    std::fill(values_.begin(), values_.end(), Token{});
    cycle_ = 0;
  }

  std::string dump() const {
    std::ostringstream os;
    os << "inputs:";
    for (int n : inputs_) os << ' ' << net_names_[n];
    os << "\noutputs:";
    for (std::size_t i = 0; i < outputs_.size(); ++i) os << ' ' << output_names_[i] << '=' << net_names_[outputs_[i]];
    os << '\n';
    for (const auto& x : instances_) {
      os << x.section << ' ' << x.name << ' ' << std::visit([](const auto& c) { return c.describe(); }, x.comp)
         << " regs=" << std::visit([](const auto& c) { return c.registers(); }, x.comp) << " in=";
      for (std::size_t k = 0; k < x.in.size(); ++k) os << (k ? "," : "") << net_names_[x.in[k]];
      os << '\n';
    }
    os << "total registers: " << register_count() << '\n';
    return os.str();
  }

 private:
  int new_net(const std::string& name, int driver) {
    net_names_.push_back(name);
    drivers_.push_back(driver);
    return static_cast<int>(net_names_.size()) - 1;
  }

  void gather(const Instance& x, std::vector<Token>& buf) const {
    buf.resize(x.in.size());
    for (std::size_t k = 0; k < x.in.size(); ++k) buf[k] = values_[x.in[k]];
  }

  std::vector<std::string> net_names_;
  std::vector<int> drivers_;  // instance id, -1 for primary inputs
  std::vector<Instance> instances_;
  std::vector<int> inputs_;
  std::vector<int> outputs_;
  std::vector<std::string> output_names_;
  std::vector<int> order_;
  std::vector<Token> values_;
  long cycle_ = 0;
  bool dirty_ = true;
};

// Removes one register from every input of `target` when each input is driven by its own
// delay of length one or more, and moves all control downstream one cycle earlier.
// Returns the number of registers removed.
inline long reverse_pipeline(Circuit& c, const std::string& target) {
  auto& insts = c.instances();
  int tid = -1;
  for (std::size_t i = 0; i < insts.size(); ++i)
    if (insts[i].name == target) tid = static_cast<int>(i);
  if (tid < 0) throw CircuitError("no component named " + target);

  std::vector<int> delays;
  for (int n : insts[tid].in) {
    const int d = c.driver_of(n);
    Delay* dl = d >= 0 ? std::get_if<Delay>(&insts[d].comp) : nullptr;
    if (!dl || dl->length < 1) throw CircuitError(target + ": input " + c.net_names()[n] + " is not a delay");
    if (c.readers_of(n).size() != 1) throw CircuitError(target + ": delay output " + c.net_names()[n] + " fans out");
    if (std::find(delays.begin(), delays.end(), d) != delays.end()) throw CircuitError(target + ": shared delay");
    delays.push_back(d);
  }

  // Everything fed by the target, directly or not, runs one cycle earlier.
  std::set<int> cone{tid};
  std::vector<int> work{tid};
  while (!work.empty()) {
    const int i = work.back();
    work.pop_back();
    for (int n : insts[i].out)
      for (int r : c.readers_of(n))
        if (r >= 0 && cone.insert(r).second) work.push_back(r);
  }
  for (int i : cone) {
    if (i == tid) continue;
    for (int n : insts[i].in) {
      const int d = c.driver_of(n);
      if (d < 0 || !cone.count(d))
        throw CircuitError(insts[i].name + " mixes retimed and untouched signals");
    }
  }
  for (int d : delays) insts[d].comp = Delay(std::get<Delay>(insts[d].comp).length - 1);
  for (int i : cone) std::visit([](auto& x) { x.shift(-1); }, insts[i].comp);
  c.reset();
  return static_cast<long>(delays.size());
}

// ------------------------------------------------------------ simulation

struct Trace {
  std::vector<std::string> ports;
  std::vector<std::vector<Token>> rows;  // [cycle][port]

  int port(const std::string& name) const {
    for (std::size_t i = 0; i < ports.size(); ++i)
      if (ports[i] == name) return static_cast<int>(i);
    throw CircuitError("trace has no port " + name);
  }

  std::vector<Token> lane(const std::string& name) const {
    const int p = port(name);
    std::vector<Token> v;
    for (const auto& r : rows) v.push_back(r[p]);
    return v;
  }
};

struct TraceOptions {
  bool all_nets = false;
};

// Feeds inputs[lane][cycle] (bubbles past the end) for `cycles` cycles starting from reset.
// Records primary inputs and outputs, or every net.
inline Trace simulate(Circuit& c, const std::vector<std::vector<Token>>& inputs, long cycles,
                      const TraceOptions& opt = {}) {
  if (inputs.size() != c.num_inputs()) throw CircuitError("stimulus lane count does not match circuit inputs");
  c.reset();
  c.finalize();
  Trace tr;
  std::vector<int> nets;
  if (opt.all_nets) {
    for (std::size_t n = 0; n < c.net_names().size(); ++n) {
      nets.push_back(static_cast<int>(n));
      tr.ports.push_back(c.net_names()[n]);
    }
  } else {
    for (int n : c.input_nets()) {
      nets.push_back(n);
      tr.ports.push_back(c.net_names()[n]);
    }
  }
  for (std::size_t i = 0; i < c.num_outputs(); ++i) {
    nets.push_back(c.output_nets()[i]);
    tr.ports.push_back(c.output_names()[i]);
  }
  std::vector<Token> in(c.num_inputs());
  for (long t = 0; t < cycles; ++t) {
    for (std::size_t l = 0; l < in.size(); ++l)
      in[l] = t < static_cast<long>(inputs[l].size()) ? inputs[l][t] : Token{};
    c.step(in);
    std::vector<Token> row;
    row.reserve(nets.size());
    for (int n : nets) row.push_back(c.net_values()[n]);
    tr.rows.push_back(std::move(row));
  }
  return tr;
}

inline void write_trace_csv(std::ostream& os, const Trace& tr) {
  os << "cycle,port,re,im,channel,frame,index,bubble\n";
  for (std::size_t t = 0; t < tr.rows.size(); ++t) {
    for (std::size_t p = 0; p < tr.ports.size(); ++p) {
      const Token& k = tr.rows[t][p];
      os << t << ',' << tr.ports[p] << ',' << format_double(k.value.real()) << ','
         << format_double(k.value.imag()) << ',';
      if (k.tag)
        os << k.tag->channel << ',' << k.tag->frame << ',' << k.tag->index << ",0\n";
      else
        os << ",,,1\n";
    }
  }
}

}  // namespace mcfft
