#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dfg.hpp"

namespace mcfft {

struct OpRef {
  int stage = 0;
  int index = 0;
  int channel = 0;

  auto operator<=>(const OpRef&) const = default;

  // A3 for channel 0, A'3 for channel 1, A''3 for channel 2 ...
  std::string text() const {
    std::string s(1, stage_letter(stage));
    s.append(static_cast<std::size_t>(channel), '\'');
    return s + std::to_string(index);
  }
};

using Slot = std::optional<OpRef>;

struct FoldingSet {
  std::string unit;
  std::vector<Slot> slots;

  std::size_t folding_factor() const { return slots.size(); }
  bool operator==(const FoldingSet&) const = default;
};

// Unit i executes stage i.
using FoldingSets = std::vector<FoldingSet>;

// ---------------------------------------------------------------- text form

inline std::string format_folding_sets(const FoldingSets& sets) {
  std::ostringstream os;
  for (const FoldingSet& fs : sets) {
    os << fs.unit << ':';
    for (const Slot& s : fs.slots) os << ' ' << (s ? s->text() : std::string("-"));
    os << '\n';
  }
  return os.str();
}

inline OpRef parse_op_ref(const std::string& tok) {
  if (tok.size() < 2 || tok[0] < 'A' || tok[0] > 'Z') throw ParseError("bad operation token '" + tok + "'");
  OpRef r;
  r.stage = tok[0] - 'A';
  std::size_t i = 1;
  while (i < tok.size() && tok[i] == '\'') {
    ++r.channel;
    ++i;
  }
  if (i == tok.size()) throw ParseError("missing index in '" + tok + "'");
  int idx = 0;
  for (; i < tok.size(); ++i) {
    if (tok[i] < '0' || tok[i] > '9') throw ParseError("bad index in '" + tok + "'");
    idx = idx * 10 + (tok[i] - '0');
  }
  r.index = idx;
  return r;
}

inline FoldingSets parse_folding_sets(const std::string& text) {
  FoldingSets out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": missing ':'");
    FoldingSet fs;
    std::istringstream name(line.substr(0, colon));
    if (!(name >> fs.unit)) throw ParseError("line " + std::to_string(lineno) + ": missing unit name");
    std::istringstream toks(line.substr(colon + 1));
    std::string tok;
    while (toks >> tok) {
      if (tok == "-")
        fs.slots.emplace_back(std::nullopt);
      else
        fs.slots.emplace_back(parse_op_ref(tok));
    }
    out.push_back(std::move(fs));
  }
  return out;
}

// ------------------------------------------------------------ transforms

inline FoldingSet interleave_nulls(const FoldingSet& fs, int m) {
  if (m < 1) throw SizeError("interleave factor must be positive");
  FoldingSet out{fs.unit, std::vector<Slot>(fs.slots.size() * static_cast<std::size_t>(m))};
  for (std::size_t i = 0; i < fs.slots.size(); ++i) out.slots[i * m] = fs.slots[i];
  return out;
}

inline FoldingSets interleave_nulls(const FoldingSets& sets, int m) {
  FoldingSets out;
  for (const auto& fs : sets) out.push_back(interleave_nulls(fs, m));
  return out;
}

// Slot strides used to place channels 1..m-1 into null slots. Channel c sits at the sum
// of the strides selected by the bits of c. The same strides apply to every unit.
inline std::vector<std::size_t> channel_strides(const FoldingSets& sets, int m) {
  if (!is_power_of_two(static_cast<std::size_t>(m))) throw SizeError("channel count must be a power of two");
  if (sets.empty()) throw SizeError("no folding sets");
  const std::size_t nf = sets[0].folding_factor();
  std::vector<std::vector<bool>> occ(sets.size(), std::vector<bool>(nf));
  for (std::size_t u = 0; u < sets.size(); ++u) {
    if (sets[u].folding_factor() != nf) throw SizeError("folding sets differ in length");
    for (std::size_t s = 0; s < nf; ++s) occ[u][s] = sets[u].slots[s].has_value();
  }
  std::vector<std::size_t> strides;
  for (int have = 1; have < m; have *= 2) {
    std::optional<std::size_t> pick;
    for (std::size_t d = 1; d < nf && !pick; ++d) {
      bool ok = true;
      for (std::size_t u = 0; u < sets.size() && ok; ++u)
        for (std::size_t s = 0; s < nf && ok; ++s)
          if (occ[u][s] && occ[u][(s + d) % nf]) ok = false;
      if (ok) pick = d;
    }
    if (!pick) throw ScheduleError("not enough null slots to hold " + std::to_string(m) + " channels");
    for (auto& row : occ) {
      std::vector<bool> next = row;
      for (std::size_t s = 0; s < nf; ++s)
        if (row[s]) next[(s + *pick) % nf] = true;
      row = std::move(next);
    }
    strides.push_back(*pick);
  }
  return strides;
}

inline std::size_t channel_offset(const std::vector<std::size_t>& strides, int channel) {
  std::size_t off = 0;
  for (std::size_t b = 0; b < strides.size(); ++b)
    if ((channel >> b) & 1) off += strides[b];
  return off;
}

inline FoldingSets fill_channels(const FoldingSets& sets, int m) {
  const auto strides = channel_strides(sets, m);
  FoldingSets out;
  for (const FoldingSet& fs : sets) {
    const std::size_t nf = fs.folding_factor();
    FoldingSet r{fs.unit, std::vector<Slot>(nf)};
    for (int c = 0; c < m; ++c) {
      const std::size_t off = channel_offset(strides, c);
      for (std::size_t s = 0; s < nf; ++s) {
        if (!fs.slots[s]) continue;
        auto& dst = r.slots[(s + off) % nf];
        if (dst) throw ScheduleError("channel placement collides in unit " + fs.unit);
        OpRef op = *fs.slots[s];
        op.channel = c;
        dst = op;
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline FoldingSet fill_channels(const FoldingSet& fs, int m) { return fill_channels(FoldingSets{fs}, m).front(); }

// ------------------------------------------------------------ generators

inline FoldingSet make_set(int stage, const std::vector<int>& order) {
  FoldingSet fs{std::string(1, stage_letter(stage)), {}};
  for (int j : order) fs.slots.emplace_back(OpRef{stage, j, 0});
  return fs;
}

inline std::vector<int> rotate_right(std::vector<int> v, std::size_t r) {
  if (!v.empty()) std::rotate(v.begin(), v.end() - static_cast<long>(r % v.size()), v.end());
  return v;
}

// Stage s runs its ops in natural order starting at op N/2^(s+1) (stage 0 starts at op 0).
inline FoldingSets sequential_folding_sets(std::size_t n) {
  const int stages = log2_exact(n);
  const int half = static_cast<int>(n / 2);
  FoldingSets out;
  for (int s = 0; s < stages; ++s) {
    const int first = s == 0 ? 0 : static_cast<int>(n >> (s + 1)) % half;
    std::vector<int> order;
    for (int j = 0; j < half; ++j) order.push_back((first + j) % half);
    out.push_back(make_set(s, order));
  }
  return out;
}

// Serial pipeline: stage s starts N/2 - N/2^(s+1) slots after stage 0, one op per slot.
inline FoldingSets r2mdc_folding_sets(std::size_t n) {
  const int stages = log2_exact(n);
  FoldingSets out;
  for (int s = 0; s < stages; ++s) {
    FoldingSet fs{std::string(1, stage_letter(s)), std::vector<Slot>(n)};
    const std::size_t off = n / 2 - (n >> (s + 1));
    for (std::size_t j = 0; j < n / 2; ++j) fs.slots[off + j] = OpRef{s, static_cast<int>(j), 0};
    out.push_back(std::move(fs));
  }
  return out;
}

// ------------------------------------------------------------ validation

enum class DiagnosticKind {
  Missing,
  Duplicate,
  WrongUnit,
  IndexOutOfRange,
  ChannelOutOfRange,
  LengthMismatch,
  DuplicateUnit,
  NegativeDelay,
};

inline const char* to_string(DiagnosticKind k) {
  switch (k) {
    case DiagnosticKind::Missing: return "missing";
    case DiagnosticKind::Duplicate: return "duplicate";
    case DiagnosticKind::WrongUnit: return "wrong-unit";
    case DiagnosticKind::IndexOutOfRange: return "index-out-of-range";
    case DiagnosticKind::ChannelOutOfRange: return "channel-out-of-range";
    case DiagnosticKind::LengthMismatch: return "length-mismatch";
    case DiagnosticKind::DuplicateUnit: return "duplicate-unit";
    case DiagnosticKind::NegativeDelay: return "negative-delay";
  }
  return "?";
}

struct Diagnostic {
  DiagnosticKind kind;
  std::string message;
};

struct ValidationResult {
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
  bool has(DiagnosticKind k) const {
    return std::any_of(diagnostics.begin(), diagnostics.end(), [&](const Diagnostic& d) { return d.kind == k; });
  }
};

struct FoldOptions {
  // Insert whole-iteration pipelining lags so that no folded delay is negative.
  // With this off, any negative delay is an error.
  bool pipeline = true;
  int unit_latency = 0;
  // 0 means: one more than the highest channel found in the sets.
  int channels = 0;
};

struct Placement {
  int unit = 0;
  int slot = 0;
  int lag = 0;
};

struct FoldedEdge {
  OpRef from;
  int from_port = 0;
  OpRef to;
  int to_port = 0;
  int lag_weight = 0;  // iterations of pipelining on this edge
  long delay = 0;      // registers the edge needs when nothing is shared
};

struct FoldedSchedule {
  std::size_t points = 0;
  int stages = 0;
  std::size_t folding_factor = 0;
  int channels = 0;
  int unit_latency = 0;
  FoldingSets sets;
  std::map<OpRef, Placement> placement;
  std::vector<FoldedEdge> edges;

  long fire_time(const OpRef& op) const {
    const Placement& p = placement.at(op);
    return static_cast<long>(p.lag) * static_cast<long>(folding_factor) + p.slot;
  }

  long total_delay() const {
    long t = 0;
    for (const auto& e : edges) t += e.delay;
    return t;
  }

  const FoldedEdge& edge(const OpRef& from, const OpRef& to) const {
    for (const auto& e : edges)
      if (e.from == from && e.to == to) return e;
    throw ScheduleError("no edge " + from.text() + " -> " + to.text());
  }
};

namespace detail {

inline int channel_count(const FoldingSets& sets, int requested) {
  if (requested > 0) return requested;
  int m = 0;
  for (const auto& fs : sets)
    for (const auto& s : fs.slots)
      if (s) m = std::max(m, s->channel + 1);
  return std::max(m, 1);
}

inline ValidationResult check_structure(const DataFlowGraph& g, const FoldingSets& sets, int channels) {
  ValidationResult res;
  auto add = [&](DiagnosticKind k, std::string m) { res.diagnostics.push_back({k, std::move(m)}); };
  if (static_cast<int>(sets.size()) != g.stages())
    add(DiagnosticKind::LengthMismatch, "expected " + std::to_string(g.stages()) + " units, got " +
                                            std::to_string(sets.size()));
  std::set<std::string> names;
  for (const auto& fs : sets)
    if (!names.insert(fs.unit).second) add(DiagnosticKind::DuplicateUnit, "unit " + fs.unit + " appears twice");
  if (!sets.empty()) {
    const std::size_t nf = sets[0].folding_factor();
    for (const auto& fs : sets)
      if (fs.folding_factor() != nf || nf == 0)
        add(DiagnosticKind::LengthMismatch, "unit " + fs.unit + " has " + std::to_string(fs.folding_factor()) +
                                                " slots, expected " + std::to_string(nf));
  }
  std::map<OpRef, int> seen;
  for (std::size_t u = 0; u < sets.size(); ++u) {
    for (std::size_t s = 0; s < sets[u].slots.size(); ++s) {
      const Slot& sl = sets[u].slots[s];
      if (!sl) continue;
      const std::string where = " at " + sets[u].unit + "[" + std::to_string(s) + "]";
      if (sl->index < 0 || sl->index >= g.ops_per_stage() || sl->stage < 0 || sl->stage >= g.stages()) {
        add(DiagnosticKind::IndexOutOfRange, sl->text() + where + " does not exist");
        continue;
      }
      if (sl->channel < 0 || sl->channel >= channels) {
        add(DiagnosticKind::ChannelOutOfRange, sl->text() + where + " names a channel beyond " +
                                                   std::to_string(channels - 1));
        continue;
      }
      if (sl->stage != static_cast<int>(u))
        add(DiagnosticKind::WrongUnit, sl->text() + where + " belongs to unit " + std::to_string(sl->stage));
      if (++seen[*sl] == 2) add(DiagnosticKind::Duplicate, sl->text() + where + " is already scheduled");
    }
  }
  for (int c = 0; c < channels; ++c)
    for (int s = 0; s < g.stages(); ++s)
      for (int j = 0; j < g.ops_per_stage(); ++j)
        if (!seen.count(OpRef{s, j, c})) add(DiagnosticKind::Missing, OpRef{s, j, c}.text() + " is not scheduled");
  return res;
}

// Assumes the structure is valid. Lags are the smallest that satisfy causality.
inline FoldedSchedule fold_unchecked(const DataFlowGraph& g, const FoldingSets& sets, const FoldOptions& opt,
                                     int channels, ValidationResult* strict) {
  FoldedSchedule fs;
  fs.points = g.points();
  fs.stages = g.stages();
  fs.folding_factor = sets[0].folding_factor();
  fs.channels = channels;
  fs.unit_latency = opt.unit_latency;
  fs.sets = sets;
  const long nf = static_cast<long>(fs.folding_factor);
  for (std::size_t u = 0; u < sets.size(); ++u)
    for (std::size_t s = 0; s < sets[u].slots.size(); ++s)
      if (sets[u].slots[s]) fs.placement[*sets[u].slots[s]] = {static_cast<int>(u), static_cast<int>(s), 0};

  for (int st = 1; st < g.stages(); ++st) {
    for (int c = 0; c < channels; ++c) {
      for (int j = 0; j < g.ops_per_stage(); ++j) {
        const OpRef v{st, j, c};
        Placement& pv = fs.placement.at(v);
        long need = 0;
        for (int p = 0; p < 2; ++p) {
          const auto src = g.source(st, j, p);
          const OpRef u{st - 1, g.ops()[src.op].index, c};
          const long ready = fs.fire_time(u) + opt.unit_latency;
          if (ready > pv.slot) need = std::max(need, (ready - pv.slot + nf - 1) / nf);
        }
        if (opt.pipeline) pv.lag = static_cast<int>(need);
      }
    }
  }
  for (int st = 1; st < g.stages(); ++st) {
    for (int c = 0; c < channels; ++c) {
      for (int j = 0; j < g.ops_per_stage(); ++j) {
        const OpRef v{st, j, c};
        for (int p = 0; p < 2; ++p) {
          const auto src = g.source(st, j, p);
          const OpRef u{st - 1, g.ops()[src.op].index, c};
          FoldedEdge e{u, src.port, v, p, fs.placement.at(v).lag - fs.placement.at(u).lag, 0};
          e.delay = fs.fire_time(v) - fs.fire_time(u) - opt.unit_latency;
          if (e.delay < 0 && strict)
            strict->diagnostics.push_back({DiagnosticKind::NegativeDelay, u.text() + " -> " + v.text() +
                                                                             ": folded delay " +
                                                                             std::to_string(e.delay)});
          fs.edges.push_back(e);
        }
      }
    }
  }
  return fs;
}

}  // namespace detail

inline ValidationResult validate_schedule(const DataFlowGraph& g, const FoldingSets& sets,
                                          const FoldOptions& opt = {}) {
  const int channels = detail::channel_count(sets, opt.channels);
  ValidationResult res = detail::check_structure(g, sets, channels);
  if (res.ok() && !opt.pipeline) detail::fold_unchecked(g, sets, opt, channels, &res);
  return res;
}

inline FoldedSchedule fold(const DataFlowGraph& g, const FoldingSets& sets, const FoldOptions& opt = {}) {
  ValidationResult res = validate_schedule(g, sets, opt);
  if (!res.ok()) {
    std::string msg = "invalid folding sets: " + res.diagnostics.front().message;
    if (res.diagnostics.size() > 1) msg += " (+" + std::to_string(res.diagnostics.size() - 1) + " more)";
    throw ScheduleError(msg);
  }
  return detail::fold_unchecked(g, sets, opt, detail::channel_count(sets, opt.channels), nullptr);
}

// ------------------------------------------------------------ lifetimes

struct LifetimeAnalysis {
  long registers = 0;  // most values alive at once, one shared pool
  long unshared = 0;   // sum of edge delays
  std::vector<long> live_per_phase;
  std::vector<long> per_boundary;  // entry b: pool feeding stage b + 1
  long boundary_total() const {
    long t = 0;
    for (long v : per_boundary) t += v;
    return t;
  }
};

// A value produced at a and consumed at d occupies a register at the start of cycles a+1 .. d.
inline LifetimeAnalysis minimize_registers(const FoldedSchedule& fs) {
  const long nf = static_cast<long>(fs.folding_factor);
  LifetimeAnalysis la;
  la.live_per_phase.assign(fs.folding_factor, 0);
  std::vector<std::vector<long>> per(static_cast<std::size_t>(std::max(fs.stages - 1, 0)),
                                     std::vector<long>(fs.folding_factor, 0));
  for (const auto& e : fs.edges) {
    const long a = fs.fire_time(e.from) + fs.unit_latency;
    const long d = fs.fire_time(e.to);
    la.unshared += d - a;
    for (long t = a + 1; t <= d; ++t) {
      ++la.live_per_phase[floor_mod(t, nf)];
      ++per[e.to.stage - 1][floor_mod(t, nf)];
    }
  }
  for (long v : la.live_per_phase) la.registers = std::max(la.registers, v);
  for (const auto& row : per) la.per_boundary.push_back(*std::max_element(row.begin(), row.end()));
  return la;
}

// Registers needed to turn one serial stream into natural order at minimum latency.
// lines[q] is the DFG output line carried by stream position q; period = lines.size().
inline long natural_order_registers(const std::vector<int>& lines) {
  const long p = static_cast<long>(lines.size());
  const int bits = log2_exact(lines.size());
  long base = 0;
  for (long q = 0; q < p; ++q) base = std::max(base, q - static_cast<long>(reverse_bits(lines[q], bits)));
  std::vector<long> live(lines.size(), 0);
  for (long q = 0; q < p; ++q)
    for (long t = q + 1; t <= base + static_cast<long>(reverse_bits(lines[q], bits)); ++t) ++live[floor_mod(t, p)];
  return *std::max_element(live.begin(), live.end());
}

// Output lines of one channel in the order the last stage produces them (top then bottom).
inline std::vector<int> produced_line_order(const DataFlowGraph& g, const FoldedSchedule& f, int channel = 0) {
  const int last = g.stages() - 1;
  std::vector<std::pair<long, int>> fire;
  for (int j = 0; j < g.ops_per_stage(); ++j) fire.push_back({f.fire_time(OpRef{last, j, channel}), j});
  std::sort(fire.begin(), fire.end());
  std::vector<int> lines;
  for (auto [t, j] : fire) {
    lines.push_back(g.op(last, j).top);
    lines.push_back(g.op(last, j).bottom);
  }
  return lines;
}

// 2-parallel sets: stage 0 runs even ops then odd ops. Every later stage runs the same
// order rotated by the amount that needs the fewest registers at its input boundary.
// Ties on the last stage go to the cheapest natural-order output, then to the earliest
// finish, then to the smaller rotation.
inline FoldingSets two_parallel_folding_sets(std::size_t n) {
  const DataFlowGraph g = build_dif_dfg(n);
  const int half = g.ops_per_stage();
  std::vector<int> base;
  for (int j = 0; j < half; j += 2) base.push_back(j);
  for (int j = 1; j < half; j += 2) base.push_back(j);
  if (half == 1) base = {0};

  FoldingSets sets{make_set(0, base)};
  for (int s = 1; s < g.stages(); ++s) {
    FoldingSets best;
    long best_regs = 0, best_out = 0, best_end = 0;
    for (int r = 0; r < half; ++r) {
      FoldingSets trial = sets;
      trial.push_back(make_set(s, rotate_right(base, static_cast<std::size_t>(r))));
      // Later stages get placeholder sets so the partial schedule can be folded.
      for (int k = s + 1; k < g.stages(); ++k) trial.push_back(make_set(k, base));
      const FoldedSchedule f = fold(g, trial);
      const LifetimeAnalysis la = minimize_registers(f);
      long end = 0;
      for (const auto& slot : trial[s].slots) end = std::max(end, f.fire_time(*slot));
      const long regs = la.per_boundary[s - 1];
      const long out = s + 1 == g.stages() ? natural_order_registers(produced_line_order(g, f)) : 0;
      if (best.empty() || std::tie(regs, out, end) < std::tie(best_regs, best_out, best_end)) {
        best.assign(trial.begin(), trial.begin() + s + 1);
        best_regs = regs;
        best_out = out;
        best_end = end;
      }
    }
    sets = best;
  }
  return sets;
}

inline FoldingSets base_folding_sets_16() { return two_parallel_folding_sets(16); }
inline FoldingSets r2mdc_folding_sets_16() { return r2mdc_folding_sets(16); }

// ------------------------------------------------------------ register census

struct RegisterLine {
  std::string section;
  std::string label;
  long registers = 0;
};

struct RegisterReport {
  long pre = 0;
  long fft = 0;
  long post = 0;
  long reordering = 0;
  std::vector<RegisterLine> lines;

  long total() const { return pre + fft + post + reordering; }

  void add(const std::string& section, const std::string& label, long n) {
    lines.push_back({section, label, n});
    if (section == "pre")
      pre += n;
    else if (section == "fft")
      fft += n;
    else if (section == "post")
      post += n;
    else if (section == "reorder")
      reordering += n;
    else
      throw Error("unknown census section " + section);
  }
};

}  // namespace mcfft
