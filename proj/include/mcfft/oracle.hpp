#pragma once

// Reference machinery for checking the simulator. Nothing here calls the DFG evaluator
// or the circuit builders.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "netlist.hpp"

namespace mcfft {

inline std::vector<Complex> naive_dft(std::span<const Complex> x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex acc{};
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += x[j] * std::polar(1.0, ang);
    }
    out[k] = acc;
  }
  return out;
}

// Built by doubling: order(2n) = [2p for p in order(n)] ++ [2p + 1 for p in order(n)].
inline std::vector<std::size_t> bit_reverse_perm(std::size_t n) {
  if (n == 0 || (n & (n - 1))) throw SizeError("bit reversal needs a power of two");
  std::vector<std::size_t> p{0};
  while (p.size() < n) {
    std::vector<std::size_t> q;
    for (auto v : p) q.push_back(2 * v);
    for (auto v : p) q.push_back(2 * v + 1);
    p = std::move(q);
  }
  return p;
}

// Bit reversal applied separately to each half of the index range.
inline std::vector<std::size_t> half_size_bit_reverse_perm(std::size_t n) {
  if (n < 2) throw SizeError("half-size bit reversal needs n >= 2");
  const auto h = bit_reverse_perm(n / 2);
  std::vector<std::size_t> p;
  for (auto v : h) p.push_back(v);
  for (auto v : h) p.push_back(v + n / 2);
  return p;
}

// Closed-form register count of a minimum serial bit reversal (Garrido et al.).
inline long bit_reversal_register_bound(std::size_t n) {
  int bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  if (bits % 2 == 0) {
    const long r = 1L << (bits / 2);
    return (r - 1) * (r - 1);
  }
  return static_cast<long>(n) - 3L * (1L << ((bits - 1) / 2)) + 1;
}

// ------------------------------------------------------------ tag patterns

struct ExpectedToken {
  int channel = 0;
  int index = 0;
  long frame_offset = 0;  // relative to the period count
};

// What each lane carries at each phase of a periodic output pattern. Phase 0 is the first
// cycle on which any lane carries data. Each (channel, index) appears once per period.
struct PermutationSpec {
  long period = 1;
  std::vector<std::vector<std::optional<ExpectedToken>>> slots;  // [phase][lane]

  std::size_t lanes() const { return slots.empty() ? 0 : slots[0].size(); }
  std::size_t entries() const {
    std::size_t n = 0;
    for (const auto& row : slots)
      for (const auto& s : row) n += s.has_value();
    return n;
  }
};

struct PermutationCheck {
  bool ok = false;
  long cycle = -1;
  int lane = -1;
  long matched = 0;
  long start = -1;
  std::string message;
};

inline std::string describe(const Token& t) {
  if (!t.tag) return "bubble";
  return "c" + std::to_string(t.tag->channel) + " f" + std::to_string(t.tag->frame) + " i" +
         std::to_string(t.tag->index);
}

// lanes[l][t]: token seen on lane l at cycle t. Frames 0 .. frames-1 must all appear, in
// the pattern, and nothing else may appear.
inline PermutationCheck check_permutation(const std::vector<std::vector<Token>>& lanes, const PermutationSpec& spec,
                                          long frames) {
  PermutationCheck res;
  if (lanes.size() != spec.lanes()) {
    res.message = "lane count differs from pattern";
    return res;
  }
  const long cycles = lanes.empty() ? 0 : static_cast<long>(lanes[0].size());
  long c0 = -1;
  for (long t = 0; t < cycles && c0 < 0; ++t)
    for (const auto& l : lanes)
      if (!l[t].is_bubble()) c0 = t;
  if (c0 < 0) {
    res.message = "no data on any lane";
    return res;
  }
  res.start = c0;
  for (long t = c0; t < cycles; ++t) {
    const long ph = (t - c0) % spec.period;
    const long per = (t - c0) / spec.period;
    for (std::size_t l = 0; l < lanes.size(); ++l) {
      const Token& tok = lanes[l][t];
      const auto& e = spec.slots[ph][l];
      const long frame = e ? per + e->frame_offset : -1;
      const bool want = e && frame >= 0 && frame < frames;
      auto fail = [&](const std::string& why) {
        res.cycle = t;
        res.lane = static_cast<int>(l);
        res.message = "cycle " + std::to_string(t) + " lane " + std::to_string(l) + ": " + why;
        return res;
      };
      if (!want) {
        if (!tok.is_bubble()) return fail("unexpected " + describe(tok));
        continue;
      }
      const Token expect = Token::sample({}, Tag{e->channel, frame, e->index});
      if (tok.is_bubble() || !(*tok.tag == *expect.tag))
        return fail("expected " + describe(expect) + ", got " + describe(tok));
      ++res.matched;
    }
  }
  const long total = frames * static_cast<long>(spec.entries());
  if (res.matched != total) {
    res.message = "trace ended after " + std::to_string(res.matched) + " of " + std::to_string(total) + " tokens";
    return res;
  }
  res.ok = true;
  return res;
}

// Each lane carries one channel serially: lane c, phase q -> (channel c, order[q]).
inline PermutationSpec serial_channels_spec(int channels, const std::vector<std::size_t>& order) {
  PermutationSpec s;
  s.period = static_cast<long>(order.size());
  s.slots.assign(order.size(), std::vector<std::optional<ExpectedToken>>(channels));
  for (std::size_t q = 0; q < order.size(); ++q)
    for (int c = 0; c < channels; ++c) s.slots[q][c] = ExpectedToken{c, static_cast<int>(order[q]), 0};
  return s;
}

// ------------------------------------------------------------ measurement

struct UnitProbe {
  std::string name;
  std::vector<std::string> operands;
};

struct MeasureRequest {
  std::vector<std::string> inputs;       // primary input ports
  std::vector<std::string> pre_outputs;  // ports leaving the pre-processor
  std::vector<std::string> outputs;      // primary output ports
  std::vector<UnitProbe> units;
  long period = 1;  // folding period used to round the steady-state window
};

struct Measurement {
  std::map<std::string, double> utilization;
  long first_input = -1;
  long pre_latency = -1;
  long latency = -1;  // first input to first output
  double throughput = 0.0;  // input samples per cycle over the window
  long window_begin = 0;
  long window_end = 0;
};

// Steady state starts at twice the input-to-output latency and ends at the last input,
// trimmed to whole periods.
inline Measurement measure(const Trace& tr, const MeasureRequest& req) {
  Measurement m;
  const long cycles = static_cast<long>(tr.rows.size());
  auto first_data = [&](const std::vector<std::string>& ports) {
    long best = -1;
    for (const auto& p : ports) {
      const int k = tr.port(p);
      for (long t = 0; t < cycles; ++t)
        if (!tr.rows[t][k].is_bubble()) {
          if (best < 0 || t < best) best = t;
          break;
        }
    }
    return best;
  };
  long last_input = -1;
  for (const auto& p : req.inputs) {
    const int k = tr.port(p);
    for (long t = cycles - 1; t >= 0; --t)
      if (!tr.rows[t][k].is_bubble()) {
        last_input = std::max(last_input, t);
        break;
      }
  }
  m.first_input = first_data(req.inputs);
  const long pre_out = first_data(req.pre_outputs);
  if (m.first_input >= 0 && pre_out >= 0) m.pre_latency = pre_out - m.first_input;

  const long out = first_data(req.outputs);
  if (m.first_input >= 0 && out >= 0) m.latency = out - m.first_input;
  const long lat = std::max(0L, m.latency);
  m.window_begin = m.first_input + 2 * lat;
  const long span = std::max(0L, last_input + 1 - m.window_begin);
  m.window_end = m.window_begin + span - span % req.period;
  const long len = m.window_end - m.window_begin;
  if (len <= 0) return m;

  long samples = 0;
  for (const auto& p : req.inputs) {
    const int k = tr.port(p);
    for (long t = m.window_begin; t < m.window_end; ++t) samples += !tr.rows[t][k].is_bubble();
  }
  m.throughput = static_cast<double>(samples) / static_cast<double>(len);
  for (const auto& u : req.units) {
    long busy = 0;
    for (long t = m.window_begin; t < m.window_end; ++t) {
      bool all = true;
      for (const auto& p : u.operands) all = all && !tr.rows[t][tr.port(p)].is_bubble();
      busy += all;
    }
    m.utilization[u.name] = static_cast<double>(busy) / static_cast<double>(len);
  }
  return m;
}

}  // namespace mcfft
