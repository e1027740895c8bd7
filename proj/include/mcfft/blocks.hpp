#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netlist.hpp"

namespace mcfft {

// Delay-switch-delay: Delay(k) on lane 0, a 2x2 switch crossed during the second half of
// each 2k-cycle period (counted from origin), then Delay(k) on lane 1.
// With blocks i = floor((t - origin) / k), inputs a (lane 0) and b (lane 1):
//   lane 0 carries a[i-1] for even i and b[i] for odd i,
//   lane 1 carries b[i-1] for odd i and a[i-2] for even i.
inline Circuit build_dsd(int k, long origin = 0, const std::string& section = "pre") {
  if (k < 1) throw CircuitError("DSD block size must be positive");
  Circuit c;
  const int a = c.add_input("a");
  const int b = c.add_input("b");
  const int da = c.add1("dsd.in", section, Delay(k), a);
  std::vector<bool> crossed(2 * static_cast<std::size_t>(k), false);
  for (int p = k; p < 2 * k; ++p) crossed[p] = true;
  auto sw = c.add("dsd.sw", section, Switch2x2{PhaseClock{2L * k, origin}, crossed}, {da, b});
  const int db = c.add1("dsd.out", section, Delay(k), sw[1]);
  c.add_output(sw[0], "y0");
  c.add_output(db, "y1");
  return c;
}

inline Circuit build_reoc(int d, long period, const std::set<long>& swap_phases, long origin = 0,
                          const std::string& section = "pre") {
  std::vector<bool> phases(static_cast<std::size_t>(period), false);
  for (long p : swap_phases) {
    if (p < 0 || p >= period) throw CircuitError("swap phase outside period");
    phases[p] = true;
  }
  Circuit c;
  const int x = c.add_input("x");
  c.add_output(c.add1("reoc" + std::to_string(d), section, Reoc(d, period, phases, origin), x), "y");
  return c;
}

// Exchanges address bits lo < hi of a stream with the given period: the element at
// position p moves to the position with those two bits swapped.
inline std::set<long> bit_swap_phases(int lo, int hi, long period) {
  std::set<long> s;
  for (long p = 0; p < period; ++p)
    if (((p >> lo) & 1) && !((p >> hi) & 1)) s.insert(p);
  return s;
}

inline Circuit build_bit_swap_reoc(int lo, int hi, long period, long origin = 0, const std::string& section = "pre") {
  if (lo < 0 || hi <= lo || (1L << hi) >= period) throw CircuitError("bad bit pair for reordering circuit");
  return build_reoc((1 << hi) - (1 << lo), period, bit_swap_phases(lo, hi, period), origin, section);
}

// ------------------------------------------------------------ synthesized reordering

// One token of a periodic schedule: it enters on in_lane at cycle `arrive`, leaves on
// out_lane at cycle `depart`, and the whole pattern repeats every period cycles.
struct Move {
  long arrive = 0;
  int in_lane = 0;
  long depart = 0;
  int out_lane = 0;
};

// Builds a register file that realizes the moves with the fewest registers the schedule
// allows (the largest number of tokens waiting at once).
inline RegisterFile synthesize_register_file(int in_lanes, int out_lanes, long period, const std::vector<Move>& moves) {
  if (period < 1) throw CircuitError("period must be positive");
  std::set<std::pair<long, int>> ins, outs;
  for (const Move& m : moves) {
    if (m.depart < m.arrive)
      throw CircuitError("reordering is not causal: token leaves at " + std::to_string(m.depart) + " before arriving at " +
                         std::to_string(m.arrive));
    if (m.in_lane < 0 || m.in_lane >= in_lanes || m.out_lane < 0 || m.out_lane >= out_lanes)
      throw CircuitError("reordering lane out of range");
    if (!ins.insert({floor_mod(m.arrive, period), m.in_lane}).second) throw CircuitError("two tokens arrive together");
    if (!outs.insert({floor_mod(m.depart, period), m.out_lane}).second) throw CircuitError("two tokens depart together");
  }

  // Live entry (i, k) at phase f: token i with a < f + k*period <= d.
  using Entry = std::pair<int, long>;
  std::vector<std::map<Entry, int>> reg(static_cast<std::size_t>(period));
  int nregs = 0;
  for (long f = 0; f < period; ++f) {
    std::vector<Entry> live;
    for (std::size_t i = 0; i < moves.size(); ++i) {
      const long lo = floor_div(moves[i].arrive - f, period) + 1;  // smallest k with a < f + k p
      for (long k = lo; f + k * period <= moves[i].depart; ++k) live.push_back({static_cast<int>(i), k});
    }
    std::set<int> used;
    auto& cur = reg[f];
    if (f > 0) {
      for (const Entry& e : live) {
        auto it = reg[f - 1].find(e);
        if (it != reg[f - 1].end()) {
          cur[e] = it->second;
          used.insert(it->second);
        }
      }
    }
    for (const Entry& e : live) {
      if (cur.count(e)) continue;
      int r = 0;
      while (used.count(r)) ++r;
      cur[e] = r;
      used.insert(r);
    }
    nregs = std::max(nregs, static_cast<int>(live.size()));
  }

  RegisterFile rf;
  rf.in_lanes = in_lanes;
  rf.out_lanes = out_lanes;
  rf.clock = PhaseClock{period, 0};
  rf.out_src.assign(period, std::vector<Source>(out_lanes));
  rf.next_src.assign(period, std::vector<Source>(nregs));
  rf.state.assign(nregs, Token{});
  for (long f = 0; f < period; ++f) {
    for (std::size_t i = 0; i < moves.size(); ++i) {
      const Move& m = moves[i];
      if (floor_mod(m.depart, period) != f) continue;
      if (m.depart == m.arrive) {
        rf.out_src[f][m.out_lane] = Source::input(m.in_lane);
      } else {
        const long k = (m.depart - f) / period;
        rf.out_src[f][m.out_lane] = Source::reg(reg[f].at({static_cast<int>(i), k}));
      }
    }
    // State after this cycle: phase f + 1, or phase 0 of the next period.
    const long g = f + 1 == period ? 0 : f + 1;
    const long dk = f + 1 == period ? 1 : 0;
    for (const auto& [e, r] : reg[g]) {
      const Entry prev{e.first, e.second - dk};
      auto it = reg[f].find(prev);
      if (it != reg[f].end()) {
        rf.next_src[f][r] = Source::reg(it->second);
      } else {
        rf.next_src[f][r] = Source::input(moves[e.first].in_lane);
      }
    }
  }
  return rf;
}

inline Circuit synthesize_reorder(int in_lanes, int out_lanes, long period, const std::vector<Move>& moves,
                                  const std::string& name, const std::string& section) {
  Circuit c;
  std::vector<int> ins;
  for (int l = 0; l < in_lanes; ++l) ins.push_back(c.add_input("x" + std::to_string(l)));
  auto outs = c.add(name, section, synthesize_register_file(in_lanes, out_lanes, period, moves), ins);
  for (int l = 0; l < out_lanes; ++l) c.add_output(outs[l], "y" + std::to_string(l));
  return c;
}

// Serial permutation with minimum latency: output position k carries input position
// perm[k]. Input position q arrives at origin + q * spacing; output position k leaves at
// origin + latency + k * spacing.
struct SerialPermutation {
  std::vector<Move> moves;
  long latency = 0;
  long period = 0;
};

inline SerialPermutation serial_permutation(const std::vector<std::size_t>& perm, long origin = 0, long spacing = 1) {
  const long n = static_cast<long>(perm.size());
  std::vector<long> dest(perm.size(), -1);
  for (long k = 0; k < n; ++k) {
    if (perm[k] >= perm.size() || dest[perm[k]] >= 0) throw CircuitError("not a permutation");
    dest[perm[k]] = k;
  }
  SerialPermutation sp;
  sp.period = n * spacing;
  for (long q = 0; q < n; ++q) sp.latency = std::max(sp.latency, (q - dest[q]) * spacing);
  for (long q = 0; q < n; ++q) sp.moves.push_back({origin + q * spacing, 0, origin + sp.latency + dest[q] * spacing, 0});
  return sp;
}

inline std::vector<std::size_t> bit_reversal_order(std::size_t span) {
  const int bits = log2_exact(span);
  std::vector<std::size_t> p(span);
  for (std::size_t k = 0; k < span; ++k) p[k] = reverse_bits(k, bits);
  return p;
}

// Serial bit reversal over blocks of `span` samples.
inline Circuit build_bit_reversal(std::size_t span, long origin = 0, const std::string& section = "reorder") {
  const auto sp = serial_permutation(bit_reversal_order(span), origin);
  return synthesize_reorder(1, 1, sp.period, sp.moves, "bitrev" + std::to_string(span), section);
}

}  // namespace mcfft
