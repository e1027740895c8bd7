#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "blocks.hpp"
#include "folding.hpp"
#include "oracle.hpp"

namespace mcfft {

enum class Variant { Arch1 = 1, Arch2 = 2, Arch3 = 3 };
enum class OutputOrder { AsProduced, Natural };

inline std::string to_string(Variant v) { return "arch" + std::to_string(static_cast<int>(v)); }

struct ArchitectureSpec {
  Variant variant = Variant::Arch1;
  std::size_t points = 16;
  int channels = 2;
  OutputOrder order = OutputOrder::AsProduced;
};

struct BuiltArchitecture {
  ArchitectureSpec spec;
  Circuit circuit;
  RegisterReport report;
  FoldingSets sets;
  FoldedSchedule schedule;
  double throughput = 2.0;  // samples per cycle, all channels together
  long pre_latency = 0;     // first input to first butterfly firing
  long frame_period = 0;    // cycles per frame on one input lane
  long sample_spacing = 1;  // cycles between samples of a frame on one lane
  long output_spacing = 1;
  long retimed_registers = 0;     // removed by reverse pipelining
  std::vector<int> output_lines;  // DFG line at each output position, per channel
  std::vector<UnitProbe> units;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> pre_outputs;
};

namespace detail {

inline std::vector<int> add_block(Circuit& c, RegisterReport& rep, const Circuit& sub, const std::vector<int>& in,
                                  const std::string& prefix, const std::string& section, const std::string& label) {
  auto out = c.instantiate(sub, in, prefix + "/", section);
  rep.add(section, label, sub.register_count());
  return out;
}

struct Core {
  std::array<int, 2> out{};
  std::vector<UnitProbe> units;
};

// Butterfly units, twiddle multipliers and one register file per stage boundary, all
// timed so that slot 0 of unit A fires at cycle `start` for iteration 0.
inline Core add_folded_core(Circuit& c, RegisterReport& rep, const DataFlowGraph& g, const FoldedSchedule& s,
                            std::array<int, 2> in, long start) {
  const long nf = static_cast<long>(s.folding_factor);
  Core core;
  std::array<int, 2> cur = in;
  for (int st = 0; st < s.stages; ++st) {
    const std::string u(1, stage_letter(st));
    if (st > 0) {
      std::vector<Move> moves;
      for (const auto& e : s.edges)
        if (e.to.stage == st)
          moves.push_back({start + s.fire_time(e.from) + s.unit_latency, e.from_port, start + s.fire_time(e.to), e.to_port});
      const std::string prev(1, stage_letter(st - 1));
      RegisterFile rf = synthesize_register_file(2, 2, nf, moves);
      const long regs = rf.registers();
      auto o = c.add("fft/" + prev + u, "fft", std::move(rf), {cur[0], cur[1]});
      rep.add("fft", prev + "->" + u + " register file", regs);
      cur = {o[0], o[1]};
    }
    core.units.push_back({u, {c.net_names()[cur[0]], c.net_names()[cur[1]]}});
    auto bf = c.add("fft/" + u, "fft", Butterfly2{static_cast<int>(g.points() >> (st + 1))}, {cur[0], cur[1]});
    std::vector<Complex> f(s.folding_factor, Complex{1.0, 0.0});
    for (std::size_t p = 0; p < s.folding_factor; ++p)
      if (const auto& sl = s.sets[st].slots[p]) f[p] = g.op(st, sl->index).twiddle;
    const int w = c.add1("fft/" + u + ".w", "fft", TwiddleMul{PhaseClock{nf, start}, f}, bf[1]);
    cur = {bf[0], w};
    if (s.unit_latency > 0) {
      cur = {c.add1("fft/" + u + ".p0", "fft", Delay(s.unit_latency), cur[0]),
             c.add1("fft/" + u + ".p1", "fft", Delay(s.unit_latency), cur[1])};
      rep.add("fft", u + " output pipeline", 2L * s.unit_latency);
    }
  }
  core.out = cur;
  return core;
}

inline long first_fire(const FoldedSchedule& s, int stage, int channel) {
  long t = -1;
  for (const auto& [op, pl] : s.placement)
    if (op.stage == stage && op.channel == channel) {
      const long f = s.fire_time(op);
      if (t < 0 || f < t) t = f;
    }
  return t;
}

// Bit swaps whose cascade moves the element at position i to rotl(i, 1): pairs of
// neighbours first, then pairs of pairs, and so on.
inline std::vector<std::pair<int, int>> rotation_swaps(int bits) {
  std::vector<std::pair<int, int>> out;
  for (int step = 1; step < bits; step *= 2)
    for (int lo = 0; lo + step < bits; lo += 2 * step) out.push_back({lo, lo + step});
  return out;
}

inline std::vector<std::size_t> natural_from(const std::vector<int>& lines) {
  // Output position k must carry line bitrev(k); find where that line sits in `lines`.
  const int bits = log2_exact(lines.size());
  std::vector<std::size_t> where(lines.size());
  for (std::size_t q = 0; q < lines.size(); ++q) where[lines[q]] = q;
  std::vector<std::size_t> perm(lines.size());
  for (std::size_t k = 0; k < lines.size(); ++k) perm[k] = where[reverse_bits(k, bits)];
  return perm;
}

inline std::vector<int> half_size_line_order(std::size_t n) {
  std::vector<int> lines;
  for (std::size_t q = 0; q < n; ++q) lines.push_back(static_cast<int>(2 * (q % (n / 2)) + (q >= n / 2)));
  return lines;
}

inline void finish(BuiltArchitecture& b) {
  for (std::size_t k = 0; k < b.circuit.num_inputs(); ++k)
    b.inputs.push_back(b.circuit.net_names()[b.circuit.input_nets()[k]]);
  b.outputs = b.circuit.output_names();
  if (b.report.total() != b.circuit.register_count())
    throw CircuitError("register report (" + std::to_string(b.report.total()) + ") disagrees with netlist census (" +
                       std::to_string(b.circuit.register_count()) + ")");
}

inline void check_common(std::size_t n, int m) {
  if (!is_power_of_two(n) || n < 4) throw SizeError("transform size must be a power of two, at least 4");
  if (m < 2 || !is_power_of_two(static_cast<std::size_t>(m)))
    throw SizeError("channel count must be a power of two, at least 2");
}

// Two lanes: (top, bottom) of the last stage into one serial lane per channel.
inline std::vector<int> add_natural_order(Circuit& c, RegisterReport& rep, const std::vector<int>& lanes,
                                          const std::vector<int>& lines, long origin, long spacing,
                                          const std::string& what) {
  std::vector<int> out;
  const auto sp = serial_permutation(natural_from(lines), origin, spacing);
  for (std::size_t ch = 0; ch < lanes.size(); ++ch) {
    Circuit r = synthesize_reorder(1, 1, sp.period, sp.moves, "perm", "reorder");
    out.push_back(add_block(c, rep, r, {lanes[ch]}, "reorder/c" + std::to_string(ch), "reorder",
                            "channel " + std::to_string(ch) + " " + what)[0]);
  }
  return out;
}

// M > 2: the core keeps its 2-parallel datapath and each channel delivers one sample every
// M/2 cycles. Pre- and post-processing are register files synthesized from the schedule.
inline BuiltArchitecture build_rate_matched(const ArchitectureSpec& spec, const FoldingSets& sets) {
  const std::size_t n = spec.points;
  const int m = spec.channels;
  BuiltArchitecture b;
  b.spec = spec;
  b.sets = sets;
  const DataFlowGraph g = build_dif_dfg(n);
  b.schedule = fold(g, sets);
  const FoldedSchedule& s = b.schedule;
  const long p = static_cast<long>(s.folding_factor);
  const long sp = m / 2;
  b.frame_period = p;
  b.sample_spacing = b.output_spacing = sp;

  Circuit& c = b.circuit;
  std::vector<int> in;
  for (int ch = 0; ch < m; ++ch) in.push_back(c.add_input("x" + std::to_string(ch)));

  long start = 0;
  for (int ch = 0; ch < m; ++ch)
    for (int j = 0; j < g.ops_per_stage(); ++j)
      for (int port = 0; port < 2; ++port) {
        const long arrive = static_cast<long>(port == 0 ? g.op(0, j).top : g.op(0, j).bottom) * sp;
        start = std::max(start, arrive - s.fire_time(OpRef{0, j, ch}));
      }
  std::vector<Move> pre;
  for (int ch = 0; ch < m; ++ch)
    for (int j = 0; j < g.ops_per_stage(); ++j)
      for (int port = 0; port < 2; ++port) {
        const long arrive = static_cast<long>(port == 0 ? g.op(0, j).top : g.op(0, j).bottom) * sp;
        pre.push_back({arrive, ch, start + s.fire_time(OpRef{0, j, ch}), port});
      }
  auto core_in = add_block(c, b.report, synthesize_reorder(m, 2, p, pre, "interleave", "pre"), in, "pre", "pre",
                           std::to_string(m) + "-channel interleaver");
  b.pre_latency = start;
  b.pre_outputs = {c.net_names()[core_in[0]], c.net_names()[core_in[1]]};
  Core core = add_folded_core(c, b.report, g, s, {core_in[0], core_in[1]}, start);
  b.units = core.units;

  b.output_lines = produced_line_order(g, s, 0);
  const int last = s.stages - 1;
  long base = 0;
  std::vector<Move> post;
  std::vector<std::pair<long, int>> arrivals;  // per token, before base is known
  std::vector<std::pair<int, long>> slots;     // (channel, position)
  for (int ch = 0; ch < m; ++ch) {
    const auto lines = produced_line_order(g, s, ch);
    if (lines != b.output_lines) throw ScheduleError("channels produce their outputs in different orders");
    for (int j = 0; j < g.ops_per_stage(); ++j)
      for (int port = 0; port < 2; ++port) {
        const int line = port == 0 ? g.op(last, j).top : g.op(last, j).bottom;
        const long q = std::find(lines.begin(), lines.end(), line) - lines.begin();
        const long a = start + s.fire_time(OpRef{last, j, ch}) + s.unit_latency;
        arrivals.push_back({a, port});
        slots.push_back({ch, q});
        base = std::max(base, a - q * sp);
      }
  }
  for (std::size_t i = 0; i < arrivals.size(); ++i)
    post.push_back({arrivals[i].first, arrivals[i].second, base + slots[i].second * sp, slots[i].first});
  auto out = add_block(c, b.report, synthesize_reorder(2, m, p, post, "separate", "post"), {core.out[0], core.out[1]},
                       "post", "post", "channel separator");
  if (spec.order == OutputOrder::Natural)
    out = add_natural_order(c, b.report, out, b.output_lines, base, sp, "natural-order reordering");
  for (int ch = 0; ch < m; ++ch) c.add_output(out[ch], "y" + std::to_string(ch));
  finish(b);
  return b;
}

}  // namespace detail

// 2-parallel core with the channels interleaved slot by slot.
inline BuiltArchitecture build_arch1(std::size_t n = 16, int m = 2, OutputOrder order = OutputOrder::AsProduced) {
  detail::check_common(n, m);
  const ArchitectureSpec spec{Variant::Arch1, n, m, order};
  const FoldingSets sets = fill_channels(interleave_nulls(two_parallel_folding_sets(n), m), m);
  if (m > 2) return detail::build_rate_matched(spec, sets);

  BuiltArchitecture b;
  b.spec = spec;
  b.sets = sets;
  const DataFlowGraph g = build_dif_dfg(n);
  b.schedule = fold(g, sets);
  const FoldedSchedule& s = b.schedule;
  b.frame_period = static_cast<long>(s.folding_factor);
  Circuit& c = b.circuit;
  const int bits = log2_exact(n);
  const int x0 = c.add_input("x0");
  const int x1 = c.add_input("x1");

  // Each channel: swap address bits 0 and n-1 so pairs (j, j + N/2) become adjacent.
  const int d = (1 << (bits - 1)) - 1;
  std::vector<int> ro;
  for (int ch = 0; ch < 2; ++ch)
    ro.push_back(detail::add_block(c, b.report, build_bit_swap_reoc(0, bits - 1, static_cast<long>(n), 0),
                                   {ch == 0 ? x0 : x1}, "pre/c" + std::to_string(ch), "pre",
                                   "channel " + std::to_string(ch) + " REOC(" + std::to_string(d) + ")")[0]);
  auto dsd = detail::add_block(c, b.report, build_dsd(1, d), {ro[1], ro[0]}, "pre/dsd1", "pre", "1-DSD interleaver");
  const int top = c.add1("pre/align.top", "pre", Delay(1), dsd[1]);
  const int bot = c.add1("pre/align.bottom", "pre", Delay(1), dsd[0]);
  long start = d + 2;
  detail::Core core = detail::add_folded_core(c, b.report, g, s, {top, bot}, start);
  b.units = core.units;

  const long phi = start + detail::first_fire(s, s.stages - 1, 0) + s.unit_latency;
  auto post = detail::add_block(c, b.report, build_dsd(1, phi, "post"), {core.out[1], core.out[0]}, "post/dsd1",
                                "post", "1-DSD separator");
  std::vector<int> out{post[1], post[0]};
  b.output_lines = produced_line_order(g, s, 0);
  if (order == OutputOrder::Natural)
    out = detail::add_natural_order(c, b.report, out, b.output_lines, phi + 1, 1, "natural-order reordering");
  for (int ch = 0; ch < 2; ++ch) c.add_output(out[ch], "y" + std::to_string(ch));

  // The two alignment registers sit on every input of unit A and can be retimed away.
  b.retimed_registers = reverse_pipeline(c, "fft/A");
  b.report.add("pre", "alignment delays (2, removed by reverse pipelining)", 2 - b.retimed_registers);
  start -= 1;
  b.pre_latency = start;
  b.pre_outputs = {"pre/align.top", "pre/align.bottom"};
  detail::finish(b);
  return b;
}

// Fixed 16-point, 2-channel design: ordered ops, reordering circuits in front.
inline BuiltArchitecture build_arch2(OutputOrder order = OutputOrder::AsProduced) {
  const std::size_t n = 16;
  BuiltArchitecture b;
  b.spec = ArchitectureSpec{Variant::Arch2, n, 2, order};
  b.sets = fill_channels(interleave_nulls(sequential_folding_sets(n), 2), 2);
  const DataFlowGraph g = build_dif_dfg(n);
  b.schedule = fold(g, b.sets);
  const FoldedSchedule& s = b.schedule;
  b.frame_period = static_cast<long>(s.folding_factor);
  Circuit& c = b.circuit;
  std::vector<int> lane{c.add_input("x0"), c.add_input("x1")};

  // RO1, RO4, RO3: position i ends up at rotl(i, 1), pairing operands j and j + 8.
  long latency = 0;
  const auto swaps = detail::rotation_swaps(log2_exact(n));
  for (const auto& [lo, hi] : swaps) {
    const int dist = (1 << hi) - (1 << lo);
    for (int ch = 0; ch < 2; ++ch)
      lane[ch] = detail::add_block(c, b.report, build_bit_swap_reoc(lo, hi, static_cast<long>(n), latency),
                                   {lane[ch]}, "pre/c" + std::to_string(ch) + ".ro" + std::to_string(dist), "pre",
                                   "channel " + std::to_string(ch) + " RO" + std::to_string(dist))[0];
    latency += dist;
  }
  auto dsd =
      detail::add_block(c, b.report, build_dsd(1, latency), {lane[1], lane[0]}, "pre/dsd1", "pre", "1-DSD interleaver");
  const long start = latency + 1;
  b.pre_latency = start;
  b.pre_outputs = {c.net_names()[dsd[1]], c.net_names()[dsd[0]]};
  detail::Core core = detail::add_folded_core(c, b.report, g, s, {dsd[1], dsd[0]}, start);
  b.units = core.units;

  const long phi = start + detail::first_fire(s, s.stages - 1, 0) + s.unit_latency;
  auto post = detail::add_block(c, b.report, build_dsd(1, phi, "post"), {core.out[1], core.out[0]}, "post/dsd1",
                                "post", "1-DSD separator");
  std::vector<int> out{post[1], post[0]};
  b.output_lines = produced_line_order(g, s, 0);
  if (order == OutputOrder::Natural) {
    for (int ch = 0; ch < 2; ++ch)
      out[ch] = detail::add_block(c, b.report, build_bit_reversal(n, phi + 1), {out[ch]}, "reorder/c" + std::to_string(ch),
                                  "reorder", "channel " + std::to_string(ch) + " bit reversal")[0];
  }
  for (int ch = 0; ch < 2; ++ch) c.add_output(out[ch], "y" + std::to_string(ch));
  detail::finish(b);
  return b;
}

// R2MDC core with the second channel in the idle half of every unit.
inline BuiltArchitecture build_arch3(std::size_t n = 16, int m = 2, OutputOrder order = OutputOrder::AsProduced) {
  detail::check_common(n, m);
  const ArchitectureSpec spec{Variant::Arch3, n, m, order};
  const FoldingSets sets = fill_channels(interleave_nulls(r2mdc_folding_sets(n), m / 2), m);
  if (m > 2) return detail::build_rate_matched(spec, sets);

  BuiltArchitecture b;
  b.spec = spec;
  b.sets = sets;
  const DataFlowGraph g = build_dif_dfg(n);
  b.schedule = fold(g, sets);
  const FoldedSchedule& s = b.schedule;
  b.frame_period = static_cast<long>(s.folding_factor);
  Circuit& c = b.circuit;
  const int x0 = c.add_input("x0");
  const int x1 = c.add_input("x1");
  const int k = static_cast<int>(n / 2);

  auto dsd = detail::add_block(c, b.report, build_dsd(k, 0), {x1, x0}, "pre/dsd" + std::to_string(k), "pre",
                               std::to_string(k) + "-DSD interleaver");
  const long start = k;
  b.pre_latency = start;
  b.pre_outputs = {c.net_names()[dsd[1]], c.net_names()[dsd[0]]};
  detail::Core core = detail::add_folded_core(c, b.report, g, s, {dsd[1], dsd[0]}, start);
  b.units = core.units;

  const long phi = start + detail::first_fire(s, s.stages - 1, 0) + s.unit_latency;
  auto post = detail::add_block(c, b.report, build_dsd(k, phi, "post"), {core.out[1], core.out[0]},
                                "post/dsd" + std::to_string(k), "post", std::to_string(k) + "-DSD separator");
  // The separator emits every top result of a frame, then every bottom result.
  std::vector<int> out{post[1], post[0]};
  b.output_lines = detail::half_size_line_order(n);
  if (order == OutputOrder::Natural) {
    for (int ch = 0; ch < 2; ++ch)
      out[ch] = detail::add_block(c, b.report, build_bit_reversal(n / 2, phi + k), {out[ch]},
                                  "reorder/c" + std::to_string(ch), "reorder",
                                  "channel " + std::to_string(ch) + " half-size bit reversal")[0];
  }
  for (int ch = 0; ch < 2; ++ch) c.add_output(out[ch], "y" + std::to_string(ch));
  detail::finish(b);
  return b;
}

inline BuiltArchitecture build_architecture(const ArchitectureSpec& spec) {
  switch (spec.variant) {
    case Variant::Arch1: return build_arch1(spec.points, spec.channels, spec.order);
    case Variant::Arch2:
      if (spec.points != 16 || spec.channels != 2) throw SizeError("architecture 2 exists only for 16 points, 2 channels");
      return build_arch2(spec.order);
    case Variant::Arch3: return build_arch3(spec.points, spec.channels, spec.order);
  }
  throw SizeError("unknown architecture");
}

// ------------------------------------------------------------ channel interleaver

// Block sizes of the DSD stages, first stage first.
inline std::vector<int> interleaver_blocks(int m, Variant v, std::size_t n) {
  if (m < 2 || !is_power_of_two(static_cast<std::size_t>(m)))
    throw SizeError("interleaver channel count must be a power of two, at least 2");
  std::vector<int> blocks;
  if (v == Variant::Arch1) {
    for (int b = m / 2; b >= 1; b /= 2) blocks.push_back(b);
  } else if (v == Variant::Arch3) {
    if (!is_power_of_two(n) || n < static_cast<std::size_t>(m)) throw SizeError("interleaver needs N >= M");
    for (std::size_t b = n / 2; b >= n / static_cast<std::size_t>(m); b /= 2) blocks.push_back(static_cast<int>(b));
  } else {
    throw SizeError("architecture 2 has no channel interleaver");
  }
  return blocks;
}

// log2(M) stages of M/2 DSDs. Stage s pairs lanes l and l + M/2^(s+1); the lower lane
// feeds the undelayed DSD input and receives the older block. Channel c enters lane c.
inline Circuit build_interleaver(int m, Variant v, std::size_t n) {
  const auto blocks = interleaver_blocks(m, v, n);
  Circuit c;
  std::vector<int> lane;
  for (int ch = 0; ch < m; ++ch) lane.push_back(c.add_input("x" + std::to_string(ch)));
  long origin = 0;
  for (std::size_t st = 0; st < blocks.size(); ++st) {
    const int stride = m >> (st + 1);
    for (int l = 0; l < m; ++l) {
      if (l & stride) continue;
      auto y = c.instantiate(build_dsd(blocks[st], origin), {lane[l + stride], lane[l]},
                             "s" + std::to_string(st) + ".l" + std::to_string(l) + "/");
      lane[l] = y[1];
      lane[l + stride] = y[0];
    }
    origin += blocks[st];
  }
  for (int l = 0; l < m; ++l) c.add_output(lane[l], "y" + std::to_string(l));
  return c;
}

// ------------------------------------------------------------ running

struct Stimulus {
  long frames = 0;
  std::vector<bool> active;
  std::vector<std::vector<Token>> lanes;
  std::vector<std::vector<std::vector<Complex>>> data;  // [channel][frame][sample]
};

// Random frames, uniform in [-1, 1) for both parts. Channel c draws from its own stream
// seeded by (seed, c), so one channel's data never depends on another's.
inline Stimulus make_stimulus(const BuiltArchitecture& b, long frames, std::uint64_t seed, std::vector<bool> active = {}) {
  const int m = b.spec.channels;
  if (active.empty()) active.assign(m, true);
  if (static_cast<int>(active.size()) != m) throw SizeError("active mask does not match channel count");
  Stimulus st;
  st.frames = frames;
  st.active = active;
  st.lanes.assign(m, std::vector<Token>(static_cast<std::size_t>(frames * b.frame_period)));
  st.data.assign(m, {});
  const std::size_t n = b.spec.points;
  for (int ch = 0; ch < m; ++ch) {
    if (!active[ch]) continue;
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(ch)};
    std::mt19937_64 rng(sq);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (long f = 0; f < frames; ++f) {
      std::vector<Complex> x(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double re = u(rng);
        const double im = u(rng);
        x[j] = {re, im};
        st.lanes[ch][f * b.frame_period + static_cast<long>(j) * b.sample_spacing] =
            Token::sample(x[j], Tag{ch, f, static_cast<int>(j)});
      }
      st.data[ch].push_back(std::move(x));
    }
  }
  return st;
}

struct RunReport {
  Trace trace;
  PermutationCheck order;
  Measurement measurement;
  double max_error = 0.0;
  long values_checked = 0;
  long butterfly_mismatches = 0;
  bool ok() const { return order.ok && butterfly_mismatches == 0 && max_error < 1e-9 && values_checked > 0; }
};

// Output pattern the architecture should produce: lane c carries channel c.
inline PermutationSpec expected_output_pattern(const BuiltArchitecture& b, const std::vector<bool>& active) {
  std::vector<std::size_t> lines;
  if (b.spec.order == OutputOrder::Natural)
    lines = bit_reverse_perm(b.spec.points);
  else
    lines.assign(b.output_lines.begin(), b.output_lines.end());
  PermutationSpec spec;
  spec.period = static_cast<long>(lines.size()) * b.output_spacing;
  spec.slots.assign(spec.period, std::vector<std::optional<ExpectedToken>>(b.spec.channels));
  for (std::size_t q = 0; q < lines.size(); ++q)
    for (int ch = 0; ch < b.spec.channels; ++ch)
      if (active[ch]) spec.slots[q * b.output_spacing][ch] = ExpectedToken{ch, static_cast<int>(lines[q]), 0};
  return spec;
}

inline RunReport run_architecture(BuiltArchitecture& b, const Stimulus& st, bool all_nets = true) {
  RunReport r;
  const long cycles = (st.frames + 8) * b.frame_period + 4 * static_cast<long>(b.spec.points);
  r.trace = simulate(b.circuit, st.lanes, cycles, TraceOptions{all_nets});
  r.butterfly_mismatches = b.circuit.butterfly_mismatches();

  std::vector<std::vector<Token>> outs;
  for (const auto& name : b.outputs) outs.push_back(r.trace.lane(name));
  r.order = check_permutation(outs, expected_output_pattern(b, st.active), st.frames);

  const std::size_t n = b.spec.points;
  const auto br = bit_reverse_perm(n);
  std::vector<std::vector<std::vector<Complex>>> spectra(st.data.size());
  for (std::size_t ch = 0; ch < st.data.size(); ++ch)
    for (const auto& x : st.data[ch]) spectra[ch].push_back(naive_dft(x));
  for (const auto& lane : outs)
    for (const Token& t : lane) {
      if (!t.tag) continue;
      const auto& X = spectra.at(t.tag->channel).at(t.tag->frame);
      r.max_error = std::max(r.max_error, std::abs(t.value - X[br[t.tag->index]]));
      ++r.values_checked;
    }

  if (all_nets) {
    MeasureRequest req;
    req.inputs = b.inputs;
    req.pre_outputs = b.pre_outputs;
    req.outputs = b.outputs;
    req.units = b.units;
    req.period = b.frame_period;
    r.measurement = measure(r.trace, req);
  }
  return r;
}

}  // namespace mcfft
