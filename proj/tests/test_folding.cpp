#include <gtest/gtest.h>

#include <random>
#include <set>

#include "mcfft/folding.hpp"
#include "test_util.hpp"

using namespace mcfft;

namespace {

struct Case {
  const char* file;
  FoldingSets (*make)();
};

FoldingSets two_parallel() { return two_parallel_folding_sets(16); }
FoldingSets two_parallel_nulls() { return interleave_nulls(two_parallel(), 2); }
FoldingSets two_parallel_interleaved() { return fill_channels(two_parallel_nulls(), 2); }
FoldingSets sequential_interleaved() { return fill_channels(interleave_nulls(sequential_folding_sets(16), 2), 2); }
FoldingSets r2mdc() { return r2mdc_folding_sets(16); }
FoldingSets r2mdc_interleaved() { return fill_channels(r2mdc(), 2); }

const Case kCases[] = {{"two_parallel.txt", two_parallel}, {"two_parallel_nulls.txt", two_parallel_nulls}, {"two_parallel_interleaved.txt", two_parallel_interleaved},
                       {"sequential_interleaved.txt", sequential_interleaved}, {"r2mdc.txt", r2mdc}, {"r2mdc_interleaved.txt", r2mdc_interleaved}};

FoldingSets golden(const char* f) { return parse_folding_sets(read_golden(f)); }

// Fire time minus producer time for every DFG edge, recomputed from the placement.
void check_schedule_properties(const DataFlowGraph& g, const FoldingSets& sets) {
  const FoldedSchedule f = fold(g, sets);
  const int m = f.channels;
  // Every op of every channel placed exactly once.
  EXPECT_EQ(f.placement.size(), g.ops().size() * static_cast<std::size_t>(m));
  for (const auto& o : g.ops())
    for (int c = 0; c < m; ++c) EXPECT_TRUE(f.placement.count(OpRef{o.stage, o.index, c}));
  // No unit fires twice in one slot.
  std::set<std::pair<int, int>> used;
  for (const auto& [op, p] : f.placement) EXPECT_TRUE(used.insert({p.unit, p.slot}).second) << op.text();
  // Every edge: delay = consumer time - producer time, and never negative.
  for (const auto& e : f.edges) {
    EXPECT_GE(e.delay, 0) << e.from.text() << " -> " << e.to.text();
    EXPECT_EQ(e.delay, f.fire_time(e.to) - f.fire_time(e.from) - f.unit_latency);
  }
  EXPECT_EQ(f.edges.size(), g.ops().size() * static_cast<std::size_t>(m) * 2 - g.ops_per_stage() * 2u * m);
}

}  // namespace

TEST(FoldingGolden, GeneratedSetsMatchTokenForToken) {
  for (const auto& c : kCases) {
    SCOPED_TRACE(c.file);
    EXPECT_EQ(format_folding_sets(c.make()), read_golden(c.file));
  }
}

TEST(FoldingGolden, TransformsOfParsedSets) {
  EXPECT_EQ(interleave_nulls(golden("two_parallel.txt"), 2), golden("two_parallel_nulls.txt"));
  EXPECT_EQ(fill_channels(golden("two_parallel_nulls.txt"), 2), golden("two_parallel_interleaved.txt"));
  EXPECT_EQ(fill_channels(golden("r2mdc.txt"), 2), golden("r2mdc_interleaved.txt"));
  EXPECT_EQ(channel_strides(golden("two_parallel_nulls.txt"), 2), std::vector<std::size_t>{1});
  EXPECT_EQ(channel_strides(golden("r2mdc.txt"), 2), std::vector<std::size_t>{8});
}

TEST(FoldingText, RoundTripAndErrors) {
  for (const auto& c : kCases) {
    const std::string t = read_golden(c.file);
    EXPECT_EQ(format_folding_sets(parse_folding_sets(t)), t);
  }
  EXPECT_EQ(parse_op_ref("C''12").channel, 2);
  EXPECT_EQ(parse_op_ref("C''12").index, 12);
  EXPECT_THROW(parse_op_ref("a0"), ParseError);
  EXPECT_THROW(parse_op_ref("A'"), ParseError);
  EXPECT_THROW(parse_op_ref("A1x"), ParseError);
  EXPECT_THROW(parse_folding_sets("A A0 A1\n"), ParseError);
}

TEST(FoldingTransforms, FillChannelsFourWay) {
  const FoldingSets s = fill_channels(interleave_nulls(sequential_folding_sets(16), 4), 4);
  EXPECT_EQ(s[0].slots[0]->channel, 0);
  EXPECT_EQ(s[0].slots[1]->channel, 1);
  EXPECT_EQ(s[0].slots[2]->channel, 2);
  EXPECT_EQ(s[0].slots[3]->channel, 3);
  EXPECT_EQ(s[0].slots[4]->index, 1);
  EXPECT_EQ(channel_offset({1, 2}, 3), 3u);
}

TEST(FoldingTransforms, NotEnoughNulls) {
  EXPECT_THROW(fill_channels(two_parallel(), 2), ScheduleError);
  EXPECT_THROW(fill_channels(two_parallel_nulls(), 3), SizeError);
}

TEST(FoldedDelays, TwoParallelEdges) {
  const auto g = build_dif_dfg(16);
  const FoldedSchedule f = fold(g, two_parallel());
  // A0 in slot 0 feeds B0 in slot 2 of the same iteration.
  EXPECT_EQ(f.edge({0, 0, 0}, {1, 0, 0}).delay, 2);
  // Stage D runs one iteration behind C, so both outputs of C0 (slot 3) wait for D.
  EXPECT_EQ(f.edge({2, 0, 0}, {3, 0, 0}).delay, 4);
  EXPECT_EQ(f.edge({2, 0, 0}, {3, 1, 0}).delay, 8);
  EXPECT_EQ(f.placement.at({3, 1, 0}).lag - f.placement.at({2, 0, 0}).lag, 1);
  EXPECT_EQ(f.total_delay(), 112);
}

TEST(FoldedDelays, InterleavingDoublesEveryDelay) {
  const auto g = build_dif_dfg(16);
  const FoldedSchedule base = fold(g, two_parallel());
  const FoldedSchedule two = fold(g, two_parallel_interleaved());
  for (const auto& e : base.edges)
    for (int c = 0; c < 2; ++c) {
      OpRef u = e.from, v = e.to;
      u.channel = v.channel = c;
      EXPECT_EQ(two.edge(u, v).delay, 2 * e.delay) << u.text() << " -> " << v.text();
    }
  EXPECT_EQ(fold(g, two_parallel_nulls()).total_delay(), 2 * base.total_delay());
}

TEST(FoldedDelays, StrictModeReportsNegativeDelay) {
  const auto g = build_dif_dfg(16);
  FoldOptions strict;
  strict.pipeline = false;
  const ValidationResult r = validate_schedule(g, two_parallel(), strict);
  ASSERT_TRUE(r.has(DiagnosticKind::NegativeDelay));
  EXPECT_EQ(r.diagnostics.front().message, "A1 -> B5: folded delay -4");
  EXPECT_THROW(fold(g, two_parallel(), strict), ScheduleError);
  // The serial pipeline never needs lags.
  EXPECT_TRUE(validate_schedule(g, r2mdc(), strict).ok());
}

TEST(FoldedDelays, UnitLatencyShiftsEveryEdge) {
  const auto g = build_dif_dfg(16);
  FoldOptions opt;
  opt.unit_latency = 1;
  const FoldedSchedule f = fold(g, r2mdc_interleaved(), opt);
  for (const auto& e : f.edges) EXPECT_GE(e.delay, 0);
}

TEST(Lifetimes, PerBoundaryRegisters) {
  const auto g = build_dif_dfg(16);
  struct Want {
    FoldingSets (*make)();
    std::vector<long> per;
  };
  // Summed: 14 for the base schedule, 28 interleaved, 14 for the filled serial pipeline.
  const Want w[] = {{two_parallel, {4, 2, 8}}, {two_parallel_interleaved, {8, 4, 16}}, {sequential_interleaved, {16, 8, 4}}, {r2mdc_interleaved, {8, 4, 2}}};
  for (const auto& x : w) {
    const LifetimeAnalysis la = minimize_registers(fold(g, x.make()));
    EXPECT_EQ(la.per_boundary, x.per);
  }
}

TEST(Lifetimes, SharedPoolNeverExceedsUnshared) {
  const auto g = build_dif_dfg(16);
  for (const auto& c : kCases) {
    const FoldedSchedule f = fold(g, c.make());
    const LifetimeAnalysis la = minimize_registers(f);
    EXPECT_LE(la.registers, la.unshared);
    EXPECT_LE(la.registers, la.boundary_total());
    EXPECT_EQ(la.unshared, f.total_delay());
  }
}

TEST(ScheduleValidity, ShippedSetsSatisfyProperties) {
  for (const auto& c : kCases) {
    SCOPED_TRACE(c.file);
    check_schedule_properties(build_dif_dfg(16), c.make());
  }
  for (std::size_t n : {4u, 8u, 32u, 64u}) {
    const auto g = build_dif_dfg(n);
    check_schedule_properties(g, two_parallel_folding_sets(n));
    check_schedule_properties(g, fill_channels(interleave_nulls(two_parallel_folding_sets(n), 2), 2));
    check_schedule_properties(g, fill_channels(r2mdc_folding_sets(n), 2));
    check_schedule_properties(g, fill_channels(interleave_nulls(sequential_folding_sets(n), 4), 4));
  }
}

TEST(ScheduleValidity, WithinUnitShufflesStayValid) {
  const auto g = build_dif_dfg(16);
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    FoldingSets s = two_parallel_interleaved();
    for (auto& fs : s) std::shuffle(fs.slots.begin(), fs.slots.end(), rng);
    EXPECT_TRUE(validate_schedule(g, s).ok());
    check_schedule_properties(g, s);
  }
}

TEST(ScheduleValidity, RandomMutationsAreCaught) {
  const auto g = build_dif_dfg(16);
  const FoldingSets bases[] = {two_parallel(), two_parallel_interleaved(), sequential_interleaved(), r2mdc_interleaved()};
  std::mt19937 rng(2024);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  int caught = 0;
  for (int trial = 0; trial < 50; ++trial) {
    FoldingSets s = bases[trial % 4];
    const int channels = s[0].slots.size() == 16 ? 2 : 1;
    const int kind = static_cast<int>(pick(6));
    auto& fs = s[pick(s.size())];
    std::vector<std::size_t> full;
    for (std::size_t i = 0; i < fs.slots.size(); ++i)
      if (fs.slots[i]) full.push_back(i);
    Slot& victim = fs.slots[full[pick(full.size())]];
    DiagnosticKind expect{};
    switch (kind) {
      case 0:  // drop an op
        victim.reset();
        expect = DiagnosticKind::Missing;
        break;
      case 1: {  // overwrite with another op of the same unit
        Slot other = fs.slots[full[pick(full.size())]];
        while (other == victim) other = fs.slots[full[pick(full.size())]];
        victim = other;
        expect = DiagnosticKind::Duplicate;
        break;
      }
      case 2:  // move op to another unit's stage
        victim->stage = (victim->stage + 1 + static_cast<int>(pick(3))) % 4;
        expect = DiagnosticKind::WrongUnit;
        break;
      case 3:
        victim->index = 8 + static_cast<int>(pick(8));
        expect = DiagnosticKind::IndexOutOfRange;
        break;
      case 4:
        victim->channel = channels + static_cast<int>(pick(2));
        expect = DiagnosticKind::ChannelOutOfRange;
        break;
      case 5:
        fs.slots.pop_back();
        expect = DiagnosticKind::LengthMismatch;
        break;
    }
    FoldOptions opt;
    opt.channels = channels;
    const ValidationResult r = validate_schedule(g, s, opt);
    EXPECT_TRUE(r.has(expect)) << "trial " << trial << " kind " << kind << "\n" << format_folding_sets(s);
    EXPECT_THROW(fold(g, s, opt), ScheduleError);
    caught += r.has(expect);
  }
  EXPECT_EQ(caught, 50);
}

TEST(ScheduleValidity, DuplicateUnitName) {
  FoldingSets s = two_parallel();
  s[1].unit = "A";
  EXPECT_TRUE(validate_schedule(build_dif_dfg(16), s).has(DiagnosticKind::DuplicateUnit));
}

TEST(Census, SectionsAndUnknown) {
  RegisterReport r;
  r.add("pre", "x", 3);
  r.add("reorder", "y", 4);
  EXPECT_EQ(r.total(), 7);
  EXPECT_THROW(r.add("other", "z", 1), Error);
}

TEST(NaturalOrder, StreamCost) {
  // Position q carrying line bitrev(q) is already frequency order.
  std::vector<int> freq, lines;
  for (int q = 0; q < 16; ++q) {
    freq.push_back(static_cast<int>(reverse_bits(q, 4)));
    lines.push_back(q);
  }
  EXPECT_EQ(natural_order_registers(freq), 0);
  EXPECT_EQ(natural_order_registers(lines), 9);
}

TEST(FoldingGenerators, SixteenPointSets) {
  const FoldingSets b = base_folding_sets_16();
  EXPECT_EQ(b[0].slots[0]->index, 0);
  EXPECT_EQ(b[1].slots[2]->index, 0);
  for (const auto& fs : b) {
    std::set<int> seen;
    for (const auto& x : fs.slots) seen.insert(x->index);
    EXPECT_EQ(seen.size(), 8u);
  }
  const FoldingSets r = r2mdc_folding_sets_16();
  EXPECT_FALSE(r[0].slots[8]);
  EXPECT_EQ(r[1].slots[4]->index, 0);
  const std::size_t starts[] = {0, 4, 6, 7};
  for (int s = 0; s < 4; ++s) {
    EXPECT_EQ(r[s].slots[starts[s]]->index, 0);
    EXPECT_EQ(std::count_if(r[s].slots.begin(), r[s].slots.end(), [](const Slot& x) { return x.has_value(); }), 8);
  }
}

TEST(FoldingTransforms, InterleaveByOneIsIdentity) {
  EXPECT_EQ(interleave_nulls(two_parallel(), 1), two_parallel());
  EXPECT_THROW(interleave_nulls(two_parallel(), 0), SizeError);
  const FoldingSets four = interleave_nulls(two_parallel(), 4);
  long nulls = 0;
  for (const auto& x : four[0].slots) nulls += !x;
  EXPECT_EQ(nulls, 24);
}

TEST(FoldedDelays, FillingNullsKeepsDelays) {
  const auto g = build_dif_dfg(16);
  const std::pair<FoldingSets, FoldingSets> pairs[] = {{two_parallel_nulls(), two_parallel_interleaved()},
                                                       {r2mdc(), r2mdc_interleaved()}};
  for (const auto& [sparse, filled] : pairs) {
    const FoldedSchedule a = fold(g, sparse);
    const FoldedSchedule b = fold(g, filled);
    for (const auto& e : a.edges) EXPECT_EQ(b.edge(e.from, e.to).delay, e.delay) << e.from.text();
  }
}

TEST(FoldedDelays, NullSlotsHalveFirings) {
  long busy = 0, total = 0;
  for (const auto& fs : two_parallel_nulls())
    for (const auto& x : fs.slots) {
      busy += x.has_value();
      ++total;
    }
  EXPECT_EQ(2 * busy, total);
}
