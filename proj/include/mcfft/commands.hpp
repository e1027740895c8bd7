#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "architectures.hpp"

namespace mcfft {

struct RunConfig {
  std::optional<Variant> arch;  // unset: every architecture where the command allows it
  std::size_t points = 16;
  int channels = 2;
  long frames = 100;
  std::uint64_t seed = 1;
  bool natural_order = true;
  long cycles = 64;
  std::string demo;  // trace only: "dsd1" traces a bare 1-DSD
};

enum ExitCode { kOk = 0, kVerifyFailed = 1, kUsage = 2 };

namespace detail {

// Left-aligned text table.
class Table {
 public:
  explicit Table(std::vector<std::string> head) { rows_.push_back(std::move(head)); }
  void row(std::vector<std::string> r) { rows_.push_back(std::move(r)); }
  void print(std::ostream& os) const {
    std::vector<std::size_t> w;
    for (const auto& r : rows_)
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (w.size() <= i) w.push_back(0);
        w[i] = std::max(w[i], r[i].size());
      }
    for (const auto& r : rows_) {
      std::string line;
      for (std::size_t i = 0; i < r.size(); ++i) {
        line += r[i];
        if (i + 1 < r.size()) line += std::string(w[i] - r[i].size() + 2, ' ');
      }
      os << line << '\n';
    }
  }
  void csv(std::ostream& os) const {
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

inline std::string fixed(double v, int digits = 3) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

inline std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

inline std::vector<Variant> variants(const RunConfig& cfg) {
  if (cfg.arch) return {*cfg.arch};
  return {Variant::Arch1, Variant::Arch2, Variant::Arch3};
}

// A single-channel request runs the two-channel build with the second lane left empty.
inline ArchitectureSpec spec_for(const RunConfig& cfg, Variant v) {
  ArchitectureSpec s{v, cfg.points, std::max(cfg.channels, 2),
                     cfg.natural_order ? OutputOrder::Natural : OutputOrder::AsProduced};
  return s;
}

inline std::vector<bool> active_mask(const RunConfig& cfg, int lanes) {
  std::vector<bool> a(lanes, false);
  for (int c = 0; c < std::min(cfg.channels, lanes); ++c) a[c] = true;
  return a;
}

inline void print_registers(std::ostream& os, const BuiltArchitecture& b) {
  Table t({"section", "item", "registers"});
  for (const auto& l : b.report.lines) t.row({l.section, l.label, std::to_string(l.registers)});
  t.print(os);
  os << "pre=" << b.report.pre << " fft=" << b.report.fft << " post=" << b.report.post
     << " reorder=" << b.report.reordering << " total=" << b.report.total()
     << " census=" << b.circuit.register_count() << '\n';
}

}  // namespace detail

inline int cmd_build(const RunConfig& cfg, std::ostream& os) {
  for (Variant v : detail::variants(cfg)) {
    BuiltArchitecture b = build_architecture(detail::spec_for(cfg, v));
    os << "== " << to_string(v) << " N=" << b.spec.points << " M=" << b.spec.channels
       << " order=" << (cfg.natural_order ? "natural" : "as-produced") << '\n';
    os << "folding sets:\n" << format_folding_sets(b.sets);
    os << "netlist:\n" << b.circuit.dump();
    os << "registers:\n";
    detail::print_registers(os, b);
  }
  return kOk;
}

struct VerifyOutcome {
  bool ok = true;
  std::vector<std::vector<std::string>> rows;
};

inline VerifyOutcome verify_architecture(const RunConfig& cfg, Variant v) {
  VerifyOutcome out;
  BuiltArchitecture b = build_architecture(detail::spec_for(cfg, v));
  const auto active = detail::active_mask(cfg, b.spec.channels);
  const Stimulus st = make_stimulus(b, cfg.frames, cfg.seed, active);
  const RunReport r = run_architecture(b, st);
  const double fed = static_cast<double>(std::min(cfg.channels, b.spec.channels)) / b.spec.channels;
  const std::string name = to_string(v);
  auto add = [&](const std::string& check, const std::string& measured, const std::string& expected, bool pass) {
    out.rows.push_back({name, check, measured, expected, pass ? "PASS" : "FAIL"});
    out.ok = out.ok && pass;
  };
  add("dft max abs error", detail::sci(r.max_error), "< 1e-9", r.max_error < 1e-9 && r.values_checked > 0);
  add("outputs checked", std::to_string(r.values_checked),
      std::to_string(std::min(cfg.channels, b.spec.channels) * cfg.frames * static_cast<long>(b.spec.points)),
      r.values_checked == std::min(cfg.channels, b.spec.channels) * cfg.frames * static_cast<long>(b.spec.points));
  add("output order", r.order.ok ? "ok" : r.order.message, "pattern", r.order.ok);
  add("butterfly pairing errors", std::to_string(r.butterfly_mismatches), "0", r.butterfly_mismatches == 0);
  const long window = r.measurement.window_end - r.measurement.window_begin;
  add("steady-state window (cycles)", std::to_string(std::max(0L, window)), ">= " + std::to_string(b.frame_period),
      window >= b.frame_period);
  for (const auto& unit : b.units) {
    auto it = r.measurement.utilization.find(unit.name);
    if (it == r.measurement.utilization.end()) {
      add("utilization " + unit.name, "n/a", detail::fixed(fed), false);
      continue;
    }
    add("utilization " + unit.name, detail::fixed(it->second), detail::fixed(fed), std::abs(it->second - fed) < 1e-12);
  }
  add("throughput (samples/cycle)", detail::fixed(r.measurement.throughput), detail::fixed(b.throughput * fed),
      std::abs(r.measurement.throughput - b.throughput * fed) < 1e-12);
  add("pre-processing latency", std::to_string(r.measurement.pre_latency), std::to_string(b.pre_latency),
      r.measurement.pre_latency == b.pre_latency);
  add("register report vs census", std::to_string(b.report.total()), std::to_string(b.circuit.register_count()),
      b.report.total() == b.circuit.register_count());
  return out;
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& os) {
  detail::Table t({"arch", "check", "measured", "expected", "result"});
  bool ok = true;
  for (Variant v : detail::variants(cfg)) {
    if (v == Variant::Arch2 && !cfg.arch && (cfg.points != 16 || cfg.channels > 2)) continue;
    const VerifyOutcome o = verify_architecture(cfg, v);
    for (const auto& r : o.rows) t.row(r);
    ok = ok && o.ok;
  }
  os << "frames per channel " << cfg.frames << ", seed " << cfg.seed << ", channels fed " << cfg.channels << '\n';
  t.print(os);
  os << (ok ? "verify: PASS" : "verify: FAIL") << '\n';
  return ok ? kOk : kVerifyFailed;
}

inline int cmd_trace(const RunConfig& cfg, std::ostream& os) {
  if (cfg.demo == "dsd1") {
    Circuit c = build_dsd(1);
    std::vector<std::vector<Token>> in(2);
    for (int l = 0; l < 2; ++l)
      for (long t = 0; t < cfg.cycles; ++t) in[l].push_back(Token::sample({static_cast<double>(t), 0.0}, Tag{l, 0, static_cast<int>(t)}));
    os << "# demo=dsd1 cycles=" << cfg.cycles << '\n';
    write_trace_csv(os, simulate(c, in, cfg.cycles));
    return kOk;
  }
  if (!cfg.demo.empty()) throw SizeError("unknown demo circuit " + cfg.demo);
  if (!cfg.arch) throw SizeError("trace needs --arch or --demo");
  BuiltArchitecture b = build_architecture(detail::spec_for(cfg, *cfg.arch));
  const Stimulus st = make_stimulus(b, cfg.frames, cfg.seed, detail::active_mask(cfg, b.spec.channels));
  os << "# arch=" << static_cast<int>(*cfg.arch) << " points=" << b.spec.points << " channels=" << b.spec.channels
     << " frames=" << cfg.frames << " seed=" << cfg.seed << " cycles=" << cfg.cycles << '\n';
  write_trace_csv(os, simulate(b.circuit, st.lanes, cfg.cycles, TraceOptions{true}));
  return kOk;
}

struct InterleaverMeasure {
  long registers = 0;
  long latency = -1;
  bool pattern_ok = false;
};

// Drives every channel with back-to-back frames and checks the lane pattern.
inline InterleaverMeasure measure_interleaver(int m, Variant v, std::size_t n) {
  InterleaverMeasure im;
  Circuit c = build_interleaver(m, v, n);
  im.registers = c.register_count();
  const long frames = 3;
  std::vector<std::vector<Token>> in(m);
  for (int ch = 0; ch < m; ++ch)
    for (long f = 0; f < frames; ++f)
      for (std::size_t j = 0; j < n; ++j) in[ch].push_back(Token::sample({}, Tag{ch, f, static_cast<int>(j)}));
  const Trace tr = simulate(c, in, frames * static_cast<long>(n) + 2 * static_cast<long>(n));
  std::vector<std::vector<Token>> outs;
  for (int l = 0; l < m; ++l) outs.push_back(tr.lane("y" + std::to_string(l)));
  // Lane l of group g (b cycles long) carries channel g mod M, samples k*M*b + t + l*b.
  const long b = interleaver_blocks(m, v, n).back();
  PermutationSpec spec;
  spec.period = static_cast<long>(n);
  spec.slots.assign(n, std::vector<std::optional<ExpectedToken>>(m));
  for (long p = 0; p < spec.period; ++p) {
    const long g = p / b;
    for (int l = 0; l < m; ++l)
      spec.slots[p][l] = ExpectedToken{static_cast<int>(g % m), static_cast<int>((g / m) * m * b + p % b + l * b), 0};
  }
  const PermutationCheck pc = check_permutation(outs, spec, frames);
  im.pattern_ok = pc.ok;
  if (pc.start >= 0) im.latency = pc.start;
  return im;
}

inline int cmd_report(const RunConfig& cfg, std::ostream& os) {
  struct PublishedRow {
    Variant v;
    long pre, fft, post, reorder;
  };
  const PublishedRow published[] = {{Variant::Arch1, 17, 28, 2, 14}, {Variant::Arch2, 18, 28, 2, 18},
                            {Variant::Arch3, 16, 14, 16, 6}};
  os << "Register census: 16-point FFT, 2 channels, natural-order output\n";
  detail::Table t1({"arch", "pre", "fft", "post", "reorder", "published", "status"});
  std::vector<BuiltArchitecture> built;
  for (const auto& p : published) {
    built.push_back(build_architecture(ArchitectureSpec{p.v, 16, 2, OutputOrder::Natural}));
    const RegisterReport& r = built.back().report;
    std::vector<std::string> diff;
    if (r.pre != p.pre) diff.push_back("pre");
    if (r.fft != p.fft) diff.push_back("fft");
    if (r.post != p.post) diff.push_back("post");
    if (r.reordering != p.reorder) diff.push_back("reorder");
    std::string status = "match";
    if (!diff.empty()) {
      status = "MISMATCH:";
      for (const auto& d : diff) status += " " + d;
    }
    t1.row({to_string(p.v), std::to_string(r.pre), std::to_string(r.fft), std::to_string(r.post),
            std::to_string(r.reordering),
            std::to_string(p.pre) + "/" + std::to_string(p.fft) + "/" + std::to_string(p.post) + "/" +
                std::to_string(p.reorder),
            status});
  }
  t1.print(os);
  os << "\nline items:\n";
  for (const auto& b : built) {
    os << to_string(b.spec.variant) << ":\n";
    detail::print_registers(os, b);
  }

  os << "\nChannel interleaver in front of architecture 3\n";
  detail::Table t2({"M", "N", "memory", "formula (M-1)N", "latency", "formula (M-1)N/M", "pattern", "status"});
  std::vector<std::pair<int, std::size_t>> points{{2, 16}, {4, 16}};
  if (cfg.channels >= 2 && !(cfg.points == 16 && (cfg.channels == 2 || cfg.channels == 4)))
    points.push_back({cfg.channels, cfg.points});
  for (auto [m, n] : points) {
    const InterleaverMeasure im = measure_interleaver(m, Variant::Arch3, n);
    const long mem = static_cast<long>(m - 1) * static_cast<long>(n);
    const long lat = mem / m;
    const bool ok = im.registers == mem && im.latency == lat && im.pattern_ok;
    t2.row({std::to_string(m), std::to_string(n), std::to_string(im.registers), std::to_string(mem),
            std::to_string(im.latency), std::to_string(lat), im.pattern_ok ? "ok" : "wrong", ok ? "match" : "MISMATCH"});
  }
  t2.print(os);
  os << "reference rows (not built): memory banks M*N memory, N latency; multi-channel commutators (M-1)*N memory, "
        "(M-1)*N/M latency\n";

  os << "\ncsv:\n";
  t1.csv(os);
  t2.csv(os);
  return kOk;
}

}  // namespace mcfft
