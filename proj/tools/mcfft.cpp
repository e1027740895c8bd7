#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "mcfft/commands.hpp"

namespace {

struct Options {
  int arch = 0;
  std::size_t points = 16;
  int channels = 2;
  long frames = 100;
  std::uint64_t seed = 1;
  std::string natural = "on";
  long cycles = 64;
  std::string demo;
  std::string out;
};

void shared(CLI::App* sub, Options& o, bool with_arch_default) {
  auto* a = sub->add_option("--arch", o.arch, with_arch_default ? "architecture 1, 2 or 3 (default: all)" : "architecture 1, 2 or 3");
  a->check(CLI::IsMember({1, 2, 3}));
  sub->add_option("--points", o.points, "FFT size N (power of two)")->check(CLI::Range(std::size_t{4}, std::size_t{4096}));
  sub->add_option("--channels", o.channels, "channel count M (1, or a power of two)")->check(CLI::IsMember({1, 2, 4, 8, 16}));
  sub->add_option("--frames", o.frames, "frames per channel")->check(CLI::Range(1L, 100000L));
  sub->add_option("--seed", o.seed, "stimulus seed");
  sub->add_option("--natural-order", o.natural, "append natural-order reordering")->check(CLI::IsMember({"on", "off"}));
  sub->add_option("--out", o.out, "write output to this file instead of stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-channel folded FFT synthesizer and simulator"};
  app.require_subcommand(1, 1);
  Options o;
  auto* build = app.add_subcommand("build", "synthesize and print netlist plus register census");
  auto* verify = app.add_subcommand("verify", "simulate random frames and check against a direct DFT");
  auto* trace = app.add_subcommand("trace", "write a cycle-by-cycle CSV trace");
  auto* report = app.add_subcommand("report", "register and memory tables against published figures");
  for (auto* s : {build, verify, trace, report}) shared(s, o, true);
  trace->add_option("--cycles", o.cycles, "cycles to record")->check(CLI::Range(0L, 10000000L));
  trace->add_option("--demo", o.demo, "trace a bare block instead of an architecture")->check(CLI::IsMember({"dsd1"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mcfft::kUsage;
  }

  mcfft::RunConfig cfg;
  if (o.arch) cfg.arch = static_cast<mcfft::Variant>(o.arch);
  cfg.points = o.points;
  cfg.channels = o.channels;
  cfg.frames = o.frames;
  cfg.seed = o.seed;
  cfg.natural_order = o.natural == "on";
  cfg.cycles = o.cycles;
  cfg.demo = o.demo;

  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::binary);
    if (!file) {
      std::cerr << "cannot open " << o.out << '\n';
      return mcfft::kUsage;
    }
  }
  std::ostream& os = o.out.empty() ? std::cout : file;
  try {
    if (*build) return mcfft::cmd_build(cfg, os);
    if (*verify) return mcfft::cmd_verify(cfg, os);
    if (*trace) return mcfft::cmd_trace(cfg, os);
    return mcfft::cmd_report(cfg, os);
  } catch (const mcfft::SizeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mcfft::kUsage;
  } catch (const mcfft::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mcfft::kVerifyFailed;
  }
}
