#pragma once

#include <array>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"

namespace mcfft {

inline char stage_letter(int stage) { return static_cast<char>('A' + stage); }

// Radix-2 decimation-in-frequency butterfly. Results stay on the input lines:
// line `top` receives a + b and line `bottom` receives (a - b) * W_N^twiddle_exponent.
struct ButterflyOp {
  int stage = 0;
  int index = 0;
  int top = 0;
  int bottom = 0;
  std::size_t twiddle_exponent = 0;
  Complex twiddle{1.0, 0.0};

  std::string name() const { return stage_letter(stage) + std::to_string(index); }
};

struct OperandSource {
  int op = -1;  // flat op id of the producer, -1 for a primary input
  int port = 0;
  int line = 0;
};

class DataFlowGraph {
 public:
  std::size_t points() const { return points_; }
  int stages() const { return stages_; }
  int ops_per_stage() const { return static_cast<int>(points_ / 2); }
  const std::vector<ButterflyOp>& ops() const { return ops_; }

  int flat_id(int stage, int index) const { return stage * ops_per_stage() + index; }
  const ButterflyOp& op(int stage, int index) const { return ops_.at(flat_id(stage, index)); }

  // Where operand `port` (0 top, 1 bottom) of the given op comes from.
  OperandSource source(int stage, int index, int port) const {
    const ButterflyOp& o = op(stage, index);
    const int line = port == 0 ? o.top : o.bottom;
    if (stage == 0) return {-1, port, line};
    const int producer = owner_[(stage - 1) * points_ + line];
    const ButterflyOp& p = ops_[producer];
    return {producer, line == p.top ? 0 : 1, line};
  }

  std::array<int, 2> successors(int stage, int index) const {
    const ButterflyOp& o = op(stage, index);
    if (stage + 1 >= stages_) return {-1, -1};
    return {owner_[(stage + 1) * points_ + o.top], owner_[(stage + 1) * points_ + o.bottom]};
  }

  // One line per butterfly: name, twiddle exponent, successors.
  std::string dump() const {
    std::ostringstream os;
    for (const ButterflyOp& o : ops_) {
      os << o.name() << " w=" << o.twiddle_exponent << " ->";
      if (o.stage + 1 < stages_) {
        auto s = successors(o.stage, o.index);
        os << ' ' << ops_[s[0]].name() << ' ' << ops_[s[1]].name();
      } else {
        os << " out" << o.top << " out" << o.bottom;
      }
      os << '\n';
    }
    return os.str();
  }

  friend DataFlowGraph build_dif_dfg(std::size_t n);

 private:
  std::size_t points_ = 0;
  int stages_ = 0;
  std::vector<ButterflyOp> ops_;
  std::vector<int> owner_;  // [stage * N + line] -> op id
};

inline DataFlowGraph build_dif_dfg(std::size_t n) {
  if (n < 2) throw SizeError("transform size must be at least 2");
  DataFlowGraph g;
  g.points_ = n;
  g.stages_ = log2_exact(n);
  g.owner_.assign(static_cast<std::size_t>(g.stages_) * n, -1);
  for (int s = 0; s < g.stages_; ++s) {
    const std::size_t h = n >> (s + 1);
    for (std::size_t j = 0; j < n / 2; ++j) {
      ButterflyOp o;
      o.stage = s;
      o.index = static_cast<int>(j);
      o.top = static_cast<int>((j / h) * 2 * h + j % h);
      o.bottom = o.top + static_cast<int>(h);
      o.twiddle_exponent = (j % h) << s;
      o.twiddle = twiddle(o.twiddle_exponent, n);
      g.owner_[s * n + o.top] = static_cast<int>(g.ops_.size());
      g.owner_[s * n + o.bottom] = static_cast<int>(g.ops_.size());
      g.ops_.push_back(o);
    }
  }
  return g;
}

// Evaluates the graph directly. Result is in line order: entry L holds X[bitrev(L)].
inline std::vector<Complex> evaluate_dfg(const DataFlowGraph& g, std::span<const Complex> frame) {
  if (frame.size() != g.points()) throw SizeError("frame length does not match transform size");
  std::vector<Complex> v(frame.begin(), frame.end());
  for (const ButterflyOp& o : g.ops()) {
    const Complex a = v[o.top], b = v[o.bottom];
    v[o.top] = a + b;
    v[o.bottom] = (a - b) * o.twiddle;
  }
  return v;
}

}  // namespace mcfft
