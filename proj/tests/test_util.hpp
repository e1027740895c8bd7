#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

inline std::string read_golden(const std::string& name) {
  std::ifstream f(std::string(MCFFT_GOLDEN_DIR) + "/" + name);
  if (!f) throw std::runtime_error("missing golden file " + name);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}
