#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsop/algos.hpp"

namespace vsop::checkpoint {

inline constexpr char kMagic[8] = {'V', 'S', 'O', 'P', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Block {
  std::string name;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
  std::vector<double> data;
};

// Layout: magic, u32 version, u32 block count, then per block u32 name
// length, name bytes, u64 rows, u64 cols, rows*cols float64. All integers and
// floats little-endian.
std::string encode(const std::vector<Block>& blocks);
std::vector<Block> decode(const std::string& bytes);
void write_file(const std::string& path, const std::vector<Block>& blocks);
std::vector<Block> read_file(const std::string& path);

std::vector<Block> agent_blocks(const algos::AgentBundle& agent);
// Copies parameters, spectral vectors and observation statistics back into an
// agent built from the same configuration.
void restore_agent(algos::AgentBundle& agent, const std::vector<Block>& blocks);

}  // namespace vsop::checkpoint
