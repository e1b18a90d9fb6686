#include "vsop/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace vsop::checkpoint {

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("checkpoint truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return value;
}

}  // namespace

std::string encode(const std::vector<Block>& blocks) {
  std::string out(kMagic, kMagic + 8);
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& b : blocks) {
    if (b.data.size() != b.rows * b.cols) throw FormatError("block '" + b.name + "' has inconsistent shape");
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(b.name.size()));
    out += b.name;
    put_le<std::uint64_t>(out, b.rows);
    put_le<std::uint64_t>(out, b.cols);
    for (double x : b.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
  }
  return out;
}

std::vector<Block> decode(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 8) != 0) throw FormatError("not a checkpoint file");
  std::size_t pos = 8;
  const auto version = get_le<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(bytes, pos);
  std::vector<Block> blocks;
  for (std::uint32_t i = 0; i < count; ++i) {
    Block b;
    const auto len = get_le<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw FormatError("checkpoint truncated");
    b.name = bytes.substr(pos, len);
    pos += len;
    b.rows = get_le<std::uint64_t>(bytes, pos);
    b.cols = get_le<std::uint64_t>(bytes, pos);
    if (b.cols != 0 && b.rows > (bytes.size() - pos) / 8 / b.cols) throw FormatError("checkpoint truncated");
    b.data.resize(b.rows * b.cols);
    for (double& x : b.data) x = std::bit_cast<double>(get_le<std::uint64_t>(bytes, pos));
    blocks.push_back(std::move(b));
  }
  if (pos != bytes.size()) throw FormatError("trailing bytes after last block");
  return blocks;
}

void write_file(const std::string& path, const std::vector<Block>& blocks) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  const auto bytes = encode(blocks);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<Block> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return decode(ss.str());
}

namespace {

Block vector_block(std::string name, const std::vector<double>& v) {
  return Block{std::move(name), 1, v.size(), v};
}

void net_blocks(std::vector<Block>& out, const nn::Mlp& net, const std::string& prefix) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    const auto& layer = net.layers()[l];
    const std::string p = prefix + "." + std::to_string(l);
    out.push_back(Block{p + ".weight", layer.weight.rows(), layer.weight.cols(), layer.weight.data()});
    out.push_back(vector_block(p + ".bias", layer.bias));
    if (layer.spectral.enabled) {
      out.push_back(vector_block(p + ".spectral_u", layer.spectral.u));
      out.push_back(vector_block(p + ".spectral_v", layer.spectral.v));
    }
  }
}

void restore_net(nn::Mlp& net, const std::map<std::string, const Block*>& index, const std::string& prefix) {
  auto& layers = net.mutable_layers();
  auto fetch = [&](const std::string& name, std::size_t expected) -> const Block& {
    const auto it = index.find(name);
    if (it == index.end()) throw FormatError("checkpoint is missing block '" + name + "'");
    if (it->second->data.size() != expected) throw FormatError("block '" + name + "' has the wrong size");
    return *it->second;
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& layer = layers[l];
    const std::string p = prefix + "." + std::to_string(l);
    const auto& w = fetch(p + ".weight", layer.weight.size());
    std::copy(w.data.begin(), w.data.end(), layer.weight.values().begin());
    layer.bias = fetch(p + ".bias", layer.bias.size()).data;
    if (layer.spectral.enabled) {
      layer.spectral.u = fetch(p + ".spectral_u", layer.out()).data;
      layer.spectral.v = fetch(p + ".spectral_v", layer.in()).data;
    }
  }
}

}  // namespace

std::vector<Block> agent_blocks(const algos::AgentBundle& agent) {
  std::vector<Block> out;
  net_blocks(out, agent.actor, "actor");
  if (!agent.log_std.empty()) out.push_back(vector_block("actor.log_std", agent.log_std));
  net_blocks(out, agent.critic, "critic");
  const auto& m = agent.obs_moments;
  out.push_back(vector_block("obs_rms.count", {m.count()}));
  out.push_back(vector_block("obs_rms.mean", m.mean()));
  out.push_back(vector_block("obs_rms.m2", m.m2()));
  return out;
}

void restore_agent(algos::AgentBundle& agent, const std::vector<Block>& blocks) {
  std::map<std::string, const Block*> index;
  for (const auto& b : blocks) index[b.name] = &b;
  restore_net(agent.actor, index, "actor");
  restore_net(agent.critic, index, "critic");
  if (!agent.log_std.empty()) {
    const auto it = index.find("actor.log_std");
    if (it == index.end() || it->second->data.size() != agent.log_std.size())
      throw FormatError("checkpoint is missing block 'actor.log_std'");
    agent.log_std = it->second->data;
  }
  const auto c = index.find("obs_rms.count"), mean = index.find("obs_rms.mean"), m2 = index.find("obs_rms.m2");
  if (c == index.end() || mean == index.end() || m2 == index.end()) throw FormatError("checkpoint is missing obs_rms blocks");
  agent.obs_moments.restore(c->second->data.at(0), mean->second->data, m2->second->data);
}

}  // namespace vsop::checkpoint
