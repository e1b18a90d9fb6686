#include "doctest.h"

#include <cstring>
#include <filesystem>

#include "vsop/checkpoint.hpp"
#include "vsop/envs.hpp"

using namespace vsop;

namespace {
std::vector<checkpoint::Block> sample_blocks() {
  return {{"a", 2, 3, {1.0, -2.5, 3.25, 0.0, 1e-300, -7.0}}, {"empty", 0, 0, {}}, {"scalar", 1, 1, {42.0}}};
}
}  // namespace

TEST_CASE("checkpoint byte layout") {
  const auto bytes = checkpoint::encode({{"w", 1, 1, {1.0}}});
  REQUIRE(bytes.size() == 8 + 4 + 4 + 4 + 1 + 8 + 8 + 8);
  CHECK(std::memcmp(bytes.data(), checkpoint::kMagic, 8) == 0);
  CHECK(static_cast<unsigned char>(bytes[8]) == checkpoint::kVersion);
  CHECK(bytes[12] == 1);  // block count, little-endian
  CHECK(bytes[16] == 1);  // name length
  CHECK(bytes[20] == 'w');
  // 1.0 = 0x3FF0000000000000 little-endian
  CHECK(static_cast<unsigned char>(bytes.back()) == 0x3F);
  CHECK(static_cast<unsigned char>(bytes[bytes.size() - 2]) == 0xF0);
}

TEST_CASE("checkpoint round trip") {
  const auto blocks = sample_blocks();
  const auto back = checkpoint::decode(checkpoint::encode(blocks));
  REQUIRE(back.size() == blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    CHECK(back[i].name == blocks[i].name);
    CHECK(back[i].rows == blocks[i].rows);
    CHECK(back[i].cols == blocks[i].cols);
    CHECK(back[i].data == blocks[i].data);
  }
  const auto path = (std::filesystem::temp_directory_path() / "vsop_ckpt_test.bin").string();
  checkpoint::write_file(path, blocks);
  CHECK(checkpoint::read_file(path)[0].data == blocks[0].data);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint format errors") {
  auto bytes = checkpoint::encode(sample_blocks());
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(checkpoint::decode(bad_magic), checkpoint::FormatError);
  auto bad_version = bytes;
  bad_version[8] = 9;
  CHECK_THROWS_AS(checkpoint::decode(bad_version), checkpoint::FormatError);
  CHECK_THROWS_AS(checkpoint::decode(bytes.substr(0, bytes.size() - 3)), checkpoint::FormatError);
  CHECK_THROWS_AS(checkpoint::decode(bytes + "x"), checkpoint::FormatError);
  CHECK_THROWS_AS(checkpoint::decode(""), checkpoint::FormatError);
  CHECK_THROWS(checkpoint::read_file("/nonexistent/dir/ckpt.bin"));
}

TEST_CASE("agent restore") {
  TrainConfig c;
  c.env_id = "Pendulum-v1";
  c.spectral_actor = true;
  c.norm_obs = true;
  const auto spec = envs::make_env(c.env_id)->spec();
  auto a = algos::make_agent(c, spec);
  a.log_std[0] = -0.3;
  a.obs_moments.update(std::vector<double>{0.1, 0.2, 0.3});
  c.seed = 99;
  auto b = algos::make_agent(c, spec);
  checkpoint::restore_agent(b, checkpoint::decode(checkpoint::encode(checkpoint::agent_blocks(a))));
  for (std::size_t l = 0; l < a.actor.layers().size(); ++l) {
    CHECK(a.actor.layers()[l].weight.data() == b.actor.layers()[l].weight.data());
    CHECK(a.actor.layers()[l].bias == b.actor.layers()[l].bias);
    CHECK(a.actor.layers()[l].spectral.u == b.actor.layers()[l].spectral.u);
  }
  for (std::size_t l = 0; l < a.critic.layers().size(); ++l)
    CHECK(a.critic.layers()[l].weight.data() == b.critic.layers()[l].weight.data());
  CHECK(a.log_std == b.log_std);
  const std::vector<double> x{1.0, -1.0, 0.5};
  CHECK(a.obs_moments.normalize(x) == b.obs_moments.normalize(x));

  auto blocks = checkpoint::agent_blocks(a);
  blocks.pop_back();
  CHECK_THROWS(checkpoint::restore_agent(b, blocks));
}
