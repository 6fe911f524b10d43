#include <doctest.h>

#include <fstream>
#include <sstream>

#include "hypermorl/checkpoint.hpp"

using namespace hypermorl;

namespace {

Checkpoint sample_checkpoint(std::uint64_t seed) {
  Rng rng(seed);
  Checkpoint c;
  c.phi = bias_hyper_init(rng, MlpLayout({2, 16, 16, 2}, 2), MlpLayout({2, 32, 10}), 0.01);
  std::normal_distribution<double> normal;
  for (long i = 0; i < c.phi.W.size(); ++i) c.phi.W.data()[i] = normal(rng) * 1e-3;
  c.phi.W(0, 0) = -0.0;
  c.phi.W(1, 1) = 5e-324;
  c.env_steps = 1999800;
  c.iteration = 11666;
  c.rng_digest = rng_digest(rng);
  return c;
}

std::string bytes_of(const Checkpoint& c) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, c);
  return out.str();
}

}  // namespace

TEST_CASE("save, load, save is byte identical") {
  const auto dir = std::filesystem::temp_directory_path() / "hypermorl_ckpt_test";
  std::filesystem::create_directories(dir);
  for (std::uint64_t seed : {1, 2, 3}) {
    const Checkpoint c = sample_checkpoint(seed);
    save_checkpoint(dir / "a.ckpt", c);
    const Checkpoint loaded = load_checkpoint(dir / "a.ckpt");
    CHECK(loaded.phi == c.phi);
    CHECK(loaded.env_steps == c.env_steps);
    CHECK(loaded.iteration == c.iteration);
    CHECK(loaded.rng_digest == c.rng_digest);
    save_checkpoint(dir / "b.ckpt", loaded);
    std::ifstream a(dir / "a.ckpt", std::ios::binary), b(dir / "b.ckpt", std::ios::binary);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
    CHECK_FALSE(std::filesystem::exists(dir / "a.ckpt.tmp"));
  }
}

TEST_CASE("header is text and the body is little-endian doubles") {
  const Checkpoint c = sample_checkpoint(4);
  const std::string bytes = bytes_of(c);
  const auto end = bytes.find("\nend\n");
  REQUIRE(end != std::string::npos);
  CHECK(bytes.rfind("hypermorl-checkpoint 1\nm 2\nn ", 0) == 0);
  const std::string body = bytes.substr(end + 5);
  CHECK(static_cast<long>(body.size()) == 8 * c.phi.num_params());
  // First body double is W(0, 0) = -0.0: sign bit in the last byte.
  CHECK(static_cast<unsigned char>(body[7]) == 0x80);
  for (int i = 0; i < 7; ++i) CHECK(body[i] == 0);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const std::string good = bytes_of(sample_checkpoint(5));
  auto rejects = [](const std::string& s) {
    std::istringstream in(s, std::ios::binary);
    CHECK_THROWS_AS(read_checkpoint(in), CheckpointError);
  };
  rejects("");
  rejects("not-a-checkpoint 1\n");
  rejects(std::string(good).replace(good.find(" 1\n"), 3, " 9\n"));
  rejects(good.substr(0, good.size() - 3));
  rejects(good + "x");
  std::string bad_d = good;
  bad_d.replace(bad_d.find("\nd 10\n"), 6, "\nd 11\n");
  rejects(bad_d);
  std::string bad_digest = good;
  bad_digest.replace(bad_digest.find("rng_digest ") + 11, 1, "z");
  rejects(bad_digest);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt"), CheckpointError);
}

TEST_CASE("rng_digest tracks generator state") {
  Rng a(1), b(1);
  CHECK(rng_digest(a) == rng_digest(b));
  a();
  CHECK(rng_digest(a) != rng_digest(b));
}
