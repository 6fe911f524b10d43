#ifndef HYPERMORL_CHECKPOINT_HPP_
#define HYPERMORL_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "hypermorl/hypernet.hpp"

namespace hypermorl {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File layout: a text header of "key value" lines terminated by "end\n",
// followed by W (row-major), mu and b as little-endian IEEE-754 doubles.
//
//   hypermorl-checkpoint 1
//   m 2
//   n 8
//   d 3
//   policy_layout 2,2+2
//   embedding_layout 2,32,3
//   env_steps 1999800
//   iteration 11666
//   rng_digest 9f3c...        (16 hex digits)
//   body_doubles 59
//   end
struct Checkpoint {
  HypernetParams phi;
  long env_steps = 0;
  long iteration = 0;
  std::uint64_t rng_digest = 0;
};

// FNV-1a digest of the textual mt19937_64 state.
std::uint64_t rng_digest(const Rng& rng);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

// Atomic save: writes "<path>.tmp" then renames over path.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace hypermorl

#endif  // HYPERMORL_CHECKPOINT_HPP_
