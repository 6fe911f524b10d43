#include "hypermorl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace hypermorl {

namespace {

constexpr const char* kMagic = "hypermorl-checkpoint";

void put_double(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>(bits & 0xffu);
    bits >>= 8;
  }
  out.write(bytes, 8);
}

double get_double(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (in.gcount() != 8) throw CheckpointError("checkpoint body is truncated");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

long parse_long(const std::map<std::string, std::string>& header,
                const std::string& key) {
  const auto it = header.find(key);
  if (it == header.end()) throw CheckpointError("checkpoint header lacks '" + key + "'");
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != it->second.size()) {
    throw CheckpointError("checkpoint header '" + key + "' is not an integer");
  }
  return v;
}

const std::string& field(const std::map<std::string, std::string>& header,
                         const std::string& key) {
  const auto it = header.find(key);
  if (it == header.end()) throw CheckpointError("checkpoint header lacks '" + key + "'");
  return it->second;
}

}  // namespace

std::uint64_t rng_digest(const Rng& rng) {
  std::ostringstream state;
  state << rng;
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : state.str()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  const HypernetParams& phi = ckpt.phi;
  phi.validate();
  const Vec body = flatten(phi);
  out << kMagic << ' ' << kCheckpointVersion << '\n'
      << "m " << phi.m() << '\n'
      << "n " << phi.n() << '\n'
      << "d " << phi.d() << '\n'
      << "policy_layout " << phi.policy.describe() << '\n'
      << "embedding_layout " << phi.embedding.describe() << '\n'
      << "env_steps " << ckpt.env_steps << '\n'
      << "iteration " << ckpt.iteration << '\n'
      << "rng_digest " << std::hex << std::setw(16) << std::setfill('0')
      << ckpt.rng_digest << std::dec << std::setfill(' ') << '\n'
      << "body_doubles " << body.size() << '\n'
      << "end\n";
  for (long i = 0; i < body.size(); ++i) put_double(out, body[i]);
  if (!out) throw CheckpointError("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("empty checkpoint");
  std::istringstream first(line);
  std::string magic;
  int version = 0;
  first >> magic >> version;
  if (magic != kMagic) throw CheckpointError("not a hypermorl checkpoint");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  std::map<std::string, std::string> header;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line == "end") {
      ended = true;
      break;
    }
    const auto space = line.find(' ');
    if (space == std::string::npos) throw CheckpointError("malformed header line: " + line);
    header[line.substr(0, space)] = line.substr(space + 1);
  }
  if (!ended) throw CheckpointError("checkpoint header is not terminated");

  Checkpoint ckpt;
  HypernetParams& phi = ckpt.phi;
  try {
    phi.policy = MlpLayout::parse(field(header, "policy_layout"));
    phi.embedding = MlpLayout::parse(field(header, "embedding_layout"));
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("bad layout: ") + e.what());
  }
  const long m = parse_long(header, "m");
  const long n = parse_long(header, "n");
  const long d = parse_long(header, "d");
  if (n != phi.policy.num_params() || d != phi.embedding.output_dim() ||
      m != phi.embedding.input_dim() || !phi.policy.has_log_std()) {
    throw CheckpointError("checkpoint dimensions (m, n, d) disagree with the layouts");
  }
  const long count = parse_long(header, "body_doubles");
  if (count != n * d + phi.embedding.num_params() + n) {
    throw CheckpointError("checkpoint body length disagrees with (n, d, layouts)");
  }
  ckpt.env_steps = parse_long(header, "env_steps");
  ckpt.iteration = parse_long(header, "iteration");
  const std::string& digest = field(header, "rng_digest");
  std::size_t used = 0;
  try {
    ckpt.rng_digest = std::stoull(digest, &used, 16);
  } catch (const std::exception&) {
    used = 0;
  }
  if (digest.size() != 16 || used != 16) throw CheckpointError("bad rng_digest");

  Vec body(count);
  for (long i = 0; i < count; ++i) body[i] = get_double(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw CheckpointError("trailing bytes after checkpoint body");
  }
  phi.W = RowMat::Zero(n, d);
  phi.mu = Vec::Zero(phi.embedding.num_params());
  phi.b = Vec::Zero(n);
  unflatten(body, phi);
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string());
    write_checkpoint(out, ckpt);
    out.flush();
    if (!out) throw CheckpointError("failed to write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace hypermorl
