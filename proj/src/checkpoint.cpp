#include <fstream>
#include <stdexcept>

#include "aerobat/ppo.hpp"

namespace aerobat {

namespace {

constexpr char kMagic[] = "abck";
constexpr std::uint32_t kVersion = 1;

void write_string(std::ostream& out, const std::string& s) {
  const std::uint64_t n = s.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(s.data(), static_cast<std::streamsize>(n));
}

std::string read_string(std::istream& in) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return s;
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  const std::uint64_t n = v.size();
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
}

Eigen::VectorXd read_vector(std::istream& in) {
  std::uint64_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  Eigen::VectorXd v(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(sizeof(double) * n));
  if (!in) throw std::runtime_error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  write_string(out, cp.config_yaml);
  write_string(out, cp.mode);
  out.write(reinterpret_cast<const char*>(&cp.seed), sizeof(cp.seed));
  const std::int64_t iteration = cp.iteration, env_steps = cp.env_steps;
  out.write(reinterpret_cast<const char*>(&iteration), sizeof(iteration));
  out.write(reinterpret_cast<const char*>(&env_steps), sizeof(env_steps));
  cp.params.actor.save(out);
  cp.params.critic.save(out);
  write_vector(out, cp.params.log_std);
  write_vector(out, cp.params.obs_scale);
  cp.optimizer.save(out);
  write_string(out, cp.rng_state);
  cp.reset_sets.save(out);
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != kMagic) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kVersion) {
    throw std::runtime_error("unsupported checkpoint version");
  }
  Checkpoint cp;
  cp.config_yaml = read_string(in);
  cp.mode = read_string(in);
  in.read(reinterpret_cast<char*>(&cp.seed), sizeof(cp.seed));
  std::int64_t iteration = 0, env_steps = 0;
  in.read(reinterpret_cast<char*>(&iteration), sizeof(iteration));
  in.read(reinterpret_cast<char*>(&env_steps), sizeof(env_steps));
  cp.iteration = iteration;
  cp.env_steps = env_steps;
  cp.params.actor = Mlp::load(in);
  cp.params.critic = Mlp::load(in);
  const Eigen::VectorXd log_std = read_vector(in);
  if (log_std.size() != 4) throw std::runtime_error("bad log_std size");
  cp.params.log_std = log_std;
  cp.params.obs_scale = read_vector(in);
  cp.optimizer = Adam::load(in);
  cp.rng_state = read_string(in);
  cp.reset_sets = ResetSets::load(in);
  return cp;
}

}  // namespace aerobat
