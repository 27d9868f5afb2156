#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aerobat/config.hpp"
#include "aerobat/curriculum.hpp"
#include "aerobat/environment.hpp"
#include "aerobat/mlp.hpp"

namespace aerobat {

enum class TrainMode { kSparse, kShaped, kProposed };
TrainMode train_mode_from_string(const std::string& s);
const char* to_string(TrainMode mode);

// Actor-critic parameters: identically shaped encoder+trunk networks, Tanh on
// the actor head, state-independent per-channel log standard deviations, and
// a fixed observation conditioning vector applied before the first layer.
struct PolicyParams {
  Mlp actor;
  Mlp critic;
  Vec4 log_std{Vec4::Zero()};
  Eigen::VectorXd obs_scale;

  static PolicyParams init(const NetworkConfig& cfg, Rng& rng);

  // Scaled observations ready for either network, one row per sample.
  Matrix condition(const Matrix& obs) const;
  // Actor head output in (-1,1)^4, one row per sample.
  Matrix actor_mean(const Matrix& obs) const;
  Eigen::VectorXd values(const Matrix& obs) const;
  Vec4 stddev() const { return log_std.array().exp(); }
  bool finite() const;
};

// Mean/stddev of the policy distribution at one observation.
std::pair<Vec4, Vec4> forward_actor(const PolicyParams& params,
                                    const Observation& obs);

double gaussian_log_prob(const Vec4& mean, const Vec4& stddev,
                         const Vec4& action);

// Gaussian draw clamped to [-1,1]^4 with its log density (of the unclamped
// Gaussian pdf, evaluated at the returned action).
std::pair<Vec4, double> sample_action(const Vec4& mean, const Vec4& stddev,
                                      Rng& rng);

struct RolloutBatch {
  int steps = 0;
  int envs = 0;
  Matrix observations;          // (steps*envs) x 28, row t*envs + e
  Matrix actions;               // (steps*envs) x 4
  Eigen::VectorXd log_probs;    // steps*envs
  Matrix rewards;               // steps x envs
  Matrix values;                // steps x envs
  Matrix dones;                 // steps x envs, 1 = episode ended at t
  Eigen::VectorXd bootstrap;    // envs, value after the last step
  Matrix advantages;            // steps x envs
  Matrix returns;               // steps x envs
};

// GAE backward recursion; returns (advantages, returns = advantages+values).
std::pair<Matrix, Matrix> compute_gae(const Matrix& rewards,
                                      const Matrix& values, const Matrix& dones,
                                      const Eigen::VectorXd& bootstrap,
                                      double gamma, double lambda);

struct PpoLossTerms {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
};

// Clipped-surrogate + value + entropy loss over one minibatch, with optional
// analytic gradients. Advantages are expected pre-normalized.
PpoLossTerms ppo_loss_and_gradients(
    const PolicyParams& params, const Matrix& obs, const Matrix& actions,
    const Eigen::VectorXd& old_log_probs, const Eigen::VectorXd& advantages,
    const Eigen::VectorXd& returns, const PpoConfig& cfg,
    std::vector<DenseGrad>* actor_grads, Vec4* log_std_grad,
    std::vector<DenseGrad>* critic_grads);

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  int epochs_run = 0;
  bool kl_stopped = false;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Runs the configured epochs of minibatch updates in place.
UpdateStats ppo_update(PolicyParams& params, Adam& optimizer,
                       const RolloutBatch& batch, const PpoConfig& cfg,
                       Rng& rng);

struct TrainLogRow {
  int iteration = 0;
  long env_steps = 0;
  double eval_reward = 0.0;
  double eval_success = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  int epochs_run = 0;
};

std::string log_to_csv(const std::vector<TrainLogRow>& rows);

struct TrainResult {
  PolicyParams params;
  std::vector<TrainLogRow> log;
  ResetSets reset_sets;
  long env_steps = 0;
  bool aborted = false;
};

// Full training loop: rollouts with biased resets, PPO updates, curriculum
// refresh (proposed mode), and periodic evaluation from the start region
// using the mean action and the original reward. When `checkpoint_path` is
// non-empty, the final (or last-good, on divergence) state is written there.
TrainResult train(const AppConfig& cfg, TrainMode mode, std::uint64_t seed,
                  const std::string& checkpoint_path = "");

// Deterministic-policy evaluation used during training and by the evaluation
// tools; does not mutate the policy or the curriculum sets.
struct EvalOutcome {
  double mean_reward = 0.0;   // mean per-episode original reward total
  double success_rate = 0.0;
  std::vector<EpisodeInfo> episodes;
};
EvalOutcome evaluate_policy(const PolicyParams& params, const AppConfig& cfg,
                            int episodes, std::uint64_t seed);

// Versioned binary checkpoint: config, mode, counters, parameters, optimizer
// state, RNG state, and the curriculum snapshot.
struct Checkpoint {
  std::string config_yaml;
  std::string mode = "sp";
  std::uint64_t seed = 0;
  long iteration = 0;
  long env_steps = 0;
  PolicyParams params;
  Adam optimizer;
  std::string rng_state;
  ResetSets reset_sets;
};

void save_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace aerobat
