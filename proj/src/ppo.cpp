#include "aerobat/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace aerobat {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

Eigen::VectorXd default_obs_scale() {
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(kObservationDim);
  // Positions and velocities are metres-scale; bring them near unit range.
  scale.segment<3>(0).setConstant(0.2);
  scale.segment<3>(7).setConstant(0.2);
  scale.segment<3>(14).setConstant(0.2);
  scale.segment<3>(21).setConstant(0.2);
  return scale;
}

std::vector<int> network_dims(const NetworkConfig& cfg, int out) {
  std::vector<int> dims;
  dims.push_back(kObservationDim);
  dims.push_back(cfg.latent);
  for (int h : cfg.trunk) dims.push_back(h);
  dims.push_back(out);
  return dims;
}

}  // namespace

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "sp") return TrainMode::kSparse;
  if (s == "rs") return TrainMode::kShaped;
  if (s == "proposed") return TrainMode::kProposed;
  throw std::invalid_argument("unknown training mode: " + s);
}

const char* to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kSparse: return "sp";
    case TrainMode::kShaped: return "rs";
    case TrainMode::kProposed: return "proposed";
  }
  return "unknown";
}

PolicyParams PolicyParams::init(const NetworkConfig& cfg, Rng& rng) {
  PolicyParams p;
  p.actor = Mlp(network_dims(cfg, 4), rng, 0.01);
  p.critic = Mlp(network_dims(cfg, 1), rng, 1.0);
  p.log_std.setConstant(std::log(cfg.init_stddev));
  p.obs_scale = default_obs_scale();
  return p;
}

Matrix PolicyParams::condition(const Matrix& obs) const {
  return obs * obs_scale.asDiagonal();
}

Matrix PolicyParams::actor_mean(const Matrix& obs) const {
  return actor.forward(condition(obs)).array().tanh();
}

Eigen::VectorXd PolicyParams::values(const Matrix& obs) const {
  return critic.forward(condition(obs)).col(0);
}

bool PolicyParams::finite() const {
  return actor.finite() && critic.finite() && log_std.allFinite();
}

std::pair<Vec4, Vec4> forward_actor(const PolicyParams& params,
                                    const Observation& obs) {
  const Matrix mean = params.actor_mean(obs.transpose());
  return {Vec4(mean.row(0).transpose()), params.stddev()};
}

double gaussian_log_prob(const Vec4& mean, const Vec4& stddev,
                         const Vec4& action) {
  double logp = 0.0;
  for (int c = 0; c < 4; ++c) {
    const double z = (action[c] - mean[c]) / stddev[c];
    logp += -0.5 * z * z - std::log(stddev[c]) - 0.5 * kLog2Pi;
  }
  return logp;
}

std::pair<Vec4, double> sample_action(const Vec4& mean, const Vec4& stddev,
                                      Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec4 action;
  for (int c = 0; c < 4; ++c) {
    action[c] = std::clamp(mean[c] + stddev[c] * normal(rng), -1.0, 1.0);
  }
  return {action, gaussian_log_prob(mean, stddev, action)};
}

std::pair<Matrix, Matrix> compute_gae(const Matrix& rewards,
                                      const Matrix& values, const Matrix& dones,
                                      const Eigen::VectorXd& bootstrap,
                                      double gamma, double lambda) {
  const auto steps = rewards.rows();
  const auto envs = rewards.cols();
  if (values.rows() != steps || dones.rows() != steps ||
      bootstrap.size() != envs) {
    throw std::invalid_argument("compute_gae: misaligned inputs");
  }
  Matrix advantages = Matrix::Zero(steps, envs);
  Eigen::VectorXd gae = Eigen::VectorXd::Zero(envs);
  for (auto t = steps - 1; t >= 0; --t) {
    for (auto e = 0; e < envs; ++e) {
      const double nonterminal = 1.0 - dones(t, e);
      const double next_value =
          (t + 1 == steps) ? bootstrap[e] : values(t + 1, e);
      const double delta =
          rewards(t, e) + gamma * next_value * nonterminal - values(t, e);
      gae[e] = delta + gamma * lambda * nonterminal * gae[e];
      advantages(t, e) = gae[e];
    }
  }
  return {advantages, advantages + values};
}

PpoLossTerms ppo_loss_and_gradients(
    const PolicyParams& params, const Matrix& obs, const Matrix& actions,
    const Eigen::VectorXd& old_log_probs, const Eigen::VectorXd& advantages,
    const Eigen::VectorXd& returns, const PpoConfig& cfg,
    std::vector<DenseGrad>* actor_grads, Vec4* log_std_grad,
    std::vector<DenseGrad>* critic_grads) {
  const auto n = obs.rows();
  const double inv_n = 1.0 / double(n);
  const Matrix conditioned = params.condition(obs);

  Mlp::Workspace actor_ws;
  const Matrix& pre = params.actor.forward(conditioned, actor_ws);
  const Matrix mean = pre.array().tanh();
  const Vec4 sigma = params.stddev();

  // Per-sample log probabilities under the current parameters.
  Eigen::VectorXd new_log_probs(n);
  Matrix z(n, 4);
  for (int c = 0; c < 4; ++c) {
    z.col(c) = (actions.col(c) - mean.col(c)) / sigma[c];
  }
  new_log_probs = -0.5 * z.array().square().rowwise().sum() -
                  params.log_std.sum() - 2.0 * kLog2Pi;

  const Eigen::ArrayXd log_ratio =
      (new_log_probs - old_log_probs).array();
  const Eigen::ArrayXd ratio = log_ratio.exp();

  const Eigen::ArrayXd adv = advantages.array();
  const Eigen::ArrayXd unclipped = -adv * ratio;
  const Eigen::ArrayXd clipped =
      -adv * ratio.min(1.0 + cfg.clip).max(1.0 - cfg.clip);
  const Eigen::ArrayXd per_sample = unclipped.max(clipped);

  Mlp::Workspace critic_ws;
  const Eigen::VectorXd v =
      params.critic.forward(conditioned, critic_ws).col(0);
  const Eigen::ArrayXd v_err = (v - returns).array();

  const double entropy =
      params.log_std.sum() + 2.0 * (1.0 + kLog2Pi);  // 4 * 0.5 * (1+log2pi)

  PpoLossTerms terms;
  terms.policy = per_sample.mean();
  terms.value = 0.5 * v_err.square().mean();
  terms.entropy = entropy;
  terms.approx_kl = ((ratio - 1.0) - log_ratio).mean();
  terms.total = terms.policy + cfg.value_coef * terms.value -
                cfg.entropy_coef * terms.entropy;

  if (actor_grads != nullptr) {
    // d(loss)/d(logp): active only where the unclipped branch is the max.
    Eigen::ArrayXd g_logp = Eigen::ArrayXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (unclipped[i] >= clipped[i]) g_logp[i] = -adv[i] * ratio[i];
    }
    g_logp *= inv_n;

    // Through the Gaussian to the tanh-ed mean, then to the actor output.
    Matrix grad_pre(n, 4);
    for (int c = 0; c < 4; ++c) {
      grad_pre.col(c) =
          (g_logp * (z.col(c).array() / sigma[c]) *
           (1.0 - mean.col(c).array().square()))
              .matrix();
    }
    params.actor.accumulate_gradients(actor_ws, grad_pre, *actor_grads);

    if (log_std_grad != nullptr) {
      for (int c = 0; c < 4; ++c) {
        (*log_std_grad)[c] +=
            (g_logp * (z.col(c).array().square() - 1.0)).sum() -
            cfg.entropy_coef;
      }
    }
  }
  if (critic_grads != nullptr) {
    const Matrix grad_v =
        (cfg.value_coef * inv_n * v_err).matrix();
    params.critic.accumulate_gradients(critic_ws, grad_v, *critic_grads);
  }
  return terms;
}

UpdateStats ppo_update(PolicyParams& params, Adam& optimizer,
                       const RolloutBatch& batch, const PpoConfig& cfg,
                       Rng& rng) {
  const int total = batch.steps * batch.envs;
  if (total == 0) return {};

  // Flatten (step, env) grids into the observation row order t*envs + e.
  Eigen::VectorXd adv_flat(total), ret_flat(total);
  for (int t = 0; t < batch.steps; ++t) {
    for (int e = 0; e < batch.envs; ++e) {
      adv_flat[t * batch.envs + e] = batch.advantages(t, e);
      ret_flat[t * batch.envs + e] = batch.returns(t, e);
    }
  }
  // Whole-batch advantage normalization.
  const double mean = adv_flat.mean();
  const double var =
      (adv_flat.array() - mean).square().sum() / double(total);
  adv_flat = ((adv_flat.array() - mean) / (std::sqrt(var) + 1e-8)).matrix();

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  const int minibatch = std::min(cfg.minibatch, total);

  UpdateStats stats;
  int updates = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_kl = 0.0;
    int epoch_minibatches = 0;
    for (int start = 0; start + minibatch <= total; start += minibatch) {
      Matrix mb_obs(minibatch, kObservationDim), mb_act(minibatch, 4);
      Eigen::VectorXd mb_logp(minibatch), mb_adv(minibatch), mb_ret(minibatch);
      for (int i = 0; i < minibatch; ++i) {
        const int r = order[start + i];
        mb_obs.row(i) = batch.observations.row(r);
        mb_act.row(i) = batch.actions.row(r);
        mb_logp[i] = batch.log_probs[r];
        mb_adv[i] = adv_flat[r];
        mb_ret[i] = ret_flat[r];
      }

      auto actor_grads = params.actor.zero_gradients();
      auto critic_grads = params.critic.zero_gradients();
      Vec4 log_std_grad = Vec4::Zero();
      const PpoLossTerms terms = ppo_loss_and_gradients(
          params, mb_obs, mb_act, mb_logp, mb_adv, mb_ret, cfg, &actor_grads,
          &log_std_grad, &critic_grads);
      if (!std::isfinite(terms.total)) {
        throw TrainingDiverged("non-finite loss during update");
      }

      optimizer.update_begin();
      optimizer.update_mlp(params.actor, actor_grads);
      optimizer.update(params.log_std, log_std_grad);
      optimizer.update_mlp(params.critic, critic_grads);
      if (!params.finite()) {
        throw TrainingDiverged("non-finite parameters after update");
      }

      stats.policy_loss += terms.policy;
      stats.value_loss += terms.value;
      stats.entropy += terms.entropy;
      stats.approx_kl += terms.approx_kl;
      epoch_kl += terms.approx_kl;
      ++epoch_minibatches;
      ++updates;
    }
    ++stats.epochs_run;
    if (epoch_minibatches > 0 &&
        epoch_kl / epoch_minibatches > cfg.kl_threshold) {
      stats.kl_stopped = true;
      break;
    }
  }
  if (updates > 0) {
    stats.policy_loss /= updates;
    stats.value_loss /= updates;
    stats.entropy /= updates;
    stats.approx_kl /= updates;
  }
  return stats;
}

std::string log_to_csv(const std::vector<TrainLogRow>& rows) {
  std::ostringstream out;
  out << "iteration,env_steps,eval_reward,success_rate,policy_loss,"
         "value_loss,entropy,approx_kl,epochs\n";
  char buf[64];
  const auto num = [&buf](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    out << r.iteration << ',' << r.env_steps << ',' << num(r.eval_reward)
        << ',' << num(r.eval_success) << ',' << num(r.policy_loss) << ','
        << num(r.value_loss) << ',' << num(r.entropy) << ','
        << num(r.approx_kl) << ',' << r.epochs_run << '\n';
  }
  return out.str();
}

EvalOutcome evaluate_policy(const PolicyParams& params, const AppConfig& cfg,
                            int episodes, std::uint64_t seed) {
  Environment env(cfg, seed);
  EvalOutcome outcome;
  double reward_sum = 0.0;
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Observation obs = env.reset();
    double episode_reward = 0.0;
    while (!env.done()) {
      const auto [mean, stddev] = forward_actor(params, obs);
      const StepResult res = env.step(mean);
      episode_reward += res.reward.original(cfg.reward_weights);
      obs = res.obs;
    }
    reward_sum += episode_reward;
    successes += env.info().success() ? 1 : 0;
    outcome.episodes.push_back(env.info());
  }
  if (episodes > 0) {
    outcome.mean_reward = reward_sum / episodes;
    outcome.success_rate = double(successes) / episodes;
  }
  return outcome;
}

namespace {

// Expands one goal and converts the chain back to reset states, keeping only
// states that a reset would accept.
void expand_into(const GoalState& goal, double thrust,
                 const ExpansionParams& exp_params, const Track& track,
                 Rng& rng, std::vector<ResetState>& out) {
  const FlatState flat = state_to_flat(goal, thrust);
  for (const FlatState& f : expand_flats(flat, exp_params, rng)) {
    QuadState state = flat_to_state(f);
    if (!valid_reset_candidate(state, track)) continue;
    out.push_back({state, std::min(flat_thrust(f), kThrustMax)});
  }
}

}  // namespace

TrainResult train(const AppConfig& cfg, TrainMode mode, std::uint64_t seed,
                  const std::string& checkpoint_path) {
  AppConfig run_cfg = cfg;
  run_cfg.reward_mode =
      mode == TrainMode::kShaped ? RewardMode::kShaped : RewardMode::kSparse;

  Rng rng(seed);
  PolicyParams params = PolicyParams::init(run_cfg.ppo.network, rng);
  Adam optimizer(run_cfg.ppo.learning_rate);

  const int n_envs = run_cfg.ppo.num_envs;
  const int n_steps = run_cfg.ppo.rollout_steps;
  std::vector<Environment> envs;
  envs.reserve(n_envs);
  for (int e = 0; e < n_envs; ++e) envs.emplace_back(run_cfg, rng());
  const std::uint64_t eval_seed_base = rng();

  const auto& cur = run_cfg.curriculum;
  ExpansionParams exp_params;
  exp_params.steps = cur.expansion_steps;
  exp_params.dt = cur.expansion_dt;
  exp_params.jerk_max = cur.jerk_max;

  ResetSets sets;
  sets.start = run_cfg.episode.start;
  sets.buffer_capacity = cur.buffer_capacity;
  if (mode == TrainMode::kProposed) {
    sets.rho1 = cur.rho1;
    sets.rho2 = cur.rho2;
    std::uniform_real_distribution<double> thrust_draw(cur.thrust_min,
                                                       cur.thrust_max);
    const auto goals =
        extract_goals(run_cfg.track, cur.goal_speed_min, cur.goal_speed_max,
                      cur.goal_cone_half_angle, cur.goals_per_gate, rng);
    std::vector<ResetState> initial;
    for (const auto& goal : goals) {
      expand_into(goal, thrust_draw(rng), exp_params, run_cfg.track, rng,
                  initial);
    }
    sets.current = initial;
    sets.absorb(initial);
  } else {
    sets.rho1 = 0.0;
    sets.rho2 = 0.0;
  }

  const auto reset_env = [&](Environment& env) -> Observation {
    for (int attempt = 0; attempt < 16; ++attempt) {
      const ResetState rs = sample_reset(sets, env.rng());
      try {
        return env.reset_from(rs.state, Command(rs.thrust, Vec3::Zero()));
      } catch (const std::invalid_argument&) {
      }
    }
    return env.reset_from(sample_start_state(sets.start, env.rng()));
  };

  TrainResult result;
  Matrix obs_mat(n_envs, kObservationDim);
  for (int e = 0; e < n_envs; ++e) {
    obs_mat.row(e) = reset_env(envs[e]).transpose();
  }

  const auto run_eval = [&](int iteration) {
    return evaluate_policy(params, run_cfg, run_cfg.eval.episodes,
                           eval_seed_base + std::uint64_t(iteration));
  };

  std::vector<TrainLogRow> log;
  {
    TrainLogRow row;
    row.iteration = 0;
    const EvalOutcome ev = run_eval(0);
    row.eval_reward = ev.mean_reward;
    row.eval_success = ev.success_rate;
    log.push_back(row);
  }

  RolloutBatch batch;
  batch.steps = n_steps;
  batch.envs = n_envs;
  batch.observations.resize(n_steps * n_envs, kObservationDim);
  batch.actions.resize(n_steps * n_envs, 4);
  batch.log_probs.resize(n_steps * n_envs);
  batch.rewards.resize(n_steps, n_envs);
  batch.values.resize(n_steps, n_envs);
  batch.dones.resize(n_steps, n_envs);

  std::vector<std::pair<QuadState, Observation>> visited;
  long env_steps = 0;
  bool aborted = false;
  PolicyParams last_good = params;

  for (int iteration = 1; iteration <= run_cfg.ppo.iterations; ++iteration) {
    visited.clear();
    long flat_index = 0;
    for (int t = 0; t < n_steps; ++t) {
      batch.observations.middleRows(t * n_envs, n_envs) = obs_mat;
      const Matrix mean = params.actor_mean(obs_mat);
      const Vec4 stddev = params.stddev();
      for (int e = 0; e < n_envs; ++e) {
        if (mode == TrainMode::kProposed &&
            flat_index % cur.visited_stride == 0) {
          visited.emplace_back(envs[e].state(),
                               Observation(obs_mat.row(e).transpose()));
        }
        ++flat_index;
        const auto [action, logp] =
            sample_action(mean.row(e).transpose(), stddev, rng);
        batch.actions.row(t * n_envs + e) = action.transpose();
        batch.log_probs[t * n_envs + e] = logp;
        const StepResult res = envs[e].step(action);
        batch.rewards(t, e) = res.reward.total;
        batch.dones(t, e) = res.done ? 1.0 : 0.0;
        if (res.done) {
          obs_mat.row(e) = reset_env(envs[e]).transpose();
        } else {
          obs_mat.row(e) = res.obs.transpose();
        }
      }
    }
    env_steps += long(n_steps) * n_envs;

    const Eigen::VectorXd values_flat = params.values(batch.observations);
    for (int t = 0; t < n_steps; ++t) {
      for (int e = 0; e < n_envs; ++e) {
        batch.values(t, e) = values_flat[t * n_envs + e];
      }
    }
    batch.bootstrap = params.values(obs_mat);
    std::tie(batch.advantages, batch.returns) =
        compute_gae(batch.rewards, batch.values, batch.dones, batch.bootstrap,
                    run_cfg.ppo.gamma, run_cfg.ppo.gae_lambda);

    TrainLogRow row;
    row.iteration = iteration;
    try {
      const UpdateStats stats =
          ppo_update(params, optimizer, batch, run_cfg.ppo, rng);
      row.policy_loss = stats.policy_loss;
      row.value_loss = stats.value_loss;
      row.entropy = stats.entropy;
      row.approx_kl = stats.approx_kl;
      row.epochs_run = stats.epochs_run;
    } catch (const TrainingDiverged&) {
      params = last_good;
      aborted = true;
    }
    row.env_steps = env_steps;

    if (aborted) {
      row.eval_reward = log.back().eval_reward;
      row.eval_success = log.back().eval_success;
      log.push_back(row);
      break;
    }
    last_good = params;

    // Curriculum refresh from critic-scored visited states.
    if (mode == TrainMode::kProposed && !visited.empty()) {
      Matrix vis_obs(visited.size(), kObservationDim);
      for (std::size_t i = 0; i < visited.size(); ++i) {
        vis_obs.row(i) = visited[i].second.transpose();
      }
      const Eigen::VectorXd vis_values = params.values(vis_obs);
      auto band = select_percentile_band(vis_values, cur.band_lo, cur.band_hi,
                                         std::size_t(cur.min_band_count));
      std::shuffle(band.begin(), band.end(), rng);
      if (band.size() > std::size_t(cur.seeds_per_iteration)) {
        band.resize(cur.seeds_per_iteration);
      }
      std::uniform_real_distribution<double> thrust_draw(cur.thrust_min,
                                                         cur.thrust_max);
      std::vector<ResetState> fresh;
      for (const std::size_t idx : band) {
        const QuadState& st = visited[idx].first;
        expand_into({st.p, st.q, st.v}, thrust_draw(rng), exp_params,
                    run_cfg.track, rng, fresh);
      }
      if (!fresh.empty()) {
        sets.current = fresh;
        sets.absorb(fresh);
      }
    }

    if (iteration % run_cfg.eval.every == 0) {
      const EvalOutcome ev = run_eval(iteration);
      row.eval_reward = ev.mean_reward;
      row.eval_success = ev.success_rate;
    } else {
      row.eval_reward = log.back().eval_reward;
      row.eval_success = log.back().eval_success;
    }
    log.push_back(row);
  }

  result.params = params;
  result.log = log;
  result.reset_sets = sets;
  result.env_steps = env_steps;
  result.aborted = aborted;

  if (!checkpoint_path.empty()) {
    Checkpoint cp;
    cp.config_yaml = run_cfg.to_string();
    cp.mode = to_string(mode);
    cp.seed = seed;
    cp.iteration = log.empty() ? 0 : log.back().iteration;
    cp.env_steps = env_steps;
    cp.params = params;
    cp.optimizer = optimizer;
    std::ostringstream rng_state;
    rng_state << rng;
    cp.rng_state = rng_state.str();
    cp.reset_sets = sets;
    save_checkpoint(checkpoint_path, cp);
  }
  return result;
}

}  // namespace aerobat
