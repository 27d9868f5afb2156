#include "aerobat/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

namespace aerobat {

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

EvalMetrics metrics_from_episodes(const std::vector<EpisodeInfo>& episodes,
                                  std::size_t n_gates) {
  EvalMetrics m;
  m.episodes = static_cast<int>(episodes.size());
  m.per_gate.resize(n_gates);
  for (std::size_t g = 0; g < n_gates; ++g) m.per_gate[g].gate = int(g);

  int successes = 0;
  double flight_time_sum = 0.0;
  double p_sum = 0.0, a_sum = 0.0;
  long pass_count = 0;
  for (const auto& ep : episodes) {
    if (ep.success()) {
      ++successes;
      flight_time_sum += ep.flight_time;
    }
    for (const auto& pass : ep.passes) {
      p_sum += pass.p_error;
      a_sum += pass.theta_error;
      ++pass_count;
      if (pass.gate >= 0 && std::size_t(pass.gate) < n_gates) {
        auto& gs = m.per_gate[pass.gate];
        ++gs.passes;
        gs.mean_p_error += pass.p_error;
        gs.mean_theta_error_deg += pass.theta_error;
      }
    }
  }
  if (m.episodes > 0) m.success_rate = double(successes) / m.episodes;
  if (successes > 0) m.flight_time = flight_time_sum / successes;
  if (pass_count > 0) {
    m.aer_p = p_sum / pass_count;
    m.aer_a_deg = (a_sum / pass_count) * 180.0 / M_PI;
  }
  for (auto& gs : m.per_gate) {
    if (gs.passes > 0) {
      gs.mean_p_error /= gs.passes;
      gs.mean_theta_error_deg *= 180.0 / (M_PI * gs.passes);
    }
  }
  return m;
}

std::string step_record_to_json(const StepRecord& r) {
  nlohmann::json j;
  j["t"] = r.t;
  j["p"] = {r.p.x(), r.p.y(), r.p.z()};
  j["q"] = {r.q.w(), r.q.x(), r.q.y(), r.q.z()};
  j["v"] = {r.v.x(), r.v.y(), r.v.z()};
  j["omega"] = {r.omega.x(), r.omega.y(), r.omega.z()};
  j["cmd"] = {r.cmd[0], r.cmd[1], r.cmd[2], r.cmd[3]};
  j["reward"] = r.reward;
  j["gate"] = r.gate;
  return j.dump();
}

StepRecord step_record_from_json(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  StepRecord r;
  r.t = j.at("t").get<double>();
  const auto p = j.at("p");
  r.p = Vec3(p[0], p[1], p[2]);
  const auto q = j.at("q");
  r.q = Quat(q[0], q[1], q[2], q[3]);
  const auto v = j.at("v");
  r.v = Vec3(v[0], v[1], v[2]);
  const auto w = j.at("omega");
  r.omega = Vec3(w[0], w[1], w[2]);
  const auto c = j.at("cmd");
  r.cmd = Vec4(c[0], c[1], c[2], c[3]);
  r.reward = j.at("reward").get<double>();
  r.gate = j.at("gate").get<int>();
  return r;
}

EpisodeLog load_episode_jsonl(std::istream& in) {
  EpisodeLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    log.push_back(step_record_from_json(line));
  }
  return log;
}

void export_trajectory(const EpisodeLog& log, std::ostream& out) {
  out << "t,px,py,pz,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,"
         "cmd_thrust,cmd_wx,cmd_wy,cmd_wz,reward,gate\n";
  for (const auto& r : log) {
    out << fmt(r.t) << ',' << fmt(r.p.x()) << ',' << fmt(r.p.y()) << ','
        << fmt(r.p.z()) << ',' << fmt(r.q.w()) << ',' << fmt(r.q.x()) << ','
        << fmt(r.q.y()) << ',' << fmt(r.q.z()) << ',' << fmt(r.v.x()) << ','
        << fmt(r.v.y()) << ',' << fmt(r.v.z()) << ',' << fmt(r.omega.x())
        << ',' << fmt(r.omega.y()) << ',' << fmt(r.omega.z()) << ','
        << fmt(r.cmd[0]) << ',' << fmt(r.cmd[1]) << ',' << fmt(r.cmd[2])
        << ',' << fmt(r.cmd[3]) << ',' << fmt(r.reward) << ',' << r.gate
        << '\n';
  }
  if (!out) throw std::runtime_error("trajectory export failed");
}

EpisodeLog parse_trajectory_csv(std::istream& in) {
  EpisodeLog log;
  std::string line;
  if (!std::getline(in, line)) return log;  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    if (vals.size() != 20) throw std::runtime_error("bad trajectory row");
    StepRecord r;
    r.t = vals[0];
    r.p = Vec3(vals[1], vals[2], vals[3]);
    r.q = Quat(vals[4], vals[5], vals[6], vals[7]);
    r.v = Vec3(vals[8], vals[9], vals[10]);
    r.omega = Vec3(vals[11], vals[12], vals[13]);
    r.cmd = Vec4(vals[14], vals[15], vals[16], vals[17]);
    r.reward = vals[18];
    r.gate = int(vals[19]);
    log.push_back(r);
  }
  return log;
}

EvalMetrics run_eval(const PolicyParams& params, const AppConfig& cfg,
                     const Track& track, int n_episodes, double gate_speed,
                     std::uint64_t seed, const EvalSinks& sinks) {
  AppConfig eval_cfg = cfg;
  eval_cfg.track = track.with_gate_speed(gate_speed);
  eval_cfg.episode.gate_speed_range.reset();
  eval_cfg.reward_mode = RewardMode::kSparse;

  Environment env(eval_cfg, seed);
  std::vector<EpisodeInfo> episodes;
  episodes.reserve(n_episodes);
  for (int ep = 0; ep < n_episodes; ++ep) {
    Observation obs = env.reset();
    while (!env.done()) {
      const auto [mean, stddev] = forward_actor(params, obs);
      const StepResult res = env.step(mean);
      if (ep == 0 && sinks.first_episode != nullptr) {
        StepRecord r;
        r.t = env.time();
        r.p = env.state().p;
        r.q = env.state().q;
        r.v = env.state().v;
        r.omega = env.state().omega;
        r.cmd = env.last_command().as_vec();
        r.reward = res.reward.total;
        r.gate = int(env.cursor().index);
        sinks.first_episode->push_back(r);
      }
      obs = res.obs;
    }
    episodes.push_back(env.info());
    if (sinks.episode_jsonl != nullptr) {
      (*sinks.episode_jsonl) << env.info().to_json() << '\n';
    }
  }
  if (sinks.episodes != nullptr) *sinks.episodes = episodes;
  return metrics_from_episodes(episodes, eval_cfg.track.waypoints.size());
}

RunMatrix RunMatrix::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunMatrix m;
  m.budget = j.at("budget").get<long>();
  if (j.contains("eval_episodes")) {
    m.eval_episodes = j.at("eval_episodes").get<int>();
  }
  for (const auto& c : j.at("cells")) {
    AblationCell cell;
    cell.mode = train_mode_from_string(c.at("mode").get<std::string>());
    cell.track_id = c.at("track").get<std::string>();
    cell.seed = c.at("seed").get<std::uint64_t>();
    if (c.contains("gate_speed")) {
      cell.gate_speed = c.at("gate_speed").get<double>();
    }
    m.cells.push_back(cell);
  }
  if (m.cells.empty()) throw std::runtime_error("run matrix has no cells");
  for (std::size_t i = 0; i < m.cells.size(); ++i) {
    for (std::size_t k = i + 1; k < m.cells.size(); ++k) {
      if (m.cells[i].seed == m.cells[k].seed &&
          m.cells[i].mode == m.cells[k].mode &&
          m.cells[i].track_id == m.cells[k].track_id) {
        throw std::runtime_error("run matrix cells must be distinct");
      }
    }
  }
  return m;
}

RunMatrix RunMatrix::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run matrix: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

double curve_auc(const std::vector<TrainLogRow>& log) {
  if (log.size() < 2) return log.empty() ? 0.0 : log.front().eval_reward;
  double auc = 0.0;
  for (std::size_t i = 1; i < log.size(); ++i) {
    auc += 0.5 * (log[i].eval_reward + log[i - 1].eval_reward) *
           double(log[i].iteration - log[i - 1].iteration);
  }
  return auc;
}

AblationReport run_ablation(const RunMatrix& matrix, const AppConfig& base,
                            int jobs) {
  AblationReport report;
  report.budget = matrix.budget;
  report.cells.resize(matrix.cells.size());

  const auto run_cell = [&](std::size_t i) {
    CellResult result;
    result.cell = matrix.cells[i];
    AppConfig cfg = base;
    cfg.track = load_track(result.cell.track_id);
    const long batch = long(cfg.ppo.num_envs) * cfg.ppo.rollout_steps;
    cfg.ppo.iterations = int(matrix.budget / batch);
    try {
      TrainResult trained = train(cfg, result.cell.mode, result.cell.seed);
      result.log = trained.log;
      result.params = trained.params;
      result.failed = trained.aborted;
      if (!result.failed) {
        result.final_metrics =
            run_eval(trained.params, cfg, cfg.track, matrix.eval_episodes,
                     result.cell.gate_speed, result.cell.seed ^ 0x5eedULL);
      }
    } catch (const std::exception&) {
      result.failed = true;
    }
    return result;
  };

  const int workers = std::max(1, jobs);
  std::size_t next = 0;
  while (next < matrix.cells.size()) {
    std::vector<std::pair<std::size_t, std::future<CellResult>>> running;
    for (int w = 0; w < workers && next < matrix.cells.size(); ++w, ++next) {
      running.emplace_back(
          next, std::async(std::launch::async, run_cell, next));
    }
    for (auto& [idx, fut] : running) {
      report.cells[idx] = fut.get();
    }
  }

  for (const auto& cell : report.cells) {
    if (!cell.failed) report.total_episodes += cell.final_metrics.episodes;
  }
  return report;
}

std::string AblationReport::to_json() const {
  nlohmann::json j;
  j["budget"] = budget;
  j["total_episodes"] = total_episodes;
  auto& cells_json = j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json cj;
    cj["mode"] = to_string(c.cell.mode);
    cj["track"] = c.cell.track_id;
    cj["seed"] = c.cell.seed;
    cj["gate_speed"] = c.cell.gate_speed;
    cj["failed"] = c.failed;
    cj["auc"] = curve_auc(c.log);
    if (!c.failed) {
      cj["final"] = {{"episodes", c.final_metrics.episodes},
                     {"success_rate", c.final_metrics.success_rate},
                     {"flight_time", c.final_metrics.flight_time},
                     {"aer_p", c.final_metrics.aer_p},
                     {"aer_a_deg", c.final_metrics.aer_a_deg}};
    }
    auto& curve = cj["curve"] = nlohmann::json::array();
    for (const auto& row : c.log) {
      curve.push_back({{"iteration", row.iteration},
                       {"env_steps", row.env_steps},
                       {"eval_reward", row.eval_reward},
                       {"success_rate", row.eval_success}});
    }
    cells_json.push_back(cj);
  }
  return j.dump(2);
}

}  // namespace aerobat
