#include "latentmeta/loop/trajectory.hpp"

#include <json.hpp>

#include <ostream>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::loop {

RewardChannel parse_channel(const std::string& name) {
  if (name == "shaped") return RewardChannel::kShaped;
  if (name == "sparse") return RewardChannel::kSparse;
  throw ConfigError("unknown reward channel '" + name + "' (expected shaped or sparse)");
}

std::string to_string(RewardChannel channel) { return channel == RewardChannel::kShaped ? "shaped" : "sparse"; }

torch::Tensor Trajectory::obs_float() const {
  if (obs.scalar_type() == torch::kUInt8) return obs.to(torch::kFloat32) / 255.0;
  return obs;
}

torch::Tensor Trajectory::prev_action_input() const {
  const auto n = length();
  const auto d = actions.size(1);
  auto out = torch::zeros({n, d + 1}, torch::kFloat32);
  if (n > 1) out.slice(0, 1, n).narrow(1, 0, d).copy_(actions.slice(0, 0, n - 1));
  for (std::int64_t t = horizon; t < n; t += horizon) out[t][d] = 1.0;
  return out;
}

model::SequenceBatch make_sequence_batch(const std::vector<const Trajectory*>& trajs, RewardChannel evidence,
                                         RewardChannel target) {
  if (trajs.empty()) throw UsageError("make_sequence_batch needs at least one trajectory");
  std::vector<torch::Tensor> obs, ev, tg, act;
  const auto n = trajs.front()->length();
  for (const auto* t : trajs) {
    if (t->length() != n) throw UsageError("trajectories in one batch must have equal length");
    obs.push_back(t->obs_float());
    ev.push_back(t->reward(evidence));
    tg.push_back(t->reward(target));
    act.push_back(t->prev_action_input());
  }
  return {torch::stack(obs), torch::stack(ev), torch::stack(tg), torch::stack(act)};
}

TransitionLayout transition_layout(int episodes, int horizon) {
  const int n = episodes * horizon;
  std::vector<std::int64_t> from, to, reward;
  std::vector<float> done;
  auto last = [&](int t) { return t % horizon == horizon - 1; };
  for (int t = 0; t < n; ++t) {
    if (last(t)) continue;
    from.push_back(t);
    reward.push_back(t + 1);
    if (last(t + 1)) {
      if (t + 2 < n) {
        to.push_back(t + 2);
        done.push_back(0.0f);
      } else {
        to.push_back(t + 1);
        done.push_back(1.0f);
      }
    } else {
      to.push_back(t + 1);
      done.push_back(0.0f);
    }
  }
  auto as_long = [](const std::vector<std::int64_t>& v) {
    return torch::tensor(v, torch::kInt64);
  };
  return {as_long(from), as_long(to), as_long(reward), torch::tensor(done, torch::kFloat32)};
}

agent::TransitionBatch make_transitions(const torch::Tensor& features, const std::vector<const Trajectory*>& trajs,
                                        RewardChannel reward, bool terminal) {
  if (trajs.empty()) throw UsageError("make_transitions needs trajectories");
  const auto& first = *trajs.front();
  const auto layout = transition_layout(first.episodes, first.horizon);
  const auto done = terminal ? layout.done : torch::zeros_like(layout.done);
  std::vector<torch::Tensor> f, a, r, nf, d;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& tr = *trajs[i];
    auto feat = features[static_cast<std::int64_t>(i)];
    f.push_back(feat.index_select(0, layout.from));
    nf.push_back(feat.index_select(0, layout.to));
    a.push_back(tr.actions.index_select(0, layout.from));
    r.push_back(tr.reward(reward).index_select(0, layout.reward));
    d.push_back(done);
  }
  const auto opts = features.options();
  return {torch::cat(f), torch::cat(a).to(opts), torch::cat(r).to(opts), torch::cat(nf), torch::cat(d).to(opts)};
}

void write_trajectory_log(std::ostream& os, const Trajectory& traj, RewardChannel reward, const std::string& ref) {
  const auto n = traj.length();
  const auto rewards = traj.reward(reward);
  for (std::int64_t t = 0; t < n; ++t) {
    nlohmann::json rec;
    rec["t"] = t + 1;
    rec["obs_ref"] = ref + ":" + std::to_string(t + 1);
    std::vector<double> a;
    for (std::int64_t j = 0; j < traj.actions.size(1); ++j) a.push_back(traj.actions[t][j].item<double>());
    rec["action"] = a;
    rec["reward"] = rewards[t].item<double>();
    rec["shaped_reward"] = traj.shaped[t].item<double>();
    rec["done"] = traj.episode_last(t);
    rec["task_id"] = traj.task_id;
    os << rec.dump() << '\n';
  }
}

}  // namespace latentmeta::loop
