#include "latentmeta/loop/collect.hpp"

#include <chrono>
#include <cmath>
#include <numbers>

#include "latentmeta/core/errors.hpp"

namespace latentmeta::loop {

namespace {

torch::Tensor encode_obs(const envs::Observation& o) {
  auto v = torch::tensor(o.values, torch::kFloat32).reshape(o.shape);
  if (o.is_image()) return (v * 255.0).round().clamp(0, 255).to(torch::kUInt8);
  return v;
}

torch::Tensor decode_obs(const torch::Tensor& stored) {
  if (stored.scalar_type() == torch::kUInt8) return stored.to(torch::kFloat32) / 255.0;
  return stored;
}

}  // namespace

double belief_entropy(const model::BeliefState& b) {
  const double c = 0.5 * (1.0 + std::log(2.0 * std::numbers::pi));
  return (0.5 * b.log_var + c).sum().item<double>() / static_cast<double>(b.mean.size(0));
}

CollectedTrial collect_trial(const envs::Task& task, model::LatentModelImpl& model, agent::SacAgent* agent,
                             const CollectOptions& options, std::uint64_t seed) {
  if (options.episodes < 1) throw UsageError("a trial needs at least one episode");
  if (!agent && !options.random_policy) throw UsageError("collect_trial needs an agent unless random_policy is set");
  const auto start = std::chrono::steady_clock::now();
  torch::NoGradGuard ng;

  auto env = envs::make_environment(task, options.env);
  env->set_phase(options.phase);
  const int T = env->horizon();
  const int d = env->action_dim();
  const int n = options.episodes * T;
  const auto dtype = model::module_dtype(model);

  auto gen = make_generator(mix_seed(seed, 1));
  auto diag_gen = make_generator(mix_seed(seed, 2));
  Rng rng(mix_seed(seed, 3));

  std::vector<torch::Tensor> obs;
  auto actions = torch::zeros({n, d}, torch::kFloat32);
  auto shaped = torch::zeros({n}, torch::kFloat32);
  auto sparse = torch::zeros({n}, torch::kFloat32);
  std::vector<torch::Tensor> states;

  TrialResult res;
  res.task_id = task.id;
  res.episodes = options.episodes;
  res.horizon = T;

  model::BeliefState belief;
  auto prev = torch::zeros({1, d + 1}, dtype);
  bool have_belief = false;
  int row = 0;
  for (int ep = 0; ep < options.episodes; ++ep) {
    auto o = env->reset(mix_seed(seed, 100 + static_cast<std::uint64_t>(ep)));
    double r_shaped = env->initial_reward();
    double r_sparse = 0.0;
    double r_env = r_shaped;
    double ret_shaped = 0.0, ret_sparse = 0.0;
    int first = -1;
    for (int t = 0; t < T; ++t, ++row) {
      auto stored = encode_obs(o);
      obs.push_back(stored);
      shaped[row] = r_shaped;
      sparse[row] = r_sparse;
      auto st = env->state();
      states.push_back(torch::tensor(st, torch::kFloat64));
      ret_shaped += r_shaped;
      ret_sparse += r_sparse;
      if (first < 0 && r_sparse > 0.0) first = t + 1;

      double evidence = r_env;
      if (options.phase == envs::RewardPhase::kTrain)
        evidence = options.evidence == RewardChannel::kShaped ? r_shaped : r_sparse;
      auto x = decode_obs(stored).unsqueeze(0).to(dtype);
      auto r = torch::full({1}, evidence, dtype);
      belief = have_belief ? model.infer_step(belief, x, r, prev, gen) : model.infer_initial(x, r, gen);
      have_belief = true;

      if (options.diagnostics) {
        const int k = options.diagnostic_samples;
        auto eps = torch::randn({k, belief.mean.size(1)}, diag_gen, belief.mean.options());
        auto z = belief.mean + (0.5 * belief.log_var).exp() * eps;
        auto pred = model.decode_reward(z);
        auto means = pred.mean.reshape({k});
        auto mean = means.mean();
        auto var = pred.var().reshape({k}).mean() + (means - mean).pow(2).mean();
        res.reward_pred_mean.push_back(mean.item<double>());
        res.reward_pred_var.push_back(var.item<double>());
        res.belief_entropy.push_back(belief_entropy(belief));
      }

      if (t == T - 1) continue;

      std::vector<double> a(static_cast<std::size_t>(d));
      if (options.random_policy) {
        for (auto& v : a) v = rng.uniform(-1.0, 1.0);
      } else {
        auto feat = agent::belief_feature(belief, options.belief_input).to(model::module_dtype(*agent->networks()));
        auto act = agent->act(feat, options.action_mode, gen).to(torch::kFloat64);
        for (int j = 0; j < d; ++j) a[static_cast<std::size_t>(j)] = act[0][j].item<double>();
      }
      for (int j = 0; j < d; ++j) actions[row][j] = a[static_cast<std::size_t>(j)];
      auto step = env->step(a);
      o = step.obs;
      r_shaped = step.shaped_reward;
      r_sparse = step.sparse_reward;
      r_env = step.reward;
      prev = torch::zeros({1, d + 1}, dtype);
      for (int j = 0; j < d; ++j) prev[0][j] = static_cast<float>(a[static_cast<std::size_t>(j)]);
    }
    res.shaped_return.push_back(ret_shaped);
    res.sparse_return.push_back(ret_sparse);
    res.first_success.push_back(first);
    prev = torch::zeros({1, d + 1}, dtype);
    prev[0][d] = 1.0;
  }

  CollectedTrial out;
  out.trajectory.task_id = task.id;
  out.trajectory.episodes = options.episodes;
  out.trajectory.horizon = T;
  out.trajectory.obs = torch::stack(obs);
  out.trajectory.actions = actions;
  out.trajectory.shaped = shaped;
  out.trajectory.sparse = sparse;
  out.trajectory.states = torch::stack(states);
  res.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.result = std::move(res);
  return out;
}

}  // namespace latentmeta::loop
