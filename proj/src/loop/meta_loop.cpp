#include "latentmeta/loop/meta_loop.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "latentmeta/core/errors.hpp"
#include "latentmeta/envs/environment.hpp"
#include "latentmeta/envs/veltrack.hpp"

namespace latentmeta::loop {

namespace fs = std::filesystem;

namespace {

void require(bool ok, const std::string& key, const std::string& range) {
  if (!ok) throw ConfigError("config key '" + key + "' must be " + range);
}

void require_layers(const std::vector<std::int64_t>& v, const std::string& key, bool allow_empty) {
  require(allow_empty || !v.empty(), key, "a non-empty list of positive widths");
  for (auto w : v) require(w > 0, key, "a list of positive widths");
}

agent::BeliefInput parse_belief_input(const std::string& s) {
  if (s == "mean_logvar") return agent::BeliefInput::kMeanLogVar;
  if (s == "sample") return agent::BeliefInput::kSample;
  throw ConfigError("config key 'belief_input' must be one of mean_logvar, sample");
}

agent::ActionMode parse_action_mode(const std::string& s) {
  if (s == "sample") return agent::ActionMode::kSample;
  if (s == "mean") return agent::ActionMode::kMean;
  throw ConfigError("config key 'eval_action_mode' must be one of sample, mean");
}

constexpr std::uint64_t kCollectStream = 0xC0;
constexpr std::uint64_t kEvalStream = 0xE0;

}  // namespace

void validate(const TrainConfig& c) {
  envs::parse_family(c.family);
  require(c.env.image_size >= 8 && c.env.image_size <= 256, "image_size", "in [8, 256]");
  require(c.env.horizon == 0 || c.env.horizon >= 2, "horizon", "0 (family default) or >= 2");
  require(c.env.veltrack_targets >= 1, "veltrack_targets", ">= 1");
  require(c.env.lgss_state_dim >= 2, "lgss_state_dim", ">= 2");
  require(c.env.lgss_action_dim >= 1, "lgss_action_dim", ">= 1");
  require(c.num_train_tasks >= 1, "num_train_tasks", ">= 1");
  require(c.num_eval_tasks >= 1, "num_eval_tasks", ">= 1");
  require(c.train_task_seed != c.eval_task_seed, "eval_task_seed", "different from train_task_seed");
  require(c.episodes_per_trial == 1 || c.episodes_per_trial == 2, "episodes_per_trial", "1 or 2");
  require(c.warmstart_trajectories >= 0, "warmstart_trajectories", ">= 0");
  require(c.warmstart_model_steps >= 0, "warmstart_model_steps", ">= 0");
  require(c.collect_tasks_per_iter >= 1, "collect_tasks_per_iter", ">= 1");
  require(c.rollouts_per_task >= 1, "rollouts_per_task", ">= 1");
  require(c.train_steps_per_epoch >= 0, "train_steps_per_epoch", ">= 0");
  require(c.agent_updates_per_step >= 1, "agent_updates_per_step", ">= 1");
  require(c.tasks_per_update >= 1, "tasks_per_update", ">= 1");
  require(c.model_batch_size >= 1, "model_batch_size", ">= 1");
  require(c.actor_batch_size >= 1, "actor_batch_size", ">= 1");
  require(c.critic_batch_size >= 1, "critic_batch_size", ">= 1");
  require(c.actor_batch_size <= c.critic_batch_size, "actor_batch_size", "<= critic_batch_size");
  require(c.replay_capacity >= 1, "replay_capacity", ">= 1");
  require(c.env_step_budget >= 0, "env_step_budget", ">= 0");
  require(c.eval_every >= 1, "eval_every", ">= 1");
  require(c.eval_repetitions >= 1, "eval_repetitions", ">= 1");
  require(c.checkpoint_every >= 1, "checkpoint_every", ">= 1");
  for (auto [v, k] : {std::pair{c.model_lr, "model_lr"}, {c.actor_lr, "actor_lr"}, {c.critic_lr, "critic_lr"},
                      {c.alpha_lr, "alpha_lr"}})
    require(v > 0.0 && std::isfinite(v), k, "a positive finite number");
  require(c.gamma >= 0.0 && c.gamma < 1.0, "gamma", "in [0, 1)");
  require(c.tau > 0.0 && c.tau <= 1.0, "tau", "in (0, 1]");
  require(c.initial_alpha > 0.0, "initial_alpha", "> 0");
  require(c.divergence_factor > 1.0, "divergence_factor", "> 1");
  require(c.precision == "float32" || c.precision == "float64", "precision", "one of float32, float64");
  require(c.latent_dim >= 1, "latent_dim", ">= 1");
  require_layers(c.model_hidden, "model_hidden", false);
  require_layers(c.conv_filters, "conv_filters", false);
  require(c.vector_encoder_hidden >= 0, "vector_encoder_hidden", ">= 0");
  require_layers(c.agent_hidden, "agent_hidden", false);
  require(c.decoder_var_floor > 0.0, "decoder_var_floor", "> 0");
  require(c.image_decoder_var >= 0.0 && std::isfinite(c.image_decoder_var), "image_decoder_var", ">= 0 (0 learns it)");
  require(c.mc_samples >= 1, "mc_samples", ">= 1");
  parse_belief_input(c.belief_input);
  parse_action_mode(c.eval_action_mode);
  require(c.stage2_fresh_fraction >= 0.0 && c.stage2_fresh_fraction <= 1.0, "stage2_fresh_fraction", "in [0, 1]");
  require(c.stage2_init == "fresh" || c.stage2_init == "model" || c.stage2_init == "all", "stage2_init",
          "one of fresh, model, all");
  require(c.stage2_env_step_budget >= 0, "stage2_env_step_budget", ">= 0");
  require(c.stage2_pretrain_steps >= 0, "stage2_pretrain_steps", ">= 0");
  const auto family = envs::parse_family(c.family);
  require(c.replay_capacity >= static_cast<std::int64_t>(c.episodes_per_trial) *
                                   envs::resolved_horizon(family, c.env),
          "replay_capacity", ">= one trial of timesteps");
}

model::ModelConfig model_config(const TrainConfig& c) {
  const auto family = envs::parse_family(c.family);
  model::ModelConfig m;
  m.obs_shape = envs::family_obs_shape(family, c.env);
  m.obs_kind = m.obs_shape.size() == 3 ? model::ObsKind::kPixels : model::ObsKind::kVector;
  m.action_dim = envs::family_action_dim(family, c.env);
  m.latent_dim = c.latent_dim;
  m.hidden = c.model_hidden;
  m.conv_filters = c.conv_filters;
  m.vector_encoder_hidden = c.vector_encoder_hidden;
  m.decoder_var_floor = c.decoder_var_floor;
  m.image_decoder_var = c.image_decoder_var;
  m.reward_evidence = c.reward_evidence;
  m.mc_samples = c.mc_samples;
  return m;
}

agent::SacConfig sac_config(const TrainConfig& c) {
  agent::SacConfig s;
  s.action_dim = envs::family_action_dim(envs::parse_family(c.family), c.env);
  s.feature_dim = agent::belief_feature_dim(c.latent_dim, parse_belief_input(c.belief_input));
  s.hidden = c.agent_hidden;
  s.gamma = c.gamma;
  s.tau = c.tau;
  s.actor_lr = c.actor_lr;
  s.critic_lr = c.critic_lr;
  s.alpha_lr = c.alpha_lr;
  s.initial_alpha = c.initial_alpha;
  return s;
}

torch::Dtype config_dtype(const TrainConfig& c) { return c.precision == "float64" ? torch::kFloat64 : torch::kFloat32; }

int trial_length(const TrainConfig& c) {
  return c.episodes_per_trial * envs::resolved_horizon(envs::parse_family(c.family), c.env);
}

MetaTrainer::MetaTrainer(TrainConfig cfg, Stage stage)
    : cfg_(std::move(cfg)), stage_(stage), rng_(0), gen_(make_generator(0)) {
  validate(cfg_);
  family_ = envs::parse_family(cfg_.family);
  const auto s = static_cast<std::uint64_t>(stage_);
  train_tasks_ = envs::sample_tasks(family_, cfg_.num_train_tasks, cfg_.train_task_seed, cfg_.env);
  eval_tasks_ = envs::sample_tasks(family_, cfg_.num_eval_tasks, cfg_.eval_task_seed, cfg_.env);
  torch::manual_seed(mix_seed(cfg_.seed, 10 + s));
  const auto dtype = config_dtype(cfg_);
  model_ = model::LatentModel(model_config(cfg_));
  model_->to(dtype);
  model_opt_ = std::make_unique<torch::optim::Adam>(model_->parameters(), torch::optim::AdamOptions(cfg_.model_lr));
  agent_ = std::make_unique<agent::SacAgent>(sac_config(cfg_));
  if (dtype != torch::kFloat32) agent_->to(dtype);
  buffers_ = ReplayBufferSet(cfg_.num_train_tasks, cfg_.replay_capacity);
  prior_ = ReplayBufferSet(cfg_.num_train_tasks, cfg_.replay_capacity);
  rng_ = Rng(mix_seed(cfg_.seed, 20 + s));
  gen_ = make_generator(mix_seed(cfg_.seed, 30 + s));
}

std::int64_t MetaTrainer::step_budget() const {
  if (stage_ == Stage::kSparse && cfg_.stage2_env_step_budget > 0) return cfg_.stage2_env_step_budget;
  return cfg_.env_step_budget;
}

RewardChannel MetaTrainer::evidence_channel() const {
  return stage_ == Stage::kSparse ? RewardChannel::kSparse : RewardChannel::kShaped;
}

CollectOptions MetaTrainer::collect_options(bool training) const {
  CollectOptions o;
  o.episodes = cfg_.episodes_per_trial;
  o.env = cfg_.env;
  o.phase = training ? envs::RewardPhase::kTrain : envs::RewardPhase::kTest;
  o.evidence = evidence_channel();
  o.action_mode = training ? agent::ActionMode::kSample : parse_action_mode(cfg_.eval_action_mode);
  o.belief_input = parse_belief_input(cfg_.belief_input);
  o.diagnostics = !training;
  return o;
}

std::vector<int> MetaTrainer::sample_task_ids() {
  std::vector<int> avail = buffers_.nonempty_tasks();
  for (int t : prior_.nonempty_tasks())
    if (std::find(avail.begin(), avail.end(), t) == avail.end()) avail.push_back(t);
  std::sort(avail.begin(), avail.end());
  if (avail.empty()) throw UsageError("no replay data to train on");
  const auto k = static_cast<std::size_t>(cfg_.tasks_per_update);
  std::vector<int> out;
  if (avail.size() >= k) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + static_cast<std::size_t>(rng_.index(static_cast<std::int64_t>(avail.size() - i)));
      std::swap(avail[i], avail[j]);
      out.push_back(avail[i]);
    }
  } else {
    for (std::size_t i = 0; i < k; ++i)
      out.push_back(avail[static_cast<std::size_t>(rng_.index(static_cast<std::int64_t>(avail.size())))]);
  }
  return out;
}

std::vector<const Trajectory*> MetaTrainer::sample_sequences(const std::vector<int>& tasks, int per_task) {
  std::vector<const Trajectory*> out;
  for (int id : tasks) {
    const auto& fresh = buffers_.at(id);
    const auto& old = prior_.at(id);
    for (int j = 0; j < per_task; ++j) {
      const double u = rng_.uniform();
      const bool use_fresh = !fresh.empty() && (old.empty() || u < cfg_.stage2_fresh_fraction);
      out.push_back(&(use_fresh ? fresh : old).sample(rng_));
    }
  }
  return out;
}

void MetaTrainer::check_divergence(double loss) {
  if (!have_initial_loss_) {
    initial_loss_ = loss;
    have_initial_loss_ = true;
    return;
  }
  if (!std::isfinite(loss)) throw NumericFault("model loss is not finite");
  if (loss > cfg_.divergence_factor * std::abs(initial_loss_)) {
    throw DivergenceAbort("model loss " + std::to_string(loss) + " exceeds " + std::to_string(cfg_.divergence_factor) +
                          "x its initial value " + std::to_string(initial_loss_));
  }
}

EpochStats MetaTrainer::train_steps(int steps, bool model_only) {
  EpochStats st;
  if (steps <= 0) return st;
  const auto dtype = config_dtype(cfg_);
  const auto opts = torch::TensorOptions().dtype(dtype);
  const int n = trial_length(cfg_);
  const int per_task = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(cfg_.model_batch_size) / (cfg_.tasks_per_update * n))));
  const auto belief_input = parse_belief_input(cfg_.belief_input);
  auto features_of = [&](const model::ElboTerms& terms) {
    if (belief_input == agent::BeliefInput::kSample) return terms.samples.detach();
    return torch::cat({terms.post_mean, terms.post_log_var}, -1).detach();
  };
  for (int s = 0; s < steps; ++s) {
    auto trajs = sample_sequences(sample_task_ids(), per_task);
    auto batch = make_sequence_batch(trajs, evidence_channel(), RewardChannel::kShaped).to(opts);
    auto terms = model_->elbo_loss(batch, gen_);
    model_opt_->zero_grad();
    terms.loss.backward();
    model_opt_->step();
    ++model_updates_;
    const double denom = static_cast<double>(batch.batch() * batch.length());
    const double loss = terms.loss.item<double>() / denom;
    check_divergence(loss);
    st.model_loss += loss;
    st.obs_log_lik += terms.obs_log_lik.item<double>() / denom;
    st.reward_log_lik += terms.reward_log_lik.item<double>() / denom;
    st.kl += (terms.kl_initial + terms.kl_step).item<double>() / denom;
    ++st.steps;
    if (model_only) continue;

    auto features = features_of(terms);
    if (!cfg_.shared_batch) {
      trajs = sample_sequences(sample_task_ids(), per_task);
      auto b2 = make_sequence_batch(trajs, evidence_channel(), RewardChannel::kShaped).to(opts);
      torch::NoGradGuard ng;
      features = features_of(model_->elbo_loss(b2, gen_));
    }
    auto all = make_transitions(features, trajs, RewardChannel::kShaped, cfg_.terminal_at_horizon);
    const auto m = all.size();
    const double u = cfg_.agent_updates_per_step;
    for (int k = 0; k < cfg_.agent_updates_per_step; ++k) {
      auto idx =
          torch::randperm(m, gen_, torch::kInt64).slice(0, 0, std::min<std::int64_t>(m, cfg_.critic_batch_size));
      auto losses = agent_->update(all.index(idx), gen_, cfg_.actor_batch_size);
      ++agent_updates_;
      st.critic_loss += losses.critic / u;
      st.actor_loss += losses.actor / u;
      st.alpha += losses.alpha / u;
      st.entropy += losses.entropy / u;
    }
  }
  const double k = st.steps;
  st.model_loss /= k;
  st.obs_log_lik /= k;
  st.reward_log_lik /= k;
  st.kl /= k;
  st.critic_loss /= k;
  st.actor_loss /= k;
  st.alpha /= k;
  st.entropy /= k;
  return st;
}

EpochStats MetaTrainer::warmstart() {
  EpochStats st;
  if (stage_ == Stage::kShaped) {
    auto opts = collect_options(true);
    opts.random_policy = true;
    for (int i = 0; i < cfg_.warmstart_trajectories; ++i) {
      const auto& task = train_tasks_[static_cast<std::size_t>(i % cfg_.num_train_tasks)];
      const auto seed = mix_seed(mix_seed(cfg_.seed, kCollectStream + 1), static_cast<std::uint64_t>(trials_collected_++));
      auto trial = collect_trial(task, *model_, nullptr, opts, seed);
      env_steps_ += trial.trajectory.length();
      buffers_.add(std::move(trial.trajectory));
    }
    if (cfg_.warmstart_trajectories > 0) st = train_steps(cfg_.warmstart_model_steps, true);
  } else {
    st = train_steps(cfg_.stage2_pretrain_steps, false);
  }
  warmstarted_ = true;
  return st;
}

void MetaTrainer::collect() {
  const auto opts = collect_options(true);
  const int n = cfg_.num_train_tasks;
  const int k = cfg_.collect_tasks_per_iter;
  std::vector<int> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<int> chosen;
  for (int i = 0; i < k; ++i) {
    if (k <= n) {
      const auto j = i + rng_.index(n - i);
      std::swap(ids[static_cast<std::size_t>(i)], ids[static_cast<std::size_t>(j)]);
      chosen.push_back(ids[static_cast<std::size_t>(i)]);
    } else {
      chosen.push_back(static_cast<int>(rng_.index(n)));
    }
  }
  const auto stream = mix_seed(cfg_.seed, kCollectStream + static_cast<std::uint64_t>(stage_) * 16);
  for (int id : chosen) {
    for (int r = 0; r < cfg_.rollouts_per_task; ++r) {
      const auto seed = mix_seed(stream, static_cast<std::uint64_t>(trials_collected_++));
      auto trial = collect_trial(train_tasks_[static_cast<std::size_t>(id)], *model_, agent_.get(), opts, seed);
      env_steps_ += trial.trajectory.length();
      buffers_.add(std::move(trial.trajectory));
    }
  }
}

EpochStats MetaTrainer::train_epoch() { return train_steps(cfg_.train_steps_per_epoch, false); }

std::vector<TrialResult> MetaTrainer::meta_test(const std::vector<envs::Task>& tasks, int repetitions,
                                                std::vector<Trajectory>* trajectories) {
  const auto opts = collect_options(false);
  const auto stream = mix_seed(cfg_.seed, kEvalStream + static_cast<std::uint64_t>(stage_));
  std::vector<TrialResult> out;
  for (const auto& task : tasks) {
    for (int r = 0; r < repetitions; ++r) {
      const auto seed = mix_seed(mix_seed(stream, task.seed), static_cast<std::uint64_t>(r));
      auto trial = collect_trial(task, *model_, agent_.get(), opts, seed);
      out.push_back(std::move(trial.result));
      if (trajectories) trajectories->push_back(std::move(trial.trajectory));
    }
  }
  return out;
}

EvalSummary MetaTrainer::evaluate() { return summarize(meta_test(eval_tasks_, cfg_.eval_repetitions)); }

MetricsRow MetaTrainer::warmstart_row(const EpochStats& stats) {
  MetricsRow row;
  row.stage = static_cast<int>(stage_);
  row.iteration = iteration_;
  row.env_steps = env_steps_;
  row.model_updates = model_updates_;
  row.agent_updates = agent_updates_;
  row.train = stats;
  row.eval = evaluate();
  return row;
}

MetricsRow MetaTrainer::iterate() {
  ++iteration_;
  collect();
  MetricsRow row;
  row.train = train_epoch();
  row.stage = static_cast<int>(stage_);
  row.iteration = iteration_;
  row.env_steps = env_steps_;
  row.model_updates = model_updates_;
  row.agent_updates = agent_updates_;
  if (iteration_ % cfg_.eval_every == 0 || finished()) row.eval = evaluate();
  return row;
}

void MetaTrainer::seed_from(MetaTrainer& shaped, const fs::path& prior_replay) {
  if (shaped.train_tasks_ != train_tasks_) throw ConfigError("sparse stage must reuse the shaped run's training tasks");
  for (int i = 0; i < shaped.buffers_.num_tasks(); ++i) {
    for (const auto& t : shaped.buffers_.at(i).trajectories()) {
      if (!t.shaped.defined() || t.shaped.numel() != t.length() || !torch::isfinite(t.shaped).all().item<bool>()) {
        throw ConfigError("stage-1 replay is missing the shaped reward channel");
      }
      prior_.add(t);
    }
  }
  prior_path_ = prior_replay;
  if (cfg_.stage2_init == "model" || cfg_.stage2_init == "all") model::copy_state(*model_, *shaped.model_);
  if (cfg_.stage2_init == "all") model::copy_state(*agent_->networks(), *shaped.agent_->networks());
}

void MetaTrainer::save(const fs::path& dir, bool with_replay) const {
  fs::create_directories(dir);
  torch::save(model_, (dir / "model.pt").string());
  torch::save(*model_opt_, (dir / "model_opt.pt").string());
  torch::save(agent_->networks(), (dir / "agent.pt").string());
  torch::save(agent_->actor_optimizer(), (dir / "actor_opt.pt").string());
  torch::save(agent_->critic_optimizer(), (dir / "critic_opt.pt").string());
  torch::save(agent_->alpha_optimizer(), (dir / "alpha_opt.pt").string());
  if (with_replay) buffers_.save(dir / "replay.pt");
  {
    torch::serialize::OutputArchive ar;
    ar.write("generator", gen_.get_state());
    ar.save_to((dir / "generator.pt").string());
  }
  nlohmann::json s;
  s["stage"] = static_cast<int>(stage_);
  s["iteration"] = iteration_;
  s["env_steps"] = env_steps_;
  s["model_updates"] = model_updates_;
  s["agent_updates"] = agent_updates_;
  s["trials_collected"] = trials_collected_;
  s["initial_loss"] = initial_loss_;
  s["have_initial_loss"] = have_initial_loss_;
  s["warmstarted"] = warmstarted_;
  s["rng"] = rng_.state();
  s["prior_replay"] = prior_path_.string();
  s["has_replay"] = with_replay;
  std::ofstream(dir / "state.json") << s.dump(2) << '\n';
}

void MetaTrainer::load(const fs::path& dir) {
  std::ifstream in(dir / "state.json");
  if (!in) throw ConfigError("checkpoint " + dir.string() + " has no state.json");
  const auto s = nlohmann::json::parse(in);
  if (s.at("stage").get<int>() != static_cast<int>(stage_)) throw ConfigError("checkpoint belongs to another stage");
  torch::load(model_, (dir / "model.pt").string());
  torch::load(*model_opt_, (dir / "model_opt.pt").string());
  auto nets = agent_->networks();
  torch::load(nets, (dir / "agent.pt").string());
  torch::load(agent_->actor_optimizer(), (dir / "actor_opt.pt").string());
  torch::load(agent_->critic_optimizer(), (dir / "critic_opt.pt").string());
  torch::load(agent_->alpha_optimizer(), (dir / "alpha_opt.pt").string());
  if (s.at("has_replay").get<bool>()) buffers_.load(dir / "replay.pt");
  {
    torch::serialize::InputArchive ar;
    ar.load_from((dir / "generator.pt").string());
    torch::Tensor state;
    ar.read("generator", state);
    gen_.set_state(state);
  }
  iteration_ = s.at("iteration").get<int>();
  env_steps_ = s.at("env_steps").get<std::int64_t>();
  model_updates_ = s.at("model_updates").get<std::int64_t>();
  agent_updates_ = s.at("agent_updates").get<std::int64_t>();
  trials_collected_ = s.at("trials_collected").get<std::int64_t>();
  initial_loss_ = s.at("initial_loss").get<double>();
  have_initial_loss_ = s.at("have_initial_loss").get<bool>();
  warmstarted_ = s.at("warmstarted").get<bool>();
  rng_.set_state(s.at("rng").get<std::string>());
  prior_path_ = s.at("prior_replay").get<std::string>();
  if (!prior_path_.empty()) {
    ReplayBufferSet prior;
    prior.load(prior_path_);
    prior_ = std::move(prior);
  }
}

std::vector<TrackingResult> nonstationary_eval(MetaTrainer& trainer, const std::vector<envs::Task>& tasks,
                                               int repetitions) {
  namespace vt = envs::veltrack;
  auto opts = trainer.collect_options(false);
  opts.episodes = 1;
  const auto& cfg = trainer.config();
  const auto stream = mix_seed(cfg.seed, kEvalStream + 8);
  std::vector<TrackingResult> out;
  for (const auto& task : tasks) {
    if (task.family != envs::Family::kVelTrack) throw UsageError("nonstationary_eval needs veltrack tasks");
    for (int r = 0; r < repetitions; ++r) {
      const auto seed = mix_seed(mix_seed(stream, task.seed), static_cast<std::uint64_t>(r));
      auto trial = collect_trial(task, *trainer.model(), &trainer.agent(), opts, seed);
      TrackingResult tr;
      tr.switch_times = vt::switch_times(task);
      tr.steps_to_track = steps_to_track(trial.trajectory, task);
      for (std::int64_t t = 0; t < trial.trajectory.length(); ++t) {
        const double v = trial.trajectory.states[t][0].item<double>();
        tr.tracking_error.push_back(std::abs(v - vt::target_at(task, static_cast<int>(t + 1))));
      }
      tr.trial = std::move(trial.result);
      tr.trajectory = std::move(trial.trajectory);
      out.push_back(std::move(tr));
    }
  }
  return out;
}

}  // namespace latentmeta::loop
