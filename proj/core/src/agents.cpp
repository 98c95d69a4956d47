#include "featforge/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace featforge::agents {

AgentKind parse_agent_kind(std::string_view text) {
  if (text == "dqn") return AgentKind::dqn;
  if (text == "ddqn" || text == "ddqn_dueling") return AgentKind::ddqn_dueling;
  if (text == "ac" || text == "actor_critic") return AgentKind::actor_critic;
  throw std::invalid_argument("unknown agent kind: " + std::string(text));
}

std::string_view agent_kind_name(AgentKind kind) {
  switch (kind) {
    case AgentKind::dqn: return "dqn";
    case AgentKind::ddqn_dueling: return "ddqn";
    case AgentKind::actor_critic: return "ac";
  }
  return "dqn";
}

double squash(double v) { return std::copysign(std::log1p(std::abs(v)), v); }

Eigen::VectorXd state_input(const StateVector& state) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) x(static_cast<Eigen::Index>(i)) = squash(state.values[i]);
  return x;
}

Eigen::MatrixXd candidate_inputs(const StateVector& state, std::span<const StateVector> candidates) {
  if (candidates.empty()) throw std::invalid_argument("candidate_inputs: no candidates");
  const auto s = static_cast<Eigen::Index>(state.size());
  const auto c = static_cast<Eigen::Index>(candidates.front().size());
  Eigen::MatrixXd x(s + c, static_cast<Eigen::Index>(candidates.size()));
  Eigen::VectorXd head = state_input(state);
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (static_cast<Eigen::Index>(candidates[j].size()) != c)
      throw std::invalid_argument("candidate_inputs: candidate widths differ");
    const auto col = static_cast<Eigen::Index>(j);
    x.col(col).head(s) = head;
    for (Eigen::Index i = 0; i < c; ++i)
      x(s + i, col) = squash(candidates[j].values[static_cast<std::size_t>(i)]);
  }
  return x;
}

std::vector<double> score_candidates(const nn::DenseNet& net, const StateVector& state,
                                     std::span<const StateVector> candidates) {
  Eigen::MatrixXd x = candidate_inputs(state, candidates);
  if (static_cast<std::size_t>(x.rows()) != net.input_size())
    throw std::invalid_argument("score_candidates: input width does not match network");
  Eigen::MatrixXd out = nn::forward(net, x);
  return {out.data(), out.data() + out.size()};
}

std::size_t argmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax: empty scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t select_epsilon_greedy(std::span<const double> scores, double epsilon, Rng& rng) {
  if (scores.empty()) throw std::invalid_argument("select_epsilon_greedy: empty scores");
  if (rng.uniform() < epsilon) return rng.index(scores.size());
  return argmax(scores);
}

double epsilon_at(const AgentConfig& config, std::size_t step) {
  return std::max(config.epsilon_min,
                  config.epsilon_start * std::pow(config.epsilon_decay, static_cast<double>(step)));
}

void ReplayMemory::push(Transition t) {
  if (capacity_ == 0) return;
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

std::vector<const Transition*> ReplayMemory::sample(std::size_t batch, Rng& rng) const {
  std::vector<std::size_t> ids(items_.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  if (batch < ids.size()) {
    // partial Fisher-Yates
    for (std::size_t i = 0; i < batch; ++i) {
      std::size_t j = i + rng.index(ids.size() - i);
      std::swap(ids[i], ids[j]);
    }
    ids.resize(batch);
  }
  std::vector<const Transition*> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(&items_[i]);
  return out;
}

// --- vanilla ---------------------------------------------------------------------

double vanilla_td_target(const nn::DenseNet& online, const Transition& t, double gamma) {
  if (t.next_candidates.empty()) throw std::invalid_argument("transition has no next candidates");
  auto next = score_candidates(online, t.next_state, t.next_candidates);
  return t.reward + gamma * *std::max_element(next.begin(), next.end());
}

double q_update_vanilla(std::span<const Transition* const> batch, nn::DenseNet& online,
                        nn::AdamState& opt, double gamma) {
  if (batch.empty()) throw std::invalid_argument("q_update_vanilla: empty batch");
  const auto b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd targets(1, b);
  for (Eigen::Index i = 0; i < b; ++i) targets(0, i) = vanilla_td_target(online, *batch[i], gamma);

  const auto width = static_cast<Eigen::Index>(online.input_size());
  Eigen::MatrixXd x(width, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const StateVector* rep = &batch[i]->action_rep;
    x.col(i) = candidate_inputs(batch[i]->state, std::span(rep, 1)).col(0);
  }
  nn::ForwardCache cache;
  Eigen::MatrixXd q = nn::forward(online, x, &cache);
  const double loss = nn::mse(q, targets);
  auto grads = nn::backward(online, cache, nn::mse_grad(q, targets));
  nn::adam_step(online, grads, opt);
  return loss;
}

// --- double + dueling -------------------------------------------------------------

DuelingNet make_dueling_net(std::size_t state_dim, std::size_t candidate_dim,
                            std::span<const std::size_t> hidden, std::uint64_t seed) {
  std::vector<std::size_t> v_sizes{state_dim};
  v_sizes.insert(v_sizes.end(), hidden.begin(), hidden.end());
  v_sizes.push_back(1);
  std::vector<std::size_t> a_sizes{state_dim + candidate_dim};
  a_sizes.insert(a_sizes.end(), hidden.begin(), hidden.end());
  a_sizes.push_back(1);
  DuelingNet net;
  net.value = nn::make_mlp(v_sizes, nn::Activation::relu, nn::Activation::linear,
                           Rng::derive(seed, "dueling.value"));
  net.advantage = nn::make_mlp(a_sizes, nn::Activation::relu, nn::Activation::linear,
                               Rng::derive(seed, "dueling.advantage"));
  return net;
}

std::vector<double> DuelingNet::advantages(const StateVector& state,
                                           std::span<const StateVector> candidates) const {
  return score_candidates(advantage, state, candidates);
}

std::vector<double> DuelingNet::q_values(const StateVector& state,
                                         std::span<const StateVector> candidates) const {
  auto adv = advantages(state, candidates);
  const double v = nn::forward(value, state_input(state))(0);
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
  for (auto& a : adv) a = v + (a - mean);
  return adv;
}

double double_td_target(const DuelingNet& online, const DuelingNet& target, const Transition& t,
                        double gamma) {
  if (t.next_candidates.empty()) throw std::invalid_argument("transition has no next candidates");
  const std::size_t best = argmax(online.q_values(t.next_state, t.next_candidates));
  return t.reward + gamma * target.q_values(t.next_state, t.next_candidates)[best];
}

double q_update_double_dueling(std::span<const Transition* const> batch, DuelingNet& online,
                               const DuelingNet& target, DuelingOptimizer& opt, double gamma) {
  if (batch.empty()) throw std::invalid_argument("q_update_double_dueling: empty batch");
  if (!online.value.same_shape(target.value) || !online.advantage.same_shape(target.advantage))
    throw std::invalid_argument("q_update_double_dueling: online/target architecture mismatch");

  const double b = static_cast<double>(batch.size());
  auto g_value = nn::Gradients::zeros_like(online.value);
  auto g_adv = nn::Gradients::zeros_like(online.advantage);
  std::vector<double> targets;
  for (const Transition* t : batch) targets.push_back(double_td_target(online, target, *t, gamma));

  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Transition& t = *batch[i];
    if (t.candidates.empty() || t.action >= t.candidates.size())
      throw std::invalid_argument("transition action is not in its candidate set");
    nn::ForwardCache vc, ac;
    Eigen::MatrixXd v = nn::forward(online.value, Eigen::MatrixXd(state_input(t.state)), &vc);
    Eigen::MatrixXd a = nn::forward(online.advantage, candidate_inputs(t.state, t.candidates), &ac);
    const double count = static_cast<double>(a.cols());
    const double q = v(0, 0) + a(0, static_cast<Eigen::Index>(t.action)) - a.mean();
    const double err = q - targets[i];
    loss += err * err / b;
    const double dq = 2.0 * err / b;
    Eigen::MatrixXd dv(1, 1);
    dv(0, 0) = dq;
    Eigen::MatrixXd da = Eigen::MatrixXd::Constant(1, a.cols(), -dq / count);
    da(0, static_cast<Eigen::Index>(t.action)) += dq;
    g_value += nn::backward(online.value, vc, dv);
    g_adv += nn::backward(online.advantage, ac, da);
  }
  nn::adam_step(online.value, g_value, opt.value);
  nn::adam_step(online.advantage, g_adv, opt.advantage);
  return loss;
}

// --- actor-critic -------------------------------------------------------------------

std::vector<double> policy(const nn::DenseNet& actor, const StateVector& state,
                           std::span<const StateVector> candidates) {
  auto logits = score_candidates(actor, state, candidates);
  Eigen::VectorXd p = nn::softmax(Eigen::Map<const Eigen::VectorXd>(logits.data(), static_cast<Eigen::Index>(logits.size())));
  return {p.data(), p.data() + p.size()};
}

double policy_entropy(std::span<const double> probabilities) {
  double h = 0.0;
  for (double p : probabilities) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

AcSelection ac_select(const nn::DenseNet& actor, const StateVector& state,
                      std::span<const StateVector> candidates, Rng& rng) {
  AcSelection sel;
  sel.probabilities = policy(actor, state, candidates);
  const double u = rng.uniform();
  double acc = 0.0;
  sel.action = sel.probabilities.size() - 1;
  for (std::size_t i = 0; i < sel.probabilities.size(); ++i) {
    acc += sel.probabilities[i];
    if (u < acc) {
      sel.action = i;
      break;
    }
  }
  return sel;
}

AcLosses ac_update(const Transition& t, nn::DenseNet& actor, nn::DenseNet& critic,
                   nn::AdamState& actor_opt, nn::AdamState& critic_opt, double gamma, double beta) {
  if (t.candidates.empty() || t.action >= t.candidates.size())
    throw std::invalid_argument("ac_update: action is not in its candidate set");
  AcLosses out;

  nn::ForwardCache cc;
  Eigen::MatrixXd v = nn::forward(critic, Eigen::MatrixXd(state_input(t.state)), &cc);
  const double v_next = nn::forward(critic, state_input(t.next_state))(0);
  out.delta = t.reward + gamma * v_next - v(0, 0);
  out.critic = out.delta * out.delta;
  Eigen::MatrixXd dv(1, 1);
  dv(0, 0) = -2.0 * out.delta;  // TD target held fixed
  nn::adam_step(critic, nn::backward(critic, cc, dv), critic_opt);

  nn::ForwardCache ac;
  Eigen::MatrixXd logits = nn::forward(actor, candidate_inputs(t.state, t.candidates), &ac);
  Eigen::VectorXd pi = nn::softmax(logits.row(0).transpose());
  const double h = policy_entropy({pi.data(), static_cast<std::size_t>(pi.size())});
  const auto a = static_cast<Eigen::Index>(t.action);
  out.actor = -(std::log(std::max(pi(a), 1e-300)) * out.delta + beta * h);

  // d objective / d logits, objective = delta * ln pi_a + beta * H
  Eigen::VectorXd d_obj = -out.delta * pi;
  d_obj(a) += out.delta;
  Eigen::VectorXd log_pi = pi.array().max(1e-300).log();
  d_obj -= beta * (pi.array() * (log_pi.array() + h)).matrix();
  Eigen::MatrixXd d_loss = -d_obj.transpose();
  nn::adam_step(actor, nn::backward(actor, ac, d_loss), actor_opt);
  return out;
}

// --- rewards ----------------------------------------------------------------------------

Rewards compute_rewards(double utility_before, double utility_after, double downstream,
                        Group1Reward mode) {
  Rewards r;
  const double delta = utility_after - utility_before;
  r.group1 = mode == Group1Reward::utility ? utility_before : delta;
  r.operation = delta;
  r.group2 = delta + downstream;
  return r;
}

// --- agents ------------------------------------------------------------------------------

Agent::Agent(AgentConfig config, std::size_t state_dim, std::size_t candidate_dim)
    : config_(std::move(config)),
      state_dim_(state_dim),
      candidate_dim_(candidate_dim),
      rng_(Rng::derive(config_.seed, "agent.policy")) {
  if (!(config_.gamma > 0.0 && config_.gamma < 1.0))
    throw std::invalid_argument("agent gamma must lie in (0, 1)");
  if (config_.batch_size == 0 || config_.memory_capacity == 0 || config_.target_sync_every == 0)
    throw std::invalid_argument("agent capacities must be positive");
}

void Agent::check_dims(const StateVector& state, std::span<const StateVector> candidates) const {
  if (candidates.empty()) throw std::invalid_argument("agent: empty candidate set");
  if (state.size() != state_dim_) throw std::invalid_argument("agent: state width mismatch");
  for (const auto& c : candidates) {
    if (c.size() != candidate_dim_) throw std::invalid_argument("agent: candidate width mismatch");
  }
}

std::size_t Agent::act(const StateVector& state, std::span<const StateVector> candidates) {
  check_dims(state, candidates);
  if (pending_ && pending_rewarded_) {
    pending_->next_state = state;
    pending_->next_candidates.assign(candidates.begin(), candidates.end());
    learn(std::move(*pending_));
  }
  pending_.reset();
  pending_rewarded_ = false;

  AcSelection sel = choose(state, candidates);
  Transition t;
  t.state = state;
  t.candidates.assign(candidates.begin(), candidates.end());
  t.action = sel.action;
  t.action_rep = candidates[sel.action];
  t.action_probs = std::move(sel.probabilities);
  pending_ = std::move(t);
  ++steps_;
  return sel.action;
}

void Agent::reward(double r) {
  if (!pending_) throw std::logic_error("Agent::reward without a pending action");
  pending_->reward = r;
  pending_rewarded_ = true;
}

namespace {

std::vector<std::size_t> scorer_sizes(std::size_t in, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

}  // namespace

DqnAgent::DqnAgent(AgentConfig config, std::size_t state_dim, std::size_t candidate_dim)
    : Agent(std::move(config), state_dim, candidate_dim), memory_(config_.memory_capacity) {
  net_ = nn::make_mlp(scorer_sizes(state_dim + candidate_dim, config_.hidden), nn::Activation::relu,
                      nn::Activation::linear, Rng::derive(config_.seed, "dqn.net"));
  opt_ = nn::AdamState::for_net(net_, nn::AdamOptions{config_.learning_rate});
}

AcSelection DqnAgent::choose(const StateVector& state, std::span<const StateVector> candidates) {
  auto scores = score_candidates(net_, state, candidates);
  return {select_epsilon_greedy(scores, epsilon_at(config_, steps_), rng_), {}};
}

void DqnAgent::learn(Transition t) {
  memory_.push(std::move(t));
  if (memory_.size() < config_.batch_size) return;
  auto batch = memory_.sample(config_.batch_size, rng_);
  last_loss_ = q_update_vanilla(batch, net_, opt_, config_.gamma);
  ++updates_;
}

DoubleDuelingAgent::DoubleDuelingAgent(AgentConfig config, std::size_t state_dim,
                                       std::size_t candidate_dim)
    : Agent(std::move(config), state_dim, candidate_dim), memory_(config_.memory_capacity) {
  online_ = make_dueling_net(state_dim, candidate_dim, config_.hidden,
                             Rng::derive(config_.seed, "ddqn.net"));
  target_ = online_;
  nn::AdamOptions opt{config_.learning_rate};
  opt_.value = nn::AdamState::for_net(online_.value, opt);
  opt_.advantage = nn::AdamState::for_net(online_.advantage, opt);
}

AcSelection DoubleDuelingAgent::choose(const StateVector& state,
                                       std::span<const StateVector> candidates) {
  auto q = online_.q_values(state, candidates);
  return {select_epsilon_greedy(q, epsilon_at(config_, steps_), rng_), {}};
}

void DoubleDuelingAgent::learn(Transition t) {
  memory_.push(std::move(t));
  if (memory_.size() < config_.batch_size) return;
  auto batch = memory_.sample(config_.batch_size, rng_);
  last_loss_ = q_update_double_dueling(batch, online_, target_, opt_, config_.gamma);
  ++updates_;
  if (updates_ % config_.target_sync_every == 0) target_ = online_;
}

ActorCriticAgent::ActorCriticAgent(AgentConfig config, std::size_t state_dim,
                                   std::size_t candidate_dim)
    : Agent(std::move(config), state_dim, candidate_dim) {
  actor_ = nn::make_mlp(scorer_sizes(state_dim + candidate_dim, config_.hidden),
                        nn::Activation::relu, nn::Activation::linear,
                        Rng::derive(config_.seed, "ac.actor"));
  critic_ = nn::make_mlp(scorer_sizes(state_dim, config_.hidden), nn::Activation::relu,
                         nn::Activation::linear, Rng::derive(config_.seed, "ac.critic"));
  nn::AdamOptions opt{config_.learning_rate};
  actor_opt_ = nn::AdamState::for_net(actor_, opt);
  critic_opt_ = nn::AdamState::for_net(critic_, opt);
}

AcSelection ActorCriticAgent::choose(const StateVector& state, std::span<const StateVector> candidates) {
  return ac_select(actor_, state, candidates, rng_);
}

void ActorCriticAgent::learn(Transition t) {
  auto losses = ac_update(t, actor_, critic_, actor_opt_, critic_opt_, config_.gamma,
                          config_.entropy_beta);
  last_loss_ = losses.critic + losses.actor;
  ++updates_;
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, std::size_t state_dim,
                                  std::size_t candidate_dim) {
  switch (config.kind) {
    case AgentKind::dqn: return std::make_unique<DqnAgent>(config, state_dim, candidate_dim);
    case AgentKind::ddqn_dueling:
      return std::make_unique<DoubleDuelingAgent>(config, state_dim, candidate_dim);
    case AgentKind::actor_critic:
      return std::make_unique<ActorCriticAgent>(config, state_dim, candidate_dim);
  }
  throw std::invalid_argument("unknown agent kind");
}

}  // namespace featforge::agents
