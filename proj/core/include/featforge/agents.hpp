#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "featforge/common.hpp"
#include "featforge/nn.hpp"
#include "featforge/state_rep.hpp"

namespace featforge::agents {

enum class AgentKind { dqn, ddqn_dueling, actor_critic };
AgentKind parse_agent_kind(std::string_view text);
std::string_view agent_kind_name(AgentKind kind);

enum class Group1Reward { utility, utility_delta };

struct AgentConfig {
  AgentKind kind = AgentKind::dqn;
  double gamma = 0.9;
  double epsilon_start = 0.9;
  double epsilon_min = 0.05;
  double epsilon_decay = 0.95;
  std::size_t memory_capacity = 32;
  std::size_t batch_size = 8;
  std::size_t target_sync_every = 10;
  double entropy_beta = 0.01;
  std::vector<std::size_t> hidden = {64, 64};
  double learning_rate = 0.01;
  Group1Reward group1_reward = Group1Reward::utility;
  std::uint64_t seed = 0;
};

/// One agent step. `candidates` is the set the action was chosen from;
/// `action` indexes into it and `action_rep` is the chosen candidate.
struct Transition {
  StateVector state;
  std::vector<StateVector> candidates;
  std::size_t action = 0;
  StateVector action_rep;
  double reward = 0.0;
  StateVector next_state;
  std::vector<StateVector> next_candidates;
  std::vector<double> action_probs;  // actor-critic only
};

/// sign(v) * ln(1 + |v|): keeps raw statistics such as counts or clipped
/// extremes within a trainable range.
double squash(double v);

/// Network input batch: one column per candidate, squash(state ++ candidate).
Eigen::MatrixXd candidate_inputs(const StateVector& state, std::span<const StateVector> candidates);
Eigen::VectorXd state_input(const StateVector& state);

/// Scores every candidate with a state ++ candidate -> scalar network.
std::vector<double> score_candidates(const nn::DenseNet& net, const StateVector& state,
                                     std::span<const StateVector> candidates);

std::size_t argmax(std::span<const double> scores);
std::size_t select_epsilon_greedy(std::span<const double> scores, double epsilon, Rng& rng);
/// max(epsilon_min, epsilon_start * epsilon_decay^step)
double epsilon_at(const AgentConfig& config, std::size_t step);

class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity) : capacity_(capacity) {}
  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }
  /// Uniform sample without replacement; everything when fewer are stored.
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<Transition> items_;
};

// --- vanilla Q-learning ----------------------------------------------------

/// r + gamma * max over next candidates of the online Q.
double vanilla_td_target(const nn::DenseNet& online, const Transition& t, double gamma);

/// One Adam step on the mean squared TD error; returns the loss before the step.
double q_update_vanilla(std::span<const Transition* const> batch, nn::DenseNet& online,
                        nn::AdamState& opt, double gamma);

// --- double + dueling --------------------------------------------------------

/// Q(s,a) = V(s) + A(s,a) - mean over the candidate set of A(s,.)
struct DuelingNet {
  nn::DenseNet value;      // state -> 1
  nn::DenseNet advantage;  // state ++ candidate -> 1

  std::vector<double> q_values(const StateVector& state, std::span<const StateVector> candidates) const;
  std::vector<double> advantages(const StateVector& state, std::span<const StateVector> candidates) const;
};

DuelingNet make_dueling_net(std::size_t state_dim, std::size_t candidate_dim,
                            std::span<const std::size_t> hidden, std::uint64_t seed);

/// Online net picks a* over the next candidates; the target net evaluates it.
double double_td_target(const DuelingNet& online, const DuelingNet& target, const Transition& t,
                        double gamma);

struct DuelingOptimizer {
  nn::AdamState value;
  nn::AdamState advantage;
};

double q_update_double_dueling(std::span<const Transition* const> batch, DuelingNet& online,
                               const DuelingNet& target, DuelingOptimizer& opt, double gamma);

// --- actor-critic ------------------------------------------------------------

struct AcSelection {
  std::size_t action = 0;
  std::vector<double> probabilities;
};

AcSelection ac_select(const nn::DenseNet& actor, const StateVector& state,
                      std::span<const StateVector> candidates, Rng& rng);
std::vector<double> policy(const nn::DenseNet& actor, const StateVector& state,
                           std::span<const StateVector> candidates);
double policy_entropy(std::span<const double> probabilities);

struct AcLosses {
  double delta = 0.0;
  double critic = 0.0;  // delta^2
  /// Minimized quantity: -(ln pi(a|s) * delta + beta * H(pi(s))).
  double actor = 0.0;
};

/// delta = r + gamma V(s') - V(s); critic regresses V(s) toward the TD target,
/// actor ascends ln pi(a|s) * delta + beta * H with delta held fixed.
AcLosses ac_update(const Transition& t, nn::DenseNet& actor, nn::DenseNet& critic,
                   nn::AdamState& actor_opt, nn::AdamState& critic_opt, double gamma, double beta);

// --- rewards -------------------------------------------------------------------

struct Rewards {
  double group1 = 0.0;
  double operation = 0.0;
  double group2 = 0.0;
};

Rewards compute_rewards(double utility_before, double utility_after, double downstream,
                        Group1Reward mode = Group1Reward::utility);

// --- cascading agent -----------------------------------------------------------

/// An agent that keeps its last step pending until the next observation
/// completes the transition, then learns from it.
class Agent {
 public:
  Agent(AgentConfig config, std::size_t state_dim, std::size_t candidate_dim);
  virtual ~Agent() = default;
  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  /// Completes and learns from the pending transition (if any), then picks
  /// a candidate for `state`.
  std::size_t act(const StateVector& state, std::span<const StateVector> candidates);
  /// Reward for the action returned by the last act().
  void reward(double r);

  std::size_t steps() const { return steps_; }
  std::size_t updates() const { return updates_; }
  double last_loss() const { return last_loss_; }
  const AgentConfig& config() const { return config_; }

 protected:
  virtual AcSelection choose(const StateVector& state, std::span<const StateVector> candidates) = 0;
  virtual void learn(Transition t) = 0;
  void check_dims(const StateVector& state, std::span<const StateVector> candidates) const;

  AgentConfig config_;
  std::size_t state_dim_;
  std::size_t candidate_dim_;
  Rng rng_;
  std::size_t steps_ = 0;
  std::size_t updates_ = 0;
  double last_loss_ = 0.0;

 private:
  std::optional<Transition> pending_;
  bool pending_rewarded_ = false;
};

class DqnAgent final : public Agent {
 public:
  DqnAgent(AgentConfig config, std::size_t state_dim, std::size_t candidate_dim);
  const nn::DenseNet& network() const { return net_; }
  const ReplayMemory& memory() const { return memory_; }

 protected:
  AcSelection choose(const StateVector& state, std::span<const StateVector> candidates) override;
  void learn(Transition t) override;

 private:
  nn::DenseNet net_;
  nn::AdamState opt_;
  ReplayMemory memory_;
};

class DoubleDuelingAgent final : public Agent {
 public:
  DoubleDuelingAgent(AgentConfig config, std::size_t state_dim, std::size_t candidate_dim);
  const DuelingNet& online() const { return online_; }
  const DuelingNet& target() const { return target_; }

 protected:
  AcSelection choose(const StateVector& state, std::span<const StateVector> candidates) override;
  void learn(Transition t) override;

 private:
  DuelingNet online_;
  DuelingNet target_;
  DuelingOptimizer opt_;
  ReplayMemory memory_;
};

class ActorCriticAgent final : public Agent {
 public:
  ActorCriticAgent(AgentConfig config, std::size_t state_dim, std::size_t candidate_dim);
  const nn::DenseNet& actor() const { return actor_; }
  const nn::DenseNet& critic() const { return critic_; }

 protected:
  AcSelection choose(const StateVector& state, std::span<const StateVector> candidates) override;
  void learn(Transition t) override;

 private:
  nn::DenseNet actor_;
  nn::DenseNet critic_;
  nn::AdamState actor_opt_;
  nn::AdamState critic_opt_;
};

std::unique_ptr<Agent> make_agent(const AgentConfig& config, std::size_t state_dim,
                                  std::size_t candidate_dim);

}  // namespace featforge::agents
