#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "srmap/environments.hpp"
#include "srmap/network.hpp"
#include "srmap/random.hpp"

namespace srmap {

// Fixed compass action head: N, NE, E, SE, S, SW, W, NW.
inline constexpr std::size_t kActionCount = 8;
inline constexpr std::array<std::string_view, kActionCount> kActionNames = {"N", "NE", "E", "SE",
                                                                            "S", "SW", "W", "NW"};

/// Cell reached by `action`, or nothing when the move leaves the grid, enters
/// a wall or cuts a wall corner.
std::optional<StateId> destination(const StateSpace& space, StateId state, std::size_t action);

/// epsilon(e) = max(end, start * decay^e) for episode e.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.1;
  double decay = 0.9999;

  double at(std::size_t episode) const;
};

struct AgentConfig {
  std::size_t episodes = 50000;
  std::size_t max_steps = 200;
  EpsilonSchedule epsilon;
  double learning_rate = 0.1;
  double discount = 0.9;
  double reward_goal = 1.0;
  double reward_step = 0.0;
  double reward_wall = -1.0;
  std::uint64_t seed = 0;
  std::size_t hidden_width = 0;  // 0: same as the number of states
  // Softmax temperature applied to the action values.
  double temperature = 0.01;

  void validate() const;
};

enum class TerminalCause { Goal, WallChoice, StepLimit };
const char* to_string(TerminalCause cause);

struct Episode {
  std::vector<StateId> visited;  // starts with the start state; never holds a wall
  std::vector<std::size_t> actions;
  std::vector<double> rewards;  // one per action
  TerminalCause cause = TerminalCause::StepLimit;
  double total_reward = 0.0;

  std::size_t length() const { return visited.size() - 1; }
};

/// Action-value network (one-hot state in, 8 action values out) bound to a
/// spatial state space.
struct NavAgent {
  LayeredNetwork q_net;
  StateSpace space;
  AgentConfig config;
};

/// Untrained agent: scaled-uniform weights, or all zeros when requested.
NavAgent init_agent(const StateSpace& space, const AgentConfig& cfg, bool zero_weights = false);

/// Episodic one-step TD learning of the action values with epsilon-greedy
/// exploration. Choosing a blocked move ends the episode with reward_wall;
/// entering a reward cell ends it with reward_goal.
NavAgent train_agent(const StateSpace& space, const AgentConfig& cfg,
                     const std::function<void(const Episode&)>& on_episode = {});

std::vector<double> action_values(const NavAgent& agent, StateId state);
std::vector<double> action_distribution(const NavAgent& agent, StateId state);
/// Highest-valued action; ties go to the earliest compass direction.
std::size_t greedy_action(const NavAgent& agent, StateId state);
std::size_t select_action(const NavAgent& agent, StateId state, double epsilon, Rng& rng);

/// Full n_states-wide transition matrix induced by the action distribution.
/// Mass on blocked moves is spread proportionally over the open ones; walls
/// and (by default) reward cells get zero rows.
TransitionMatrix policy_tp_matrix(const NavAgent& agent, const StateSpace& space, bool absorbing_rewards = true);

Episode greedy_rollout(const NavAgent& agent, StateId start, std::size_t max_steps);

/// Columns: episode, step, state, action, reward, cause.
void write_episodes_csv(std::ostream& out, std::span<const Episode> episodes);

/// Network checkpoint followed by the action-head metadata.
void save_agent(std::ostream& out, const NavAgent& agent);
NavAgent load_agent(std::istream& in, const StateSpace& space);

/// Breadth-first step distance to the nearest reward cell (-1 if unreachable).
std::vector<long> distance_to_reward(const StateSpace& space);

}  // namespace srmap
