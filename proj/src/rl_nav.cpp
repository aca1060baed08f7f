#include "srmap/rl_nav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>

#include "srmap/error.hpp"

namespace srmap {

namespace {

constexpr std::array<std::array<int, 2>, kActionCount> kSteps = {{
    {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1},
}};

constexpr char kAgentMagic[8] = {'S', 'R', 'M', 'A', 'P', 'A', 'G', '\0'};

void require_open_cell(const NavAgent& agent, StateId state) {
  if (state >= agent.space.n_states || !agent.space.valid[state])
    throw Error(ErrorKind::InvalidState, "state " + std::to_string(state) + " is not an open cell");
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes, 8);
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw Error(ErrorKind::Format, "truncated agent checkpoint");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::optional<StateId> destination(const StateSpace& space, StateId state, std::size_t action) {
  if (!space.grid_shape) throw Error(ErrorKind::Type, "compass moves need a spatial state space");
  const GridShape g = *space.grid_shape;
  const long r = static_cast<long>(state / g.cols) + kSteps[action][0];
  const long c = static_cast<long>(state % g.cols) + kSteps[action][1];
  if (r < 0 || c < 0 || r >= static_cast<long>(g.rows) || c >= static_cast<long>(g.cols)) return std::nullopt;
  const StateId to = cell_id(g, static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  const auto& adj = space.adjacency[state];
  if (std::find(adj.begin(), adj.end(), to) == adj.end()) return std::nullopt;
  return to;
}

double EpsilonSchedule::at(std::size_t episode) const {
  return std::max(end, start * std::pow(decay, static_cast<double>(episode)));
}

void AgentConfig::validate() const {
  const auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(epsilon.start) || !in_unit(epsilon.end) || !(epsilon.decay > 0.0 && epsilon.decay <= 1.0))
    throw Error(ErrorKind::Config, "epsilon schedule must stay within [0, 1]");
  if (!(discount >= 0.0 && discount < 1.0)) throw Error(ErrorKind::Config, "discount must lie in [0, 1)");
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::Config, "learning rate must be positive");
  if (!(temperature > 0.0)) throw Error(ErrorKind::Config, "temperature must be positive");
}

const char* to_string(TerminalCause cause) {
  switch (cause) {
    case TerminalCause::Goal: return "goal";
    case TerminalCause::WallChoice: return "wall";
    case TerminalCause::StepLimit: return "step_limit";
  }
  return "unknown";
}

NavAgent init_agent(const StateSpace& space, const AgentConfig& cfg, bool zero_weights) {
  cfg.validate();
  if (!space.grid_shape) throw Error(ErrorKind::Type, "navigation needs a spatial state space");
  const std::size_t hidden = cfg.hidden_width ? cfg.hidden_width : space.n_states;
  NavAgent agent{zero_weights ? LayeredNetwork(space.n_states, hidden, kActionCount, cfg.seed)
                              : init_network(space.n_states, hidden, kActionCount, cfg.seed),
                 space, cfg};
  return agent;
}

std::vector<double> action_values(const NavAgent& agent, StateId state) {
  require_open_cell(agent, state);
  return agent.q_net.logits(state);
}

std::vector<double> action_distribution(const NavAgent& agent, StateId state) {
  auto z = action_values(agent, state);
  for (double& v : z) v /= agent.config.temperature;
  softmax_in_place(z);
  return z;
}

std::size_t greedy_action(const NavAgent& agent, StateId state) {
  const auto q = action_values(agent, state);
  return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

std::size_t select_action(const NavAgent& agent, StateId state, double epsilon, Rng& rng) {
  if (uniform01(rng) < epsilon) return uniform_index(rng, kActionCount);
  return greedy_action(agent, state);
}

NavAgent train_agent(const StateSpace& space, const AgentConfig& cfg,
                     const std::function<void(const Episode&)>& on_episode) {
  if (space.reward_states.empty()) throw Error(ErrorKind::Config, "navigation needs at least one reward cell");
  NavAgent agent = init_agent(space, cfg);

  std::vector<StateId> starts;
  for (StateId s : space.valid_states())
    if (!space.is_reward(s)) starts.push_back(s);
  if (starts.empty()) throw Error(ErrorKind::Config, "every open cell is a reward cell");

  Rng rng(cfg.seed);
  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    const double epsilon = cfg.epsilon.at(e);
    Episode ep;
    StateId s = starts[uniform_index(rng, starts.size())];
    ep.visited.push_back(s);
    for (std::size_t step = 0;; ++step) {
      if (step == cfg.max_steps) {
        ep.cause = TerminalCause::StepLimit;
        break;
      }
      const std::size_t a = select_action(agent, s, epsilon, rng);
      const auto next = destination(space, s, a);
      double reward = cfg.reward_step;
      double target = 0.0;
      bool done = true;
      if (!next) {
        reward = cfg.reward_wall;
        target = reward;
        ep.cause = TerminalCause::WallChoice;
      } else if (space.is_reward(*next)) {
        reward = cfg.reward_goal;
        target = reward;
        ep.cause = TerminalCause::Goal;
      } else {
        const auto q_next = agent.q_net.logits(*next);
        target = reward + cfg.discount * *std::max_element(q_next.begin(), q_next.end());
        done = false;
      }
      regress_output(agent.q_net, s, a, target, cfg.learning_rate);
      ep.actions.push_back(a);
      ep.rewards.push_back(reward);
      ep.total_reward += reward;
      if (next) ep.visited.push_back(*next);
      if (done) break;
      s = *next;
    }
    if (on_episode) on_episode(ep);
  }
  return agent;
}

TransitionMatrix policy_tp_matrix(const NavAgent& agent, const StateSpace& space, bool absorbing_rewards) {
  if (agent.q_net.input_width() != space.n_states)
    throw Error(ErrorKind::Shape, "agent is bound to a different state space");
  TransitionMatrix tp{Matrix(space.n_states, space.n_states), std::vector<bool>(space.n_states, true)};
  for (StateId s = 0; s < space.n_states; ++s) {
    if (!space.valid[s] || (absorbing_rewards && space.is_reward(s))) continue;
    const auto probs = action_distribution(agent, s);
    double open_mass = 0.0;
    for (std::size_t a = 0; a < kActionCount; ++a)
      if (destination(space, s, a)) open_mass += probs[a];
    if (open_mass <= 0.0) continue;
    for (std::size_t a = 0; a < kActionCount; ++a)
      if (const auto to = destination(space, s, a)) tp.probs(s, *to) += probs[a] / open_mass;
    tp.untrained[s] = false;
  }
  return tp;
}

Episode greedy_rollout(const NavAgent& agent, StateId start, std::size_t max_steps) {
  require_open_cell(agent, start);
  const StateSpace& space = agent.space;
  const AgentConfig& cfg = agent.config;
  Episode ep;
  ep.visited.push_back(start);
  if (space.is_reward(start)) {
    ep.cause = TerminalCause::Goal;
    return ep;
  }
  StateId s = start;
  while (true) {
    if (ep.actions.size() == max_steps) {
      ep.cause = TerminalCause::StepLimit;
      break;
    }
    const std::size_t a = greedy_action(agent, s);
    const auto next = destination(space, s, a);
    ep.actions.push_back(a);
    if (!next) {
      ep.rewards.push_back(cfg.reward_wall);
      ep.total_reward += cfg.reward_wall;
      ep.cause = TerminalCause::WallChoice;
      break;
    }
    ep.visited.push_back(*next);
    const bool goal = space.is_reward(*next);
    const double r = goal ? cfg.reward_goal : cfg.reward_step;
    ep.rewards.push_back(r);
    ep.total_reward += r;
    if (goal) {
      ep.cause = TerminalCause::Goal;
      break;
    }
    s = *next;
  }
  return ep;
}

void write_episodes_csv(std::ostream& out, std::span<const Episode> episodes) {
  out << "episode,step,state,action,reward,cause\n";
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    const char* cause = to_string(ep.cause);
    if (ep.actions.empty()) {
      out << e << ",0," << ep.visited.front() << ",none,0," << cause << '\n';
      continue;
    }
    for (std::size_t k = 0; k < ep.actions.size(); ++k)
      out << e << ',' << k << ',' << ep.visited[k] << ',' << kActionNames[ep.actions[k]] << ','
          << format_double(ep.rewards[k]) << ',' << cause << '\n';
  }
}

void save_agent(std::ostream& out, const NavAgent& agent) {
  save_checkpoint(out, agent.q_net);
  out.write(kAgentMagic, sizeof(kAgentMagic));
  const AgentConfig& c = agent.config;
  for (double v : {static_cast<double>(kActionCount), c.temperature, c.discount, c.reward_goal, c.reward_step,
                   c.reward_wall})
    put_f64(out, v);
  if (!out) throw Error(ErrorKind::Io, "failed writing agent checkpoint");
}

NavAgent load_agent(std::istream& in, const StateSpace& space) {
  NavAgent agent;
  agent.q_net = load_checkpoint(in);
  char magic[sizeof(kAgentMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kAgentMagic))
    throw Error(ErrorKind::Format, "checkpoint has no action-head metadata");
  if (get_f64(in) != static_cast<double>(kActionCount) || agent.q_net.output_width() != kActionCount)
    throw Error(ErrorKind::Format, "agent checkpoint has the wrong action count");
  if (agent.q_net.input_width() != space.n_states)
    throw Error(ErrorKind::Shape, "agent checkpoint does not match the state space");
  agent.config.temperature = get_f64(in);
  agent.config.discount = get_f64(in);
  agent.config.reward_goal = get_f64(in);
  agent.config.reward_step = get_f64(in);
  agent.config.reward_wall = get_f64(in);
  agent.config.seed = agent.q_net.seed();
  agent.config.hidden_width = agent.q_net.hidden_width();
  agent.space = space;
  return agent;
}

std::vector<long> distance_to_reward(const StateSpace& space) {
  std::vector<long> dist(space.n_states, -1);
  std::deque<StateId> queue;
  for (StateId g : space.reward_states) {
    dist[g] = 0;
    queue.push_back(g);
  }
  // Spatial adjacency is symmetric, so forward BFS from the goals is exact.
  while (!queue.empty()) {
    const StateId s = queue.front();
    queue.pop_front();
    for (StateId t : space.adjacency[s]) {
      if (dist[t] >= 0) continue;
      dist[t] = dist[s] + 1;
      queue.push_back(t);
    }
  }
  return dist;
}

}  // namespace srmap
