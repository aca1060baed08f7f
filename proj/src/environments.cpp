#include "srmap/environments.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "srmap/error.hpp"
#include "srmap/random.hpp"

namespace srmap {

namespace {

constexpr std::string_view kDefaultMaze =
    "###############\n"
    "#....#####....#\n"
    "#.##.#####.##.#\n"
    "#.##.......##.#\n"
    "#.##.##.##.##.#\n"
    "#....##.##....#\n"
    "#.#.#.#.#.#.###\n"
    "#F...........F#\n"
    "###.#.#.#.#.###\n"
    "#....##.##....#\n"
    "#.##.##.##.##.#\n"
    "#.##.......##.#\n"
    "#.##.#####.##.#\n"
    "#....#####....#\n"
    "###############\n";

constexpr std::size_t kDefaultMazeValidCells = 94;

// Compass order N, NE, E, SE, S, SW, W, NW.
constexpr std::array<std::array<int, 2>, 8> kMoore = {{
    {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1},
}};

// Moore adjacency over the free cells of a grid; diagonal steps need both
// orthogonal cells free.
std::vector<std::vector<StateId>> grid_adjacency(const GridShape& g, const std::vector<bool>& valid) {
  std::vector<std::vector<StateId>> adj(g.rows * g.cols);
  const auto free_at = [&](long r, long c) {
    return r >= 0 && c >= 0 && r < static_cast<long>(g.rows) && c < static_cast<long>(g.cols) &&
           valid[cell_id(g, static_cast<std::size_t>(r), static_cast<std::size_t>(c))];
  };
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      const StateId s = cell_id(g, r, c);
      if (!valid[s]) continue;
      for (const auto& [dr, dc] : kMoore) {
        const long rr = static_cast<long>(r) + dr;
        const long cc = static_cast<long>(c) + dc;
        if (!free_at(rr, cc)) continue;
        if (dr != 0 && dc != 0 &&
            (!free_at(static_cast<long>(r) + dr, static_cast<long>(c)) ||
             !free_at(static_cast<long>(r), static_cast<long>(c) + dc)))
          continue;
        adj[s].push_back(cell_id(g, static_cast<std::size_t>(rr), static_cast<std::size_t>(cc)));
      }
    }
  }
  return adj;
}

void validate(const LexiconSpec& spec) {
  if (spec.classes.empty()) throw Error(ErrorKind::Spec, "no word classes declared");
  std::set<std::string> names;
  std::size_t total = 0;
  for (const auto& wc : spec.classes) {
    if (wc.size == 0) throw Error(ErrorKind::Spec, "word class '" + wc.name + "' is empty");
    if (!names.insert(wc.name).second) throw Error(ErrorKind::Spec, "duplicate word class '" + wc.name + "'");
    total += wc.size;
  }
  if (total != spec.n_states)
    throw Error(ErrorKind::Spec, "class sizes sum to " + std::to_string(total) + ", expected " +
                                     std::to_string(spec.n_states));
  if (spec.rules.empty()) throw Error(ErrorKind::Spec, "no constructions declared");
  for (const auto& rule : spec.rules) {
    if (rule.size() < 2) throw Error(ErrorKind::Spec, "a construction needs at least two classes");
    for (const auto& name : rule)
      if (!names.count(name)) throw Error(ErrorKind::Spec, "construction uses undeclared class '" + name + "'");
  }
}

}  // namespace

const char* to_string(SpaceKind kind) {
  switch (kind) {
    case SpaceKind::GridRoom: return "room";
    case SpaceKind::Maze: return "maze";
    case SpaceKind::Language: return "language";
  }
  return "unknown";
}

bool StateSpace::is_reward(StateId s) const {
  return std::find(reward_states.begin(), reward_states.end(), s) != reward_states.end();
}

std::vector<StateId> StateSpace::valid_states() const {
  std::vector<StateId> out;
  for (StateId s = 0; s < n_states; ++s)
    if (valid[s]) out.push_back(s);
  return out;
}

std::vector<StateId> StateSpace::non_terminal_states() const {
  std::vector<StateId> out;
  for (StateId s = 0; s < n_states; ++s)
    if (valid[s] && !adjacency[s].empty()) out.push_back(s);
  return out;
}

std::vector<bool> StateSpace::untrained_rows() const {
  std::vector<bool> out(n_states);
  for (StateId s = 0; s < n_states; ++s) out[s] = !valid[s] || adjacency[s].empty();
  return out;
}

LexiconSpec LexiconSpec::defaults() {
  LexiconSpec spec;
  spec.n_states = 40;
  spec.classes = {{"adjective", 10}, {"verb", 10}, {"noun", 10}, {"pronoun", 5}, {"question", 5}};
  spec.rules = {
      {"adjective", "noun"},
      {"pronoun", "verb", "adjective"},
      {"question", "pronoun", "verb"},
  };
  return spec;
}

LexiconSpec LexiconSpec::from_json(std::string_view text) {
  LexiconSpec spec;
  try {
    const auto doc = nlohmann::json::parse(text);
    spec.n_states = doc.at("n_states").get<std::size_t>();
    for (const auto& c : doc.at("classes"))
      spec.classes.push_back({c.at("name").get<std::string>(), c.at("size").get<std::size_t>()});
    for (const auto& r : doc.at("rules")) spec.rules.push_back(r.get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Format, std::string("lexicon document: ") + e.what());
  }
  validate(spec);
  return spec;
}

std::string LexiconSpec::to_json() const {
  nlohmann::json doc;
  doc["n_states"] = n_states;
  doc["classes"] = nlohmann::json::array();
  for (const auto& c : classes) doc["classes"].push_back({{"name", c.name}, {"size", c.size}});
  doc["rules"] = rules;
  return doc.dump(2);
}

StateSpace build_grid_room(std::size_t rows, std::size_t cols) {
  if (rows < 2 || cols < 2)
    throw Error(ErrorKind::InvalidDimension,
                "room needs at least 2x2 cells, got " + std::to_string(rows) + "x" + std::to_string(cols));
  StateSpace space;
  space.kind = SpaceKind::GridRoom;
  space.n_states = rows * cols;
  space.grid_shape = GridShape{rows, cols};
  space.valid.assign(space.n_states, true);
  space.adjacency = grid_adjacency(*space.grid_shape, space.valid);
  space.labels.assign(space.n_states, -1);
  return space;
}

LoadedMaze load_maze(std::string_view layout_text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(layout_text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front().empty()) throw Error(ErrorKind::Format, "maze layout has no rows");

  const GridShape g{lines.size(), lines.front().size()};
  LoadedMaze out;
  StateSpace& space = out.space;
  space.kind = SpaceKind::Maze;
  space.n_states = g.rows * g.cols;
  space.grid_shape = g;
  space.valid.assign(space.n_states, false);
  space.labels.assign(space.n_states, -1);
  for (std::size_t r = 0; r < g.rows; ++r) {
    if (lines[r].size() != g.cols)
      throw Error(ErrorKind::Format, "row " + std::to_string(r + 1) + " has " + std::to_string(lines[r].size()) +
                                         " cells, expected " + std::to_string(g.cols));
    for (std::size_t c = 0; c < g.cols; ++c) {
      const StateId s = cell_id(g, r, c);
      switch (lines[r][c]) {
        case '#': break;
        case '.': space.valid[s] = true; break;
        case 'F':
          space.valid[s] = true;
          space.reward_states.push_back(s);
          break;
        default:
          throw Error(ErrorKind::Format, "unexpected character '" + std::string(1, lines[r][c]) + "' at row " +
                                             std::to_string(r + 1));
      }
    }
  }
  space.adjacency = grid_adjacency(g, space.valid);

  out.total_cells = space.n_states;
  out.valid_cells = static_cast<std::size_t>(std::count(space.valid.begin(), space.valid.end(), true));
  out.reward_cells = space.reward_states.size();
  if (out.valid_cells == 0) throw Error(ErrorKind::EmptyMaze, "maze layout has no free cells");
  if (out.reward_cells == 0) out.warnings.push_back("maze has no reward ('F') cell; usable for exploration only");
  return out;
}

LoadedMaze load_maze_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read maze file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_maze(buf.str());
}

std::string_view default_maze_layout() { return kDefaultMaze; }

LoadedMaze default_maze() {
  auto maze = load_maze(kDefaultMaze);
  if (maze.valid_cells != kDefaultMazeValidCells)
    throw Error(ErrorKind::Format, "default maze must have " + std::to_string(kDefaultMazeValidCells) +
                                       " free cells, found " + std::to_string(maze.valid_cells));
  return maze;
}

StateSpace build_language_space(const LexiconSpec& spec) {
  validate(spec);
  StateSpace space;
  space.kind = SpaceKind::Language;
  space.n_states = spec.n_states;
  space.valid.assign(space.n_states, true);

  std::map<std::string, int> class_id;
  std::vector<std::vector<StateId>> members(spec.classes.size());
  StateId next = 0;
  for (std::size_t k = 0; k < spec.classes.size(); ++k) {
    class_id[spec.classes[k].name] = static_cast<int>(k);
    space.class_names.push_back(spec.classes[k].name);
    for (std::size_t i = 0; i < spec.classes[k].size; ++i) {
      space.labels.push_back(static_cast<int>(k));
      members[k].push_back(next++);
    }
  }

  // Successor classes of each class, in first-seen order across the rules.
  std::vector<std::vector<int>> successors(spec.classes.size());
  for (const auto& rule : spec.rules) {
    std::vector<int> chain;
    for (const auto& name : rule) chain.push_back(class_id.at(name));
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      auto& succ = successors[static_cast<std::size_t>(chain[i])];
      if (std::find(succ.begin(), succ.end(), chain[i + 1]) == succ.end()) succ.push_back(chain[i + 1]);
    }
    space.constructions.push_back(std::move(chain));
  }

  space.adjacency.resize(space.n_states);
  for (StateId s = 0; s < space.n_states; ++s) {
    for (int k : successors[static_cast<std::size_t>(space.labels[s])]) {
      const auto& words = members[static_cast<std::size_t>(k)];
      space.adjacency[s].insert(space.adjacency[s].end(), words.begin(), words.end());
    }
    std::sort(space.adjacency[s].begin(), space.adjacency[s].end());
  }
  return space;
}

TransitionMatrix ground_truth_tp(const StateSpace& space) {
  TransitionMatrix tp{Matrix(space.n_states, space.n_states), space.untrained_rows()};
  for (StateId s = 0; s < space.n_states; ++s) {
    const auto& adj = space.adjacency[s];
    if (!space.valid[s] || adj.empty()) continue;
    const double p = 1.0 / static_cast<double>(adj.size());
    for (StateId t : adj) tp.probs(s, t) += p;
  }
  return tp;
}

TrainingSet sample_transition_pairs(const StateSpace& space, std::size_t count, std::uint64_t seed) {
  TrainingSet set;
  set.seed = seed;
  set.source = to_string(space.kind);
  if (count == 0) return set;
  const auto inputs = space.non_terminal_states();
  if (inputs.empty()) throw Error(ErrorKind::Sampling, "state space has no state with successors");

  Rng rng(seed);
  set.pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const StateId from = inputs[uniform_index(rng, inputs.size())];
    const auto& adj = space.adjacency[from];
    set.pairs.push_back({from, adj[uniform_index(rng, adj.size())]});
  }
  return set;
}

TrainingSet sample_sentences(const StateSpace& space, std::size_t count, std::uint64_t seed) {
  if (space.kind != SpaceKind::Language)
    throw Error(ErrorKind::Type, std::string("sentence sampling needs a language space, got ") + to_string(space.kind));
  std::vector<std::vector<StateId>> members(space.class_names.size());
  for (StateId s = 0; s < space.n_states; ++s) members[static_cast<std::size_t>(space.labels[s])].push_back(s);

  TrainingSet set;
  set.seed = seed;
  set.source = "language-sentences";
  Rng rng(seed);
  set.pairs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& chain = space.constructions[uniform_index(rng, space.constructions.size())];
    const std::size_t pos = uniform_index(rng, chain.size() - 1);
    const auto& here = members[static_cast<std::size_t>(chain[pos])];
    const auto& next = members[static_cast<std::size_t>(chain[pos + 1])];
    const StateId from = here[uniform_index(rng, here.size())];
    set.pairs.push_back({from, next[uniform_index(rng, next.size())]});
  }
  return set;
}

}  // namespace srmap
