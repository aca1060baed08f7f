#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srmap/matrix.hpp"

namespace srmap {

using StateId = std::size_t;

enum class SpaceKind { GridRoom, Maze, Language };

const char* to_string(SpaceKind kind);

struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  bool operator==(const GridShape&) const = default;
};

/// Discrete state graph shared by the room, maze and word-lexicon
/// environments. Spatial states are numbered row-major over the grid.
struct StateSpace {
  SpaceKind kind = SpaceKind::GridRoom;
  std::size_t n_states = 0;
  std::optional<GridShape> grid_shape;
  std::vector<bool> valid;
  std::vector<std::vector<StateId>> adjacency;
  // Word class per state for languages, -1 for spatial states.
  std::vector<int> labels;
  std::vector<std::string> class_names;
  // Constructions as chains of class ids (languages only).
  std::vector<std::vector<int>> constructions;
  std::vector<StateId> reward_states;

  bool is_reward(StateId s) const;
  // Valid state with no successors (a noun, or an isolated cell).
  bool is_terminal(StateId s) const { return valid[s] && adjacency[s].empty(); }
  std::vector<StateId> valid_states() const;
  std::vector<StateId> non_terminal_states() const;
  // Rows that never appear as training inputs: walls and terminal states.
  std::vector<bool> untrained_rows() const;
};

/// Row-stochastic one-step successor probabilities. Rows flagged in
/// `untrained` are carried along but have no ground truth to match.
struct TransitionMatrix {
  Matrix probs;
  std::vector<bool> untrained;
};

struct WordClass {
  std::string name;
  std::size_t size = 0;
};

/// Vocabulary layout plus the constructions (class chains) that generate
/// admissible word sequences.
struct LexiconSpec {
  std::size_t n_states = 0;
  std::vector<WordClass> classes;
  std::vector<std::vector<std::string>> rules;

  static LexiconSpec defaults();
  // JSON document: {"n_states": 40, "classes": [{"name":..,"size":..}], "rules": [[..], ..]}
  static LexiconSpec from_json(std::string_view text);
  std::string to_json() const;
};

struct TransitionPair {
  StateId from = 0;
  StateId to = 0;

  bool operator==(const TransitionPair&) const = default;
};

struct TrainingSet {
  std::vector<TransitionPair> pairs;
  std::uint64_t seed = 0;
  std::string source;
};

struct LoadedMaze {
  StateSpace space;
  std::size_t total_cells = 0;
  std::size_t valid_cells = 0;
  std::size_t reward_cells = 0;
  std::vector<std::string> warnings;
};

StateSpace build_grid_room(std::size_t rows, std::size_t cols);

/// Parses a '#', '.', 'F' character grid. Diagonal moves are only allowed
/// when both orthogonal cells they pass are free.
LoadedMaze load_maze(std::string_view layout_text);
LoadedMaze load_maze_file(const std::string& path);

/// The shipped 15x15 layout (94 free cells, two reward cells).
std::string_view default_maze_layout();
LoadedMaze default_maze();

StateSpace build_language_space(const LexiconSpec& spec);

TransitionMatrix ground_truth_tp(const StateSpace& space);

TrainingSet sample_transition_pairs(const StateSpace& space, std::size_t count, std::uint64_t seed);
TrainingSet sample_sentences(const StateSpace& space, std::size_t count, std::uint64_t seed);

/// Row-major cell index helpers for spatial spaces.
inline StateId cell_id(const GridShape& g, std::size_t r, std::size_t c) { return r * g.cols + c; }

}  // namespace srmap
