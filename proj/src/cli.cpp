#include "srmap/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include "srmap/analysis.hpp"
#include "srmap/environments.hpp"
#include "srmap/error.hpp"
#include "srmap/network.hpp"
#include "srmap/render.hpp"
#include "srmap/rl_nav.hpp"
#include "srmap/sr_core.hpp"

namespace srmap::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr double kEdgeThreshold = 1e-4;
constexpr double kRowSumTolerance = 1e-12;

// Raised when a computed artifact breaks one of its own invariants.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string env;
  std::string maze_file;
  std::string lexicon_file;
  std::string source;
  std::size_t samples = 0;
  std::size_t epochs = 0;
  std::size_t batch = 0;
  std::size_t hidden = 0;  // 0: as many hidden units as states
  std::size_t t = 0;
  std::size_t k = 0;
  double lr = 0.0;
  double gamma = 0.0;
  std::uint64_t seed = 1;
  bool paper_budget = false;
  std::vector<std::size_t> starts;
};

void to_json(json& j, const RunConfig& c) {
  j = json{{"env", c.env},         {"maze_file", c.maze_file}, {"lexicon_file", c.lexicon_file},
           {"source", c.source},   {"samples", c.samples},     {"epochs", c.epochs},
           {"batch", c.batch},     {"hidden", c.hidden},       {"t", c.t},
           {"k", c.k},             {"lr", c.lr},               {"gamma", c.gamma},
           {"seed", c.seed},       {"paper_budget", c.paper_budget}, {"starts", c.starts}};
}

void from_json(const json& j, RunConfig& c) {
  j.at("env").get_to(c.env);
  j.at("maze_file").get_to(c.maze_file);
  j.at("lexicon_file").get_to(c.lexicon_file);
  j.at("source").get_to(c.source);
  j.at("samples").get_to(c.samples);
  j.at("epochs").get_to(c.epochs);
  j.at("batch").get_to(c.batch);
  j.at("hidden").get_to(c.hidden);
  j.at("t").get_to(c.t);
  j.at("k").get_to(c.k);
  j.at("lr").get_to(c.lr);
  j.at("gamma").get_to(c.gamma);
  j.at("seed").get_to(c.seed);
  j.at("paper_budget").get_to(c.paper_budget);
  j.at("starts").get_to(c.starts);
}

// Desk-scale defaults per experiment.
RunConfig defaults_for(const std::string& command) {
  RunConfig c;
  c.command = command;
  c.env = command == "navigate" ? "maze" : (command == "language" || command == "mds") ? "language" : "room10";
  c.samples = 50000;
  c.epochs = 200;
  c.batch = 64;
  c.lr = 0.05;
  c.gamma = 0.9;
  c.t = 10;
  c.k = 30;
  c.source = command == "mds" ? "both" : "truth";
  if (command == "language" || command == "mds") {
    c.samples = 5000;
    c.epochs = 50;
    c.batch = 16;
    c.lr = 2.0;
    c.gamma = 1.0;
    c.t = 2;
  } else if (command == "navigate") {
    c.epochs = 50000;  // episodes
    c.lr = 0.1;
    c.t = 50;
  }
  return c;
}

void apply_paper_budget(RunConfig& c) {
  if (c.command == "language" || c.command == "mds") {
    c.samples = 5000;
    c.epochs = 50;
  } else if (c.command == "navigate") {
    c.epochs = 10000;
  } else {
    c.samples = 50000;
    c.epochs = 10000;
  }
}

std::string hex_digest(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// One run's output directory plus what the manifest records about it.
class Bundle {
 public:
  explicit Bundle(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_ / "maps", ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& bytes) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    outputs_[name] = hex_digest(bytes);
  }

  void add_input(const std::string& path) { inputs_[path] = hex_digest(read_file(path)); }

  json& metrics() { return metrics_; }

  void write_manifest(const RunConfig& cfg) {
    json doc;
    doc["tool"] = "srmap";
    doc["tool_version"] = kToolVersion;
    doc["experiment"] = cfg.command;
    doc["config"] = cfg;
    doc["inputs"] = inputs_;
    doc["outputs"] = outputs_;
    doc["metrics"] = metrics_;
    write("manifest.json", doc.dump(2) + "\n");
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::map<std::string, std::string> outputs_;
  std::map<std::string, std::string> inputs_;
  json metrics_ = json::object();
};

void check_rows(const TransitionMatrix& tp, const std::string& what) {
  for (std::size_t r = 0; r < tp.probs.rows(); ++r) {
    double sum = 0.0;
    for (double v : tp.probs.row(r)) {
      if (!std::isfinite(v) || v < 0.0) throw InvariantViolation(what + ": row " + std::to_string(r) + " has an invalid entry");
      sum += v;
    }
    if (sum != 0.0 && std::abs(sum - 1.0) > kRowSumTolerance)
      throw InvariantViolation(what + ": row " + std::to_string(r) + " sums to " + format_double(sum));
  }
}

struct Environment {
  StateSpace space;
  LexiconSpec lexicon;
};

Environment resolve_environment(const RunConfig& cfg, Bundle& bundle, std::ostream& err) {
  Environment env;
  if (cfg.env == "language") {
    if (!cfg.lexicon_file.empty()) {
      env.lexicon = LexiconSpec::from_json(read_file(cfg.lexicon_file));
      bundle.add_input(cfg.lexicon_file);
    } else {
      env.lexicon = LexiconSpec::defaults();
    }
    env.space = build_language_space(env.lexicon);
    return env;
  }
  if (cfg.env == "maze") {
    LoadedMaze maze;
    if (!cfg.maze_file.empty()) {
      maze = load_maze_file(cfg.maze_file);
      bundle.add_input(cfg.maze_file);
    } else {
      maze = default_maze();
    }
    for (const auto& w : maze.warnings) err << "warning: " << w << '\n';
    bundle.metrics()["maze_valid_cells"] = maze.valid_cells;
    bundle.metrics()["maze_reward_cells"] = maze.reward_cells;
    env.space = std::move(maze.space);
    return env;
  }
  if (cfg.env.rfind("room", 0) == 0) {
    const std::string dims = cfg.env.substr(4);
    std::size_t rows = 0, cols = 0;
    const auto x = dims.find('x');
    try {
      rows = std::stoul(dims.substr(0, x));
      cols = x == std::string::npos ? rows : std::stoul(dims.substr(x + 1));
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "bad room size in --env " + cfg.env);
    }
    env.space = build_grid_room(rows, cols);
    return env;
  }
  throw Error(ErrorKind::Config, "unknown environment '" + cfg.env + "' (room<N>, room<R>x<C>, maze, language)");
}

std::string loss_csv(const TrainReport& report) {
  std::string out = "epoch,loss\n";
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e)
    out += std::to_string(e + 1) + "," + format_double(report.epoch_loss[e]) + "\n";
  return out;
}

std::string save_network(const LayeredNetwork& net) {
  std::ostringstream os(std::ios::binary);
  save_checkpoint(os, net);
  return os.str();
}

std::string edge_list(const TransitionMatrix& tp) {
  std::string out = "# from to probability\n";
  for (std::size_t r = 0; r < tp.probs.rows(); ++r)
    for (std::size_t c = 0; c < tp.probs.cols(); ++c)
      if (tp.probs(r, c) >= kEdgeThreshold)
        out += std::to_string(r) + " " + std::to_string(c) + " " + format_double(tp.probs(r, c)) + "\n";
  return out;
}

Matrix row_as_grid(const Matrix& m, std::size_t row, const GridShape& g) {
  Matrix field(g.rows, g.cols);
  for (std::size_t s = 0; s < g.rows * g.cols; ++s) field(s / g.cols, s % g.cols) = m(row, s);
  return field;
}

std::vector<bool> wall_mask(const StateSpace& space) {
  std::vector<bool> walls(space.n_states);
  for (StateId s = 0; s < space.n_states; ++s) walls[s] = !space.valid[s];
  return walls;
}

std::string state_tag(StateId s) {
  std::ostringstream os;
  os << 's' << std::setw(3) << std::setfill('0') << s;
  return os.str();
}

std::vector<StateId> start_states(const RunConfig& cfg, const StateSpace& space) {
  std::vector<StateId> starts = cfg.starts;
  if (starts.empty()) {
    const GridShape g = *space.grid_shape;
    for (StateId s : {cell_id(g, 1, 1), cell_id(g, g.rows / 2, g.cols / 2)})
      if (space.valid[s] && !space.is_reward(s)) starts.push_back(s);
    if (starts.empty()) starts.push_back(space.non_terminal_states().front());
  }
  for (StateId s : starts)
    if (s >= space.n_states || !space.valid[s])
      throw Error(ErrorKind::Config, "start state " + std::to_string(s) + " is not an open cell");
  return starts;
}

struct Learned {
  LayeredNetwork net;
  TrainReport report;
  TransitionMatrix tp;
};

TrainConfig train_config(const RunConfig& cfg) {
  return TrainConfig{cfg.epochs, cfg.batch, cfg.lr, cfg.seed + 2, LrSchedule::LinearDecay};
}

Learned learn_tp(const RunConfig& cfg, const StateSpace& space, const TrainingSet& data, std::ostream& out) {
  Learned l;
  l.net = init_network(space.n_states, cfg.hidden ? cfg.hidden : space.n_states, cfg.seed + 1);
  out << "training on " << data.pairs.size() << " pairs for " << cfg.epochs << " epochs\n";
  l.report = train(l.net, data, train_config(cfg));
  l.tp = predict_tp_matrix(l.net, space);
  check_rows(l.tp, "learned transition matrix");
  out << "final loss " << l.report.final_loss << " (" << l.report.seconds << " s)\n";
  return l;
}

SRConfig sr_config(const RunConfig& cfg) { return SRConfig{cfg.gamma, cfg.t}; }

void write_sr_maps(Bundle& bundle, const std::string& prefix, const Matrix& sr, const StateSpace& space,
                   const std::vector<StateId>& starts) {
  for (StateId s : starts)
    bundle.write("maps/" + prefix + "_" + state_tag(s) + ".pgm",
                 render_heatmap(row_as_grid(sr, s, *space.grid_shape), Palette::Gray, wall_mask(space)));
}

json error_json(const ErrorReport& r) { return json::parse(r.to_json()); }

void run_oracle(const RunConfig& cfg, Bundle& bundle, std::ostream& err) {
  const auto env = resolve_environment(cfg, bundle, err);
  const auto tp = ground_truth_tp(env.space);
  check_rows(tp, "ground-truth transition matrix");
  const auto sr = successor_matrix(tp, sr_config(cfg));
  bundle.write("tp.csv", to_csv(tp.probs));
  bundle.write("sr.csv", to_csv(sr.entries));
  bundle.metrics()["n_states"] = env.space.n_states;
  bundle.metrics()["valid_states"] = env.space.valid_states().size();
}

void run_explore(const RunConfig& cfg, Bundle& bundle, std::ostream& out, std::ostream& err) {
  const auto env = resolve_environment(cfg, bundle, err);
  const StateSpace& space = env.space;
  if (!space.grid_shape) throw Error(ErrorKind::Config, "explore needs a spatial environment");
  const auto truth = ground_truth_tp(space);
  const auto data = sample_transition_pairs(space, cfg.samples, cfg.seed);
  const auto learned = learn_tp(cfg, space, data, out);
  const auto sr = successor_matrix(learned.tp, sr_config(cfg));
  const auto sr_truth = successor_matrix(truth, sr_config(cfg));

  const auto rows = space.untrained_rows();
  const auto tp_err = matrix_error(learned.tp.probs, truth.probs, rows);
  const auto sr_err = matrix_error(sr.entries, sr_truth.entries, rows);

  bundle.write("tp.csv", to_csv(learned.tp.probs));
  bundle.write("sr.csv", to_csv(sr.entries));
  bundle.write("tp_truth.csv", to_csv(truth.probs));
  bundle.write("sr_truth.csv", to_csv(sr_truth.entries));
  bundle.write("train_loss.csv", loss_csv(learned.report));
  bundle.write("model.bin", save_network(learned.net));
  bundle.write("error_report.json", json{{"tp", error_json(tp_err)}, {"sr", error_json(sr_err)}}.dump(2) + "\n");
  const auto starts = start_states(cfg, space);
  write_sr_maps(bundle, "sr_truth", sr_truth.entries, space, starts);
  write_sr_maps(bundle, "sr_learned", sr.entries, space, starts);

  bundle.metrics()["final_loss"] = learned.report.final_loss;
  bundle.metrics()["tp_mean_tv"] = tp_err.mean_tv;
  bundle.metrics()["sr_frobenius_relative"] = sr_err.frobenius_relative;
  out << "TP mean TV " << tp_err.mean_tv << ", SR relative Frobenius error " << sr_err.frobenius_relative << '\n';
}

void run_navigate(const RunConfig& cfg, Bundle& bundle, std::ostream& out, std::ostream& err) {
  const auto env = resolve_environment(cfg, bundle, err);
  const StateSpace& space = env.space;
  if (!space.grid_shape) throw Error(ErrorKind::Config, "navigate needs a spatial environment");
  AgentConfig acfg;
  acfg.episodes = cfg.epochs;
  acfg.learning_rate = cfg.lr;
  acfg.seed = cfg.seed;
  acfg.hidden_width = cfg.hidden;
  out << "training agent for " << acfg.episodes << " episodes\n";
  std::size_t goal_episodes = 0;
  const auto agent = train_agent(space, acfg, [&](const Episode& e) {
    if (e.cause == TerminalCause::Goal) ++goal_episodes;
  });

  const auto tp = policy_tp_matrix(agent, space);
  check_rows(tp, "policy transition matrix");
  const auto sr = successor_matrix(tp, sr_config(cfg));
  const auto truth = ground_truth_tp(space);
  const auto sr_truth = successor_matrix(truth, sr_config(cfg));

  const auto dist = distance_to_reward(space);
  std::vector<Episode> rollouts;
  std::size_t reached = 0;
  long worst_excess = 0;
  for (StateId s : space.valid_states()) {
    rollouts.push_back(greedy_rollout(agent, s, 4 * space.n_states));
    const Episode& ep = rollouts.back();
    if (ep.cause == TerminalCause::Goal) {
      ++reached;
      worst_excess = std::max(worst_excess, static_cast<long>(ep.length()) - dist[s]);
    }
  }
  std::ostringstream episodes;
  write_episodes_csv(episodes, rollouts);

  std::ostringstream agent_bytes(std::ios::binary);
  save_agent(agent_bytes, agent);

  bundle.write("tp.csv", to_csv(tp.probs));
  bundle.write("sr.csv", to_csv(sr.entries));
  bundle.write("tp_truth.csv", to_csv(truth.probs));
  bundle.write("sr_truth.csv", to_csv(sr_truth.entries));
  bundle.write("episodes.csv", episodes.str());
  bundle.write("agent.bin", agent_bytes.str());
  const auto starts = start_states(cfg, space);
  write_sr_maps(bundle, "sr_truth", sr_truth.entries, space, starts);
  write_sr_maps(bundle, "sr_policy", sr.entries, space, starts);

  bundle.metrics()["training_goal_episodes"] = goal_episodes;
  bundle.metrics()["greedy_reach_fraction"] =
      static_cast<double>(reached) / static_cast<double>(space.valid_states().size());
  bundle.metrics()["greedy_worst_excess_steps"] = worst_excess;
  out << "greedy policy reaches a reward from " << reached << " of " << space.valid_states().size()
      << " open cells\n";
}

double min_successor_class_mass(const TransitionMatrix& tp, const StateSpace& space) {
  double worst = 1.0;
  for (StateId s : space.non_terminal_states()) {
    double mass = 0.0;
    for (StateId t : space.adjacency[s]) mass += tp.probs(s, t);
    worst = std::min(worst, mass);
  }
  return worst;
}

void run_language(const RunConfig& cfg, Bundle& bundle, std::ostream& out, std::ostream& err) {
  const auto env = resolve_environment(cfg, bundle, err);
  const StateSpace& space = env.space;
  if (space.kind != SpaceKind::Language) throw Error(ErrorKind::Config, "language needs --env language");
  const auto truth = ground_truth_tp(space);
  const auto data = sample_sentences(space, cfg.samples, cfg.seed);
  const auto learned = learn_tp(cfg, space, data, out);
  const auto sr = successor_matrix(learned.tp, sr_config(cfg));
  const auto sr_truth = successor_matrix(truth, sr_config(cfg));
  const auto rows = space.untrained_rows();
  const auto tp_err = matrix_error(learned.tp.probs, truth.probs, rows);
  const auto sr_err = matrix_error(sr.entries, sr_truth.entries, rows);

  bundle.write("tp.csv", to_csv(learned.tp.probs));
  bundle.write("sr.csv", to_csv(sr.entries));
  bundle.write("tp_truth.csv", to_csv(truth.probs));
  bundle.write("sr_truth.csv", to_csv(sr_truth.entries));
  bundle.write("edges.txt", edge_list(learned.tp));
  bundle.write("edges_truth.txt", edge_list(truth));
  bundle.write("train_loss.csv", loss_csv(learned.report));
  bundle.write("model.bin", save_network(learned.net));
  bundle.write("error_report.json", json{{"tp", error_json(tp_err)}, {"sr", error_json(sr_err)}}.dump(2) + "\n");
  bundle.write("maps/tp_truth.pgm", render_heatmap(truth.probs, Palette::Gray));
  bundle.write("maps/tp_learned.pgm", render_heatmap(learned.tp.probs, Palette::Gray));
  bundle.write("maps/sr_truth.pgm", render_heatmap(sr_truth.entries, Palette::Gray));
  bundle.write("maps/sr_learned.pgm", render_heatmap(sr.entries, Palette::Gray));

  const double class_mass = min_successor_class_mass(learned.tp, space);
  bundle.metrics()["final_loss"] = learned.report.final_loss;
  bundle.metrics()["tp_mean_tv"] = tp_err.mean_tv;
  bundle.metrics()["sr_frobenius_relative"] = sr_err.frobenius_relative;
  bundle.metrics()["min_successor_class_mass"] = class_mass;
  out << "TP mean TV " << tp_err.mean_tv << ", minimum successor-class mass " << class_mass << '\n';
}

void run_eigen(const RunConfig& cfg, Bundle& bundle, std::ostream& out, std::ostream& err) {
  const auto env = resolve_environment(cfg, bundle, err);
  const StateSpace& space = env.space;
  TransitionMatrix tp;
  if (cfg.source == "truth") {
    tp = ground_truth_tp(space);
  } else if (cfg.source == "learned") {
    tp = learn_tp(cfg, space, sample_transition_pairs(space, cfg.samples, cfg.seed), out).tp;
  } else {
    throw Error(ErrorKind::Config, "eigen --source must be truth or learned");
  }
  const auto sr = successor_matrix(tp, sr_config(cfg));
  const auto maps = sr_eigenmaps(sr, space, cfg.k);

  std::string table = "rank,eigenvalue,peak_count\n";
  std::vector<double> ranks, peaks;
  for (const auto& m : maps.maps) {
    const std::size_t count = autocorrelation_peak_count(m);
    table += std::to_string(m.rank + 1) + "," + format_double(m.eigenvalue) + "," + std::to_string(count) + "\n";
    if (m.rank >= 1 && m.rank < 20) {
      ranks.push_back(static_cast<double>(m.rank + 1));
      peaks.push_back(static_cast<double>(count));
    }
    std::ostringstream name;
    name << "maps/eigen_" << std::setw(3) << std::setfill('0') << m.rank + 1;
    bundle.write(name.str() + ".pgm", render_heatmap(m.values, Palette::Gray, m.wall_mask));
    bundle.write(name.str() + ".svg", render_heatmap(m.values, Palette::Diverging, m.wall_mask));
  }
  bundle.write("eigenvalues.csv", table);
  bundle.write("sr.csv", to_csv(sr.entries));

  bundle.metrics()["symmetrization_residual"] = maps.symmetrization_residual;
  bundle.metrics()["maps"] = maps.maps.size();
  if (ranks.size() >= 2) {
    const double rho = spearman_correlation(ranks, peaks);
    bundle.metrics()["rank_peak_spearman"] = rho;
    out << "Spearman(rank, autocorrelation peaks) over ranks 2-" << ranks.size() + 1 << ": " << rho << '\n';
  }
  out << "wrote " << maps.maps.size() << " eigenmaps\n";
}

std::string embedding_csv(const Embedding2D& e) {
  std::string out = "item,label,x,y\n";
  for (std::size_t i = 0; i < e.coords.size(); ++i)
    out += std::to_string(i) + "," + std::to_string(e.labels.empty() ? -1 : e.labels[i]) + "," +
           format_double(e.coords[i][0]) + "," + format_double(e.coords[i][1]) + "\n";
  return out;
}

void run_mds(const RunConfig& cfg, Bundle& bundle, std::ostream& out, std::ostream& err) {
  const auto env = resolve_environment(cfg, bundle, err);
  const StateSpace& space = env.space;
  if (cfg.source != "truth" && cfg.source != "learned" && cfg.source != "both")
    throw Error(ErrorKind::Config, "mds --source must be truth, learned or both");

  std::vector<std::pair<std::string, TransitionMatrix>> sources;
  if (cfg.source != "learned") sources.emplace_back("truth", ground_truth_tp(space));
  if (cfg.source != "truth") {
    const auto data = space.kind == SpaceKind::Language ? sample_sentences(space, cfg.samples, cfg.seed)
                                                        : sample_transition_pairs(space, cfg.samples, cfg.seed);
    sources.emplace_back("learned", learn_tp(cfg, space, data, out).tp);
  }

  const std::vector<int> labels(space.labels.begin(), space.labels.end());
  const bool labelled = std::set<int>(labels.begin(), labels.end()).size() >= 2;
  json report = json::object();
  for (const auto& [name, tp] : sources) {
    const auto sr = successor_matrix(tp, sr_config(cfg));
    for (const auto& [kind, matrix] : {std::pair{std::string("tp"), &tp.probs}, std::pair{std::string("sr"), &sr.entries}}) {
      const auto emb = classical_mds(*matrix, labelled ? std::span<const int>(labels) : std::span<const int>{});
      const std::string key = name + "_" + kind;
      bundle.write("embedding_" + key + ".csv", embedding_csv(emb));
      report[key]["captured_fraction"] = emb.captured_fraction;
      if (labelled) {
        const double score = silhouette(emb);
        report[key]["silhouette"] = score;
        bundle.metrics()["silhouette_" + key] = score;
        out << "silhouette " << key << ": " << score << '\n';
      }
    }
  }
  bundle.write("mds_report.json", report.dump(2) + "\n");
}

struct Flags {
  std::string env, maze_file, lexicon_file, source, out, manifest;
  std::size_t samples = 0, epochs = 0, batch = 0, hidden = 0, t = 0, k = 0;
  double lr = 0.0, gamma = 0.0;
  std::uint64_t seed = 0;
  bool paper_budget = false;
  std::vector<std::size_t> starts;
  const CLI::App* parsed = nullptr;

  bool given(const std::string& name) const { return parsed->get_option("--" + name)->count() > 0; }
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--env", f.env, "room10, room<R>x<C>, maze or language");
  sub->add_option("--maze-file", f.maze_file, "maze layout ('#', '.', 'F')");
  sub->add_option("--lexicon-file", f.lexicon_file, "lexicon JSON document");
  sub->add_option("--samples", f.samples, "training pairs to sample");
  sub->add_option("--epochs", f.epochs, "training epochs (episodes for navigate)");
  sub->add_option("--batch", f.batch, "mini-batch size")->check(CLI::PositiveNumber);
  sub->add_option("--lr", f.lr, "learning rate")->check(CLI::PositiveNumber);
  sub->add_option("--hidden", f.hidden, "hidden units (default: number of states)");
  sub->add_option("--gamma", f.gamma, "SR discount")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--t", f.t, "SR horizon (transition steps)");
  sub->add_option("--k", f.k, "number of eigenmaps");
  sub->add_option("--seed", f.seed, "RNG seed");
  sub->add_option("--source", f.source, "truth, learned (or both for mds)");
  sub->add_option("--starts", f.starts, "start states for SR heatmaps");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--manifest", f.manifest, "re-run the configuration of a manifest.json");
  sub->add_flag("--paper-budget", f.paper_budget, "use the full-scale sample/epoch budgets");
}

RunConfig load_manifest_config(const std::string& path, const std::string& command) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Format, "manifest '" + path + "': " + e.what());
  }
  if (doc.value("experiment", "") != command)
    throw Error(ErrorKind::Config, "manifest is for '" + doc.value("experiment", "") + "', not '" + command + "'");
  RunConfig cfg = doc.at("config").get<RunConfig>();
  cfg.command = command;
  return cfg;
}

RunConfig resolve_config(const std::string& command, const Flags& f) {
  RunConfig cfg = f.manifest.empty() ? defaults_for(command) : load_manifest_config(f.manifest, command);
  if (f.given("paper-budget") && f.paper_budget) {
    cfg.paper_budget = true;
    apply_paper_budget(cfg);
  }
  if (f.given("maze-file")) {
    cfg.maze_file = f.maze_file;
    cfg.env = "maze";
  }
  if (f.given("env")) cfg.env = f.env;
  if (f.given("lexicon-file")) cfg.lexicon_file = f.lexicon_file;
  if (f.given("samples")) cfg.samples = f.samples;
  if (f.given("epochs")) cfg.epochs = f.epochs;
  if (f.given("batch")) cfg.batch = f.batch;
  if (f.given("lr")) cfg.lr = f.lr;
  if (f.given("hidden")) cfg.hidden = f.hidden;
  if (f.given("gamma")) cfg.gamma = f.gamma;
  if (f.given("t")) cfg.t = f.t;
  if (f.given("k")) cfg.k = f.k;
  if (f.given("seed")) cfg.seed = f.seed;
  if (f.given("source")) cfg.source = f.source;
  if (f.given("starts")) cfg.starts = f.starts;
  return cfg;
}

int exit_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Format:
    case ErrorKind::EmptyMaze:
    case ErrorKind::Spec:
      return kExitIo;
    case ErrorKind::Config:
    case ErrorKind::InvalidDimension:
      return kExitUsage;
    default:
      return kExitInvariant;
  }
}

}  // namespace

std::string file_digest(const std::string& path) { return hex_digest(read_file(path)); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"srmap: successor representations of rooms, mazes and artificial languages"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"explore", "learn the room transition matrix from sampled moves and derive its SR"},
      {"navigate", "train the maze navigation agent and derive its policy SR"},
      {"language", "learn word transitions from generated sentences"},
      {"eigen", "render the leading SR eigenvectors on the grid"},
      {"mds", "embed TP/SR rows in 2D and score word-class clusters"},
      {"oracle", "write ground-truth TP and SR matrices"},
  };
  for (const auto& [name, help] : commands) add_flags(app.add_subcommand(name, help), flags);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  flags.parsed = app.get_subcommands().front();
  const std::string command = flags.parsed->get_name();
  try {
    const RunConfig cfg = resolve_config(command, flags);
    Bundle bundle(flags.given("out") ? fs::path(flags.out) : fs::path("srmap_out") / command);
    if (command == "oracle")
      run_oracle(cfg, bundle, err);
    else if (command == "explore")
      run_explore(cfg, bundle, out, err);
    else if (command == "navigate")
      run_navigate(cfg, bundle, out, err);
    else if (command == "language")
      run_language(cfg, bundle, out, err);
    else if (command == "eigen")
      run_eigen(cfg, bundle, out, err);
    else
      run_mds(cfg, bundle, out, err);
    bundle.write_manifest(cfg);
    out << "artifacts written to " << bundle.dir().string() << '\n';
    return kExitOk;
  } catch (const InvariantViolation& e) {
    err << "invariant violation: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_status(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace srmap::cli
