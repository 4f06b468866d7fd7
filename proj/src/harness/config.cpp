#include "mrgr/harness/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mrgr::harness {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <class T>
T parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not a valid number: '" + raw + "'");
  }
  return value;
}

bool parse_bool(const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("not a boolean: '" + raw + "'");
}

std::vector<std::size_t> parse_widths(const std::string& raw) {
  std::vector<std::size_t> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number<std::size_t>(item));
  if (out.empty()) throw std::invalid_argument("empty width list");
  return out;
}

template <class T, class F>
Setter number(F field) {
  return [field](RunConfig& c, const std::string& v, const std::filesystem::path&) { field(c) = parse_number<T>(v); };
}

template <class F>
Setter flag(F field) {
  return [field](RunConfig& c, const std::string& v, const std::filesystem::path&) { field(c) = parse_bool(v); };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    using P = std::filesystem::path;
    t["run.method"] = [](RunConfig& c, const std::string& v, const P&) { c.train.method = trainer::parse_method(trim(v)); };
    t["run.env"] = [](RunConfig& c, const std::string& v, const P&) { c.env = parse_env_kind(trim(v)); };
    t["run.seed"] = number<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; });
    t["run.iterations"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.iterations; });
    t["run.eval_every"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.eval_every; });
    t["run.eval_episodes"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.eval_episodes; });
    t["run.eval_opponent"] = [](RunConfig& c, const std::string& v, const P&) { c.eval_opponent = trim(v); };
    t["run.wall_clock"] = flag([](RunConfig& c) -> auto& { return c.wall_clock; });
    t["run.single_thread"] = flag([](RunConfig& c) -> auto& { return c.train.single_thread; });

    t["train.gamma"] = number<double>([](RunConfig& c) -> auto& { return c.train.gamma; });
    t["train.k"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.k; });
    t["train.epsilon_start"] = number<double>([](RunConfig& c) -> auto& { return c.train.epsilon_start; });
    t["train.epsilon_end"] = number<double>([](RunConfig& c) -> auto& { return c.train.epsilon_end; });
    t["train.epsilon_decay_fraction"] =
        number<double>([](RunConfig& c) -> auto& { return c.train.epsilon_decay_fraction; });
    t["train.batch_episodes"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.batch_episodes; });
    t["train.tau0_per_episode"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.tau0_per_episode; });
    t["train.snapshot_period"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.snapshot_period; });
    t["train.target_period"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.target_period; });
    t["train.optimizer"] = [](RunConfig& c, const std::string& v, const P&) {
      c.train.optimizer.kind = diff::parse_optimizer_kind(trim(v));
    };
    t["train.learning_rate"] = number<double>([](RunConfig& c) -> auto& { return c.train.optimizer.learning_rate; });
    t["train.adam_beta1"] = number<double>([](RunConfig& c) -> auto& { return c.train.optimizer.beta1; });
    t["train.adam_beta2"] = number<double>([](RunConfig& c) -> auto& { return c.train.optimizer.beta2; });
    t["train.adam_epsilon"] = number<double>([](RunConfig& c) -> auto& { return c.train.optimizer.epsilon; });
    t["train.hidden_widths"] = [](RunConfig& c, const std::string& v, const P&) { c.train.hidden_widths = parse_widths(v); };
    t["train.shaping_width"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.shaping_width; });
    t["train.activation"] = [](RunConfig& c, const std::string& v, const P&) {
      const std::string s = trim(v);
      if (s == "tanh") c.train.activation = diff::Activation::tanh;
      else if (s == "relu") c.train.activation = diff::Activation::relu;
      else throw std::invalid_argument("expected tanh or relu, got '" + s + "'");
    };
    t["train.particles"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.particles; });
    t["train.belief_hidden"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.belief_hidden; });
    t["train.kappa"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.kappa; });
    t["train.filter_width"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.train.filter_width; });
    t["train.beta"] = number<double>([](RunConfig& c) -> auto& { return c.train.beta; });
    t["train.likelihood_on_propagated"] =
        flag([](RunConfig& c) -> auto& { return c.train.likelihood_on_propagated; });
    t["train.freeze_filter"] = flag([](RunConfig& c) -> auto& { return c.train.freeze_filter; });
    t["train.select_mode"] = [](RunConfig& c, const std::string& v, const P&) {
      c.train.select_mode = regret::parse_select_mode(trim(v));
    };
    t["train.offset_bootstrap_exponent"] = flag([](RunConfig& c) -> auto& { return c.train.offset_bootstrap_exponent; });
    t["train.kappa_concat_obs"] = flag([](RunConfig& c) -> auto& { return c.train.kappa_concat_obs; });
    t["train.opponent"] = [](RunConfig& c, const std::string& v, const P&) {
      c.train.opponent = trainer::parse_train_opponent(trim(v));
    };

    t["matrix.payoff_file"] = [](RunConfig& c, const std::string& v, const P& base) {
      c.payoff_file = trim(v);
      if (c.payoff_file.empty()) {
        c.payoffs = envs::Payoffs::canonical();
        return;
      }
      std::filesystem::path p(c.payoff_file);
      if (p.is_relative() && !base.empty()) p = base / p;
      c.payoffs = envs::load_payoffs(p);
    };

    t["battle.preset"] = [](RunConfig& c, const std::string& v, const P&) {
      const std::string s = trim(v);
      if (s == "small") c.battle = envs::BattleConfig::small();
      else if (s == "large") c.battle = envs::BattleConfig::large();
      else throw std::invalid_argument("expected small or large, got '" + s + "'");
    };
    t["battle.width"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.battle.width; });
    t["battle.height"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.battle.height; });
    t["battle.agents"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.battle.agents; });
    t["battle.hp"] = number<int>([](RunConfig& c) -> auto& { return c.battle.hp; });
    t["battle.view"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.battle.view; });
    t["battle.minimap"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.battle.minimap; });
    t["battle.max_ticks"] = number<std::size_t>([](RunConfig& c) -> auto& { return c.battle.max_ticks; });
    t["battle.reward_move"] = number<double>([](RunConfig& c) -> auto& { return c.battle.utilities.move; });
    t["battle.reward_kill_enemy"] = number<double>([](RunConfig& c) -> auto& { return c.battle.utilities.kill_enemy; });
    t["battle.reward_attack_enemy"] =
        number<double>([](RunConfig& c) -> auto& { return c.battle.utilities.attack_enemy; });
    t["battle.reward_attack_blank"] =
        number<double>([](RunConfig& c) -> auto& { return c.battle.utilities.attack_blank; });
    t["battle.reward_attacked_or_killed"] =
        number<double>([](RunConfig& c) -> auto& { return c.battle.utilities.attacked_or_killed; });
    return t;
  }();
  return table;
}

nlohmann::json battle_json(const envs::BattleConfig& b) {
  return {{"width", b.width},
          {"height", b.height},
          {"agents", b.agents},
          {"hp", b.hp},
          {"view", b.view},
          {"minimap", b.minimap},
          {"max_ticks", b.max_ticks},
          {"reward_move", b.utilities.move},
          {"reward_kill_enemy", b.utilities.kill_enemy},
          {"reward_attack_enemy", b.utilities.attack_enemy},
          {"reward_attack_blank", b.utilities.attack_blank},
          {"reward_attacked_or_killed", b.utilities.attacked_or_killed}};
}

envs::BattleConfig battle_from(const nlohmann::json& j) {
  envs::BattleConfig b;
  b.width = j.at("width");
  b.height = j.at("height");
  b.agents = j.at("agents");
  b.hp = j.at("hp");
  b.view = j.at("view");
  b.minimap = j.at("minimap");
  b.max_ticks = j.at("max_ticks");
  b.utilities.move = j.at("reward_move");
  b.utilities.kill_enemy = j.at("reward_kill_enemy");
  b.utilities.attack_enemy = j.at("reward_attack_enemy");
  b.utilities.attack_blank = j.at("reward_attack_blank");
  b.utilities.attacked_or_killed = j.at("reward_attacked_or_killed");
  return b;
}

}  // namespace

EnvKind parse_env_kind(const std::string& s) {
  if (s == "matrix") return EnvKind::matrix;
  if (s == "battle") return EnvKind::battle;
  throw std::invalid_argument("unknown env '" + s + "' (expected matrix|battle)");
}

std::string to_string(EnvKind k) { return k == EnvKind::matrix ? "matrix" : "battle"; }

void RunConfig::validate() const {
  train.validate();
  if (env == EnvKind::battle) battle.validate();
  if (eval_every == 0) throw std::invalid_argument("run.eval_every must be positive");
  if (eval_episodes == 0) throw std::invalid_argument("run.eval_episodes must be positive");
  if (eval_opponent != "self" && eval_opponent != "scripted" && eval_opponent != "random") {
    throw std::invalid_argument("run.eval_opponent must be self|scripted|random, got '" + eval_opponent + "'");
  }
  for (double p : payoffs.v)
    if (!std::isfinite(p)) throw std::invalid_argument("matrix payoffs must be finite");
}

nlohmann::json RunConfig::to_json() const {
  return {{"env", to_string(env)},
          {"seed", seed},
          {"eval_every", eval_every},
          {"eval_episodes", eval_episodes},
          {"eval_opponent", eval_opponent},
          {"wall_clock", wall_clock},
          {"train", train.to_json()},
          {"payoff_file", payoff_file},
          {"payoffs", payoffs.v},
          {"battle", battle_json(battle)}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  c.env = parse_env_kind(j.at("env").get<std::string>());
  c.seed = j.at("seed");
  c.eval_every = j.at("eval_every");
  c.eval_episodes = j.at("eval_episodes");
  c.eval_opponent = j.at("eval_opponent");
  c.wall_clock = j.at("wall_clock");
  c.train = trainer::TrainConfig::from_json(j.at("train"));
  c.payoff_file = j.at("payoff_file");
  c.payoffs.v = j.at("payoffs").get<std::array<double, 16>>();
  c.battle = battle_from(j.at("battle"));
  return c;
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  RunConfig c;
  // battle.preset first so explicit battle keys override it
  std::vector<std::pair<std::string, std::string>> entries;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw std::runtime_error("config: key '" + section + "' must be inside a section");
    for (const auto& [key, value] : body) entries.emplace_back(section + "." + key, value.data());
  }
  std::stable_partition(entries.begin(), entries.end(), [](const auto& e) { return e.first == "battle.preset"; });
  const auto& table = setters();
  for (const auto& [key, value] : entries) {
    const auto it = table.find(key);
    if (it == table.end()) throw std::runtime_error("config: unknown key '" + key + "'");
    try {
      it->second(c, value, base_dir);
    } catch (const std::exception& e) {
      throw std::runtime_error("config: " + key + ": " + e.what());
    }
  }
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  return parse_run_config(in, path.parent_path());
}

std::unique_ptr<envs::Env> make_env(const RunConfig& config) {
  if (config.env == EnvKind::matrix) return std::make_unique<envs::MatrixGame>(config.payoffs);
  return std::make_unique<envs::BattleEnv>(config.battle);
}

}  // namespace mrgr::harness
