#include "mrgr/trainer/config.hpp"

#include <algorithm>
#include <stdexcept>

namespace mrgr::trainer {

Method parse_method(const std::string& s) {
  if (s == "vrm") return Method::vrm;
  if (s == "bvrm") return Method::bvrm;
  if (s == "bvrm_shaping") return Method::bvrm_shaping;
  if (s == "iql") return Method::iql;
  if (s == "vdn") return Method::vdn;
  if (s == "arm") return Method::arm;
  throw std::invalid_argument("unknown method '" + s + "' (expected vrm|bvrm|bvrm_shaping|iql|vdn|arm)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::vrm: return "vrm";
    case Method::bvrm: return "bvrm";
    case Method::bvrm_shaping: return "bvrm_shaping";
    case Method::iql: return "iql";
    case Method::vdn: return "vdn";
    case Method::arm: return "arm";
  }
  return "?";
}

bool uses_filter(Method m) { return m == Method::bvrm || m == Method::bvrm_shaping; }
bool uses_shaping(Method m) { return m == Method::bvrm_shaping; }
bool is_value_based(Method m) { return m == Method::iql || m == Method::vdn; }

TrainOpponent parse_train_opponent(const std::string& s) {
  if (s == "self") return TrainOpponent::self;
  if (s == "scripted") return TrainOpponent::scripted;
  if (s == "random") return TrainOpponent::random;
  throw std::invalid_argument("unknown training opponent '" + s + "' (expected self|scripted|random)");
}

std::string to_string(TrainOpponent o) {
  switch (o) {
    case TrainOpponent::self: return "self";
    case TrainOpponent::scripted: return "scripted";
    case TrainOpponent::random: return "random";
  }
  return "?";
}

double TrainConfig::epsilon_at(std::size_t iteration) const {
  const double decay = epsilon_decay_fraction * static_cast<double>(iterations);
  if (decay <= 0.0 || static_cast<double>(iteration) >= decay) return epsilon_end;
  return epsilon_start + (epsilon_end - epsilon_start) * static_cast<double>(iteration) / decay;
}

void TrainConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  auto unit = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!unit(epsilon_start) || !unit(epsilon_end) || !unit(epsilon_decay_fraction)) {
    throw std::invalid_argument("epsilon schedule values must lie in [0, 1]");
  }
  if (iterations == 0) throw std::invalid_argument("iterations must be positive");
  if (batch_episodes == 0) throw std::invalid_argument("batch_episodes must be positive");
  if (snapshot_period == 0 || target_period == 0) throw std::invalid_argument("snapshot and target periods must be positive");
  if (!(optimizer.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (hidden_widths.empty() || std::find(hidden_widths.begin(), hidden_widths.end(), 0u) != hidden_widths.end()) {
    throw std::invalid_argument("hidden_widths must be non-empty and positive");
  }
  if (shaping_width == 0) throw std::invalid_argument("shaping_width must be positive");
  if (particles == 0 || belief_hidden == 0 || kappa == 0 || filter_width == 0) {
    throw std::invalid_argument("filter sizes must be positive");
  }
  if (!unit(beta)) throw std::invalid_argument("beta must lie in [0, 1]");
}

nlohmann::json TrainConfig::to_json() const {
  return {
      {"method", to_string(method)},
      {"gamma", gamma},
      {"k", k},
      {"epsilon_start", epsilon_start},
      {"epsilon_end", epsilon_end},
      {"epsilon_decay_fraction", epsilon_decay_fraction},
      {"iterations", iterations},
      {"batch_episodes", batch_episodes},
      {"tau0_per_episode", tau0_per_episode},
      {"snapshot_period", snapshot_period},
      {"target_period", target_period},
      {"optimizer", diff::to_string(optimizer.kind)},
      {"learning_rate", optimizer.learning_rate},
      {"adam_beta1", optimizer.beta1},
      {"adam_beta2", optimizer.beta2},
      {"adam_epsilon", optimizer.epsilon},
      {"hidden_widths", hidden_widths},
      {"shaping_width", shaping_width},
      {"activation", activation == diff::Activation::tanh ? "tanh" : "relu"},
      {"particles", particles},
      {"belief_hidden", belief_hidden},
      {"kappa", kappa},
      {"filter_width", filter_width},
      {"beta", beta},
      {"likelihood_on_propagated", likelihood_on_propagated},
      {"freeze_filter", freeze_filter},
      {"select_mode", regret::to_string(select_mode)},
      {"offset_bootstrap_exponent", offset_bootstrap_exponent},
      {"kappa_concat_obs", kappa_concat_obs},
      {"single_thread", single_thread},
      {"opponent", to_string(opponent)},
  };
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.method = parse_method(j.at("method").get<std::string>());
  c.gamma = j.at("gamma");
  c.k = j.at("k");
  c.epsilon_start = j.at("epsilon_start");
  c.epsilon_end = j.at("epsilon_end");
  c.epsilon_decay_fraction = j.at("epsilon_decay_fraction");
  c.iterations = j.at("iterations");
  c.batch_episodes = j.at("batch_episodes");
  c.tau0_per_episode = j.at("tau0_per_episode");
  c.snapshot_period = j.at("snapshot_period");
  c.target_period = j.at("target_period");
  c.optimizer.kind = diff::parse_optimizer_kind(j.at("optimizer").get<std::string>());
  c.optimizer.learning_rate = j.at("learning_rate");
  c.optimizer.beta1 = j.at("adam_beta1");
  c.optimizer.beta2 = j.at("adam_beta2");
  c.optimizer.epsilon = j.at("adam_epsilon");
  c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
  c.shaping_width = j.at("shaping_width");
  c.activation = j.at("activation").get<std::string>() == "relu" ? diff::Activation::relu : diff::Activation::tanh;
  c.particles = j.at("particles");
  c.belief_hidden = j.at("belief_hidden");
  c.kappa = j.at("kappa");
  c.filter_width = j.at("filter_width");
  c.beta = j.at("beta");
  c.likelihood_on_propagated = j.at("likelihood_on_propagated");
  c.freeze_filter = j.at("freeze_filter");
  c.select_mode = regret::parse_select_mode(j.at("select_mode").get<std::string>());
  c.offset_bootstrap_exponent = j.at("offset_bootstrap_exponent");
  c.kappa_concat_obs = j.at("kappa_concat_obs");
  c.single_thread = j.at("single_thread");
  c.opponent = parse_train_opponent(j.at("opponent").get<std::string>());
  return c;
}

}  // namespace mrgr::trainer
