// Acceptance checks. Usage: acceptance <criterion 1-8> [--work DIR]
// Prints one "criterion N: PASS|FAIL ..." line and exits 0 only on PASS.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mrgr/belief/filter.hpp"
#include "mrgr/diffcore/grad_check.hpp"
#include "mrgr/diffcore/ops.hpp"
#include "mrgr/envs/battle.hpp"
#include "mrgr/envs/matrix_game.hpp"
#include "mrgr/harness/config.hpp"
#include "mrgr/harness/run.hpp"
#include "mrgr/regret/regret.hpp"
#include "mrgr/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace mrgr;
using diff::Tensor;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path g_work;

fs::path config_path(const std::string& name) { return fs::path(MRGR_CONFIG_DIR) / name; }

std::string fixed(double x, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << std::fixed << x;
  return s.str();
}

Tensor random_tensor(Rng& rng, std::size_t r, std::size_t c, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(r * c);
  for (double& x : v) x = d(rng);
  return Tensor::from(r, c, std::move(v));
}

void randomize(std::vector<Tensor> params, Rng& rng, double scale) {
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto& p : params)
    for (double& x : p.mutable_data()) x = d(rng);
}

std::vector<trainer::TeamTrace> play(const trainer::NetworkBundle& bundle, envs::Env& env, std::size_t episodes,
                                     std::uint64_t seed, double epsilon) {
  std::vector<trainer::TeamTrace> out;
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::size_t teams = env.spec().teams;
    trainer::LearnerController learner(bundle, {epsilon, epsilon == 0.0, regret::SelectMode::greedy});
    trainer::RandomController other;
    std::vector<trainer::Controller*> ctrl{&learner};
    if (teams == 2) ctrl.push_back(&other);
    const bool rec[2] = {true, false};
    out.push_back(trainer::rollout_episode(env, ctrl, std::span<const bool>(rec, teams), derive_seed(seed, e)).traces[0]);
  }
  return out;
}

std::vector<trainer::Sample> all_samples(const std::vector<trainer::TeamTrace>& traces) {
  std::vector<trainer::Sample> s;
  for (std::size_t t = 0; t < traces.size(); ++t)
    for (std::size_t k = 0; k < traces[t].length(); ++k) s.push_back({t, k});
  return s;
}

envs::BattleConfig tiny_battle() {
  envs::BattleConfig b;
  b.width = 8;
  b.height = 8;
  b.agents = 3;
  b.view = 3;
  b.minimap = 2;
  b.max_ticks = 6;
  return b;
}

trainer::TrainConfig tiny_train(trainer::Method m, Rng& rng) {
  trainer::TrainConfig c;
  c.method = m;
  c.hidden_widths = {4 + uniform_index(rng, 4)};
  c.shaping_width = 4;
  c.particles = 2 + uniform_index(rng, 3);
  c.belief_hidden = 3;
  c.kappa = 3;
  c.filter_width = 4;
  c.k = uniform_index(rng, 3);
  c.gamma = 0.8 + 0.19 * uniform01(rng);
  c.kappa_concat_obs = uniform01(rng) < 0.5;
  c.single_thread = true;
  return c;
}

// ---------------------------------------------------------------------------
// 1. Matrix-game optimum.

Verdict matrix_optimum() {
  const double optimum = envs::matrix_optimal(envs::Payoffs::canonical()).value;
  const std::vector<std::string> regret_methods{"vrm", "bvrm", "bvrm_shaping"};
  const std::vector<std::string> baselines{"iql", "vdn"};
  std::map<std::string, std::vector<double>> finals;
  for (const auto& m : regret_methods) finals[m];
  for (const auto& m : baselines) finals[m];
  for (auto& [method, results] : finals) {
    for (std::uint64_t seed : {1, 2, 3}) {
      harness::RunConfig cfg = harness::load_run_config(config_path("matrix_" + method + ".ini"));
      cfg.seed = seed;
      cfg.train.single_thread = false;
      const fs::path out = g_work / "matrix" / (method + "_" + std::to_string(seed));
      const auto rep = harness::run_train(cfg, out);
      results.push_back(rep.last_eval ? rep.last_eval->mean_return : std::nan(""));
      std::cout << "  matrix " << method << " seed " << seed << ": eval return " << results.back() << std::endl;
    }
  }
  bool pass = true;
  std::ostringstream d;
  d << "optimum " << optimum << ";";
  for (const auto& m : regret_methods) {
    const auto hits = std::count(finals[m].begin(), finals[m].end(), optimum);
    pass = pass && hits == 3;
    d << ' ' << m << ' ' << hits << "/3 at optimum;";
  }
  for (const auto& m : baselines) {
    const auto& r = finals[m];
    const bool bounded = std::all_of(r.begin(), r.end(), [&](double x) { return x <= optimum; });
    const auto trapped = std::count(r.begin(), r.end(), 7.0);
    pass = pass && bounded && trapped >= 2;
    d << ' ' << m << ' ' << trapped << "/3 trapped at 7" << (bounded ? "" : " (exceeds optimum)") << ';';
  }
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// 2. Battle ordering.

Verdict battle_ordering() {
  const std::vector<std::string> methods{"iql", "vrm", "bvrm", "bvrm_shaping"};
  const std::size_t episodes = 50;
  std::size_t beats_iql = 0, ordered = 0;
  std::ostringstream d;
  for (std::uint64_t seed : {1, 2, 3}) {
    std::map<std::string, fs::path> ckpt;
    for (const auto& m : methods) {
      harness::RunConfig cfg = harness::load_run_config(config_path("battle_" + m + ".ini"));
      cfg.seed = seed;
      const fs::path out = g_work / "battle" / (m + "_" + std::to_string(seed));
      harness::run_train(cfg, out);
      ckpt[m] = out / "final.mrgr";
    }
    auto h2h = [&](const std::string& a, const std::string& b) {
      const double w = *harness::run_eval(ckpt[a], episodes, ckpt[b].string(), derive_seed(seed, 0xB7)).win_rate;
      std::cout << "  battle seed " << seed << ": " << a << " vs " << b << " win_rate " << w << std::endl;
      return w;
    };
    const double vs_iql = h2h("bvrm_shaping", "iql");
    const double s_b = h2h("bvrm_shaping", "bvrm");
    const double b_v = h2h("bvrm", "vrm");
    if (vs_iql >= 0.6) ++beats_iql;
    if (s_b >= 0.5 && b_v >= 0.5) ++ordered;
    d << " seed " << seed << ": vs iql " << fixed(vs_iql, 2) << ", shaping vs bvrm " << fixed(s_b, 2)
      << ", bvrm vs vrm " << fixed(b_v, 2) << ';';
  }
  d << " beats iql " << beats_iql << "/3, ordering " << ordered << "/3";
  return {beats_iql >= 2 && ordered >= 2, d.str()};
}

// ---------------------------------------------------------------------------
// 3. Consistency of the decomposed team regret.

Verdict consistency() {
  std::size_t violations = 0, trials = 0;
  std::ostringstream d;
  for (std::size_t n : {2, 3, 4}) {
    for (std::size_t a : {2, 3, 6}) {
      const auto r = regret::consistency_check(n, a, 10000, derive_seed(2024, n, a));
      violations += r.violations();
      trials += r.trials;
      if (r.violations() > 0) d << " [" << r.summary() << "]";
    }
  }
  return {violations == 0, std::to_string(trials) + " trials, " + std::to_string(violations) + " violations" + d.str()};
}

// ---------------------------------------------------------------------------
// 4. Soft-resample closed forms.

Verdict soft_resample_forms() {
  Rng rng(404);
  double bayes_err = 0.0, uniform_err = 0.0, min_half = 1.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t x = 2 + uniform_index(rng, 31);
    Tensor w = random_tensor(rng, 1, x, 1e-3, 1.0);
    double s = 0.0;
    for (double v : w.data()) s += v;
    for (double& v : w.mutable_data()) v /= s;
    const Tensor l = random_tensor(rng, 1, x, 1e-6, 1e3);
    const Tensor b1 = belief::soft_resample(w, l, 1.0);
    const Tensor b0 = belief::soft_resample(w, l, 0.0);
    const Tensor bh = belief::soft_resample(w, l, 0.5);
    double z = 0.0;
    for (std::size_t j = 0; j < x; ++j) z += l.at(0, j) * w.at(0, j);
    for (std::size_t j = 0; j < x; ++j) {
      bayes_err = std::max(bayes_err, std::abs(b1.at(0, j) - l.at(0, j) * w.at(0, j) / z));
      uniform_err = std::max(uniform_err, std::abs(b0.at(0, j) - 1.0 / static_cast<double>(x)));
      min_half = std::min(min_half, bh.at(0, j));
    }
  }
  std::ostringstream d;
  d << "max |beta=1 - Bayes| " << bayes_err << ", max |beta=0 - uniform| " << uniform_err
    << ", min weight at beta=0.5 " << min_half;
  return {bayes_err <= 1e-12 && uniform_err <= 1e-12 && min_half > 0.0, d.str()};
}

// ---------------------------------------------------------------------------
// 5. Gradient suite.

Verdict gradients() {
  double worst_loss = 0.0, worst_single = 0.0, worst_chain = 0.0;
  std::string where;
  auto note = [&](double& worst, double e, const std::string& label) {
    if (e > worst) worst = e;
    if (e >= (label.find("chain") == std::string::npos ? 1e-4 : 1e-3)) where += " " + label;
  };

  const std::vector<trainer::Method> methods{trainer::Method::vrm, trainer::Method::bvrm,
                                             trainer::Method::bvrm_shaping, trainer::Method::arm,
                                             trainer::Method::iql, trainer::Method::vdn};
  for (std::size_t inst = 0; inst < 24; ++inst) {
    Rng rng(derive_seed(505, inst));
    const trainer::Method m = methods[inst % methods.size()];
    std::unique_ptr<envs::Env> env;
    if (inst % 2 == 0) env = std::make_unique<envs::MatrixGame>(envs::Payoffs::canonical());
    else env = std::make_unique<envs::BattleEnv>(tiny_battle());
    const trainer::TrainConfig c = tiny_train(m, rng);
    trainer::NetworkBundle b(c, env->spec(), derive_seed(506, inst));
    for (auto* net : {&b.q, &b.q_prev, &b.v, &b.v_target, &b.shaping}) randomize(net->params(), rng, 0.6);
    if (b.has_filter()) randomize(b.filter.params(), rng, 0.6);
    const auto traces = play(b, *env, 3, derive_seed(507, inst), 0.5);
    const auto samples = all_samples(traces);
    const std::string label = trainer::to_string(m) + "#" + std::to_string(inst);
    if (m == trainer::Method::iql || m == trainer::Method::vdn) {
      auto q = b.q.params();
      note(worst_loss, diff::grad_check([&] { return trainer::loss_td(b, c, traces, samples).loss; }, q)
                           .max_relative_error, label + ":td");
      continue;
    }
    auto q = b.q.params();
    note(worst_loss, diff::grad_check([&] { return trainer::loss_q(b, c, traces, samples).loss; }, q)
                         .max_relative_error, label + ":q");
    auto v = b.v_group_params(true);
    note(worst_loss, diff::grad_check([&] { return trainer::loss_v(b, c, traces, samples).loss; }, v)
                         .max_relative_error, label + ":v");
  }

  for (std::size_t inst = 0; inst < 12; ++inst) {
    Rng rng(derive_seed(606, inst));
    belief::FilterConfig fc;
    fc.obs_dim = 2 + uniform_index(rng, 3);
    fc.n_actions = 2 + uniform_index(rng, 3);
    fc.particles = 2 + uniform_index(rng, 4);
    fc.hidden = 3 + uniform_index(rng, 3);
    fc.kappa = 2 + uniform_index(rng, 3);
    fc.net_width = 4 + uniform_index(rng, 3);
    fc.beta = uniform01(rng);
    fc.likelihood_on_propagated = inst % 2 == 1;
    if (inst % 3 == 2) fc.activation = diff::Activation::relu;
    belief::FilterNets nets(fc, rng);
    const std::size_t batch = 1 + uniform_index(rng, 3);
    for (std::size_t steps : {1u, 5u}) {
      std::vector<Tensor> obs, acts, probes;
      for (std::size_t s = 0; s < steps; ++s) {
        obs.push_back(random_tensor(rng, batch, fc.obs_dim, -1.0, 1.0));
        std::vector<std::size_t> a(batch);
        for (auto& x : a) x = uniform_index(rng, fc.n_actions + 1);
        acts.push_back(belief::one_hot_rows(a, fc.n_actions));
        probes.push_back(random_tensor(rng, batch, fc.kappa, -1.0, 1.0));
      }
      const belief::Belief start = belief::init_belief(batch, fc.particles, fc.hidden);
      auto params = nets.params();
      const auto rep = diff::grad_check(
          [&] {
            belief::Belief bel = start;
            Tensor total = Tensor::scalar(0.0);
            for (std::size_t s = 0; s < steps; ++s) {
              auto r = nets.update(bel, acts[s], obs[s]);
              total = diff::add(total, diff::sum(diff::mul(r.kappa, probes[s])));
              bel = r.belief;
            }
            return total;
          },
          params);
      if (steps == 1) note(worst_single, rep.max_relative_error, "filter#" + std::to_string(inst));
      else note(worst_chain, rep.max_relative_error, "filter-chain#" + std::to_string(inst));
    }
  }
  std::ostringstream d;
  d << "max rel err: losses " << worst_loss << ", filter " << worst_single << ", 5-step chain " << worst_chain;
  if (!where.empty()) d << "; over tolerance:" << where;
  return {worst_loss < 1e-4 && worst_single < 1e-4 && worst_chain < 1e-3, d.str()};
}

// ---------------------------------------------------------------------------
// 6. Shaping argmax invariance.

Verdict shaping_invariance() {
  std::size_t changed = 0, decisions = 0;
  for (std::size_t draw = 0; draw < 1000; ++draw) {
    Rng rng(derive_seed(707, draw));
    std::unique_ptr<envs::Env> env;
    if (draw % 2 == 0) env = std::make_unique<envs::MatrixGame>(envs::Payoffs::canonical());
    else env = std::make_unique<envs::BattleEnv>(tiny_battle());
    const trainer::TrainConfig c = tiny_train(trainer::Method::bvrm_shaping, rng);
    trainer::NetworkBundle b(c, env->spec(), derive_seed(708, draw));
    randomize(b.q.params(), rng, 1.0);
    randomize(b.v.params(), rng, 1.0);
    const std::uint64_t seed = derive_seed(709, draw);
    const auto base = play(b, *env, 1, seed, 0.0);

    auto shifted = b;
    shifted.shaping = b.shaping.clone();
    auto bias = shifted.shaping.params().back().mutable_data();
    bias[0] += std::uniform_real_distribution<double>(-100.0, 100.0)(rng);
    const auto with_constant = play(shifted, *env, 1, seed, 0.0);

    auto fresh = b;
    fresh.shaping = b.shaping.clone();
    randomize(fresh.shaping.params(), rng, 3.0);
    const auto with_fresh = play(fresh, *env, 1, seed, 0.0);

    for (const auto* other : {&with_constant, &with_fresh}) {
      const auto& x = base[0].steps;
      const auto& y = (*other)[0].steps;
      for (std::size_t s = 0; s < std::max(x.size(), y.size()); ++s) {
        for (std::size_t i = 0; i < env->spec().agents; ++i) {
          ++decisions;
          if (s >= x.size() || s >= y.size() || x[s].actions[i] != y[s].actions[i]) ++changed;
        }
      }
    }
  }
  return {changed == 0, std::to_string(decisions) + " decisions compared, " + std::to_string(changed) + " changed"};
}

// ---------------------------------------------------------------------------
// 7. Tabular recursion.

Verdict tabular_recursion() {
  std::size_t mismatches = 0, entries = 0;
  for (std::size_t seq = 0; seq < 1000; ++seq) {
    Rng rng(derive_seed(808, seq));
    std::normal_distribution<double> d(0.0, 10.0);
    const std::size_t n_actions = 2 + uniform_index(rng, 4);
    std::vector<regret::InfoStateKey> keys;
    while (keys.size() < 4) {
      std::vector<std::int64_t> h(1 + uniform_index(rng, 4));
      for (auto& t : h) t = static_cast<std::int64_t>(uniform_index(rng, 5));
      auto key = regret::InfoStateKey::make(uniform_index(rng, 3), h, 8);
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(std::move(key));
    }
    regret::RegretTable table;
    std::map<regret::ActionKey, double> expected;
    for (int step = 0; step < 100; ++step) {
      std::map<regret::ActionKey, double> q;
      std::map<regret::InfoStateKey, double> v;
      for (const auto& key : keys) {
        if (uniform01(rng) < 0.3) continue;
        const double vi = d(rng);
        v[key] = vi;
        for (std::size_t a = 0; a < n_actions; ++a) {
          if (uniform01(rng) < 0.5) continue;
          const double qa = d(rng);
          q[{key, a}] = qa;
          expected[{key, a}] += qa - vi;
        }
      }
      table.update(q, v);
    }
    for (const auto& [k, e] : expected) {
      ++entries;
      if (table.value(k.first, k.second) != e) ++mismatches;
    }
    if (table.size() != expected.size() || table.episode_count() != 100) ++mismatches;
  }
  return {mismatches == 0, std::to_string(entries) + " entries checked, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------
// 8. Reproducibility.

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict reproducibility() {
  std::ostringstream d;
  bool pass = true;
  for (const std::string env : {"matrix", "battle"}) {
    harness::RunConfig cfg = harness::load_run_config(config_path(env + "_bvrm_shaping.ini"));
    cfg.seed = 17;
    cfg.train.single_thread = true;
    cfg.train.iterations = env == "matrix" ? 120 : 12;
    cfg.eval_every = env == "matrix" ? 40 : 4;
    cfg.eval_episodes = env == "matrix" ? 10 : 4;
    const fs::path root = g_work / "repro" / env;
    fs::remove_all(root);
    harness::run_train(cfg, root / "a");
    harness::run_train(cfg, root / "b");
    const bool same_runs = slurp(root / "a" / "metrics.csv") == slurp(root / "b" / "metrics.csv") &&
                           slurp(root / "a" / "eval.csv") == slurp(root / "b" / "eval.csv");

    // Interrupted between checkpoints, then resumed from the last one.
    harness::run_train(cfg, root / "c", {.stop_after = cfg.train.iterations - 2 * cfg.eval_every + 1});
    harness::run_train(cfg, root / "c", {.resume = true});
    const bool same_resume = slurp(root / "a" / "metrics.csv") == slurp(root / "c" / "metrics.csv") &&
                             slurp(root / "a" / "eval.csv") == slurp(root / "c" / "eval.csv") &&
                             slurp(root / "a" / "checkpoint.mrgr") == slurp(root / "c" / "checkpoint.mrgr") &&
                             slurp(root / "a" / "final.mrgr") == slurp(root / "c" / "final.mrgr");
    pass = pass && same_runs && same_resume;
    d << ' ' << env << ": repeat " << (same_runs ? "identical" : "DIFFERS") << ", resume "
      << (same_resume ? "identical" : "DIFFERS") << ';';
  }
  return {pass, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = 0;
  std::string work = "acceptance_runs";
  app.add_option("criterion", criterion, "criterion number")->required()->check(CLI::Range(1, 8));
  app.add_option("--work", work, "directory for training runs");
  CLI11_PARSE(app, argc, argv);
  g_work = work;

  const std::map<int, std::function<Verdict()>> checks{
      {1, matrix_optimum},   {2, battle_ordering},    {3, consistency},       {4, soft_resample_forms},
      {5, gradients},        {6, shaping_invariance}, {7, tabular_recursion}, {8, reproducibility}};
  Verdict v;
  try {
    v = checks.at(criterion)();
  } catch (const std::exception& e) {
    v = {false, std::string("error: ") + e.what()};
  }
  std::cout << "criterion " << criterion << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << std::endl;
  return v.pass ? EXIT_SUCCESS : EXIT_FAILURE;
}
