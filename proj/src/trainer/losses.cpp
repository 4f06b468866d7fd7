#include "mrgr/trainer/losses.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "mrgr/diffcore/ops.hpp"

namespace mrgr::trainer {

using diff::Tensor;

double k_step_advantage(const TeamTrace& trace, std::size_t agent, std::size_t tau0, std::size_t k,
                        double gamma, const ValueFn& v_target, bool strict_exponent) {
  const std::size_t T = trace.length();
  if (tau0 >= T) {
    throw std::out_of_range("k_step_advantage: tau0 " + std::to_string(tau0) + " outside episode of length " +
                            std::to_string(T));
  }
  const std::size_t end = std::min(tau0 + k, T - 1);
  double total = 0.0, discount = 1.0;
  for (std::size_t tau = tau0; tau <= end; ++tau) {
    total += discount * trace.steps[tau].reward;
    discount *= gamma;
  }
  const std::size_t boot = tau0 + k + 1;
  if (boot < T && trace.steps[boot].alive[agent]) {
    const double exponent = static_cast<double>(strict_exponent ? k + tau0 + 1 : k + 1);
    total += std::pow(gamma, exponent) * v_target(boot, agent);
  }
  return total;
}

namespace {

// Agent rows gathered from traces, with the sample each row belongs to.
struct RowSet {
  std::size_t obs_dim = 0, kappa_dim = 0;
  std::vector<double> obs, kappa;
  std::vector<std::size_t> trace, step, agent, action, segment;

  std::size_t size() const { return trace.size(); }

  void add(const TeamTrace& tr, std::size_t trace_index, std::size_t s, std::size_t i,
           std::size_t seg) {
    const StepRecord& rec = tr.steps[s];
    obs.insert(obs.end(), rec.obs.begin() + static_cast<std::ptrdiff_t>(i * obs_dim),
               rec.obs.begin() + static_cast<std::ptrdiff_t>((i + 1) * obs_dim));
    kappa.insert(kappa.end(), rec.kappa.begin() + static_cast<std::ptrdiff_t>(i * kappa_dim),
                 rec.kappa.begin() + static_cast<std::ptrdiff_t>((i + 1) * kappa_dim));
    trace.push_back(trace_index);
    step.push_back(s);
    agent.push_back(i);
    action.push_back(rec.actions[i]);
    segment.push_back(seg);
  }

  Tensor obs_tensor() const { return Tensor::from(size(), obs_dim, obs); }
  Tensor kappa_tensor() const { return Tensor::from(size(), kappa_dim, kappa); }
};

RowSet make_rows(const NetworkBundle& bundle) {
  RowSet r;
  r.obs_dim = bundle.env().obs_dim;
  r.kappa_dim = bundle.kappa_dim();
  return r;
}

void check_batch(std::span<const TeamTrace> traces, std::span<const Sample> samples, const char* op) {
  if (samples.empty()) throw std::invalid_argument(std::string(op) + ": empty batch");
  for (const auto& s : samples) {
    if (s.trace >= traces.size() || s.tau0 >= traces[s.trace].length()) {
      throw std::out_of_range(std::string(op) + ": sample outside the batch");
    }
  }
}

// Rows of agents alive at tau0 for every sample.
RowSet current_rows(const NetworkBundle& bundle, std::span<const TeamTrace> traces,
                    std::span<const Sample> samples) {
  RowSet rows = make_rows(bundle);
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const TeamTrace& tr = traces[samples[s].trace];
    const StepRecord& rec = tr.steps[samples[s].tau0];
    for (std::size_t i = 0; i < tr.agents; ++i)
      if (rec.alive[i]) rows.add(tr, samples[s].trace, samples[s].tau0, i, s);
  }
  return rows;
}

// For each row of `cur`, the same agent one step later when that step exists
// and the agent is alive; next_of[r] is the index into the returned set or -1.
RowSet next_rows(const NetworkBundle& bundle, std::span<const TeamTrace> traces, const RowSet& cur,
                 std::vector<long>& next_of) {
  RowSet nxt = make_rows(bundle);
  next_of.assign(cur.size(), -1);
  for (std::size_t r = 0; r < cur.size(); ++r) {
    const TeamTrace& tr = traces[cur.trace[r]];
    const std::size_t s = cur.step[r] + 1;
    if (s >= tr.length() || !tr.steps[s].alive[cur.agent[r]]) continue;
    next_of[r] = static_cast<long>(nxt.size());
    nxt.add(tr, cur.trace[r], s, cur.agent[r], cur.segment[r]);
  }
  return nxt;
}

// Column of network outputs (no graph) for the rows; empty for empty sets.
std::vector<double> eval_rows(const NetworkBundle& bundle, const diff::Mlp& net, const RowSet& rows) {
  if (rows.size() == 0) return {};
  diff::NoGradGuard no_grad;
  const Tensor out = net.forward(bundle.input_rows(rows.kappa_tensor(), rows.obs_tensor()));
  return {out.data().begin(), out.data().end()};
}

std::vector<double> picked(const Tensor& q, std::span<const std::size_t> actions) {
  const std::size_t a = q.cols();
  std::vector<double> out(actions.size());
  for (std::size_t r = 0; r < actions.size(); ++r) out[r] = q.data()[r * a + actions[r]];
  return out;
}

std::vector<double> row_max(const std::vector<double>& q, std::size_t actions) {
  std::vector<double> out(q.size() / actions);
  for (std::size_t r = 0; r < out.size(); ++r) {
    double m = q[r * actions];
    for (std::size_t a = 1; a < actions; ++a) m = std::max(m, q[r * actions + a]);
    out[r] = m;
  }
  return out;
}

LossOutput finish(const Tensor& residual, std::size_t samples) {
  LossOutput out;
  out.loss = diff::scale(diff::sum(diff::square(residual)), 0.5 / static_cast<double>(samples));
  out.residual.assign(residual.data().begin(), residual.data().end());
  return out;
}

}  // namespace

LossOutput loss_q(const NetworkBundle& bundle, const TrainConfig& config,
                  std::span<const TeamTrace> traces, std::span<const Sample> samples) {
  check_batch(traces, samples, "loss_q");
  if (!bundle.has_values()) throw std::invalid_argument("loss_q: method has no value network");
  const RowSet cur = current_rows(bundle, traces, samples);
  std::vector<long> next_of;
  const RowSet nxt = next_rows(bundle, traces, cur, next_of);

  const Tensor x = bundle.input_rows(cur.kappa_tensor(), cur.obs_tensor());
  const Tensor q = diff::pick(bundle.q.forward(x), cur.action);
  std::vector<double> q_prev;
  {
    diff::NoGradGuard no_grad;
    q_prev = picked(bundle.q_prev.forward(x), cur.action);
  }
  const std::vector<double> v_next = eval_rows(bundle, bundle.v_target, nxt);
  const double g = config.gamma;

  if (config.method == Method::arm) {
    std::vector<double> target(cur.size());
    for (std::size_t r = 0; r < cur.size(); ++r) {
      const double boot = next_of[r] >= 0 ? g * v_next[static_cast<std::size_t>(next_of[r])] : 0.0;
      target[r] = q_prev[r] + boot + traces[cur.trace[r]].steps[cur.step[r]].reward;
    }
    return finish(diff::sub(q, Tensor::from(cur.size(), 1, target)), samples.size());
  }

  std::vector<double> target(samples.size(), 0.0);
  for (std::size_t r = 0; r < cur.size(); ++r) target[cur.segment[r]] += q_prev[r];
  for (std::size_t r = 0; r < nxt.size(); ++r) target[nxt.segment[r]] += g * v_next[r];
  for (std::size_t s = 0; s < samples.size(); ++s)
    target[s] += traces[samples[s].trace].steps[samples[s].tau0].reward;
  const Tensor sum_q = diff::segment_sum(q, cur.segment, samples.size());
  return finish(diff::sub(sum_q, Tensor::from(samples.size(), 1, target)), samples.size());
}

LossOutput loss_v(const NetworkBundle& bundle, const TrainConfig& config,
                  std::span<const TeamTrace> traces, std::span<const Sample> samples) {
  check_batch(traces, samples, "loss_v");
  if (!bundle.has_values()) throw std::invalid_argument("loss_v: method has no value network");
  const RowSet cur = current_rows(bundle, traces, samples);
  const Tensor obs = cur.obs_tensor();

  Tensor kappa = cur.kappa_tensor();
  if (bundle.has_filter()) {
    const auto& fc = bundle.filter.config();
    const std::size_t x = fc.particles, h = fc.hidden;
    std::vector<double> hidden, weights;
    hidden.reserve(cur.size() * x * h);
    weights.reserve(cur.size() * x);
    std::vector<std::size_t> prev(cur.size());
    for (std::size_t r = 0; r < cur.size(); ++r) {
      const StepRecord& rec = traces[cur.trace[r]].steps[cur.step[r]];
      const std::size_t i = cur.agent[r];
      hidden.insert(hidden.end(), rec.prev_hidden.begin() + static_cast<std::ptrdiff_t>(i * x * h),
                    rec.prev_hidden.begin() + static_cast<std::ptrdiff_t>((i + 1) * x * h));
      weights.insert(weights.end(), rec.prev_weights.begin() + static_cast<std::ptrdiff_t>(i * x),
                     rec.prev_weights.begin() + static_cast<std::ptrdiff_t>((i + 1) * x));
      prev[r] = rec.prev_actions[i];
    }
    const belief::Belief b{Tensor::from(cur.size() * x, h, std::move(hidden)),
                           Tensor::from(cur.size(), x, std::move(weights))};
    kappa = bundle.filter.update(b, belief::one_hot_rows(prev, fc.n_actions), obs).kappa;
  }
  const Tensor v = bundle.v.forward(bundle.input_rows(kappa, obs));

  // Bootstrap values for every (trace, step, agent) the advantages need.
  RowSet boot = make_rows(bundle);
  for (std::size_t r = 0; r < cur.size(); ++r) {
    const TeamTrace& tr = traces[cur.trace[r]];
    const std::size_t s = cur.step[r] + config.k + 1;
    if (s < tr.length() && tr.steps[s].alive[cur.agent[r]]) boot.add(tr, cur.trace[r], s, cur.agent[r], r);
  }
  const std::vector<double> boot_v = eval_rows(bundle, bundle.v_target, boot);
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, double> lookup;
  for (std::size_t b = 0; b < boot.size(); ++b) lookup[{boot.trace[b], boot.step[b], boot.agent[b]}] = boot_v[b];

  std::vector<double> adv(cur.size());
  for (std::size_t r = 0; r < cur.size(); ++r) {
    const std::size_t t = cur.trace[r];
    const ValueFn vt = [&](std::size_t step, std::size_t agent) { return lookup.at({t, step, agent}); };
    adv[r] = k_step_advantage(traces[t], cur.agent[r], cur.step[r], config.k, config.gamma, vt,
                              config.offset_bootstrap_exponent);
  }

  if (config.method == Method::arm) {
    return finish(diff::sub(Tensor::from(cur.size(), 1, adv), v), samples.size());
  }
  std::vector<double> sum_adv(samples.size(), 0.0);
  for (std::size_t r = 0; r < cur.size(); ++r) sum_adv[cur.segment[r]] += adv[r];
  Tensor residual = diff::sub(Tensor::from(samples.size(), 1, sum_adv),
                              diff::segment_sum(v, cur.segment, samples.size()));
  if (bundle.has_shaping()) {
    const std::size_t sd = bundle.env().state_dim;
    std::vector<double> states;
    states.reserve(samples.size() * sd);
    for (const auto& s : samples) {
      const auto& st = traces[s.trace].steps[s.tau0].state;
      states.insert(states.end(), st.begin(), st.end());
    }
    residual = diff::add(residual, bundle.shaping.forward(Tensor::from(samples.size(), sd, std::move(states))));
  }
  return finish(residual, samples.size());
}

LossOutput loss_td(const NetworkBundle& bundle, const TrainConfig& config,
                   std::span<const TeamTrace> traces, std::span<const Sample> samples) {
  check_batch(traces, samples, "loss_td");
  if (!is_value_based(bundle.method())) throw std::invalid_argument("loss_td: not a value-based method");
  const RowSet cur = current_rows(bundle, traces, samples);
  std::vector<long> next_of;
  const RowSet nxt = next_rows(bundle, traces, cur, next_of);
  const Tensor q = diff::pick(bundle.q.forward(bundle.input_rows(cur.kappa_tensor(), cur.obs_tensor())),
                              cur.action);
  const std::vector<double> q_next = row_max(eval_rows(bundle, bundle.q_prev, nxt), bundle.env().actions);
  const double g = config.gamma;

  if (bundle.method() == Method::iql) {
    std::vector<double> target(cur.size());
    for (std::size_t r = 0; r < cur.size(); ++r) {
      const double boot = next_of[r] >= 0 ? g * q_next[static_cast<std::size_t>(next_of[r])] : 0.0;
      target[r] = traces[cur.trace[r]].steps[cur.step[r]].reward + boot;
    }
    return finish(diff::sub(q, Tensor::from(cur.size(), 1, target)), cur.size());
  }
  std::vector<double> target(samples.size(), 0.0);
  for (std::size_t r = 0; r < nxt.size(); ++r) target[nxt.segment[r]] += g * q_next[r];
  for (std::size_t s = 0; s < samples.size(); ++s)
    target[s] += traces[samples[s].trace].steps[samples[s].tau0].reward;
  const Tensor sum_q = diff::segment_sum(q, cur.segment, samples.size());
  return finish(diff::sub(sum_q, Tensor::from(samples.size(), 1, target)), samples.size());
}

}  // namespace mrgr::trainer
