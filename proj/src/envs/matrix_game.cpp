#include "mrgr/envs/matrix_game.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mrgr::envs {

Payoffs Payoffs::canonical() {
  Payoffs p = constant(7.0);
  p.at(0, 0, 0, 0) = 8.0;
  p.at(0, 0, 0, 1) = -12.0;
  p.at(0, 0, 1, 0) = -12.0;
  p.at(0, 0, 1, 1) = 0.0;
  return p;
}

Payoffs Payoffs::constant(double c) {
  Payoffs p;
  p.v.fill(c);
  return p;
}

Payoffs load_payoffs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open payoff file: " + path.string());
  std::string header;
  std::getline(in, header);
  Payoffs p;
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    if (!(in >> p.v[i])) {
      throw std::runtime_error("payoff file " + path.string() + ": expected 16 reals, read " +
                               std::to_string(i));
    }
    if (!std::isfinite(p.v[i])) throw std::runtime_error("payoff file " + path.string() + ": non-finite payoff");
  }
  std::string extra;
  if (in >> extra) throw std::runtime_error("payoff file " + path.string() + ": trailing data '" + extra + "'");
  return p;
}

void save_payoffs(const std::filesystem::path& path, const Payoffs& p) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write payoff file: " + path.string());
  out << "# matrix payoffs: [column][row] blocks, each [subcolumn][subrow] row-major\n";
  out.precision(17);
  for (int col = 0; col < 2; ++col)
    for (int row = 0; row < 2; ++row) {
      for (int sc = 0; sc < 2; ++sc) {
        out << p.at(col, row, sc, 0) << ' ' << p.at(col, row, sc, 1) << (sc == 0 ? "  " : "\n");
      }
    }
}

MatrixOptimum matrix_optimal(const Payoffs& p) {
  MatrixOptimum best;
  best.value = -INFINITY;
  for (int code = 0; code < 16; ++code) {
    const MatrixTrajectory t{code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1};
    const double r = p.at(t[1], t[0], t[3], t[2]);
    if (r > best.value) {
      best.value = r;
      best.argmax.clear();
    }
    if (r == best.value) best.argmax.push_back(t);
  }
  return best;
}

MatrixGame::MatrixGame(Payoffs payoffs) : payoffs_(payoffs) {
  spec_.name = "matrix";
  spec_.teams = 1;
  spec_.agents = 2;
  spec_.actions = 2;
  spec_.obs_dim = 4;
  spec_.state_dim = 7;
  spec_.max_steps = 2;
}

void MatrixGame::reset(std::uint64_t) {
  phase_ = MatrixPhase::choose_matrix;
  row_ = column_ = -1;
  accrued_ = 0.0;
}

std::size_t MatrixGame::steps_taken() const {
  switch (phase_) {
    case MatrixPhase::choose_matrix: return 0;
    case MatrixPhase::choose_cell: return 1;
    case MatrixPhase::terminal: return 2;
  }
  return 0;
}

StepOutcome MatrixGame::step(const JointActions& actions) {
  if (phase_ == MatrixPhase::terminal) throw std::logic_error("matrix game: step after terminal");
  if (actions.size() != 1 || actions[0].size() != 2) {
    throw std::invalid_argument("matrix game: expected one team of two actions");
  }
  for (std::size_t a : actions[0]) {
    if (a > 1) throw std::out_of_range("matrix game: action " + std::to_string(a) + " out of range [0, 2)");
  }
  const int a0 = static_cast<int>(actions[0][0]);
  const int a1 = static_cast<int>(actions[0][1]);
  if (phase_ == MatrixPhase::choose_matrix) {
    row_ = a0;
    column_ = a1;
    phase_ = MatrixPhase::choose_cell;
    return {{0.0}, false};
  }
  const double r = payoffs_.at(column_, row_, a1, a0);
  accrued_ += r;
  phase_ = MatrixPhase::terminal;
  return {{r}, true};
}

std::vector<double> MatrixGame::observe(std::size_t team, std::size_t agent) const {
  if (team != 0 || agent > 1) throw std::out_of_range("matrix game: no such agent");
  std::vector<double> o(4, 0.0);
  if (phase_ == MatrixPhase::choose_matrix) o[0] = 1.0;
  if (phase_ == MatrixPhase::choose_cell) o[1] = 1.0;
  if (phase_ != MatrixPhase::choose_matrix) o[2 + static_cast<std::size_t>(agent == 0 ? row_ : column_)] = 1.0;
  return o;
}

std::vector<double> MatrixGame::state(std::size_t team) const {
  if (team != 0) throw std::out_of_range("matrix game: single team");
  std::vector<double> s(7, 0.0);
  s[static_cast<std::size_t>(steps_taken())] = 1.0;
  if (phase_ != MatrixPhase::choose_matrix) s[3 + static_cast<std::size_t>(row_ * 2 + column_)] = 1.0;
  return s;
}

}  // namespace mrgr::envs
