#pragma once

// Two-step cooperative matrix game.
//
// Step 1: agent 0 picks the row block, agent 1 the column block, selecting
// one of four 2x2 matrices. Step 2: agent 0 picks the sub-row, agent 1 the
// sub-column. The team is paid payoffs[column][row][subcolumn][subrow] at the
// end; step 1 pays nothing. Agents see only their own history.

#include <array>
#include <filesystem>
#include <vector>

#include "mrgr/envs/env.hpp"

namespace mrgr::envs {

struct Payoffs {
  // Flat index ((column * 2 + row) * 2 + subcolumn) * 2 + subrow.
  std::array<double, 16> v{};

  double& at(int column, int row, int subcolumn, int subrow) {
    return v[static_cast<std::size_t>(((column * 2 + row) * 2 + subcolumn) * 2 + subrow)];
  }
  double at(int column, int row, int subcolumn, int subrow) const {
    return v[static_cast<std::size_t>(((column * 2 + row) * 2 + subcolumn) * 2 + subrow)];
  }

  // [0][0] = [[8, -12], [-12, 0]], the other three matrices constant 7.
  static Payoffs canonical();
  static Payoffs constant(double c);
};

// Text format: one header line (ignored, conventionally starting with '#'),
// then 16 whitespace-separated reals in flat-index order, i.e. the four
// matrices [column][row] in row-major order, each written row-major as
// [subcolumn][subrow].
Payoffs load_payoffs(const std::filesystem::path& path);
void save_payoffs(const std::filesystem::path& path, const Payoffs& p);

// A joint trajectory: (agent0 step1, agent1 step1, agent0 step2, agent1 step2).
using MatrixTrajectory = std::array<int, 4>;

struct MatrixOptimum {
  double value = 0.0;
  std::vector<MatrixTrajectory> argmax;
};

// Brute force over all 16 joint trajectories.
MatrixOptimum matrix_optimal(const Payoffs& p);

enum class MatrixPhase { choose_matrix, choose_cell, terminal };

class MatrixGame final : public Env {
 public:
  explicit MatrixGame(Payoffs payoffs = Payoffs::canonical());

  const EnvSpec& spec() const override { return spec_; }
  void reset(std::uint64_t seed) override;
  StepOutcome step(const JointActions& actions) override;
  bool done() const override { return phase_ == MatrixPhase::terminal; }
  std::size_t steps_taken() const override;

  // [in phase 1, in phase 2, own step-1 choice one-hot (2)].
  std::vector<double> observe(std::size_t team, std::size_t agent) const override;
  // Phase one-hot (3) then step-1 joint choice one-hot (4, zero before it is made).
  std::vector<double> state(std::size_t team) const override;
  bool alive(std::size_t, std::size_t) const override { return true; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<MatrixGame>(*this); }

  MatrixPhase phase() const { return phase_; }
  const Payoffs& payoffs() const { return payoffs_; }
  double accrued() const { return accrued_; }

 private:
  EnvSpec spec_;
  Payoffs payoffs_;
  MatrixPhase phase_ = MatrixPhase::choose_matrix;
  int row_ = -1, column_ = -1;
  double accrued_ = 0.0;
};

}  // namespace mrgr::envs
