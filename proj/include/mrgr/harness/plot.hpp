#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mrgr::harness {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws std::runtime_error naming the column if it is absent.
  std::size_t column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Trailing moving average; the first window - 1 points average what exists.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

struct PlotOptions {
  std::string column = "mean_return";
  std::size_t window = 1;
  std::string title;
};

// One SVG line chart, x = iteration, one series per CSV, legend from file
// names. All CSVs must share one header; blank cells are skipped.
void emit_plots(std::span<const std::filesystem::path> csvs, const std::filesystem::path& out,
                const PlotOptions& options = {});

}  // namespace mrgr::harness
