#include "mrgr/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mrgr::harness {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Round tick spacing covering [lo, hi] with about `n` intervals.
double tick_step(double lo, double hi, int n) {
  const double raw = (hi - lo) / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10.0 * mag;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) {
      throw std::runtime_error(path.string() + ": row has " + std::to_string(row.size()) + " fields, header has " +
                               std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("moving average window must be positive");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
    double s = 0.0;
    for (std::size_t j = lo; j <= i; ++j) s += values[j];
    out[i] = s / static_cast<double>(i + 1 - lo);
  }
  return out;
}

void emit_plots(std::span<const std::filesystem::path> csvs, const std::filesystem::path& out,
                const PlotOptions& options) {
  if (csvs.empty()) throw std::invalid_argument("plot: no input files");
  std::vector<CsvTable> tables;
  for (const auto& p : csvs) tables.push_back(read_csv(p));
  std::vector<std::string> mismatched;
  for (std::size_t i = 1; i < tables.size(); ++i)
    if (tables[i].header != tables[0].header) mismatched.push_back(csvs[i].string());
  if (!mismatched.empty()) {
    std::string list;
    for (const auto& m : mismatched) list += (list.empty() ? "" : ", ") + m;
    throw std::runtime_error("plot: header differs from " + csvs[0].string() + " in: " + list);
  }
  const std::size_t xcol = tables[0].column("iteration");
  const std::size_t ycol = tables[0].column(options.column);

  // Labels are file stems, qualified by the parent directory when stems collide.
  std::vector<Series> series;
  for (std::size_t i = 0; i < tables.size(); ++i) {
    Series s;
    s.label = csvs[i].stem().string();
    const bool collide = std::count_if(csvs.begin(), csvs.end(), [&](const auto& p) {
                           return p.stem() == csvs[i].stem();
                         }) > 1;
    if (collide) s.label = (csvs[i].parent_path().filename() / csvs[i].stem()).string();
    for (const auto& row : tables[i].rows) {
      if (row[ycol].empty()) continue;
      s.x.push_back(std::stod(row[xcol]));
      s.y.push_back(std::stod(row[ycol]));
    }
    s.y = moving_average(s.y, options.window);
    series.push_back(std::move(s));
  }

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double W = 800, H = 500, L = 70, R = 180, T = 40, B = 50;
  const double pw = W - L - R, ph = H - T - B;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string title = options.title.empty() ? options.column : options.title;
  svg << "<text x=\"" << L + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
  svg << "<g class=\"axes\" stroke=\"black\">\n<line x1=\"" << L << "\" y1=\"" << T + ph << "\" x2=\"" << L + pw
      << "\" y2=\"" << T + ph << "\"/>\n<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << T + ph
      << "\"/>\n</g>\n";

  svg << "<g class=\"ticks\">\n";
  const double xs = tick_step(x0, x1, 6), ys = tick_step(y0, y1, 6);
  for (double v = std::ceil(x0 / xs) * xs; v <= x1 + 1e-9 * xs; v += xs) {
    svg << "<line x1=\"" << px(v) << "\" y1=\"" << T + ph << "\" x2=\"" << px(v) << "\" y2=\"" << T + ph + 5
        << "\" stroke=\"black\"/><text x=\"" << px(v) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
        << fmt(v) << "</text>\n";
  }
  for (double v = std::ceil(y0 / ys) * ys; v <= y1 + 1e-9 * ys; v += ys) {
    svg << "<line x1=\"" << L - 5 << "\" y1=\"" << py(v) << "\" x2=\"" << L + pw << "\" y2=\"" << py(v)
        << "\" stroke=\"#dddddd\"/><text x=\"" << L - 8 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\">"
        << fmt(v) << "</text>\n";
  }
  svg << "</g>\n";
  svg << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">iteration</text>\n";
  svg << "<text transform=\"translate(16," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(options.column) << (options.window > 1 ? " (moving average " + std::to_string(options.window) + ")" : "")
      << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    svg << "<polyline class=\"series\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t j = 0; j < series[i].x.size(); ++j)
      svg << (j ? " " : "") << px(series[i].x[j]) << ',' << py(series[i].y[j]);
    svg << "\"/>\n";
  }
  svg << "<g class=\"legend\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = T + 10 + 20.0 * static_cast<double>(i);
    svg << "<line x1=\"" << L + pw + 15 << "\" y1=\"" << y << "\" x2=\"" << L + pw + 40 << "\" y2=\"" << y
        << "\" stroke=\"" << kPalette[i % std::size(kPalette)] << "\" stroke-width=\"2\"/><text x=\"" << L + pw + 46
        << "\" y=\"" << y + 4 << "\">" << escape(series[i].label) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";

  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out.string());
  f << svg.str();
}

}  // namespace mrgr::harness
