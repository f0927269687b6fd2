#include "aerial/metrics.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aerial {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

namespace {

constexpr const char* kMetricsVersion = "# aerial-metrics v1";
constexpr const char* kMetricsColumns =
    "run_id,seed,env_step,episodes,train_loss,epsilon,eval_return_mean,eval_win_rate,"
    "eval_ci_halfwidth";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("metrics: bad numeric field '" + s + "'");
  return v;
}

long long parse_ll(const std::string& s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::runtime_error("metrics: bad integer field '" + s + "'");
  return v;
}

}  // namespace

std::string metrics_header() {
  return std::string(kMetricsVersion) + "\n" + kMetricsColumns + "\n";
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics file: " + path);
  out << metrics_header();
  for (const MetricsRow& r : rows) {
    out << r.run_id << ',' << r.seed << ',' << r.env_step << ',' << r.episodes << ','
        << format_double(r.train_loss) << ',' << format_double(r.epsilon) << ','
        << format_double(r.eval_return_mean) << ',' << format_double(r.eval_win_rate) << ','
        << format_double(r.eval_ci_halfwidth) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read metrics file: " + path);
  std::string line;
  std::vector<MetricsRow> rows;
  bool saw_columns = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!saw_columns) {
      if (line != kMetricsColumns)
        throw std::runtime_error("metrics: unexpected column header in " + path);
      saw_columns = true;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw std::runtime_error("metrics: wrong field count in " + path);
    MetricsRow r;
    r.run_id = f[0];
    r.seed = static_cast<std::uint64_t>(parse_ll(f[1]));
    r.env_step = parse_ll(f[2]);
    r.episodes = parse_ll(f[3]);
    r.train_loss = parse_double(f[4]);
    r.epsilon = parse_double(f[5]);
    r.eval_return_mean = parse_double(f[6]);
    r.eval_win_rate = parse_double(f[7]);
    r.eval_ci_halfwidth = parse_double(f[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / xs.size();
}

double ci95_halfwidth(const std::vector<double>& xs) {
  const size_t n = xs.size();
  if (n < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  const double var = ss / (n - 1);
  return 1.96 * std::sqrt(var / n);
}

std::vector<AggregateRow> aggregate_runs(const std::vector<std::vector<MetricsRow>>& runs) {
  std::vector<AggregateRow> out;
  if (runs.empty()) return out;
  size_t points = runs[0].size();
  for (const auto& r : runs)
    if (r.size() != points)
      throw std::runtime_error("aggregate_runs: seed runs have different evaluation schedules");
  for (size_t p = 0; p < points; ++p) {
    AggregateRow row;
    row.env_step = runs[0][p].env_step;
    row.seeds = static_cast<int>(runs.size());
    std::vector<double> rets, wins, losses;
    for (const auto& r : runs) {
      if (r[p].env_step != row.env_step)
        throw std::runtime_error("aggregate_runs: misaligned evaluation points");
      rets.push_back(r[p].eval_return_mean);
      wins.push_back(r[p].eval_win_rate);
      losses.push_back(r[p].train_loss);
    }
    row.return_mean = mean_of(rets);
    row.return_ci = ci95_halfwidth(rets);
    row.win_mean = mean_of(wins);
    row.win_ci = ci95_halfwidth(wins);
    row.loss_mean = mean_of(losses);
    out.push_back(row);
  }
  return out;
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write aggregate file: " + path);
  out << "# aerial-aggregate v1\n";
  out << "env_step,seeds,return_mean,return_ci95,win_mean,win_ci95,loss_mean\n";
  for (const AggregateRow& r : rows) {
    out << r.env_step << ',' << r.seeds << ',' << format_double(r.return_mean) << ','
        << format_double(r.return_ci) << ',' << format_double(r.win_mean) << ','
        << format_double(r.win_ci) << ',' << format_double(r.loss_mean) << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace aerial
