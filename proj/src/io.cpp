#include "eqgmm/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "eqgmm/errors.hpp"

namespace eqgmm {

namespace {

using nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string where(const std::filesystem::path& path, std::size_t row, std::size_t col) {
  return path.string() + ": row " + std::to_string(row) + ", column " + std::to_string(col);
}

double parse_cell(std::string_view cell, const std::filesystem::path& path, std::size_t row, std::size_t col) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || end != cell.data() + cell.size())
    throw DataError(where(path, row, col) + ": not a number: '" + std::string(cell) + "'");
  if (!std::isfinite(v)) throw DataError(where(path, row, col) + ": non-finite value '" + std::string(cell) + "'");
  return v;
}

// Rows of numeric cells, each row tagged with its 1-based line number.
std::vector<std::vector<double>> read_table(const std::filesystem::path& path, bool has_header,
                                            std::vector<std::size_t>& line_numbers) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::vector<std::vector<double>> table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (has_header && line_no == 1) continue;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (table.empty()) width = cells.size();
    if (cells.size() != width)
      throw DataError(path.string() + ": row " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(width));
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) row.push_back(parse_cell(cells[c], path, line_no, c + 1));
    table.push_back(std::move(row));
    line_numbers.push_back(line_no);
  }
  if (table.empty()) throw DataError(path.string() + ": no data rows");
  return table;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json scenario_json(const SimScenario& s) {
  return {{"id", s.id()},           {"n", s.n},
          {"J", s.j},               {"G", s.g()},
          {"weights", s.weights},   {"sep", s.sep},
          {"mean_sd", s.mean_sd},   {"replications", s.replications},
          {"n_starts", s.n_starts}, {"seed", s.seed}};
}

ordered_json metrics_json(const MetricReport& m, bool timing) {
  ordered_json j{{"mad", m.mad}, {"mad_per_observation", m.mad_per_observation}, {"arand", m.arand}};
  if (m.selected_c) j["selected_c"] = *m.selected_c;
  if (m.n_local_maxima) j["n_local_maxima"] = *m.n_local_maxima;
  if (timing) j["seconds"] = m.elapsed_seconds;
  return j;
}

// Metric name/value pairs of one aggregate, in report order.
std::vector<std::pair<std::string, double>> aggregate_metrics(const MethodAggregate& a, bool timing) {
  std::vector<std::pair<std::string, double>> out{
      {"n_ok", a.n_ok},
      {"n_failed", a.n_failed},
      {"mean_mad", a.mean_mad},
      {"mean_mad_per_observation", a.mean_mad_per_observation},
      {"mean_arand", a.mean_arand},
      {"mean_local_maxima", a.mean_local_maxima},
      {"median_local_maxima", a.median_local_maxima},
  };
  if (a.mean_c) out.emplace_back("mean_c", *a.mean_c);
  if (timing) out.emplace_back("mean_seconds", a.mean_seconds);
  return out;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, bool has_header, std::optional<int> label_column) {
  std::vector<std::size_t> lines;
  const auto table = read_table(path, has_header, lines);
  const std::size_t width = table.front().size();
  if (label_column && (*label_column < 0 || static_cast<std::size_t>(*label_column) >= width))
    throw DataError(path.string() + ": label column " + std::to_string(*label_column) + " out of range");
  const std::size_t n_features = width - (label_column ? 1 : 0);
  if (n_features == 0) throw DataError(path.string() + ": no feature columns");

  Matrix x(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(n_features));
  Labels labels;
  for (std::size_t i = 0; i < table.size(); ++i) {
    Eigen::Index col = 0;
    for (std::size_t c = 0; c < width; ++c) {
      const double v = table[i][c];
      if (label_column && c == static_cast<std::size_t>(*label_column)) {
        if (v != std::floor(v)) throw DataError(where(path, lines[i], c + 1) + ": label is not an integer");
        labels.push_back(static_cast<int>(v));
      } else {
        x(static_cast<Eigen::Index>(i), col++) = v;
      }
    }
  }
  return Dataset(std::move(x), std::move(labels));
}

Matrix load_matrix_csv(const std::filesystem::path& path, bool has_header) {
  std::vector<std::size_t> lines;
  const auto table = read_table(path, has_header, lines);
  Matrix m(static_cast<Eigen::Index>(table.size()), static_cast<Eigen::Index>(table.front().size()));
  for (std::size_t i = 0; i < table.size(); ++i)
    for (std::size_t c = 0; c < table[i].size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = table[i][c];
  return m;
}

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  return std::nullopt;
}

std::string report_json(std::span<const CellResult> cells, const ReportOptions& options) {
  ordered_json doc;
  doc["tool"] = "eqgmm";
  doc["command"] = options.command;
  if (options.include_timing) {
    // Context for the wall times; omitted otherwise so reruns stay byte-identical.
    doc["machine"] = {{"hardware_threads", std::thread::hardware_concurrency()},
                      {"workers", default_workers()},
                      {"compiler", __VERSION__}};
  }
  doc["cells"] = ordered_json::array();
  for (const CellResult& cell : cells) {
    ordered_json c;
    c["scenario"] = scenario_json(cell.scenario);
    c["cv"] = {{"n_splits", cell.cv.n_splits}, {"test_fraction", cell.cv.test_fraction}, {"c_grid", cell.cv.grid()}};
    c["control"] = {{"max_iters", cell.control.max_iters}, {"rel_tol", cell.control.rel_tol}};
    ordered_json methods = ordered_json::array();
    for (Method m : cell.methods) methods.push_back(std::string(method_name(m)));
    c["methods"] = methods;

    ordered_json aggs = ordered_json::array();
    for (const MethodAggregate& a : cell.aggregates) {
      ordered_json j{{"method", std::string(method_name(a.method))}};
      for (const auto& [k, v] : aggregate_metrics(a, options.include_timing)) j[k] = number_or_null(v);
      aggs.push_back(std::move(j));
    }
    c["aggregates"] = std::move(aggs);

    ordered_json recs = ordered_json::array();
    for (const ReplicationRecord& r : cell.records) {
      ordered_json j{{"method", std::string(method_name(r.method))}, {"replication", r.replication}};
      if (r.failed) {
        j["failed"] = true;
        j["error"] = r.error;
      } else {
        j["metrics"] = metrics_json(r.metrics, options.include_timing);
      }
      recs.push_back(std::move(j));
    }
    c["records"] = std::move(recs);
    doc["cells"].push_back(std::move(c));
  }
  return doc.dump(2) + "\n";
}

std::string report_csv(std::span<const CellResult> cells, const ReportOptions& options) {
  std::ostringstream os;
  os << "scenario_id,method,replication,metric,value\n";
  for (const CellResult& cell : cells) {
    const std::string id = cell.scenario.id();
    for (const ReplicationRecord& r : cell.records) {
      const std::string prefix = id + "," + std::string(method_name(r.method)) + "," + std::to_string(r.replication) + ",";
      if (r.failed) {
        os << prefix << "failed,1\n";
        continue;
      }
      os << prefix << "arand," << num(r.metrics.arand) << "\n";
      os << prefix << "mad," << num(r.metrics.mad) << "\n";
      os << prefix << "mad_per_observation," << num(r.metrics.mad_per_observation) << "\n";
      if (r.metrics.selected_c) os << prefix << "selected_c," << num(*r.metrics.selected_c) << "\n";
      if (r.metrics.n_local_maxima) os << prefix << "n_local_maxima," << *r.metrics.n_local_maxima << "\n";
      if (options.include_timing) os << prefix << "seconds," << num(r.metrics.elapsed_seconds) << "\n";
    }
    for (const MethodAggregate& a : cell.aggregates)
      for (const auto& [k, v] : aggregate_metrics(a, options.include_timing))
        os << id << "," << method_name(a.method) << ",all," << k << "," << num(v) << "\n";
  }
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw DataError(path.string() + ": write failed");
}

void emit_report(std::span<const CellResult> cells, const std::filesystem::path& path, ReportFormat format,
                 const ReportOptions& options) {
  write_text(path, format == ReportFormat::Json ? report_json(cells, options) : report_csv(cells, options));
}

std::vector<AggregateRow> read_aggregate_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path.string() + ": cannot open file");
  std::vector<AggregateRow> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no == 1 || trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != 5) throw DataError(path.string() + ": row " + std::to_string(line_no) + " is not a report row");
    if (cells[2] != "all") continue;
    double v = 0.0;
    if (cells[4] == "nan") {
      v = std::nan("");
    } else {
      v = parse_cell(cells[4], path, line_no, 5);
    }
    out.push_back({std::string(cells[0]), std::string(cells[1]), std::string(cells[3]), v});
  }
  return out;
}

}  // namespace eqgmm
