#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eqgmm/simulation.hpp"

namespace eqgmm {

/// Comma-separated numeric table, '.' decimal point. When label_column is
/// set (0-based) that column becomes integer true labels and is removed from
/// the feature matrix. Errors name the offending 1-based row and column.
Dataset load_csv(const std::filesystem::path& path, bool has_header,
                 std::optional<int> label_column = std::nullopt);

/// Plain numeric table without a label column.
Matrix load_matrix_csv(const std::filesystem::path& path, bool has_header);

enum class ReportFormat { Json, Csv };

std::optional<ReportFormat> parse_report_format(std::string_view name);

struct ReportOptions {
  std::string command = "simulate";
  bool include_timing = false;  // wall times make reports non-reproducible
};

/// JSON document: config echo (scenario, CV settings, EM control, seeds),
/// per-replication records and per-method aggregates for every cell.
std::string report_json(std::span<const CellResult> cells, const ReportOptions& options = {});

/// Long-format CSV with columns scenario_id, method, replication, metric,
/// value. Aggregate rows carry replication "all". Empty input gives the
/// header line only.
std::string report_csv(std::span<const CellResult> cells, const ReportOptions& options = {});

void emit_report(std::span<const CellResult> cells, const std::filesystem::path& path, ReportFormat format,
                 const ReportOptions& options = {});

/// One aggregate row parsed back from a long-format CSV report.
struct AggregateRow {
  std::string scenario_id;
  std::string method;
  std::string metric;
  double value = 0.0;
};

std::vector<AggregateRow> read_aggregate_rows(const std::filesystem::path& path);

/// Writes text, throwing DataError when the file cannot be written.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace eqgmm
