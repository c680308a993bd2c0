#include <charconv>
#include <sstream>

#include "churnforge/csv.hpp"
#include "churnforge/dataset.hpp"
#include "churnforge/error.hpp"

namespace churnforge {

namespace {

constexpr const char* kTargetColumns[] = {"target_added", "target_modified", "target_deleted"};

double parse_double(const std::string& s, std::size_t line) {
  double v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error(Errc::MalformedCsv, "row " + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s, std::size_t line) {
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error(Errc::MalformedCsv, "row " + std::to_string(line) + ": not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace

std::string dataset_csv(const Dataset& ds) {
  std::ostringstream out;
  std::vector<std::string> header = {"project_id", "revision_id", "timestamp", "path"};
  header.insert(header.end(), ds.feature_names.begin(), ds.feature_names.end());
  header.insert(header.end(), std::begin(kTargetColumns), std::end(kTargetColumns));
  header.push_back("eligible");
  csv::write_row(out, header);
  std::vector<std::string> fields;
  for (const auto& r : ds.rows) {
    fields = {r.project_id, r.revision_id, format_iso8601(r.timestamp), r.path};
    for (double v : r.features) fields.push_back(csv::format_number(v));
    fields.push_back(std::to_string(r.target.cumulative_yearly_added));
    fields.push_back(std::to_string(r.target.cumulative_yearly_modified));
    fields.push_back(std::to_string(r.target.cumulative_yearly_deleted));
    fields.push_back(r.eligible ? "1" : "0");
    csv::write_row(out, fields);
  }
  return out.str();
}

Dataset parse_dataset_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  const std::size_t project = table.column("project_id");
  const std::size_t revision = table.column("revision_id");
  const std::size_t timestamp = table.column("timestamp");
  const std::size_t path = table.column("path");
  const std::size_t added = table.column(kTargetColumns[0]);
  const std::size_t modified = table.column(kTargetColumns[1]);
  const std::size_t deleted = table.column(kTargetColumns[2]);
  const std::size_t eligible = table.column("eligible");
  if (added < path) throw Error(Errc::MalformedCsv, "feature columns must sit between path and target_added");

  Dataset ds;
  ds.feature_names.assign(table.header.begin() + static_cast<std::ptrdiff_t>(path + 1),
                          table.header.begin() + static_cast<std::ptrdiff_t>(added));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::size_t line = i + 2;
    DatasetRow r;
    r.project_id = row[project];
    r.revision_id = row[revision];
    try {
      r.timestamp = parse_iso8601(row[timestamp]);
    } catch (const Error& e) {
      throw Error(Errc::MalformedCsv, "row " + std::to_string(line) + ": " + e.what());
    }
    r.path = row[path];
    for (std::size_t c = path + 1; c < added; ++c) r.features.push_back(parse_double(row[c], line));
    r.target.cumulative_yearly_added = parse_int(row[added], line);
    r.target.cumulative_yearly_modified = parse_int(row[modified], line);
    r.target.cumulative_yearly_deleted = parse_int(row[deleted], line);
    if (row[eligible] != "0" && row[eligible] != "1") {
      throw Error(Errc::MalformedCsv, "row " + std::to_string(line) + ": eligible must be 0 or 1");
    }
    r.eligible = row[eligible] == "1";
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

}  // namespace churnforge
