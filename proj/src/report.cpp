#include "churnforge/report.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "churnforge/csv.hpp"
#include "churnforge/error.hpp"

namespace churnforge {

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::Skipped: return "skipped";
    case CellStatus::Failed: return "failed";
  }
  return "failed";
}

CellStatus cell_status_from_string(std::string_view s) {
  if (s == "ok") return CellStatus::Ok;
  if (s == "skipped") return CellStatus::Skipped;
  if (s == "failed") return CellStatus::Failed;
  throw Error(Errc::MalformedCsv, "unknown cell status '" + std::string(s) + "'");
}

namespace {

ResultRecord record_of(std::string experiment, Algorithm algo, FeatureSet fs, const CellResult& c,
                       std::string train, std::string test) {
  ResultRecord r;
  r.experiment = std::move(experiment);
  r.algorithm = algo;
  r.feature_set = fs;
  r.target = c.target;
  r.train_project = std::move(train);
  r.test_project = std::move(test);
  r.status = c.status;
  r.train_rows = c.train_rows;
  r.test_rows = c.test_rows;
  r.metrics = c.metrics;
  r.note = c.note;
  return r;
}

const char* const kColumns[] = {"experiment", "algorithm",  "feature_set", "target",  "train_project",
                                "test_project", "status",   "train_rows",  "test_rows", "pearson",
                                "kendall",    "mae",        "nmae",        "rmsd",    "nrmsd",
                                "pearson_undefined", "kendall_undefined", "nmae_undefined", "nrmsd_undefined",
                                "note"};

double measure(const EvalMetrics& m, std::size_t k, bool* undefined) {
  switch (k) {
    case 0: *undefined = m.pearson_undefined; return m.pearson;
    case 1: *undefined = m.kendall_undefined; return m.kendall;
    case 2: *undefined = m.nmae_undefined; return m.nmae;
    default: *undefined = m.nrmsd_undefined; return m.nrmsd;
  }
}

Summary summarise_values(std::vector<double> v) {
  Summary s;
  s.count = v.size();
  if (v.empty()) return s;
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
  return s;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string operation_name(Target t) {
  switch (t) {
    case Target::Added: return "Added";
    case Target::Modified: return "Modified";
    case Target::Deleted: return "Removed";
  }
  return "";
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string cell_text(const ResultRecord& r, double v, bool undefined) {
  if (r.status != CellStatus::Ok) return std::string(to_string(r.status));
  return undefined ? "n/a" : fixed4(v);
}

}  // namespace

std::vector<ResultRecord> within_records(const std::string& project, Algorithm algo, FeatureSet fs,
                                         const std::vector<CellResult>& cells) {
  std::vector<ResultRecord> out;
  for (const auto& c : cells) out.push_back(record_of("within", algo, fs, c, project, project));
  return out;
}

std::vector<ResultRecord> cross_records(const CrossProjectMatrix& matrix, Algorithm algo, FeatureSet fs) {
  std::vector<ResultRecord> out;
  for (std::size_t t = 0; t < matrix.cells.size(); ++t) {
    for (std::size_t i = 0; i < matrix.projects.size(); ++i) {
      for (std::size_t j = 0; j < matrix.projects.size(); ++j) {
        out.push_back(record_of("cross", algo, fs, matrix.cells[t][i][j], matrix.projects[i], matrix.projects[j]));
      }
    }
  }
  return out;
}

std::vector<ResultRecord> unified_records(const UnifiedResult& result, Algorithm algo, FeatureSet fs) {
  std::vector<ResultRecord> out;
  const std::string pooled(kPooledScope);
  for (const auto& c : result.pooled) out.push_back(record_of("unified", algo, fs, c, pooled, pooled));
  for (std::size_t p = 0; p < result.projects.size(); ++p) {
    for (const auto& c : result.per_project[p]) {
      out.push_back(record_of("unified", algo, fs, c, pooled, result.projects[p]));
    }
  }
  return out;
}

std::string results_csv(const std::vector<ResultRecord>& records) {
  std::ostringstream out;
  csv::write_row(out, std::vector<std::string>(std::begin(kColumns), std::end(kColumns)));
  for (const auto& r : records) {
    const auto& m = r.metrics;
    csv::write_row(out, {r.experiment, std::string(to_string(r.algorithm)), std::string(to_string(r.feature_set)),
                         std::string(to_string(r.target)), r.train_project, r.test_project,
                         std::string(to_string(r.status)), std::to_string(r.train_rows), std::to_string(r.test_rows),
                         csv::format_number(m.pearson), csv::format_number(m.kendall), csv::format_number(m.mae),
                         csv::format_number(m.nmae), csv::format_number(m.rmsd), csv::format_number(m.nrmsd),
                         m.pearson_undefined ? "1" : "0", m.kendall_undefined ? "1" : "0",
                         m.nmae_undefined ? "1" : "0", m.nrmsd_undefined ? "1" : "0", r.note});
  }
  return out.str();
}

std::vector<ResultRecord> parse_results_csv(std::string_view text) {
  const csv::Table table = csv::parse(text);
  std::size_t col[std::size(kColumns)];
  for (std::size_t k = 0; k < std::size(kColumns); ++k) col[k] = table.column(kColumns[k]);
  auto number = [](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(Errc::MalformedCsv, "not a number: '" + s + "'");
    }
  };
  auto flag = [](const std::string& s) { return s == "1" || s == "true"; };
  std::vector<ResultRecord> out;
  for (const auto& row : table.rows) {
    try {
      ResultRecord r;
      r.experiment = row[col[0]];
      r.algorithm = algorithm_from_string(row[col[1]]);
      r.feature_set = feature_set_from_string(row[col[2]]);
      r.target = target_from_string(row[col[3]]);
      r.train_project = row[col[4]];
      r.test_project = row[col[5]];
      r.status = cell_status_from_string(row[col[6]]);
      r.train_rows = static_cast<std::size_t>(number(row[col[7]]));
      r.test_rows = static_cast<std::size_t>(number(row[col[8]]));
      auto& m = r.metrics;
      m.pearson = number(row[col[9]]);
      m.kendall = number(row[col[10]]);
      m.mae = number(row[col[11]]);
      m.nmae = number(row[col[12]]);
      m.rmsd = number(row[col[13]]);
      m.nrmsd = number(row[col[14]]);
      m.pearson_undefined = flag(row[col[15]]);
      m.kendall_undefined = flag(row[col[16]]);
      m.nmae_undefined = flag(row[col[17]]);
      m.nrmsd_undefined = flag(row[col[18]]);
      r.note = row[col[19]];
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.code() == Errc::MalformedCsv) throw;
      throw Error(Errc::MalformedCsv, e.what());
    }
  }
  return out;
}

std::vector<SummaryRow> summarise(const std::vector<ResultRecord>& records) {
  std::vector<SummaryRow> rows;
  for (Algorithm algo : {Algorithm::DecisionTree, Algorithm::NeuralNetwork}) {
    for (Target t : {Target::Added, Target::Deleted, Target::Modified}) {
      SummaryRow row{algo, t, 0, 0, {}};
      std::vector<double> values[4];
      for (const auto& r : records) {
        if (r.algorithm != algo || r.target != t) continue;
        if (r.experiment == "unified" && r.test_project == kPooledScope) continue;
        if (r.status != CellStatus::Ok) {
          ++row.skipped;
          continue;
        }
        ++row.cells;
        for (std::size_t k = 0; k < 4; ++k) {
          bool undefined = false;
          const double v = measure(r.metrics, k, &undefined);
          if (!undefined) values[k].push_back(v);
        }
      }
      for (std::size_t k = 0; k < 4; ++k) row.measures[k] = summarise_values(std::move(values[k]));
      rows.push_back(row);
    }
  }
  return rows;
}

std::string summary_markdown(const std::vector<SummaryRow>& rows, std::string_view caption) {
  std::string out;
  out += "|    | Operation | Pearson |        | Kendall |        | NMAE   |        | NRMSD  |        |\n";
  out += "|----|-----------|---------|--------|---------|--------|--------|--------|--------|--------|\n";
  out += "|    |           | Mean    | Median | Mean    | Median | Mean   | Median | Mean   | Median |\n";
  std::optional<Algorithm> last;
  for (const auto& row : rows) {
    out += "| " + (last == row.algorithm ? std::string("  ") : upper(to_string(row.algorithm))) + " | " +
           operation_name(row.target) + " |";
    last = row.algorithm;
    for (const auto& s : row.measures) {
      if (s.count == 0) {
        out += " n/a | n/a |";
      } else {
        out += " " + fixed4(s.mean) + " | " + fixed4(s.median) + " |";
      }
    }
    out += "\n";
  }
  out += "\n";
  out += caption;
  out += "\n\n";
  out += kChurnConvention;
  out += "\n";
  return out;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  std::vector<std::string> header = {"algorithm", "operation", "cells", "skipped"};
  for (auto m : kSummaryMeasures) {
    header.push_back(std::string(m) + "_mean");
    header.push_back(std::string(m) + "_median");
  }
  csv::write_row(out, header);
  for (const auto& row : rows) {
    std::vector<std::string> fields = {upper(to_string(row.algorithm)), operation_name(row.target),
                                       std::to_string(row.cells), std::to_string(row.skipped)};
    for (const auto& s : row.measures) {
      fields.push_back(s.count ? csv::format_number(s.mean) : "");
      fields.push_back(s.count ? csv::format_number(s.median) : "");
    }
    csv::write_row(out, fields);
  }
  return out.str();
}

std::string experiment_markdown(std::string_view experiment, const std::vector<ResultRecord>& records) {
  std::set<FeatureSet> sets;
  for (const auto& r : records) sets.insert(r.feature_set);
  std::string feature_text;
  for (FeatureSet fs : sets) feature_text += (feature_text.empty() ? "" : ", ") + std::string(to_string(fs));
  if (feature_text.empty()) feature_text = "none";

  std::string out = "# " + std::string(experiment) + " evaluation\n\n";
  out += summary_markdown(summarise(records), "Mean and median correlations and normalised MAE and RMSD (feature set: " +
                                                  feature_text + ").");

  if (experiment == "cross") {
    std::vector<std::string> projects;
    for (const auto& r : records) {
      if (std::find(projects.begin(), projects.end(), r.train_project) == projects.end()) {
        projects.push_back(r.train_project);
      }
    }
    for (Algorithm algo : {Algorithm::DecisionTree, Algorithm::NeuralNetwork}) {
      for (Target t : {Target::Added, Target::Deleted, Target::Modified}) {
        std::map<std::pair<std::string, std::string>, const ResultRecord*> cell;
        for (const auto& r : records) {
          if (r.algorithm == algo && r.target == t) cell[{r.train_project, r.test_project}] = &r;
        }
        if (cell.empty()) continue;
        out += "\n## " + upper(to_string(algo)) + " " + operation_name(t) +
               " (Pearson / Kendall; rows train, columns test)\n\n| train \\ test |";
        for (const auto& p : projects) out += " " + p + " |";
        out += "\n|---|";
        for (std::size_t k = 0; k < projects.size(); ++k) out += "---|";
        out += "\n";
        for (const auto& a : projects) {
          out += "| " + a + " |";
          for (const auto& b : projects) {
            auto it = cell.find({a, b});
            if (it == cell.end()) {
              out += " |";
              continue;
            }
            const auto& r = *it->second;
            out += " " + cell_text(r, r.metrics.pearson, r.metrics.pearson_undefined);
            if (r.status == CellStatus::Ok) {
              out += " / " + cell_text(r, r.metrics.kendall, r.metrics.kendall_undefined);
            }
            out += " |";
          }
          out += "\n";
        }
      }
    }
    return out;
  }

  out += "\n## Cells\n\n| Algorithm | Operation | Train | Test | Status | Pearson | Kendall | MAE | NMAE | RMSD | NRMSD "
         "| Note |\n|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : records) {
    const auto& m = r.metrics;
    std::string note = r.note;
    std::replace(note.begin(), note.end(), '|', '/');
    std::replace(note.begin(), note.end(), '\n', ' ');
    out += "| " + upper(to_string(r.algorithm)) + " | " + operation_name(r.target) + " | " + r.train_project + " | " +
           r.test_project + " | " + std::string(to_string(r.status)) + " | " +
           cell_text(r, m.pearson, m.pearson_undefined) + " | " + cell_text(r, m.kendall, m.kendall_undefined) +
           " | " + cell_text(r, m.mae, false) + " | " + cell_text(r, m.nmae, m.nmae_undefined) + " | " +
           cell_text(r, m.rmsd, false) + " | " + cell_text(r, m.nrmsd, m.nrmsd_undefined) + " | " + note + " |\n";
  }
  return out;
}

}  // namespace churnforge
