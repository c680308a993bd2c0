#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "churnforge/history.hpp"

namespace churnforge {

/// One GNU-diff style hunk: `old_length` lines of the old file replaced by
/// `new_length` lines of the new file (a pure `a` hunk has old_length 0, a
/// pure `d` hunk has new_length 0).
struct Hunk {
  std::size_t old_start = 0;
  std::size_t old_length = 0;
  std::size_t new_start = 0;
  std::size_t new_length = 0;

  bool operator==(const Hunk&) const = default;
};

struct Churn {
  std::int64_t added = 0;
  std::int64_t modified = 0;
  std::int64_t deleted = 0;

  Churn& operator+=(const Churn& o) {
    added += o.added;
    modified += o.modified;
    deleted += o.deleted;
    return *this;
  }
  friend Churn operator+(Churn a, const Churn& b) { return a += b; }
  bool operator==(const Churn&) const = default;
};

struct FileChurn {
  std::string path;
  Churn churn;
};

struct RevisionChurn {
  std::string revision_id;
  Timestamp timestamp = 0;
  std::vector<FileChurn> per_file;
  Churn totals;
};

/// Splits on '\n'. A trailing newline does not start an extra empty line;
/// '\r' stays part of the line.
std::vector<std::string_view> split_lines(std::string_view text);

std::int64_t line_count(std::string_view text);

/// Git's heuristic: a NUL byte within the first 8000 bytes.
bool is_binary(std::string_view content);

/// Myers O(ND) shortest edit script over whole lines, grouped into hunks of
/// adjacent deletions/insertions. Hunks are ordered and non-overlapping.
std::vector<Hunk> diff_lines(const std::vector<std::string_view>& old_lines,
                             const std::vector<std::string_view>& new_lines);

/// Per hunk: modified += min(a,b), added += max(0,b-a), deleted += max(0,a-b).
Churn churn_of_hunks(const std::vector<Hunk>& hunks);

Churn churn_of_texts(std::string_view old_text, std::string_view new_text);

RevisionChurn churn_of_revision(const RevisionRecord& record, const HistoryBundle& bundle);

std::vector<RevisionChurn> churn_of_history(const HistoryBundle& bundle);

}  // namespace churnforge
