#include "churnforge/churn.hpp"

#include <algorithm>
#include <span>
#include <unordered_map>

namespace churnforge {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::int64_t line_count(std::string_view text) {
  if (text.empty()) return 0;
  const auto newlines = static_cast<std::int64_t>(std::count(text.begin(), text.end(), '\n'));
  return text.back() == '\n' ? newlines : newlines + 1;
}

bool is_binary(std::string_view content) {
  return content.substr(0, 8000).find('\0') != std::string_view::npos;
}

namespace {

enum class Op : std::uint8_t { Keep, Delete, Insert };

using Seq = std::span<const int>;

// Linear-space Myers: find a point on an optimal path by running the forward
// and reverse greedy searches until they overlap, then recurse on both
// halves. The bisection follows the layout of diff-match-patch's
// diff_bisect.
class Differ {
 public:
  explicit Differ(std::vector<Op>& ops) : ops_(ops) {}

  void compare(Seq a, Seq b) {
    std::size_t prefix = 0;
    while (prefix < a.size() && prefix < b.size() && a[prefix] == b[prefix]) ++prefix;
    emit(Op::Keep, prefix);
    a = a.subspan(prefix);
    b = b.subspan(prefix);
    std::size_t suffix = 0;
    while (suffix < a.size() && suffix < b.size() && a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) ++suffix;
    a = a.first(a.size() - suffix);
    b = b.first(b.size() - suffix);

    if (a.empty() || b.empty()) {
      emit(Op::Delete, a.size());
      emit(Op::Insert, b.size());
    } else {
      bisect(a, b);
    }
    emit(Op::Keep, suffix);
  }

 private:
  void emit(Op op, std::size_t count) { ops_.insert(ops_.end(), count, op); }

  void bisect(Seq a, Seq b) {
    const auto n = static_cast<std::ptrdiff_t>(a.size());
    const auto m = static_cast<std::ptrdiff_t>(b.size());
    const std::ptrdiff_t max_d = (n + m + 1) / 2;
    const std::ptrdiff_t offset = max_d + 1;
    const std::ptrdiff_t width = 2 * max_d + 3;
    std::vector<std::ptrdiff_t> fwd(static_cast<std::size_t>(width), -1);
    std::vector<std::ptrdiff_t> rev(static_cast<std::size_t>(width), -1);
    fwd[offset + 1] = 0;
    rev[offset + 1] = 0;
    const std::ptrdiff_t delta = n - m;
    const bool front = (delta % 2) != 0;
    std::ptrdiff_t k1_start = 0, k1_end = 0, k2_start = 0, k2_end = 0;

    for (std::ptrdiff_t d = 0; d < max_d; ++d) {
      for (std::ptrdiff_t k1 = -d + k1_start; k1 <= d - k1_end; k1 += 2) {
        const std::ptrdiff_t i1 = offset + k1;
        std::ptrdiff_t x1 = (k1 == -d || (k1 != d && fwd[i1 - 1] < fwd[i1 + 1])) ? fwd[i1 + 1] : fwd[i1 - 1] + 1;
        std::ptrdiff_t y1 = x1 - k1;
        while (x1 < n && y1 < m && a[x1] == b[y1]) {
          ++x1;
          ++y1;
        }
        fwd[i1] = x1;
        if (x1 > n) {
          k1_end += 2;
        } else if (y1 > m) {
          k1_start += 2;
        } else if (front) {
          const std::ptrdiff_t i2 = offset + delta - k1;
          if (i2 >= 0 && i2 < width && rev[i2] != -1 && x1 >= n - rev[i2]) {
            split(a, b, x1, y1);
            return;
          }
        }
      }
      for (std::ptrdiff_t k2 = -d + k2_start; k2 <= d - k2_end; k2 += 2) {
        const std::ptrdiff_t i2 = offset + k2;
        std::ptrdiff_t x2 = (k2 == -d || (k2 != d && rev[i2 - 1] < rev[i2 + 1])) ? rev[i2 + 1] : rev[i2 - 1] + 1;
        std::ptrdiff_t y2 = x2 - k2;
        while (x2 < n && y2 < m && a[n - x2 - 1] == b[m - y2 - 1]) {
          ++x2;
          ++y2;
        }
        rev[i2] = x2;
        if (x2 > n) {
          k2_end += 2;
        } else if (y2 > m) {
          k2_start += 2;
        } else if (!front) {
          const std::ptrdiff_t i1 = offset + delta - k2;
          if (i1 >= 0 && i1 < width && fwd[i1] != -1) {
            const std::ptrdiff_t x1 = fwd[i1];
            const std::ptrdiff_t y1 = offset + x1 - i1;
            if (x1 >= n - x2) {
              split(a, b, x1, y1);
              return;
            }
          }
        }
      }
    }
    emit(Op::Delete, a.size());
    emit(Op::Insert, b.size());
  }

  void split(Seq a, Seq b, std::ptrdiff_t x, std::ptrdiff_t y) {
    const auto xs = static_cast<std::size_t>(x);
    const auto ys = static_cast<std::size_t>(y);
    compare(a.first(xs), b.first(ys));
    compare(a.subspan(xs), b.subspan(ys));
  }

  std::vector<Op>& ops_;
};

std::vector<Op> shortest_edit_script(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<Op> ops;
  ops.reserve(a.size() + b.size());
  Differ(ops).compare(a, b);
  return ops;
}

}  // namespace

namespace {

std::vector<Hunk> diff_oriented(const std::vector<std::string_view>& old_lines,
                                const std::vector<std::string_view>& new_lines) {
  std::size_t prefix = 0;
  while (prefix < old_lines.size() && prefix < new_lines.size() && old_lines[prefix] == new_lines[prefix]) ++prefix;
  std::size_t suffix = 0;
  while (suffix < old_lines.size() - prefix && suffix < new_lines.size() - prefix &&
         old_lines[old_lines.size() - 1 - suffix] == new_lines[new_lines.size() - 1 - suffix]) {
    ++suffix;
  }

  // Intern lines so the inner loop compares integers.
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](const std::vector<std::string_view>& lines) {
    std::vector<int> out;
    out.reserve(lines.size() - prefix - suffix);
    for (std::size_t i = prefix; i < lines.size() - suffix; ++i) {
      out.push_back(ids.emplace(lines[i], static_cast<int>(ids.size())).first->second);
    }
    return out;
  };
  const auto a = intern(old_lines);
  const auto b = intern(new_lines);
  const auto ops = shortest_edit_script(a, b);

  std::vector<Hunk> hunks;
  std::size_t x = prefix;
  std::size_t y = prefix;
  std::size_t i = 0;
  while (i < ops.size()) {
    if (ops[i] == Op::Keep) {
      ++x;
      ++y;
      ++i;
      continue;
    }
    Hunk h{x, 0, y, 0};
    while (i < ops.size() && ops[i] != Op::Keep) {
      if (ops[i] == Op::Delete) {
        ++h.old_length;
        ++x;
      } else {
        ++h.new_length;
        ++y;
      }
      ++i;
    }
    hunks.push_back(h);
  }
  return hunks;
}

}  // namespace

// Myers breaks ties between equally short scripts by input order, so the
// pair is diffed in a canonical orientation and mirrored back. That makes
// diff(a, b) and diff(b, a) exact mirror images.
std::vector<Hunk> diff_lines(const std::vector<std::string_view>& old_lines,
                             const std::vector<std::string_view>& new_lines) {
  if (!(new_lines < old_lines)) return diff_oriented(old_lines, new_lines);
  std::vector<Hunk> hunks = diff_oriented(new_lines, old_lines);
  for (auto& h : hunks) {
    std::swap(h.old_start, h.new_start);
    std::swap(h.old_length, h.new_length);
  }
  return hunks;
}

Churn churn_of_hunks(const std::vector<Hunk>& hunks) {
  Churn c;
  for (const auto& h : hunks) {
    const auto a = static_cast<std::int64_t>(h.old_length);
    const auto b = static_cast<std::int64_t>(h.new_length);
    c.modified += std::min(a, b);
    c.added += std::max<std::int64_t>(0, b - a);
    c.deleted += std::max<std::int64_t>(0, a - b);
  }
  return c;
}

Churn churn_of_texts(std::string_view old_text, std::string_view new_text) {
  return churn_of_hunks(diff_lines(split_lines(old_text), split_lines(new_text)));
}

RevisionChurn churn_of_revision(const RevisionRecord& record, const HistoryBundle& bundle) {
  RevisionChurn rc;
  rc.revision_id = record.revision_id;
  rc.timestamp = record.timestamp;
  for (const auto& fc : record.file_changes) {
    FileChurn f{fc.path, {}};
    const std::string_view old_text = fc.old_blob ? std::string_view(bundle.blob(*fc.old_blob)) : std::string_view{};
    const std::string_view new_text = fc.new_blob ? std::string_view(bundle.blob(*fc.new_blob)) : std::string_view{};
    if (!is_binary(old_text) && !is_binary(new_text)) {
      switch (fc.kind) {
        case ChangeKind::Added: f.churn.added = line_count(new_text); break;
        case ChangeKind::Deleted: f.churn.deleted = line_count(old_text); break;
        case ChangeKind::Modified: f.churn = churn_of_texts(old_text, new_text); break;
      }
    }
    rc.totals += f.churn;
    rc.per_file.push_back(std::move(f));
  }
  return rc;
}

std::vector<RevisionChurn> churn_of_history(const HistoryBundle& bundle) {
  std::vector<RevisionChurn> out;
  out.reserve(bundle.revisions.size());
  for (const auto& rev : bundle.revisions) out.push_back(churn_of_revision(rev, bundle));
  return out;
}

}  // namespace churnforge
