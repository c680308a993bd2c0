#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "churnforge/timeutil.hpp"

namespace churnforge {

enum class ChangeKind { Added, Modified, Deleted };

std::string_view to_string(ChangeKind kind);
ChangeKind change_kind_from_string(std::string_view text);

/// Content is referenced by SHA-256 hash into the bundle's blob store.
struct FileChange {
  std::string path;
  ChangeKind kind = ChangeKind::Modified;
  std::optional<std::string> old_blob;
  std::optional<std::string> new_blob;

  bool operator==(const FileChange&) const = default;
};

struct RevisionRecord {
  std::string revision_id;
  Timestamp timestamp = 0;
  std::string author;
  std::vector<FileChange> file_changes;

  bool operator==(const RevisionRecord&) const = default;
};

/// An immutable-once-built capture of one repository's linear history.
class HistoryBundle {
 public:
  std::vector<RevisionRecord> revisions;
  Timestamp extraction_timestamp = 0;

  /// Stores the bytes and returns their hash. Idempotent.
  const std::string& add_blob(std::string content);

  /// Throws Error(MissingBlob) for unknown hashes.
  const std::string& blob(const std::string& hash) const;
  bool has_blob(const std::string& hash) const { return blobs_.count(hash) != 0; }
  const std::map<std::string, std::string>& blobs() const { return blobs_; }

  /// Inserts a blob under a caller-supplied hash, for loaders that already
  /// verified it.
  void put_blob(std::string hash, std::string content) { blobs_.insert_or_assign(std::move(hash), std::move(content)); }

  bool operator==(const HistoryBundle&) const = default;

 private:
  std::map<std::string, std::string> blobs_;
};

/// Orders records by (timestamp, revision_id).
void sort_revisions(std::vector<RevisionRecord>& revisions);

/// Checks every RevisionRecord/FileChange/HistoryBundle invariant; throws
/// Error(InvalidHistory) describing the first violation.
void validate(const HistoryBundle& bundle);

/// On-disk layout: `manifest.jsonl`, `bundle.json` (format version and
/// extraction timestamp) and `blobs/<first2>/<hash>`.
void save_bundle(const HistoryBundle& bundle, const std::filesystem::path& dir);
HistoryBundle load_bundle(const std::filesystem::path& dir);

/// Parses manifest text; `line` numbers in errors are 1-based.
std::vector<RevisionRecord> parse_manifest(std::string_view text);
std::string serialise_manifest(const std::vector<RevisionRecord>& revisions);

struct GitIngestOptions {
  std::optional<Timestamp> extraction_timestamp;
  std::string git_executable = "git";
};

/// Reads the first-parent history of HEAD. Renames are split into
/// delete + add; merges carry their diff against the first parent.
HistoryBundle ingest_git(const std::filesystem::path& repo, const GitIngestOptions& options = {});

}  // namespace churnforge
