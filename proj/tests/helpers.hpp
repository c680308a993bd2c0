#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <random>
#include <string>
#include <vector>

#include "churnforge/error.hpp"
#include "churnforge/history.hpp"

namespace testing_support {

/// A fresh empty directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Builds bundles by hand for tests: each call appends one revision, and a
/// file entry with nullopt content deletes that path.
class BundleBuilder {
 public:
  BundleBuilder& commit(const std::string& author, std::int64_t timestamp,
                        const std::vector<std::pair<std::string, std::optional<std::string>>>& files);
  churnforge::HistoryBundle build(std::int64_t extraction_timestamp);

 private:
  churnforge::HistoryBundle bundle_;
  std::map<std::string, std::string> live_;  // path -> blob hash
  int counter_ = 0;
};

/// Random history over a small pool of paths (mixed-case extensions,
/// extensionless files, dotfiles) and authors.
churnforge::HistoryBundle random_history(std::mt19937_64& gen, std::size_t revisions);

/// The code of the churnforge::Error thrown by f, or nullopt if f returns
/// normally.
template <typename F>
std::optional<churnforge::Errc> error_code_of(F&& f) {
  try {
    f();
  } catch (const churnforge::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& content);

}  // namespace testing_support
