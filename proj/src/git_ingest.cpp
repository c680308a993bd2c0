#include <map>
#include <sstream>

#include "churnforge/error.hpp"
#include "churnforge/history.hpp"
#include "churnforge/log.hpp"
#include "subprocess.hpp"

namespace churnforge {

namespace fs = std::filesystem;

namespace {

class Git {
 public:
  Git(std::string exe, fs::path repo) : exe_(std::move(exe)), repo_(std::move(repo)) {}

  detail::ProcessResult try_run(std::vector<std::string> args, std::string_view input = {}) const {
    args.insert(args.begin(), exe_);
    try {
      return detail::run_process(args, repo_, input);
    } catch (const std::system_error& e) {
      throw Error(Errc::GitInvocationFailed, e.what());
    }
  }

  std::string run(std::vector<std::string> args, std::string_view input = {}) const {
    auto joined = [&] {
      std::string s = "git";
      for (const auto& a : args) s += " " + a;
      return s;
    }();
    auto r = try_run(std::move(args), input);
    if (r.exit_code != 0) {
      throw Error(Errc::GitInvocationFailed, joined + " exited " + std::to_string(r.exit_code) + ": " + r.err);
    }
    return std::move(r.out);
  }

 private:
  std::string exe_;
  fs::path repo_;
};

struct RawChange {
  char status = 'M';
  std::string old_mode, new_mode, old_sha, new_sha, path;
};

constexpr std::string_view kNullSha = "0000000000000000000000000000000000000000";

std::vector<RawChange> parse_raw_diff(std::string_view out) {
  // -z raw format: ":<om> <nm> <osha> <nsha> <status>\0<path>\0"
  std::vector<RawChange> changes;
  std::size_t pos = 0;
  while (pos < out.size()) {
    const std::size_t meta_end = out.find('\0', pos);
    if (meta_end == std::string_view::npos) break;
    std::string_view meta = out.substr(pos, meta_end - pos);
    pos = meta_end + 1;
    if (meta.empty() || meta.front() != ':') continue;
    std::istringstream fields{std::string(meta.substr(1))};
    RawChange c;
    std::string status;
    fields >> c.old_mode >> c.new_mode >> c.old_sha >> c.new_sha >> status;
    c.status = status.empty() ? 'M' : status.front();
    const std::size_t path_end = out.find('\0', pos);
    if (path_end == std::string_view::npos) break;
    c.path = std::string(out.substr(pos, path_end - pos));
    pos = path_end + 1;
    changes.push_back(std::move(c));
  }
  return changes;
}

// `git cat-file --batch` answers "<sha> blob <size>\n<bytes>\n" per request.
std::map<std::string, std::string> read_blobs(const Git& git, const std::vector<std::string>& shas) {
  std::map<std::string, std::string> blobs;
  if (shas.empty()) return blobs;
  std::string request;
  for (const auto& s : shas) request += s + "\n";
  const std::string out = git.run({"cat-file", "--batch"}, request);
  std::size_t pos = 0;
  for (const auto& sha : shas) {
    const std::size_t eol = out.find('\n', pos);
    if (eol == std::string::npos) throw Error(Errc::GitInvocationFailed, "truncated cat-file output");
    std::istringstream header(out.substr(pos, eol - pos));
    std::string got_sha, type;
    std::size_t size = 0;
    header >> got_sha >> type >> size;
    if (got_sha != sha || type != "blob") throw Error(Errc::GitInvocationFailed, "unexpected cat-file reply for " + sha);
    blobs.emplace(sha, out.substr(eol + 1, size));
    pos = eol + 1 + size + 1;
  }
  return blobs;
}

bool is_gitlink(const std::string& mode) { return mode == "160000"; }

}  // namespace

HistoryBundle ingest_git(const fs::path& repo, const GitIngestOptions& options) {
  if (!fs::is_directory(repo)) throw Error(Errc::NotARepository, repo.string() + " is not a directory");
  const Git git(options.git_executable, repo);
  if (git.try_run({"rev-parse", "--git-dir"}).exit_code != 0) {
    throw Error(Errc::NotARepository, repo.string());
  }
  if (git.try_run({"rev-parse", "--verify", "--quiet", "HEAD^{commit}"}).exit_code != 0) {
    throw Error(Errc::EmptyHistory, repo.string() + " has no commits");
  }

  const std::string log = git.run({"log", "--first-parent", "--reverse", "--format=%H%x1f%ct%x1f%cn <%ce>%x1f%P%x1e", "HEAD"});

  HistoryBundle bundle;
  std::size_t pos = 0;
  while (true) {
    std::size_t rec_end = log.find('\x1e', pos);
    if (rec_end == std::string::npos) break;
    std::string rec = log.substr(pos, rec_end - pos);
    pos = rec_end + 1;
    while (!rec.empty() && (rec.front() == '\n' || rec.front() == '\r')) rec.erase(rec.begin());
    std::vector<std::string> parts;
    std::size_t s = 0;
    for (std::size_t i = 0; i <= rec.size(); ++i) {
      if (i == rec.size() || rec[i] == '\x1f') {
        parts.push_back(rec.substr(s, i - s));
        s = i + 1;
      }
    }
    if (parts.size() != 4) throw Error(Errc::GitInvocationFailed, "unparseable log record: " + rec);

    RevisionRecord rev;
    rev.revision_id = parts[0];
    rev.timestamp = std::stoll(parts[1]);
    rev.author = parts[2];
    const std::string first_parent = parts[3].substr(0, parts[3].find(' '));

    std::vector<std::string> diff_args = {"diff-tree", "-r", "-z", "--no-renames", "--raw", "--no-commit-id"};
    if (first_parent.empty()) {
      diff_args.push_back("--root");
    } else {
      diff_args.push_back(first_parent);
    }
    diff_args.push_back(rev.revision_id);
    const auto changes = parse_raw_diff(git.run(diff_args));

    std::vector<std::string> wanted;
    for (const auto& c : changes) {
      if (c.old_sha != kNullSha && !is_gitlink(c.old_mode)) wanted.push_back(c.old_sha);
      if (c.new_sha != kNullSha && !is_gitlink(c.new_mode)) wanted.push_back(c.new_sha);
    }
    const auto blobs = read_blobs(git, wanted);

    for (const auto& c : changes) {
      const bool has_old = c.old_sha != kNullSha && !is_gitlink(c.old_mode);
      const bool has_new = c.new_sha != kNullSha && !is_gitlink(c.new_mode);
      if (!has_old && !has_new) continue;  // submodule pointer
      FileChange fc;
      fc.path = c.path;
      fc.kind = has_old && has_new ? ChangeKind::Modified : (has_new ? ChangeKind::Added : ChangeKind::Deleted);
      if (has_old) fc.old_blob = bundle.add_blob(blobs.at(c.old_sha));
      if (has_new) fc.new_blob = bundle.add_blob(blobs.at(c.new_sha));
      rev.file_changes.push_back(std::move(fc));
    }
    bundle.revisions.push_back(std::move(rev));
  }
  if (bundle.revisions.empty()) throw Error(Errc::EmptyHistory, repo.string() + " has no commits");

  sort_revisions(bundle.revisions);
  bundle.extraction_timestamp = options.extraction_timestamp.value_or(now_utc());
  if (bundle.extraction_timestamp < bundle.revisions.back().timestamp) {
    log::warn("ingest", "extraction timestamp precedes the last commit; clamping to it");
    bundle.extraction_timestamp = bundle.revisions.back().timestamp;
  }
  validate(bundle);
  return bundle;
}

}  // namespace churnforge
