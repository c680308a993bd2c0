#include "churnforge/history.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "churnforge/error.hpp"
#include "churnforge/sha256.hpp"

namespace churnforge {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kBundleFormatVersion = 1;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

bool valid_repo_path(std::string_view p) {
  if (p.empty() || p.front() == '/' || p.back() == '/') return false;
  if (p.find('\\') != std::string_view::npos) return false;
  std::size_t start = 0;
  while (start <= p.size()) {
    const std::size_t end = std::min(p.find('/', start), p.size());
    const std::string_view seg = p.substr(start, end - start);
    if (seg.empty() || seg == "." || seg == "..") return false;
    start = end + 1;
  }
  return true;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidHistory, what); }

}  // namespace

std::string_view to_string(ChangeKind kind) {
  switch (kind) {
    case ChangeKind::Added: return "Added";
    case ChangeKind::Modified: return "Modified";
    case ChangeKind::Deleted: return "Deleted";
  }
  return "Modified";
}

ChangeKind change_kind_from_string(std::string_view text) {
  if (text == "Added") return ChangeKind::Added;
  if (text == "Modified") return ChangeKind::Modified;
  if (text == "Deleted") return ChangeKind::Deleted;
  throw std::invalid_argument("unknown change kind '" + std::string(text) + "'");
}

const std::string& HistoryBundle::add_blob(std::string content) {
  std::string hash = sha256_hex(content);
  auto it = blobs_.find(hash);
  if (it == blobs_.end()) it = blobs_.emplace(std::move(hash), std::move(content)).first;
  return it->first;
}

const std::string& HistoryBundle::blob(const std::string& hash) const {
  auto it = blobs_.find(hash);
  if (it == blobs_.end()) throw Error(Errc::MissingBlob, hash);
  return it->second;
}

void sort_revisions(std::vector<RevisionRecord>& revisions) {
  std::stable_sort(revisions.begin(), revisions.end(), [](const RevisionRecord& a, const RevisionRecord& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.revision_id < b.revision_id;
  });
}

void validate(const HistoryBundle& bundle) {
  std::set<std::string> ids;
  const RevisionRecord* prev = nullptr;
  for (const auto& rev : bundle.revisions) {
    if (rev.revision_id.empty()) invalid("empty revision id");
    if (!ids.insert(rev.revision_id).second) invalid("duplicate revision id " + rev.revision_id);
    if (prev && std::tie(prev->timestamp, prev->revision_id) > std::tie(rev.timestamp, rev.revision_id)) {
      invalid("revision " + rev.revision_id + " is out of (timestamp, id) order");
    }
    prev = &rev;
    for (const auto& fc : rev.file_changes) {
      if (!valid_repo_path(fc.path)) invalid("bad path '" + fc.path + "' in " + rev.revision_id);
      const bool want_old = fc.kind != ChangeKind::Added;
      const bool want_new = fc.kind != ChangeKind::Deleted;
      if (fc.old_blob.has_value() != want_old || fc.new_blob.has_value() != want_new) {
        invalid("content presence does not match kind " + std::string(to_string(fc.kind)) + " for " + fc.path +
                " in " + rev.revision_id);
      }
      for (const auto* h : {&fc.old_blob, &fc.new_blob}) {
        if (h->has_value() && !bundle.has_blob(**h)) throw Error(Errc::MissingBlob, **h);
      }
    }
  }
  if (prev && bundle.extraction_timestamp < prev->timestamp) {
    invalid("extraction timestamp precedes the last revision");
  }
}

std::string serialise_manifest(const std::vector<RevisionRecord>& revisions) {
  std::string out;
  for (const auto& rev : revisions) {
    ojson files = ojson::array();
    for (const auto& fc : rev.file_changes) {
      ojson f;
      f["path"] = fc.path;
      f["kind"] = to_string(fc.kind);
      f["old"] = fc.old_blob ? ojson(*fc.old_blob) : ojson(nullptr);
      f["new"] = fc.new_blob ? ojson(*fc.new_blob) : ojson(nullptr);
      files.push_back(std::move(f));
    }
    ojson line;
    line["revision_id"] = rev.revision_id;
    line["timestamp"] = format_iso8601(rev.timestamp);
    line["author"] = rev.author;
    line["files"] = std::move(files);
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::vector<RevisionRecord> parse_manifest(std::string_view text) {
  std::vector<RevisionRecord> revisions;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    auto fail = [&](const std::string& why) -> void {
      throw Error(Errc::MalformedManifest, "line " + std::to_string(line_no) + ": " + why);
    };
    try {
      const auto j = nlohmann::json::parse(line);
      for (const char* key : {"revision_id", "timestamp", "author", "files"}) {
        if (!j.contains(key)) fail(std::string("missing field '") + key + "'");
      }
      RevisionRecord rev;
      rev.revision_id = j.at("revision_id").get<std::string>();
      rev.timestamp = parse_iso8601(j.at("timestamp").get<std::string>());
      rev.author = j.at("author").get<std::string>();
      for (const auto& f : j.at("files")) {
        FileChange fc;
        fc.path = f.at("path").get<std::string>();
        fc.kind = change_kind_from_string(f.at("kind").get<std::string>());
        if (!f.at("old").is_null()) fc.old_blob = f.at("old").get<std::string>();
        if (!f.at("new").is_null()) fc.new_blob = f.at("new").get<std::string>();
        rev.file_changes.push_back(std::move(fc));
      }
      revisions.push_back(std::move(rev));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }
  return revisions;
}

void save_bundle(const HistoryBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir / "blobs");
  write_file(dir / "manifest.jsonl", serialise_manifest(bundle.revisions));
  ojson meta;
  meta["format_version"] = kBundleFormatVersion;
  meta["extraction_timestamp"] = format_iso8601(bundle.extraction_timestamp);
  write_file(dir / "bundle.json", meta.dump(2) + "\n");
  for (const auto& [hash, content] : bundle.blobs()) {
    const fs::path sub = dir / "blobs" / hash.substr(0, 2);
    fs::create_directories(sub);
    write_file(sub / hash, content);
  }
}

HistoryBundle load_bundle(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "manifest.jsonl")) {
    throw Error(Errc::IoError, "no manifest.jsonl in " + dir.string());
  }
  HistoryBundle bundle;
  bundle.revisions = parse_manifest(read_file(dir / "manifest.jsonl"));
  try {
    const auto meta = nlohmann::json::parse(read_file(dir / "bundle.json"));
    if (meta.at("format_version").get<int>() != kBundleFormatVersion) {
      throw Error(Errc::MalformedManifest, "unsupported bundle format_version");
    }
    bundle.extraction_timestamp = parse_iso8601(meta.at("extraction_timestamp").get<std::string>());
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::MalformedManifest, std::string("bundle.json: ") + e.what());
  }
  for (const auto& rev : bundle.revisions) {
    for (const auto& fc : rev.file_changes) {
      for (const auto* h : {&fc.old_blob, &fc.new_blob}) {
        if (!h->has_value() || bundle.has_blob(**h)) continue;
        const fs::path p = dir / "blobs" / (*h)->substr(0, 2) / **h;
        if (!fs::is_regular_file(p)) throw Error(Errc::MissingBlob, **h);
        std::string content = read_file(p);
        if (sha256_hex(content) != **h) throw Error(Errc::MissingBlob, **h + " (stored content does not match hash)");
        bundle.put_blob(**h, std::move(content));
      }
    }
  }
  return bundle;
}

}  // namespace churnforge
