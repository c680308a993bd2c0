#include "helpers.hpp"

#include "churnforge/xml_features.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace testing_support {

namespace fs = std::filesystem;
using namespace churnforge;

TempDir::TempDir(const std::string& tag) {
  static int counter = 0;
  path_ = fs::temp_directory_path() /
          ("churnforge-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

BundleBuilder& BundleBuilder::commit(const std::string& author, std::int64_t timestamp,
                                     const std::vector<std::pair<std::string, std::optional<std::string>>>& files) {
  RevisionRecord rec;
  char id[16];
  std::snprintf(id, sizeof id, "r%05d", counter_++);
  rec.revision_id = id;
  rec.timestamp = timestamp;
  rec.author = author;
  for (const auto& [path, content] : files) {
    FileChange fc;
    fc.path = path;
    auto it = live_.find(path);
    if (it != live_.end()) fc.old_blob = it->second;
    if (content) fc.new_blob = bundle_.add_blob(*content);
    fc.kind = !fc.old_blob ? ChangeKind::Added : !fc.new_blob ? ChangeKind::Deleted : ChangeKind::Modified;
    if (fc.new_blob) {
      live_[path] = *fc.new_blob;
    } else {
      live_.erase(path);
    }
    rec.file_changes.push_back(std::move(fc));
  }
  bundle_.revisions.push_back(std::move(rec));
  return *this;
}

HistoryBundle BundleBuilder::build(std::int64_t extraction_timestamp) {
  bundle_.extraction_timestamp = extraction_timestamp;
  return bundle_;
}

HistoryBundle random_history(std::mt19937_64& gen, std::size_t revisions) {
  static const char* const kPaths[] = {"a.java", "b.XSL",      "doc/c.xml", "d.xslt", "img/e.png", "f.c",
                                       "g.h",    "h.htm",      "README",    "i.jpg",  "j.gif",     "k.html",
                                       "l.txt",  "m/.gitignore", "n.Xml",   "o.css"};
  static const char* const kAuthors[] = {"ann <a@x>", "bob <b@x>", "cy <c@x>", "dee <d@x>", "eve <e@x>"};
  BundleBuilder b;
  std::set<std::string> live;
  std::int64_t t = 1'000'000'000;
  for (std::size_t i = 0; i < revisions; ++i) {
    t += 1 + static_cast<std::int64_t>(gen() % 200000);
    std::vector<std::pair<std::string, std::optional<std::string>>> files;
    std::set<std::string> used;
    const std::size_t n = 1 + gen() % 3;
    for (std::size_t k = 0; k < n; ++k) {
      const std::string path = kPaths[gen() % std::size(kPaths)];
      if (!used.insert(path).second) continue;
      if (live.count(path) && gen() % 4 == 0) {
        files.emplace_back(path, std::nullopt);
        live.erase(path);
      } else {
        const std::string n = std::to_string(gen() % 1000);
        // Most XML-family files stay well formed so code metrics are exercised.
        const bool xml = churnforge::is_xml_family(path) && n.back() != '7';
        files.emplace_back(path, xml ? "<r n=\"" + n + "\"><i>" + n + "</i></r>\n" : "content " + n + "\n");
        live.insert(path);
      }
    }
    b.commit(kAuthors[gen() % std::size(kAuthors)], t, files);
  }
  return b.build(t + 1);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace testing_support
