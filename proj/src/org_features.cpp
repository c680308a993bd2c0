#include "churnforge/org_features.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace churnforge {

std::string_view to_string(Expertise e) {
  switch (e) {
    case Expertise::Java: return "Java";
    case Expertise::C: return "C";
    case Expertise::Graphics: return "Graphics";
    case Expertise::Xml: return "XML";
    case Expertise::Xsl: return "XSL";
    case Expertise::Html: return "HTML";
  }
  return "";
}

std::string file_extension(std::string_view path) {
  const std::size_t slash = path.rfind('/');
  const std::string_view base = slash == std::string_view::npos ? path : path.substr(slash + 1);
  const std::size_t dot = base.rfind('.');
  if (dot == std::string_view::npos) return {};
  std::string ext(base.substr(dot + 1));
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::set<Expertise> expertise_of(std::string_view path) {
  static const std::map<std::string, Expertise, std::less<>> table = {
      {"java", Expertise::Java}, {"c", Expertise::C},        {"h", Expertise::C},
      {"gif", Expertise::Graphics}, {"png", Expertise::Graphics}, {"jpg", Expertise::Graphics},
      {"xml", Expertise::Xml},   {"xsl", Expertise::Xsl},    {"xslt", Expertise::Xsl},
      {"html", Expertise::Html}, {"htm", Expertise::Html},
  };
  std::set<Expertise> out;
  if (auto it = table.find(file_extension(path)); it != table.end()) out.insert(it->second);
  return out;
}

std::array<double, kOrgFeatureCount> OrgFeatures::values() const {
  return {static_cast<double>(developers_on_project_to_date),
          static_cast<double>(xsl_developers_to_date),
          static_cast<double>(xml_developers_to_date),
          static_cast<double>(java_developers_to_date),
          static_cast<double>(html_developers_to_date),
          static_cast<double>(c_developers_to_date),
          static_cast<double>(graphics_developers_to_date),
          static_cast<double>(developer_previous_commits),
          static_cast<double>(developer_previous_xsl_commits),
          static_cast<double>(number_of_revisions),
          static_cast<double>(number_of_files),
          static_cast<double>(number_of_file_extensions),
          static_cast<double>(number_of_historic_file_extensions)};
}

const std::array<std::string_view, kOrgFeatureCount>& org_feature_names() {
  static const std::array<std::string_view, kOrgFeatureCount> names = {
      "developers_on_project_to_date",
      "xsl_developers_to_date",
      "xml_developers_to_date",
      "java_developers_to_date",
      "html_developers_to_date",
      "c_developers_to_date",
      "graphics_developers_to_date",
      "developer_previous_commits",
      "developer_previous_xsl_commits",
      "number_of_revisions",
      "number_of_files",
      "number_of_file_extensions",
      "number_of_historic_file_extensions",
  };
  return names;
}

std::vector<RevisionOrgFeatures> scan_history(const HistoryBundle& bundle) {
  std::unordered_set<std::string> developers;
  std::map<Expertise, std::unordered_set<std::string>> experts;
  std::unordered_map<std::string, std::int64_t> commits_by_dev;
  std::unordered_map<std::string, std::int64_t> xsl_commits_by_dev;
  std::unordered_map<std::string, std::string> live_files;  // path -> extension
  std::map<std::string, std::int64_t> live_extensions;      // extension -> live file count
  std::set<std::string> historic_extensions;

  std::unordered_map<std::string, std::size_t> last_commit_index;
  for (std::size_t i = 0; i < bundle.revisions.size(); ++i) last_commit_index[bundle.revisions[i].author] = i;
  std::int64_t active = 0;  // authors seen so far whose last commit is still ahead

  std::vector<RevisionOrgFeatures> out;
  out.reserve(bundle.revisions.size());
  std::int64_t revisions = 0;

  for (std::size_t i = 0; i < bundle.revisions.size(); ++i) {
    const auto& rev = bundle.revisions[i];
    ++revisions;
    const bool first_commit = developers.insert(rev.author).second;
    if (first_commit) ++active;
    if (last_commit_index.at(rev.author) == i) --active;

    bool touches_xsl = false;
    for (const auto& fc : rev.file_changes) {
      for (Expertise e : expertise_of(fc.path)) {
        experts[e].insert(rev.author);
        if (e == Expertise::Xsl) touches_xsl = true;
      }
      const std::string ext = file_extension(fc.path);
      auto live = live_files.find(fc.path);
      if (fc.kind == ChangeKind::Deleted) {
        if (live != live_files.end()) {
          if (!live->second.empty() && --live_extensions[live->second] == 0) live_extensions.erase(live->second);
          live_files.erase(live);
        }
      } else if (live == live_files.end()) {
        live_files.emplace(fc.path, ext);
        if (!ext.empty()) {
          ++live_extensions[ext];
          historic_extensions.insert(ext);
        }
      }
    }
    ++commits_by_dev[rev.author];
    if (touches_xsl) ++xsl_commits_by_dev[rev.author];

    auto count = [&](Expertise e) {
      auto it = experts.find(e);
      return it == experts.end() ? std::int64_t{0} : static_cast<std::int64_t>(it->second.size());
    };
    RevisionOrgFeatures r;
    r.revision_id = rev.revision_id;
    auto& f = r.features;
    f.developers_on_project_to_date = static_cast<std::int64_t>(developers.size());
    f.xsl_developers_to_date = count(Expertise::Xsl);
    f.xml_developers_to_date = count(Expertise::Xml);
    f.java_developers_to_date = count(Expertise::Java);
    f.html_developers_to_date = count(Expertise::Html);
    f.c_developers_to_date = count(Expertise::C);
    f.graphics_developers_to_date = count(Expertise::Graphics);
    f.developer_previous_commits = commits_by_dev[rev.author];
    f.developer_previous_xsl_commits = xsl_commits_by_dev[rev.author];
    f.number_of_revisions = revisions;
    f.number_of_files = static_cast<std::int64_t>(live_files.size());
    f.number_of_file_extensions = static_cast<std::int64_t>(live_extensions.size());
    f.number_of_historic_file_extensions = static_cast<std::int64_t>(historic_extensions.size());
    r.active_developers_to_date = active;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace churnforge
