#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "churnforge/history.hpp"

namespace churnforge {

enum class Expertise { Java, C, Graphics, Xml, Xsl, Html };

inline constexpr std::array<Expertise, 6> kAllExpertise = {Expertise::Java, Expertise::C,   Expertise::Graphics,
                                                           Expertise::Xml,  Expertise::Xsl, Expertise::Html};

std::string_view to_string(Expertise e);

/// Lowercased text after the last dot of the basename; empty when the
/// basename has no dot. `.gitignore` has extension `gitignore`.
std::string file_extension(std::string_view path);

/// Java={java}, C={c,h}, Graphics={gif,png,jpg}, XML={xml}, XSL={xsl,xslt},
/// HTML={html,htm}; case-insensitive.
std::set<Expertise> expertise_of(std::string_view path);

inline constexpr std::size_t kOrgFeatureCount = 13;

/// Counters are inclusive of the revision they describe.
struct OrgFeatures {
  std::int64_t developers_on_project_to_date = 0;
  std::int64_t xsl_developers_to_date = 0;
  std::int64_t xml_developers_to_date = 0;
  std::int64_t java_developers_to_date = 0;
  std::int64_t html_developers_to_date = 0;
  std::int64_t c_developers_to_date = 0;
  std::int64_t graphics_developers_to_date = 0;
  std::int64_t developer_previous_commits = 0;
  std::int64_t developer_previous_xsl_commits = 0;
  std::int64_t number_of_revisions = 0;
  std::int64_t number_of_files = 0;
  std::int64_t number_of_file_extensions = 0;
  std::int64_t number_of_historic_file_extensions = 0;

  std::array<double, kOrgFeatureCount> values() const;
  bool operator==(const OrgFeatures&) const = default;
};

/// Column names, in `values()` order.
const std::array<std::string_view, kOrgFeatureCount>& org_feature_names();

struct RevisionOrgFeatures {
  std::string revision_id;
  OrgFeatures features;
  /// Experimental: authors with a commit at or before this revision and
  /// another one after it.
  std::int64_t active_developers_to_date = 0;
};

std::vector<RevisionOrgFeatures> scan_history(const HistoryBundle& bundle);

}  // namespace churnforge
