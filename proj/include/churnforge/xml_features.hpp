#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "churnforge/history.hpp"

namespace churnforge {

inline constexpr std::string_view kXsltNamespace = "http://www.w3.org/1999/XSL/Transform";

/// The 28 XSLT 1.0 elements counted individually: the full XSLT 1.0 set
/// minus stylesheet, transform, output, import, include, namespace-alias and
/// decimal-format, which appear at most once per transformation.
const std::vector<std::string>& default_tracked_xslt_elements();

struct XmlMetricOptions {
  std::vector<std::string> tracked_xslt_elements = default_tracked_xslt_elements();
};

/// Counts for one expression-bearing attribute (select, match or test).
struct ExpressionCounts {
  std::int64_t simple = 0;
  std::int64_t complex_wildcard = 0;
  std::int64_t complex_function = 0;
  std::int64_t total = 0;
  /// Expressions with a wildcard, a function call, or both; each counted once.
  std::int64_t complex = 0;

  ExpressionCounts& operator+=(const ExpressionCounts& o);
  ExpressionCounts& operator-=(const ExpressionCounts& o);
  bool operator==(const ExpressionCounts&) const = default;
};

/// XML/XSLT code metrics for one file or one aggregated snapshot. All fields
/// are additive; the message-children average is derived.
struct CodeFeatures {
  std::int64_t xml_node_count = 0;  // document node + elements + text nodes + comments
  std::int64_t elements = 0;
  std::int64_t attributes = 0;
  std::int64_t text_nodes = 0;  // non-whitespace text runs
  std::int64_t comments = 0;
  std::vector<std::int64_t> xslt_elements;  // parallel to the tracked element list
  std::int64_t xsl_output_literals = 0;
  std::int64_t elements_in_target_namespace = 0;
  std::int64_t root_direct_children = 0;
  std::int64_t xsl_global_params = 0;
  std::int64_t xsl_global_variables = 0;
  std::int64_t inline_expressions = 0;
  ExpressionCounts select, match, test;
  std::int64_t message_elements = 0;
  std::int64_t message_children = 0;
  std::int64_t sum_attr_and_element_nodes = 0;
  std::int64_t nodes_inside_variable = 0;
  std::int64_t nodes_inside_param = 0;
  std::int64_t nodes_inside_message = 0;
  std::int64_t xslt_output_attrs_and_elements = 0;

  explicit CodeFeatures(std::size_t tracked_elements = 28) : xslt_elements(tracked_elements, 0) {}

  double avg_message_children() const {
    return message_elements == 0 ? 0.0 : static_cast<double>(message_children) / static_cast<double>(message_elements);
  }
  std::int64_t total_complex_expressions() const { return select.complex + match.complex + test.complex; }

  /// The metric vector in `code_feature_names()` order.
  std::vector<double> values() const;

  CodeFeatures& operator+=(const CodeFeatures& o);
  CodeFeatures& operator-=(const CodeFeatures& o);
  bool operator==(const CodeFeatures&) const = default;
};

/// 33 + |tracked elements| names; 61 for the default list.
std::vector<std::string> code_feature_names(const XmlMetricOptions& options = {});

/// True for paths whose extension is xml, xsl or xslt (case-insensitive).
bool is_xml_family(std::string_view path);

/// Throws Error(MalformedXml) if the content is not well-formed. Content that
/// is not valid UTF-8 and carries no encoding declaration is read as Latin-1.
CodeFeatures extract_file(std::string_view content, const XmlMetricOptions& options = {});

/// Sums every count; the message-children average is recomputed globally.
CodeFeatures aggregate_snapshot(const std::vector<std::pair<std::string, CodeFeatures>>& files,
                                const XmlMetricOptions& options = {});

/// Aggregated code metrics of the snapshot after each revision. Malformed or
/// binary XML files contribute zeros and are logged once per blob.
std::vector<CodeFeatures> code_feature_series(const HistoryBundle& bundle, const XmlMetricOptions& options = {});

}  // namespace churnforge
