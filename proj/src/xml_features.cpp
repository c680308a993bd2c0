#include "churnforge/xml_features.hpp"

#include <expat.h>

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>

#include "churnforge/churn.hpp"
#include "churnforge/error.hpp"
#include "churnforge/log.hpp"
#include "churnforge/org_features.hpp"
#include "churnforge/xpath.hpp"

namespace churnforge {

const std::vector<std::string>& default_tracked_xslt_elements() {
  static const std::vector<std::string> list = {
      "apply-imports", "apply-templates", "attribute", "attribute-set", "call-template", "choose", "comment",
      "copy", "copy-of", "element", "fallback", "for-each", "if", "key", "message", "number", "otherwise",
      "param", "preserve-space", "processing-instruction", "sort", "strip-space", "template", "text",
      "value-of", "variable", "when", "with-param",
  };
  return list;
}

ExpressionCounts& ExpressionCounts::operator+=(const ExpressionCounts& o) {
  simple += o.simple;
  complex_wildcard += o.complex_wildcard;
  complex_function += o.complex_function;
  total += o.total;
  complex += o.complex;
  return *this;
}

ExpressionCounts& ExpressionCounts::operator-=(const ExpressionCounts& o) {
  simple -= o.simple;
  complex_wildcard -= o.complex_wildcard;
  complex_function -= o.complex_function;
  total -= o.total;
  complex -= o.complex;
  return *this;
}

namespace {

template <typename F>
void for_each_count(CodeFeatures& a, const CodeFeatures& b, F f) {
  f(a.xml_node_count, b.xml_node_count);
  f(a.elements, b.elements);
  f(a.attributes, b.attributes);
  f(a.text_nodes, b.text_nodes);
  f(a.comments, b.comments);
  if (a.xslt_elements.size() < b.xslt_elements.size()) a.xslt_elements.resize(b.xslt_elements.size(), 0);
  for (std::size_t i = 0; i < b.xslt_elements.size(); ++i) f(a.xslt_elements[i], b.xslt_elements[i]);
  f(a.xsl_output_literals, b.xsl_output_literals);
  f(a.elements_in_target_namespace, b.elements_in_target_namespace);
  f(a.root_direct_children, b.root_direct_children);
  f(a.xsl_global_params, b.xsl_global_params);
  f(a.xsl_global_variables, b.xsl_global_variables);
  f(a.inline_expressions, b.inline_expressions);
  for (auto [x, y] : {std::pair{&a.select, &b.select}, std::pair{&a.match, &b.match}, std::pair{&a.test, &b.test}}) {
    f(x->simple, y->simple);
    f(x->complex_wildcard, y->complex_wildcard);
    f(x->complex_function, y->complex_function);
    f(x->total, y->total);
    f(x->complex, y->complex);
  }
  f(a.message_elements, b.message_elements);
  f(a.message_children, b.message_children);
  f(a.sum_attr_and_element_nodes, b.sum_attr_and_element_nodes);
  f(a.nodes_inside_variable, b.nodes_inside_variable);
  f(a.nodes_inside_param, b.nodes_inside_param);
  f(a.nodes_inside_message, b.nodes_inside_message);
  f(a.xslt_output_attrs_and_elements, b.xslt_output_attrs_and_elements);
}

}  // namespace

CodeFeatures& CodeFeatures::operator+=(const CodeFeatures& o) {
  for_each_count(*this, o, [](std::int64_t& x, std::int64_t y) { x += y; });
  return *this;
}

CodeFeatures& CodeFeatures::operator-=(const CodeFeatures& o) {
  for_each_count(*this, o, [](std::int64_t& x, std::int64_t y) { x -= y; });
  return *this;
}

std::vector<double> CodeFeatures::values() const {
  std::vector<double> v;
  v.reserve(33 + xslt_elements.size());
  auto push = [&](std::int64_t x) { v.push_back(static_cast<double>(x)); };
  push(xml_node_count);
  push(elements);
  push(attributes);
  push(text_nodes);
  push(comments);
  for (auto c : xslt_elements) push(c);
  push(xsl_output_literals);
  push(elements_in_target_namespace);
  push(root_direct_children);
  push(xsl_global_params);
  push(xsl_global_variables);
  push(inline_expressions);
  for (const auto* e : {&select, &match, &test}) {
    push(e->simple);
    push(e->complex_wildcard);
    push(e->complex_function);
    push(e->total);
  }
  v.push_back(avg_message_children());
  push(sum_attr_and_element_nodes);
  push(nodes_inside_variable);
  push(nodes_inside_param);
  push(nodes_inside_message);
  push(xslt_output_attrs_and_elements);
  push(select.complex);
  push(match.complex);
  push(test.complex);
  push(total_complex_expressions());
  return v;
}

std::vector<std::string> code_feature_names(const XmlMetricOptions& options) {
  std::vector<std::string> names = {"xml_node_count", "elements", "attributes", "text_nodes", "comments"};
  for (const auto& e : options.tracked_xslt_elements) {
    std::string n = "xsl_" + e;
    std::replace(n.begin(), n.end(), '-', '_');
    names.push_back(n);
  }
  for (const char* n : {"xsl_output_literals", "elements_in_target_namespace", "root_direct_children",
                        "xsl_global_params", "xsl_global_variables", "inline_expressions"}) {
    names.emplace_back(n);
  }
  for (const char* attr : {"select", "match", "test"}) {
    for (const char* kind : {"simple", "complex_wildcard", "complex_function", "total"}) {
      names.push_back(std::string(attr) + "_" + kind);
    }
  }
  for (const char* n : {"avg_message_children", "sum_attr_and_element_nodes", "nodes_inside_variable",
                        "nodes_inside_param", "nodes_inside_message", "xslt_output_attrs_and_elements",
                        "complex_select", "complex_match", "complex_test", "total_complex_expressions"}) {
    names.emplace_back(n);
  }
  return names;
}

bool is_xml_family(std::string_view path) {
  const std::string ext = file_extension(path);
  return ext == "xml" || ext == "xsl" || ext == "xslt";
}

namespace {

constexpr char kNsSep = '\x01';

struct Attr {
  std::string ns;
  std::string local;
  std::string value;
};

struct Element {
  std::string ns;
  std::string local;
  std::vector<Attr> attrs;
  std::vector<std::size_t> children;
  std::int64_t text_runs = 0;  // non-whitespace text children
  std::optional<std::string> default_ns_decl;
};

void split_name(const char* raw, std::string& ns, std::string& local) {
  const std::string_view name(raw);
  const std::size_t sep = name.find(kNsSep);
  if (sep == std::string_view::npos) {
    ns.clear();
    local = name;
  } else {
    ns = name.substr(0, sep);
    local = name.substr(sep + 1);
  }
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

/// Builds a light element tree; character data is only tracked as
/// "non-whitespace run present" per parent.
class TreeBuilder {
 public:
  std::vector<Element> elements;
  std::int64_t comments = 0;

  bool parse(std::string_view content, const char* encoding, std::string& error) {
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
        XML_ParserCreateNS(encoding, kNsSep), &XML_ParserFree);
    if (!parser) {
      error = "cannot allocate parser";
      return false;
    }
    XML_Parser p = parser.get();
    XML_SetUserData(p, this);
    XML_SetElementHandler(p, &TreeBuilder::on_start, &TreeBuilder::on_end);
    XML_SetCharacterDataHandler(p, &TreeBuilder::on_text);
    XML_SetCommentHandler(p, &TreeBuilder::on_comment);
    XML_SetProcessingInstructionHandler(p, &TreeBuilder::on_pi);
    XML_SetStartNamespaceDeclHandler(p, &TreeBuilder::on_ns_decl);
    XML_SetSkippedEntityHandler(p, &TreeBuilder::on_skipped_entity);
    XML_SetParamEntityParsing(p, XML_PARAM_ENTITY_PARSING_NEVER);
    if (XML_Parse(p, content.data(), static_cast<int>(content.size()), XML_TRUE) == XML_STATUS_ERROR) {
      error = std::string(XML_ErrorString(XML_GetErrorCode(p))) + " at line " +
              std::to_string(XML_GetCurrentLineNumber(p));
      return false;
    }
    return true;
  }

 private:
  std::vector<std::size_t> stack_;
  std::string text_;
  std::optional<std::string> pending_default_ns_;

  void flush_text() {
    if (!stack_.empty() && !is_blank(text_)) ++elements[stack_.back()].text_runs;
    text_.clear();
  }

  static void XMLCALL on_start(void* self_ptr, const XML_Char* name, const XML_Char** atts) {
    auto* self = static_cast<TreeBuilder*>(self_ptr);
    self->flush_text();
    Element e;
    split_name(name, e.ns, e.local);
    for (std::size_t i = 0; atts[i]; i += 2) {
      Attr a;
      split_name(atts[i], a.ns, a.local);
      a.value = atts[i + 1];
      e.attrs.push_back(std::move(a));
    }
    e.default_ns_decl = std::move(self->pending_default_ns_);
    self->pending_default_ns_.reset();
    const std::size_t idx = self->elements.size();
    if (!self->stack_.empty()) self->elements[self->stack_.back()].children.push_back(idx);
    self->elements.push_back(std::move(e));
    self->stack_.push_back(idx);
  }

  static void XMLCALL on_end(void* self_ptr, const XML_Char*) {
    auto* self = static_cast<TreeBuilder*>(self_ptr);
    self->flush_text();
    self->stack_.pop_back();
  }

  static void XMLCALL on_text(void* self_ptr, const XML_Char* s, int len) {
    static_cast<TreeBuilder*>(self_ptr)->text_.append(s, static_cast<std::size_t>(len));
  }

  static void XMLCALL on_skipped_entity(void* self_ptr, const XML_Char* name, int is_parameter_entity) {
    if (is_parameter_entity) return;
    auto* self = static_cast<TreeBuilder*>(self_ptr);
    self->text_ += "&";
    self->text_ += name;
    self->text_ += ";";
  }

  static void XMLCALL on_comment(void* self_ptr, const XML_Char*) {
    auto* self = static_cast<TreeBuilder*>(self_ptr);
    self->flush_text();
    ++self->comments;
  }

  static void XMLCALL on_pi(void* self_ptr, const XML_Char*, const XML_Char*) {
    static_cast<TreeBuilder*>(self_ptr)->flush_text();
  }

  static void XMLCALL on_ns_decl(void* self_ptr, const XML_Char* prefix, const XML_Char* uri) {
    if (prefix == nullptr) static_cast<TreeBuilder*>(self_ptr)->pending_default_ns_ = uri ? uri : "";
  }
};

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len;
    if (c < 0x80) {
      len = 1;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      len = 2;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      len = 4;
    } else {
      return false;
    }
    if (i + len > s.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += len;
  }
  return true;
}

bool has_encoding_declaration(std::string_view s) {
  if (s.substr(0, 5) != "<?xml") return false;
  const std::size_t end = s.find("?>");
  return s.substr(0, end).find("encoding") != std::string_view::npos;
}

class MetricCollector {
 public:
  MetricCollector(const std::vector<Element>& elements, const XmlMetricOptions& options)
      : els_(elements), features_(options.tracked_xslt_elements.size()) {
    for (std::size_t i = 0; i < options.tracked_xslt_elements.size(); ++i) {
      tracked_.emplace(options.tracked_xslt_elements[i], i);
    }
  }

  CodeFeatures run(std::int64_t comments) {
    features_.comments = comments;
    const Element& root = els_.front();
    features_.root_direct_children = static_cast<std::int64_t>(root.children.size());

    const bool xslt_root = is_xslt(root) && (root.local == "stylesheet" || root.local == "transform");
    const bool simplified = !is_xslt(root) && std::any_of(root.attrs.begin(), root.attrs.end(), [](const Attr& a) {
      return a.ns == kXsltNamespace && a.local == "version";
    });
    stylesheet_ = xslt_root || simplified;
    if (stylesheet_) {
      target_ns_ = find_target_namespace(simplified);
      for (std::size_t c : root.children) {
        if (!xslt_root || !is_xslt(els_[c])) continue;
        if (els_[c].local == "param") ++features_.xsl_global_params;
        if (els_[c].local == "variable") ++features_.xsl_global_variables;
      }
    }
    Context ctx;
    ctx.in_template = simplified;
    visit(0, ctx, true);

    features_.xml_node_count = 1 + features_.elements + features_.text_nodes + features_.comments;
    features_.sum_attr_and_element_nodes = features_.elements + features_.attributes;
    return features_;
  }

 private:
  struct Context {
    bool in_template = false;  // inside a template body (or the body of a simplified stylesheet)
    bool in_instruction = false;  // below some XSLT element other than the root
    bool in_variable = false;
    bool in_param = false;
    bool in_message = false;
  };

  const std::vector<Element>& els_;
  CodeFeatures features_;
  std::unordered_map<std::string, std::size_t> tracked_;
  bool stylesheet_ = false;
  std::optional<std::string> target_ns_;

  static bool is_xslt(const Element& e) { return e.ns == kXsltNamespace; }

  // Namespace of the first literal result element in document order, else the
  // root's default namespace declaration.
  std::optional<std::string> find_target_namespace(bool simplified) const {
    std::optional<std::string> found;
    std::vector<std::pair<std::size_t, bool>> stack = {{0, false}};
    if (simplified) return els_.front().ns;
    while (!stack.empty() && !found) {
      auto [idx, in_instruction] = stack.back();
      stack.pop_back();
      const Element& e = els_[idx];
      if (idx != 0 && !is_xslt(e) && in_instruction) {
        found = e.ns;
        break;
      }
      const bool child_ctx = in_instruction || (idx != 0 && is_xslt(e));
      for (auto it = e.children.rbegin(); it != e.children.rend(); ++it) stack.emplace_back(*it, child_ctx);
    }
    if (!found && els_.front().default_ns_decl) found = els_.front().default_ns_decl;
    if (found && *found == kXsltNamespace) found.reset();
    return found;
  }

  void count_expression(ExpressionCounts& bucket, std::string_view expr) {
    const std::size_t b = expr.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return;
    const std::size_t e = expr.find_last_not_of(" \t\r\n");
    const ExprClass cls = classify_expression(expr.substr(b, e - b + 1));
    ++bucket.total;
    if (cls == ExprClass::Simple) {
      ++bucket.simple;
      return;
    }
    ++bucket.complex;
    if (has_wildcard(cls)) ++bucket.complex_wildcard;
    if (has_function(cls)) ++bucket.complex_function;
  }

  void visit(std::size_t idx, Context ctx, bool is_root) {
    const Element& e = els_[idx];
    const auto attr_count = static_cast<std::int64_t>(e.attrs.size());
    ++features_.elements;
    features_.attributes += attr_count;
    features_.text_nodes += e.text_runs;

    if (stylesheet_) {
      const bool xslt = is_xslt(e);
      if (ctx.in_variable) features_.nodes_inside_variable += 1 + attr_count;
      if (ctx.in_param) features_.nodes_inside_param += 1 + attr_count;
      if (ctx.in_message) features_.nodes_inside_message += 1 + attr_count;

      if (xslt) {
        if (auto it = tracked_.find(e.local); it != tracked_.end()) ++features_.xslt_elements[it->second];
        if (e.local == "message") {
          ++features_.message_elements;
          features_.message_children += static_cast<std::int64_t>(e.children.size());
        }
        if (e.local == "element" || e.local == "attribute") ++features_.xslt_output_attrs_and_elements;
        for (const auto& a : e.attrs) {
          if (!a.ns.empty()) continue;
          if (a.local == "select") count_expression(features_.select, a.value);
          if (a.local == "match") count_expression(features_.match, a.value);
          if (a.local == "test") count_expression(features_.test, a.value);
        }
      } else {
        if (ctx.in_template) ++features_.xsl_output_literals;
        if (target_ns_ && e.ns == *target_ns_) {
          ++features_.elements_in_target_namespace;
          features_.xslt_output_attrs_and_elements += 1 + attr_count;
        }
        for (const auto& a : e.attrs) {
          if (a.ns == kXsltNamespace) continue;
          for (std::string_view expr : inline_expressions(a.value)) {
            if (expr.find_first_not_of(" \t\r\n") == std::string_view::npos) continue;
            ++features_.inline_expressions;
            count_expression(features_.select, expr);
          }
        }
      }

      Context child = ctx;
      if (xslt && !is_root) {
        child.in_instruction = true;
        if (e.local == "template") child.in_template = true;
        if (e.local == "variable") child.in_variable = true;
        if (e.local == "param") child.in_param = true;
        if (e.local == "message") child.in_message = true;
      }
      if (child.in_template) features_.xsl_output_literals += e.text_runs;
      for (std::size_t c : e.children) visit(c, child, false);
    } else {
      for (std::size_t c : e.children) visit(c, ctx, false);
    }
  }
};

}  // namespace

CodeFeatures extract_file(std::string_view content, const XmlMetricOptions& options) {
  TreeBuilder tree;
  std::string error;
  bool ok = tree.parse(content, nullptr, error);
  if (!ok && !valid_utf8(content) && !has_encoding_declaration(content)) {
    tree = TreeBuilder{};
    std::string latin1_error;
    ok = tree.parse(content, "ISO-8859-1", latin1_error);
  }
  if (!ok) throw Error(Errc::MalformedXml, error);
  if (tree.elements.empty()) throw Error(Errc::MalformedXml, "no root element");
  return MetricCollector(tree.elements, options).run(tree.comments);
}

CodeFeatures aggregate_snapshot(const std::vector<std::pair<std::string, CodeFeatures>>& files,
                                const XmlMetricOptions& options) {
  CodeFeatures total(options.tracked_xslt_elements.size());
  for (const auto& [path, f] : files) total += f;
  return total;
}

std::vector<CodeFeatures> code_feature_series(const HistoryBundle& bundle, const XmlMetricOptions& options) {
  const std::size_t width = options.tracked_xslt_elements.size();
  std::map<std::string, CodeFeatures> by_blob;
  auto features_of = [&](const std::string& hash, const std::string& path) -> const CodeFeatures& {
    auto it = by_blob.find(hash);
    if (it != by_blob.end()) return it->second;
    CodeFeatures f(width);
    const std::string& content = bundle.blob(hash);
    if (is_binary(content)) {
      log::warn("features", "binary content in " + path + " (blob " + hash.substr(0, 12) + "); counted as zero");
    } else {
      try {
        f = extract_file(content, options);
      } catch (const Error& e) {
        log::warn("features", "skipping malformed XML " + path + " (blob " + hash.substr(0, 12) + "): " + e.what());
      }
    }
    return by_blob.emplace(hash, std::move(f)).first->second;
  };

  std::map<std::string, std::string> live;  // path -> blob hash
  CodeFeatures running(width);
  std::vector<CodeFeatures> series;
  series.reserve(bundle.revisions.size());
  for (const auto& rev : bundle.revisions) {
    for (const auto& fc : rev.file_changes) {
      if (!is_xml_family(fc.path)) continue;
      if (auto it = live.find(fc.path); it != live.end()) {
        running -= features_of(it->second, fc.path);
        live.erase(it);
      }
      if (fc.new_blob) {
        running += features_of(*fc.new_blob, fc.path);
        live.emplace(fc.path, *fc.new_blob);
      }
    }
    series.push_back(running);
  }
  return series;
}

}  // namespace churnforge
