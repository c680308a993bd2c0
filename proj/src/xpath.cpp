#include "churnforge/xpath.hpp"

#include <cctype>

namespace churnforge {

std::string_view to_string(ExprClass c) {
  switch (c) {
    case ExprClass::Simple: return "Simple";
    case ExprClass::ComplexWildcard: return "ComplexWildcard";
    case ExprClass::ComplexFunction: return "ComplexFunction";
    case ExprClass::ComplexBoth: return "ComplexBoth";
  }
  return "Simple";
}

namespace {

enum class Tok {
  Name,      // NCName or QName
  Wildcard,  // *, prefix:*
  Number,
  Literal,
  Variable,
  LParen,
  RParen,
  LBracket,
  RBracket,
  Dot,     // . or ..
  At,      // @
  Comma,
  Axis,    // ::
  Star,    // * as multiplication
  Slash,   // / or //
  Op,      // | + - = != < <= > >=
  OpName,  // and or mod div used as operators
};

bool is_name_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_name_char(unsigned char c) { return is_name_start(c) || std::isdigit(c) || c == '-' || c == '.'; }

// XPath 1.0 lexical rule: after one of these (or at the start) the next `*`
// or operator-name is a node test / name; otherwise it is an operator.
bool operand_position(const std::vector<Tok>& toks) {
  if (toks.empty()) return true;
  switch (toks.back()) {
    case Tok::At:
    case Tok::Axis:
    case Tok::LParen:
    case Tok::LBracket:
    case Tok::Comma:
    case Tok::Star:
    case Tok::Slash:
    case Tok::Op:
    case Tok::OpName:
      return true;
    default:
      return false;
  }
}

}  // namespace

ExprClass classify_expression(std::string_view s) {
  std::vector<Tok> toks;
  bool wildcard = false;
  bool function = false;
  std::size_t i = 0;
  const std::size_t n = s.size();

  auto skip_ws = [&](std::size_t j) {
    while (j < n && (s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) ++j;
    return j;
  };

  while (i < n) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    if (c == '\'' || c == '"') {
      const std::size_t close = s.find(static_cast<char>(c), i + 1);
      i = close == std::string_view::npos ? n : close + 1;
      toks.push_back(Tok::Literal);
      continue;
    }
    if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      while (i < n && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '.')) ++i;
      toks.push_back(Tok::Number);
      continue;
    }
    if (c == '$') {
      ++i;
      while (i < n && (is_name_char(static_cast<unsigned char>(s[i])) || s[i] == ':')) ++i;
      toks.push_back(Tok::Variable);
      continue;
    }
    if (c == '*') {
      ++i;
      if (operand_position(toks)) {
        wildcard = true;
        toks.push_back(Tok::Wildcard);
      } else {
        toks.push_back(Tok::Star);
      }
      continue;
    }
    if (is_name_start(c)) {
      const bool operand_slot = operand_position(toks);
      std::size_t j = i;
      while (j < n && is_name_char(static_cast<unsigned char>(s[j]))) ++j;
      const std::string_view word = s.substr(i, j - i);
      if (!operand_slot && (word == "and" || word == "or" || word == "mod" || word == "div")) {
        toks.push_back(Tok::OpName);
        i = j;
        continue;
      }
      // QName prefix: `p:local` or `p:*`, but not the `::` axis separator.
      if (j + 1 < n && s[j] == ':' && s[j + 1] != ':') {
        if (s[j + 1] == '*') {
          wildcard = true;
          toks.push_back(Tok::Wildcard);
          i = j + 2;
          continue;
        }
        if (is_name_start(static_cast<unsigned char>(s[j + 1]))) {
          j += 1;
          while (j < n && is_name_char(static_cast<unsigned char>(s[j]))) ++j;
        }
      }
      const std::size_t next = skip_ws(j);
      if (next < n && s[next] == '(') function = true;
      toks.push_back(Tok::Name);
      i = j;
      continue;
    }
    switch (c) {
      case '(': toks.push_back(Tok::LParen); ++i; break;
      case ')': toks.push_back(Tok::RParen); ++i; break;
      case '[': toks.push_back(Tok::LBracket); ++i; break;
      case ']': toks.push_back(Tok::RBracket); ++i; break;
      case ',': toks.push_back(Tok::Comma); ++i; break;
      case '@': toks.push_back(Tok::At); ++i; break;
      case '.':
        i += (i + 1 < n && s[i + 1] == '.') ? 2 : 1;
        toks.push_back(Tok::Dot);
        break;
      case '/':
        i += (i + 1 < n && s[i + 1] == '/') ? 2 : 1;
        toks.push_back(Tok::Slash);
        break;
      case ':':
        if (i + 1 < n && s[i + 1] == ':') {
          toks.push_back(Tok::Axis);
          i += 2;
        } else {
          ++i;
        }
        break;
      case '|':
      case '+':
      case '-':
      case '=':
        toks.push_back(Tok::Op);
        ++i;
        break;
      case '!':
      case '<':
      case '>':
        i += (i + 1 < n && s[i + 1] == '=') ? 2 : 1;
        toks.push_back(Tok::Op);
        break;
      default:
        ++i;
    }
  }
  if (wildcard && function) return ExprClass::ComplexBoth;
  if (wildcard) return ExprClass::ComplexWildcard;
  if (function) return ExprClass::ComplexFunction;
  return ExprClass::Simple;
}

std::vector<std::string_view> inline_expressions(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < v.size()) {
    if (v[i] == '{') {
      if (i + 1 < v.size() && v[i + 1] == '{') {
        i += 2;
        continue;
      }
      std::size_t j = i + 1;
      char quote = 0;
      for (; j < v.size(); ++j) {
        if (quote) {
          if (v[j] == quote) quote = 0;
        } else if (v[j] == '\'' || v[j] == '"') {
          quote = v[j];
        } else if (v[j] == '}') {
          break;
        }
      }
      if (j >= v.size()) break;
      out.push_back(v.substr(i + 1, j - i - 1));
      i = j + 1;
    } else if (v[i] == '}' && i + 1 < v.size() && v[i + 1] == '}') {
      i += 2;
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace churnforge
