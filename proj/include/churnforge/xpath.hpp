#pragma once

#include <string_view>
#include <vector>

namespace churnforge {

enum class ExprClass { Simple, ComplexWildcard, ComplexFunction, ComplexBoth };

std::string_view to_string(ExprClass c);

inline bool has_wildcard(ExprClass c) { return c == ExprClass::ComplexWildcard || c == ExprClass::ComplexBoth; }
inline bool has_function(ExprClass c) { return c == ExprClass::ComplexFunction || c == ExprClass::ComplexBoth; }

/// Token-level XPath 1.0 scan. A `*` is a wildcard node test unless it
/// follows an operand (name, number, literal, variable, `)`, `]`, `.`, `..`,
/// `*` node test), in which case it is multiplication. A name followed by
/// `(` (whitespace allowed) is a function call. Never fails: characters
/// that do not start a token are skipped.
ExprClass classify_expression(std::string_view expr);

/// Splits an attribute value template into its `{...}` expression bodies.
/// `{{` and `}}` are literal braces; braces inside quoted strings do not
/// close an expression; an unterminated `{` yields nothing.
std::vector<std::string_view> inline_expressions(std::string_view attribute_value);

}  // namespace churnforge
