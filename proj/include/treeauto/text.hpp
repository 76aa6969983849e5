#ifndef TREEAUTO_TEXT_HPP
#define TREEAUTO_TEXT_HPP

#include <string>
#include <string_view>

namespace treeauto {

// Shortest decimal form that parses back to exactly the same double.
std::string format_double(double v);

// strtod that must consume the whole token.
double parse_double_strict(std::string_view tok, std::size_t line_for_errors);

bool is_identifier(std::string_view s);

}  // namespace treeauto

#endif
