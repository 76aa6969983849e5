#include "treeauto/text.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <system_error>

#include "treeauto/errors.hpp"

namespace treeauto {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double_strict(std::string_view tok, std::size_t line_for_errors) {
    if (tok.empty())
        throw ParseError("expected a number", line_for_errors);
    std::string s(tok);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size())
        throw ParseError("bad number '" + s + "'", line_for_errors);
    return v;
}

bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    for (char c : s.substr(1))
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

}  // namespace treeauto
