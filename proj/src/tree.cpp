#include "treeauto/tree.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "treeauto/errors.hpp"
#include "treeauto/text.hpp"

namespace treeauto {

int tree_size(const Tree& t) {
    int n = 1;
    for (const Tree& c : t.children) n += tree_size(c);
    return n;
}

int tree_depth(const Tree& t) {
    int d = 0;
    for (const Tree& c : t.children) d = std::max(d, tree_depth(c));
    return d + 1;
}

RankedAlphabet::RankedAlphabet(std::vector<Symbol> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty())
        throw ModelError("alphabet must be nonempty");
    bool has_nullary = false;
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        const Symbol& s = symbols_[i];
        if (!(is_identifier(s.name) || s.name == kStepwiseName))
            throw ModelError("bad symbol name '" + s.name + "'");
        if (s.name == kHoleName)
            throw ModelError("symbol name '_HOLE_' is reserved for contexts");
        if (s.arity < 0)
            throw ModelError("negative arity for symbol '" + s.name + "'");
        if (s.arity == 0) has_nullary = true;
        for (std::size_t j = 0; j < i; ++j)
            if (symbols_[j].name == s.name)
                throw ModelError("symbol '" + s.name + "' declared twice");
    }
    if (!has_nullary)
        throw ModelError("alphabet has no arity-0 symbol, no finite tree exists");
}

int RankedAlphabet::id_of(std::string_view name) const {
    for (std::size_t i = 0; i < symbols_.size(); ++i)
        if (symbols_[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

// Recursive-descent parser for the term syntax.  Whitespace is allowed
// between tokens; the canonical renderer never emits it.
class TermParser {
public:
    TermParser(std::string_view text, const RankedAlphabet* alphabet, bool allow_hole)
        : text_(text), alphabet_(alphabet), allow_hole_(allow_hole) {}

    Tree parse() {
        Tree t = parse_tree();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("trailing input after tree", pos_);
        return t;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    const RankedAlphabet* alphabet_;
    bool allow_hole_;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    std::string lex_label() {
        skip_ws();
        std::size_t start = pos_;
        if (peek() == '@') {
            ++pos_;
            return "@";
        }
        if (!(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) {
            if (pos_ >= text_.size())
                throw ParseError("expected a symbol, got end of input", pos_);
            throw ParseError(std::string("expected a symbol, got '") + peek() + "'", pos_);
        }
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    Tree parse_tree() {
        std::size_t label_pos = pos_;
        skip_ws();
        label_pos = pos_;
        std::string label = lex_label();
        if (label == kHoleName && !allow_hole_)
            throw ParseError("'_HOLE_' is reserved for contexts", label_pos);
        Tree t{label, {}};
        skip_ws();
        if (peek() == '(') {
            ++pos_;
            skip_ws();
            if (peek() == ')') {  // f() is the leaf f
                ++pos_;
            } else {
                t.children.push_back(parse_tree());
                skip_ws();
                while (peek() == ',') {
                    ++pos_;
                    t.children.push_back(parse_tree());
                    skip_ws();
                }
                if (peek() != ')') {
                    if (pos_ >= text_.size())
                        throw ParseError("unbalanced '(': expected ')', got end of input", pos_);
                    throw ParseError(std::string("expected ')' or ',', got '") + peek() + "'", pos_);
                }
                ++pos_;
            }
        }
        if (alphabet_ && label != kHoleName) {
            int id = alphabet_->id_of(label);
            if (id < 0)
                throw ParseError("unknown symbol '" + label + "'", label_pos);
            int want = alphabet_->symbol(id).arity;
            int got = static_cast<int>(t.children.size());
            if (want != got)
                throw ParseError("symbol '" + label + "' has arity " + std::to_string(want) +
                                     ", got " + std::to_string(got) + " children",
                                 label_pos);
        }
        return t;
    }
};

}  // namespace

Tree parse_tree(std::string_view text) {
    return TermParser(text, nullptr, false).parse();
}

Tree parse_tree(std::string_view text, const RankedAlphabet& alphabet) {
    return TermParser(text, &alphabet, false).parse();
}

static void render_into(const Tree& t, std::string& out) {
    out += t.label;
    if (!t.children.empty()) {
        out += '(';
        for (std::size_t i = 0; i < t.children.size(); ++i) {
            if (i) out += ',';
            render_into(t.children[i], out);
        }
        out += ')';
    }
}

std::string render_tree(const Tree& t) {
    std::string out;
    render_into(t, out);
    return out;
}

static void check_no_stepwise_label(const Tree& t) {
    if (t.label == kStepwiseName)
        throw ModelError("input tree uses the reserved name '@'");
    for (const Tree& c : t.children) check_no_stepwise_label(c);
}

static Tree encode_rec(const Tree& t) {
    Tree acc{t.label, {}};
    for (const Tree& c : t.children) {
        Tree node{std::string(kStepwiseName), {}};
        node.children.reserve(2);
        node.children.push_back(std::move(acc));
        node.children.push_back(encode_rec(c));
        acc = std::move(node);
    }
    return acc;
}

Tree encode_stepwise(const Tree& t) {
    check_no_stepwise_label(t);
    return encode_rec(t);
}

Tree decode_stepwise(const Tree& t) {
    if (t.label == kStepwiseName) {
        if (t.children.empty())
            throw ModelError("malformed stepwise encoding: leftmost spine does not end in a constant");
        if (t.children.size() != 2)
            throw ModelError("malformed stepwise encoding: '@' node with " +
                             std::to_string(t.children.size()) + " children");
        Tree out = decode_stepwise(t.children[0]);
        out.children.push_back(decode_stepwise(t.children[1]));
        return out;
    }
    if (!t.children.empty())
        throw ModelError("malformed stepwise encoding: non-'@' internal node '" + t.label + "'");
    return t;
}

RankedAlphabet stepwise_alphabet(const std::vector<std::string>& names) {
    std::vector<Symbol> syms;
    syms.push_back({std::string(kStepwiseName), 2});
    for (const std::string& n : names) syms.push_back({n, 0});
    return RankedAlphabet(std::move(syms));
}

std::vector<Tree> enumerate_trees(const RankedAlphabet& alphabet, int max_size) {
    if (max_size < 1)
        throw ModelError("enumerate_trees: max_size must be >= 1");
    // by_size[s] holds all trees with exactly s nodes, sorted by render.
    std::vector<std::vector<Tree>> by_size(max_size + 1);
    for (int s = 1; s <= max_size; ++s) {
        std::vector<Tree>& out = by_size[s];
        for (const Symbol& sym : alphabet.symbols()) {
            int p = sym.arity;
            if (p == 0) {
                if (s == 1) out.push_back(Tree{sym.name, {}});
                continue;
            }
            if (s < p + 1) continue;
            // compositions of s-1 nodes into p positive child sizes,
            // then the cross product of the per-size tree lists
            std::vector<int> comp(p, 0);
            auto rec = [&](auto&& self, int pos, int remaining) -> void {
                if (pos == p - 1) {
                    if (remaining < 1) return;
                    comp[pos] = remaining;
                    for (int i = 0; i < p; ++i)
                        if (by_size[comp[i]].empty()) return;
                    std::vector<std::size_t> pick(p, 0);
                    while (true) {
                        Tree t{sym.name, {}};
                        t.children.reserve(p);
                        for (int i = 0; i < p; ++i) t.children.push_back(by_size[comp[i]][pick[i]]);
                        out.push_back(std::move(t));
                        int i = p - 1;
                        while (i >= 0) {
                            if (++pick[i] < by_size[comp[i]].size()) break;
                            pick[i] = 0;
                            --i;
                        }
                        if (i < 0) break;
                    }
                    return;
                }
                for (int v = 1; v <= remaining - (p - 1 - pos); ++v) {
                    comp[pos] = v;
                    self(self, pos + 1, remaining - v);
                }
            };
            rec(rec, 0, s - 1);
        }
        std::sort(out.begin(), out.end(), [](const Tree& a, const Tree& b) {
            return render_tree(a) < render_tree(b);
        });
    }
    std::vector<Tree> all;
    for (int s = 1; s <= max_size; ++s)
        for (Tree& t : by_size[s]) all.push_back(std::move(t));
    return all;
}

static int count_holes(const Tree& t) {
    if (t.label == kHoleName) {
        if (!t.children.empty())
            throw ModelError("context hole must be a leaf");
        return 1;
    }
    int n = 0;
    for (const Tree& c : t.children) n += count_holes(c);
    return n;
}

Context::Context(Tree pattern) : pattern_(std::move(pattern)) {
    int holes = count_holes(pattern_);
    if (holes != 1)
        throw ModelError("context must contain exactly one hole, found " + std::to_string(holes));
}

Context parse_context(std::string_view text) {
    return Context(TermParser(text, nullptr, true).parse());
}

std::string render_context(const Context& c) {
    return render_tree(c.pattern());
}

static Tree substitute_rec(const Tree& pat, const Tree& filler) {
    if (pat.label == kHoleName) return filler;
    Tree out{pat.label, {}};
    out.children.reserve(pat.children.size());
    for (const Tree& c : pat.children) out.children.push_back(substitute_rec(c, filler));
    return out;
}

Tree substitute(const Context& c, const Tree& t) {
    return substitute_rec(c.pattern(), t);
}

int context_size(const Context& c) {
    return tree_size(c.pattern());
}

long long TreeSample::total() const {
    long long n = 0;
    for (const auto& [t, c] : items) n += c;
    return n;
}

// Strips a trailing comment and surrounding whitespace; returns an empty
// view for blank/comment-only lines.
static std::string_view significant_part(std::string_view line) {
    if (std::size_t hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
        line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front())))
        line.remove_prefix(1);
    return line;
}

std::vector<Tree> read_trees(std::istream& in) {
    std::vector<Tree> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sig = significant_part(line);
        if (sig.empty()) continue;
        try {
            out.push_back(parse_tree(sig));
        } catch (const ParseError& e) {
            throw ParseError(std::string("line ") + std::to_string(lineno) + ": " + e.what(), lineno);
        }
    }
    return out;
}

void write_trees(std::ostream& out, const std::vector<Tree>& trees) {
    for (const Tree& t : trees) out << render_tree(t) << '\n';
}

TreeSample read_sample(std::istream& in) {
    TreeSample s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sig = significant_part(line);
        if (sig.empty()) continue;
        long long count = 1;
        std::string_view tree_part = sig;
        if (std::size_t tab = sig.find('\t'); tab != std::string_view::npos) {
            std::string_view count_part = sig.substr(0, tab);
            tree_part = significant_part(sig.substr(tab + 1));
            try {
                std::size_t used = 0;
                count = std::stoll(std::string(count_part), &used);
                if (used != count_part.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(lineno) + ": bad count '" +
                                     std::string(count_part) + "'",
                                 lineno);
            }
            if (count < 1)
                throw ParseError("line " + std::to_string(lineno) + ": count must be >= 1", lineno);
        }
        try {
            s.items.emplace_back(parse_tree(tree_part), count);
        } catch (const ParseError& e) {
            throw ParseError(std::string("line ") + std::to_string(lineno) + ": " + e.what(), lineno);
        }
    }
    return s;
}

void write_sample(std::ostream& out, const TreeSample& sample) {
    for (const auto& [t, c] : sample.items) {
        if (c != 1) out << c << '\t';
        out << render_tree(t) << '\n';
    }
}

}  // namespace treeauto
