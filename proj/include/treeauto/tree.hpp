#ifndef TREEAUTO_TREE_HPP
#define TREEAUTO_TREE_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace treeauto {

// Reserved names.  `@` is the binary adjunction operator of the stepwise
// encoding; `_HOLE_` marks the hole of a context.
inline constexpr std::string_view kStepwiseName = "@";
inline constexpr std::string_view kHoleName = "_HOLE_";

// Ordered node-labeled tree.  One value type serves both ranked and
// unranked trees; ranked constraints are checked wherever an alphabet is
// in scope.  Immutable by convention after construction.
struct Tree {
    std::string label;
    std::vector<Tree> children;

    bool operator==(const Tree&) const = default;
};

int tree_size(const Tree& t);   // number of nodes, >= 1
int tree_depth(const Tree& t);  // leaf = 1

struct Symbol {
    std::string name;
    int arity = 0;

    bool operator==(const Symbol&) const = default;
};

// Finite ranked alphabet: unique names, one arity per name, at least one
// nullary symbol (otherwise no finite tree exists).  `@` is admitted as a
// name so stepwise alphabets are first-class; `_HOLE_` never is.
class RankedAlphabet {
public:
    explicit RankedAlphabet(std::vector<Symbol> symbols);

    int size() const { return static_cast<int>(symbols_.size()); }
    const Symbol& symbol(int id) const { return symbols_[id]; }
    const std::vector<Symbol>& symbols() const { return symbols_; }
    int id_of(std::string_view name) const;  // -1 when absent
    bool contains(std::string_view name) const { return id_of(name) >= 0; }

    bool operator==(const RankedAlphabet& o) const { return symbols_ == o.symbols_; }

private:
    std::vector<Symbol> symbols_;
};

// Term syntax: tree := ident | ident "(" tree ("," tree)* ")".
// "f()" is identified with the leaf "f".  The ranked overload also
// validates symbols and arities against the alphabet.
Tree parse_tree(std::string_view text);
Tree parse_tree(std::string_view text, const RankedAlphabet& alphabet);

// Canonical form: no spaces, leaves without parentheses.
std::string render_tree(const Tree& t);

// Stepwise encoding between unranked trees and binary trees over
// {@/2} + {original names as constants}.
Tree encode_stepwise(const Tree& t);
Tree decode_stepwise(const Tree& t);

// Ranked alphabet of stepwise encodings: @/2 plus every name at arity 0.
RankedAlphabet stepwise_alphabet(const std::vector<std::string>& names);

// All ranked trees of size <= max_size in (size, lexicographic-render)
// order.  Intended for desk-scale oracles.
std::vector<Tree> enumerate_trees(const RankedAlphabet& alphabet, int max_size);

// A tree with exactly one leaf labeled _HOLE_.
class Context {
public:
    explicit Context(Tree pattern);  // validates the hole count
    const Tree& pattern() const { return pattern_; }

    bool operator==(const Context&) const = default;

private:
    Tree pattern_;
};

Context parse_context(std::string_view text);
std::string render_context(const Context& c);
Tree substitute(const Context& c, const Tree& t);
int context_size(const Context& c);  // node count, hole included

// Multiset of trees with positive counts.
struct TreeSample {
    std::vector<std::pair<Tree, long long>> items;

    long long total() const;
};

// Tree files: one tree per line, blank lines and #-comments ignored.
// Sample files additionally allow "count<TAB>tree".
std::vector<Tree> read_trees(std::istream& in);
void write_trees(std::ostream& out, const std::vector<Tree>& trees);
TreeSample read_sample(std::istream& in);
void write_sample(std::ostream& out, const TreeSample& sample);

}  // namespace treeauto

#endif
