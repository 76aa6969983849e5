#ifndef TREEAUTO_HEDGE_HPP
#define TREEAUTO_HEDGE_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "treeauto/semiring.hpp"
#include "treeauto/tree.hpp"
#include "treeauto/wta.hpp"

namespace treeauto {

// Weighted word automaton over hedge states: horizontal language of one
// hedge rule.  Letters are hedge-state indices of the owning Wha.
struct Wfa {
    std::string name;
    std::vector<std::string> state_names;
    std::vector<double> init;    // per wfa state
    std::vector<double> final;   // per wfa state
    // trans[p][q][p'] with q a hedge-state index
    std::vector<std::vector<std::vector<double>>> trans;

    int num_states() const { return static_cast<int>(state_names.size()); }

    // the built-in EPS automaton: accepts only the empty word, weight 1
    static Wfa eps(int num_hedge_states);
};

// weight of a word of hedge states: forward sum over paths
double wfa_weight(const Wfa& w, const std::vector<int>& word, const Semiring& sr);

struct HedgeRule {
    int symbol;   // unranked alphabet index
    Wfa horizontal;
    int target;   // hedge state
    double weight;
};

// Weighted hedge automaton over unranked trees.
class Wha {
public:
    Wha(std::vector<std::string> alphabet, std::vector<std::string> state_names,
        std::vector<double> root, std::vector<HedgeRule> hrules,
        Semiring semiring = Semiring::real());

    const std::vector<std::string>& alphabet() const { return alphabet_; }
    int symbol_id(std::string_view name) const;  // -1 when absent
    const std::vector<std::string>& state_names() const { return state_names_; }
    int num_states() const { return static_cast<int>(state_names_.size()); }
    int state_id(std::string_view name) const;
    const std::vector<double>& root() const { return root_; }
    const std::vector<HedgeRule>& hrules() const { return hrules_; }
    const Semiring& semiring() const { return semiring_; }

private:
    std::vector<std::string> alphabet_;
    std::vector<std::string> state_names_;
    std::vector<double> root_;
    std::vector<HedgeRule> hrules_;
    Semiring semiring_;
};

// Sum over state-annotated runs, computed bottom-up with per-node state
// vectors; each node's children sequence is read by the rule's horizontal
// automaton.
double evaluate_wha(const Wha& h, const Tree& t);

// Weighted stepwise tree automaton equivalent to h on encodings:
// evaluate(wsta, encode_stepwise(t)) == evaluate_wha(h, t).  States are
// (hedge rule, wfa state) pairs.  Requires a commutative semiring.
Wta wha_to_wsta(const Wha& h);

struct PhaViolation {
    std::string where;
    double value;
    std::string message;
};

struct PhaReport {
    std::vector<PhaViolation> violations;
    bool valid() const { return violations.empty(); }
};

// Generative reading mirroring check_pta: root sums to 1, hedge rules
// targeting each state sum to 1, and every horizontal automaton is
// probabilistic (init sums to 1; final(p) + outgoing transitions sum to 1
// at every wfa state p).  Tolerance 1e-9.
PhaReport check_pha(const Wha& h);

Wha read_wha(std::istream& in);
void write_wha(std::ostream& out, const Wha& h);

}  // namespace treeauto

#endif
