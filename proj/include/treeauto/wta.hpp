#ifndef TREEAUTO_WTA_HPP
#define TREEAUTO_WTA_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "treeauto/semiring.hpp"
#include "treeauto/tree.hpp"

namespace treeauto {

struct WtaRule {
    int lhs;                    // state index
    int symbol;                 // alphabet symbol id
    std::vector<int> children;  // child states, length = arity of symbol
    double weight;

    bool operator==(const WtaRule&) const = default;
};

// Weighted tree automaton over the ambient semiring.  Rules are
// canonicalized at construction: sorted by (lhs, symbol, children) and
// duplicate keys merged with the semiring plus.  Immutable afterwards.
class Wta {
public:
    Wta(RankedAlphabet alphabet, std::vector<std::string> state_names,
        std::vector<double> root, std::vector<WtaRule> rules,
        Semiring semiring = Semiring::real());

    const RankedAlphabet& alphabet() const { return alphabet_; }
    const Semiring& semiring() const { return semiring_; }
    int num_states() const { return static_cast<int>(state_names_.size()); }
    const std::vector<std::string>& state_names() const { return state_names_; }
    const std::string& state_name(int q) const { return state_names_[q]; }
    int state_id(std::string_view name) const;  // -1 when absent
    const std::vector<double>& root() const { return root_; }
    const std::vector<WtaRule>& rules() const { return rules_; }
    const std::vector<int>& rules_of_symbol(int symbol) const { return rules_by_symbol_[symbol]; }
    const std::vector<int>& rules_of_state(int q) const { return rules_by_lhs_[q]; }
    // index of the rule with this exact key, or -1
    int find_rule(int lhs, int symbol, const std::vector<int>& children) const;

private:
    RankedAlphabet alphabet_;
    std::vector<std::string> state_names_;
    std::vector<double> root_;
    std::vector<WtaRule> rules_;
    std::vector<std::vector<int>> rules_by_symbol_;
    std::vector<std::vector<int>> rules_by_lhs_;
    std::map<std::tuple<int, int, std::vector<int>>, int> rule_index_;
    Semiring semiring_;
};

// Subject tree flattened to pre-order arrays against an alphabet;
// children always carry larger ids than their parent.
struct FlatTree {
    std::vector<int> symbol;
    std::vector<std::vector<int>> children;
    std::vector<int> parent;  // -1 at the root

    int size() const { return static_cast<int>(symbol.size()); }
};

FlatTree flatten(const Tree& t, const RankedAlphabet& alphabet);

// A run assigns one state per node, in pre-order.
using Run = std::vector<int>;

// Product of the root weight (first) and every node's rule weight in
// pre-order.
double weight_of_run(const Wta& a, const Tree& t, const Run& r);

// Brute-force oracle: all valid runs, ordered by the state assignment
// read in pre-order (states in declaration order).  Guarded: at most
// 10^6 candidate assignments.
std::vector<Run> enumerate_runs(const Wta& a, const Tree& t);

// Bottom-up evaluation, O(size(t) * |rules|).
double evaluate(const Wta& a, const Tree& t);

// Independent evaluations of many trees; parallel=false is the serial
// reference, both produce bit-identical results.
std::vector<double> evaluate_batch(const Wta& a, const std::vector<Tree>& trees,
                                   bool parallel = true);

bool is_deterministic(const Wta& a);

// --- probabilistic tree automata -----------------------------------------

struct PtaViolation {
    enum class Kind { WeightRange, RootSum, StateSum, DeadState };
    Kind kind;
    std::string where;  // state name or rule description
    double value;       // offending weight or sum
    std::string message;
};

struct PtaReport {
    std::vector<PtaViolation> violations;
    bool valid() const { return violations.empty(); }
};

// Generative reading: root weights form a distribution over states and
// every state's outgoing rules sum to 1 (tolerance 1e-9); rule-less
// states are reported dead.  Requires the real semiring.
PtaReport check_pta(const Wta& a);

// Top-down generative sampling.  Throws DepthExceeded when a draw grows
// past max_depth, ModelError when the automaton is not a valid PTA.
Tree sample(const Wta& pta, std::uint64_t seed, int max_depth);
Tree sample(const Wta& pta, std::mt19937_64& rng, int max_depth);
std::vector<Tree> sample_many(const Wta& pta, int n, std::uint64_t seed, int max_depth);

// Least fixed point of Z(q) = sum_{(q,f,q1..qp,w)} w * prod Z(qi),
// iterated from Z = 0.  Throws NumericError when some Z grows past
// divergence_bound; slow convergence is reported via `converged`.
struct MassResult {
    std::vector<double> per_state;
    double total = 0.0;  // sum_q root(q) * Z(q)
    bool converged = false;
    int iters = 0;
};
MassResult state_mass_fixpoint(const Wta& a, double tol, int max_iter,
                               double divergence_bound = 1e12);

// Weight pushing: turns any non-negative real WTA with positive total
// mass into a valid PTA defining the input series divided by its mass.
Wta to_pta(const Wta& a, double tol = 1e-12, int max_iter = 100000);

// --- text format ----------------------------------------------------------

Wta read_wta(std::istream& in);
void write_wta(std::ostream& out, const Wta& a);

}  // namespace treeauto

#endif
