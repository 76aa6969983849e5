#ifndef TREEAUTO_LEARNING_HPP
#define TREEAUTO_LEARNING_HPP

#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "treeauto/linear_rep.hpp"
#include "treeauto/tree.hpp"
#include "treeauto/wta.hpp"

namespace treeauto {

// Any tree series; exact oracles wrap evaluate/eval_linear, empirical
// input wraps an EmpiricalSeries.  Must be safe to call concurrently.
using SeriesFn = std::function<double(const Tree&)>;

// Relative frequencies of a sample: value(t) = count(t) / N.
class EmpiricalSeries {
public:
    explicit EmpiricalSeries(const TreeSample& s);

    double value(const Tree& t) const;
    double operator()(const Tree& t) const { return value(t); }
    long long total() const { return total_; }

private:
    std::unordered_map<std::string, long long> counts_;  // key: rendered tree
    long long total_;
};

// Finite Hankel block: entries[c][t] = series(c[t]).
struct HankelBlock {
    std::vector<Context> rows;
    std::vector<Tree> cols;
    std::vector<double> values;  // row-major |rows| x |cols|

    double at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * cols.size() + col];
    }
};

// Entry-wise substitution and evaluation; entries are independent, so the
// parallel fill is bit-identical to the serial reference.
HankelBlock build_hankel(const SeriesFn& series, std::vector<Context> rows,
                         std::vector<Tree> cols, bool parallel = true);

struct LearnOptions {
    double rank_tol = 1e-8;  // 1e-2 is the sample-input default
    int max_dim = 64;
    bool parallel = true;
};

struct LearnResult {
    LinearRep rep;
    std::vector<Tree> basis;
    bool max_dim_reached = false;
};

// Greedy residual-basis construction over a finite Hankel block: scan
// candidates in (size, lexicographic) order, adopt a tree when its row is
// farther than rank_tol (L2) from the span of the adopted rows; tensor
// entries are the least-squares coordinates of f(basis tuple) rows, and
// lambda is fitted so basis trees reproduce their empty-context values.
// Candidates must be subtree-closed and contexts must include the trivial
// context.
LearnResult learn_rational_series(const SeriesFn& series, const RankedAlphabet& alphabet,
                                  const std::vector<Context>& contexts,
                                  const std::vector<Tree>& candidates,
                                  const LearnOptions& opts = {});

struct LearnWtaResult {
    Wta wta;
    std::vector<Tree> basis;
    bool max_dim_reached = false;
};

// linear_to_wta of the learned representation; weights may be negative —
// the result computes the series and need not be a PTA.
LearnWtaResult learn_wta(const SeriesFn& series, const RankedAlphabet& alphabet,
                         const std::vector<Context>& contexts,
                         const std::vector<Tree>& candidates, const LearnOptions& opts = {});

// Sample-driven default sets, deduplicated and (size, render)-ordered.
// Contexts are every one-hole puncture of a sample tree up to max_nodes
// (hole counted), always including the trivial context; candidates are
// every subtree up to max_nodes, which is subtree-closed by construction.
std::vector<Context> contexts_from_sample(const TreeSample& s, int max_nodes = 9);
std::vector<Tree> candidates_from_sample(const TreeSample& s, int max_nodes = 7);

// Ranked reading of the sample's symbols; arity conflicts are an error.
RankedAlphabet alphabet_from_sample(const TreeSample& s);

struct SampleLearnOptions {
    double rank_tol = 1e-2;
    int max_dim = 64;
    int context_size = 9;
    int candidate_size = 7;
    bool parallel = true;
};

LearnResult learn_from_sample(const TreeSample& s, const SampleLearnOptions& opts = {});

}  // namespace treeauto

#endif
