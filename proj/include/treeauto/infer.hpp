#ifndef TREEAUTO_INFER_HPP
#define TREEAUTO_INFER_HPP

#include <vector>

#include "treeauto/tree.hpp"
#include "treeauto/wta.hpp"

namespace treeauto {

// Trees larger than this are evaluated with per-node rescaling so that
// probabilities of deep trees do not underflow; log_p stays exact either
// way.
inline constexpr int kRescaleThreshold = 200;

// Inside (upward) pass.  Per node n, beta[n][q] is the inside weight of
// state q, scaled by exp(-subtree_logscale[n]); below the rescale
// threshold every logscale is 0 and beta holds plain probabilities.
struct InsideTable {
    std::vector<std::vector<double>> beta;
    std::vector<double> subtree_logscale;
    double p = 0.0;    // linear p(t); may underflow to 0 on huge trees
    double log_p = 0;  // always usable; -inf when p(t) = 0
};

InsideTable inside(const Wta& p, const Tree& t);  // requires the real semiring

// Outside (downward) pass against a computed inside table.
// alpha[n][q] is scaled by exp(-path_logscale[n]).
struct OutsideTable {
    std::vector<std::vector<double>> alpha;
    std::vector<double> path_logscale;
};

OutsideTable outside(const Wta& p, const Tree& t, const InsideTable& in);

// Most likely run; selection in log space, the reported weight is the
// exact linear product along the chosen run.  Ties break toward the
// smallest state indices, decided bottom-up.
struct ViterbiResult {
    Run run;
    double weight = 0.0;
    double log_weight = 0.0;
};

ViterbiResult viterbi(const Wta& p, const Tree& t);  // throws when no run exists

// E-step sufficient statistics for one tree: expected number of uses per
// rule and the root-state occupancy (sums to 1).  Requires p(t) > 0.
struct ExpectedCounts {
    std::vector<double> rule;  // indexed like Wta::rules()
    std::vector<double> root;
    double log_p = 0.0;
};

ExpectedCounts expected_counts(const Wta& p, const Tree& t);

struct EmOptions {
    bool parallel = true;   // E-step over sample trees; reduction is always
                            // in input order, so results are bit-identical
    double smoothing = 0.0; // additive delta on rule counts
};

struct EmStepResult {
    Wta model;
    double log_likelihood;  // of the sample under the INPUT model
    std::vector<int> untouched_states;  // kept their old distribution
};

EmStepResult em_step(const Wta& p, const TreeSample& s, const EmOptions& opts = {});

struct TrainResult {
    Wta model;
    std::vector<double> trace;  // one log-likelihood per iteration run
    std::vector<int> untouched_states;
};

// Iterate em_step until the relative improvement drops below rel_tol or
// max_iters is reached.  The trace is non-decreasing up to float noise.
TrainResult train(const Wta& p, const TreeSample& s, int max_iters, double rel_tol,
                  const EmOptions& opts = {});

// Hard-count variant: the E-step uses Viterbi runs; the trace holds
// Viterbi log-likelihoods.
TrainResult viterbi_train(const Wta& p, const TreeSample& s, int max_iters,
                          const EmOptions& opts = {});

// Run rendered as a tree with label:state nodes, e.g. f:q(a:q,a:q).
std::string render_run(const Tree& t, const Run& r, const Wta& a);

}  // namespace treeauto

#endif
