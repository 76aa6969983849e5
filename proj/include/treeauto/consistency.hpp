#ifndef TREEAUTO_CONSISTENCY_HPP
#define TREEAUTO_CONSISTENCY_HPP

#include <string_view>
#include <vector>

#include "treeauto/wta.hpp"

namespace treeauto {

// First-moment matrix of the branching process induced by a valid PTA,
// restricted to reachable states: M[i][j] = expected number of
// states[j]-children produced by one expansion of states[i].
struct MomentMatrix {
    std::vector<int> states;      // reachable state ids, ascending
    std::vector<double> entries;  // row-major, |states|^2

    int dim() const { return static_cast<int>(states.size()); }
    double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * states.size() + j]; }
};

// States reachable top-down from any root-positive state through
// positive-weight rules.
std::vector<int> reachable_states(const Wta& p);

MomentMatrix moment_matrix(const Wta& p);  // pre: check_pta valid

// Power iteration from the all-ones vector with L1 normalization;
// 1x1 matrices return the entry exactly.  Non-convergence is reported,
// not thrown.
struct SpectralResult {
    double value = 0.0;
    bool converged = false;
    int iters = 0;
};
SpectralResult spectral_radius(const MomentMatrix& m, double tol = 1e-12, int max_iter = 100000);

// Total probability mass assigned to finite trees: least fixed point of
// the state-mass equations, summed against the root distribution.
// max_iter exceeded returns the flagged partial value (the mass of trees
// of height <= iters).
struct PartitionResult {
    std::vector<double> per_state;
    double total = 0.0;
    bool converged = false;
    int iters = 0;
};
PartitionResult partition(const Wta& p, double tol = 1e-12, int max_iter = 10000);

enum class Verdict { Consistent, Inconsistent, Critical };
std::string_view to_string(Verdict v);

struct ConsistencyReport {
    Verdict verdict;
    double radius;
    bool radius_converged;
    double mass;
    bool mass_converged;
    std::vector<double> per_state_mass;
    // false when the radius test and the mass certificate disagree
    bool cross_check_ok = true;
};

// Sufficient condition first (radius < 1 strictly, margin 1e-9), mass
// certificate second; the critical band is never classified Consistent.
ConsistencyReport check_consistency(const Wta& p);

}  // namespace treeauto

#endif
