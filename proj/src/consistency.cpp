#include "treeauto/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "treeauto/errors.hpp"

namespace treeauto {

std::vector<int> reachable_states(const Wta& p) {
    const int nq = p.num_states();
    std::vector<char> seen(nq, 0);
    std::deque<int> queue;
    for (int q = 0; q < nq; ++q)
        if (p.root()[q] > 0.0) {
            seen[q] = 1;
            queue.push_back(q);
        }
    while (!queue.empty()) {
        int q = queue.front();
        queue.pop_front();
        for (int ri : p.rules_of_state(q)) {
            const WtaRule& r = p.rules()[ri];
            if (r.weight <= 0.0) continue;
            for (int c : r.children)
                if (!seen[c]) {
                    seen[c] = 1;
                    queue.push_back(c);
                }
        }
    }
    std::vector<int> out;
    for (int q = 0; q < nq; ++q)
        if (seen[q]) out.push_back(q);
    return out;
}

static void require_valid_pta(const Wta& p, const char* op) {
    PtaReport rep = check_pta(p);
    if (!rep.valid())
        throw ModelError(std::string(op) + " requires a valid pta: " +
                         rep.violations.front().message);
}

MomentMatrix moment_matrix(const Wta& p) {
    require_valid_pta(p, "moment_matrix");
    MomentMatrix m;
    m.states = reachable_states(p);
    const int n = m.dim();
    std::vector<int> pos(p.num_states(), -1);
    for (int i = 0; i < n; ++i) pos[m.states[i]] = i;
    m.entries.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (const WtaRule& r : p.rules()) {
        int i = pos[r.lhs];
        if (i < 0) continue;
        for (int c : r.children) {
            // children of reachable states are reachable whenever the rule
            // has positive weight; zero-weight rules contribute nothing
            if (pos[c] < 0) continue;
            m.entries[static_cast<std::size_t>(i) * n + pos[c]] += r.weight;
        }
    }
    return m;
}

SpectralResult spectral_radius(const MomentMatrix& m, double tol, int max_iter) {
    SpectralResult res;
    const int n = m.dim();
    if (n == 0) {
        res.converged = true;
        return res;
    }
    if (n == 1) {
        res.value = m.at(0, 0);
        res.converged = true;
        res.iters = 0;
        return res;
    }
    std::vector<double> v(n, 1.0 / n), mv(n);
    double prev = -1.0;
    for (int it = 1; it <= max_iter; ++it) {
        double norm = 0.0;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += m.at(i, j) * v[j];
            mv[i] = acc;
            norm += std::abs(acc);
        }
        res.iters = it;
        if (norm == 0.0) {  // nilpotent direction reached
            res.value = 0.0;
            res.converged = true;
            return res;
        }
        res.value = norm;  // ||Mv||_1 with ||v||_1 = 1
        for (int i = 0; i < n; ++i) v[i] = mv[i] / norm;
        if (prev >= 0.0 && std::abs(res.value - prev) < tol) {
            res.converged = true;
            return res;
        }
        prev = res.value;
    }
    return res;  // last estimate, flagged unconverged
}

PartitionResult partition(const Wta& p, double tol, int max_iter) {
    require_valid_pta(p, "partition");
    MassResult mr = state_mass_fixpoint(p, tol, max_iter);
    PartitionResult res;
    res.per_state = std::move(mr.per_state);
    res.total = mr.total;
    res.converged = mr.converged;
    res.iters = mr.iters;
    return res;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Consistent: return "Consistent";
        case Verdict::Inconsistent: return "Inconsistent";
        case Verdict::Critical: return "Critical";
    }
    return "?";
}

ConsistencyReport check_consistency(const Wta& p) {
    require_valid_pta(p, "check_consistency");
    static constexpr double kRadiusBand = 1e-9;
    static constexpr double kMassTol = 1e-6;
    MomentMatrix m = moment_matrix(p);
    SpectralResult sr = spectral_radius(m);
    PartitionResult pr = partition(p);
    ConsistencyReport rep;
    rep.radius = sr.value;
    rep.radius_converged = sr.converged;
    rep.mass = pr.total;
    rep.mass_converged = pr.converged;
    rep.per_state_mass = pr.per_state;
    if (sr.value < 1.0 - kRadiusBand) {
        rep.verdict = Verdict::Consistent;
        // the sufficient condition implies full mass; a converged deficit
        // would contradict it
        rep.cross_check_ok = !(pr.converged && pr.total < 1.0 - kMassTol);
    } else if (sr.value > 1.0 + kRadiusBand) {
        // supercritical branching: extinction, hence mass, is < 1
        rep.verdict = Verdict::Inconsistent;
        rep.cross_check_ok = !pr.converged || pr.total < 1.0 - kMassTol;
    } else if (pr.converged && pr.total < 1.0 - kMassTol) {
        rep.verdict = Verdict::Inconsistent;
    } else {
        // radius within the band and no converged mass deficit: the
        // sufficient condition is silent
        rep.verdict = Verdict::Critical;
    }
    return rep;
}

}  // namespace treeauto
