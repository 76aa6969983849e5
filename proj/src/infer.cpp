#include "treeauto/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "treeauto/errors.hpp"
#include "treeauto/text.hpp"

namespace treeauto {

static constexpr double kNegInf = -std::numeric_limits<double>::infinity();

static void require_real(const Wta& p, const char* op) {
    if (p.semiring().kind() != SemiringKind::Real)
        throw ModelError(std::string(op) + " requires the real semiring");
}

InsideTable inside(const Wta& p, const Tree& t) {
    require_real(p, "inside");
    FlatTree f = flatten(t, p.alphabet());
    const int nq = p.num_states();
    const bool rescale = f.size() > kRescaleThreshold;
    InsideTable tab;
    tab.beta.assign(f.size(), std::vector<double>(nq, 0.0));
    tab.subtree_logscale.assign(f.size(), 0.0);
    for (int n = f.size() - 1; n >= 0; --n) {
        std::vector<double>& b = tab.beta[n];
        double exponent = 0.0;
        for (int c : f.children[n]) exponent += tab.subtree_logscale[c];
        for (int ri : p.rules_of_symbol(f.symbol[n])) {
            const WtaRule& r = p.rules()[ri];
            double acc = r.weight;
            for (std::size_t i = 0; i < r.children.size(); ++i)
                acc *= tab.beta[f.children[n][i]][r.children[i]];
            b[r.lhs] += acc;
        }
        if (rescale) {
            double m = *std::max_element(b.begin(), b.end());
            if (m > 0.0) {
                for (double& x : b) x /= m;
                exponent += std::log(m);
            }
        }
        tab.subtree_logscale[n] = exponent;
    }
    double s = 0.0;
    for (int q = 0; q < nq; ++q) s += p.root()[q] * tab.beta[0][q];
    tab.p = s * std::exp(tab.subtree_logscale[0]);
    tab.log_p = s > 0.0 ? std::log(s) + tab.subtree_logscale[0] : kNegInf;
    return tab;
}

OutsideTable outside(const Wta& p, const Tree& t, const InsideTable& in) {
    require_real(p, "outside");
    FlatTree f = flatten(t, p.alphabet());
    if (static_cast<int>(in.beta.size()) != f.size())
        throw ModelError("inside table does not match the tree");
    const int nq = p.num_states();
    const bool rescale = f.size() > kRescaleThreshold;
    OutsideTable out;
    out.alpha.assign(f.size(), std::vector<double>(nq, 0.0));
    out.path_logscale.assign(f.size(), 0.0);
    out.alpha[0] = p.root();
    for (int n = 0; n < f.size(); ++n) {
        const auto& kids = f.children[n];
        if (kids.empty()) continue;
        const std::vector<double>& a = out.alpha[n];
        for (int ri : p.rules_of_symbol(f.symbol[n])) {
            const WtaRule& r = p.rules()[ri];
            double base = a[r.lhs] * r.weight;
            if (base == 0.0) continue;
            for (std::size_t i = 0; i < kids.size(); ++i) {
                double c = base;
                for (std::size_t j = 0; j < kids.size(); ++j)
                    if (j != i) c *= in.beta[kids[j]][r.children[j]];
                out.alpha[kids[i]][r.children[i]] += c;
            }
        }
        for (std::size_t i = 0; i < kids.size(); ++i) {
            double exponent = out.path_logscale[n];
            for (std::size_t j = 0; j < kids.size(); ++j)
                if (j != i) exponent += in.subtree_logscale[kids[j]];
            std::vector<double>& ac = out.alpha[kids[i]];
            if (rescale) {
                double m = *std::max_element(ac.begin(), ac.end());
                if (m > 0.0) {
                    for (double& x : ac) x /= m;
                    exponent += std::log(m);
                }
            }
            out.path_logscale[kids[i]] = exponent;
        }
    }
    return out;
}

ViterbiResult viterbi(const Wta& p, const Tree& t) {
    require_real(p, "viterbi");
    for (const WtaRule& r : p.rules())
        if (r.weight < 0.0)
            throw ModelError("viterbi requires non-negative weights");
    for (double w : p.root())
        if (w < 0.0)
            throw ModelError("viterbi requires non-negative weights");
    FlatTree f = flatten(t, p.alphabet());
    const int nq = p.num_states();
    // delta in log space; back[n][q] == -1 means no run reaches state q at
    // node n.  A zero-weight rule still yields a run (score -inf), which
    // matters only when every run has weight 0.
    std::vector<std::vector<double>> delta(f.size(), std::vector<double>(nq, kNegInf));
    std::vector<std::vector<int>> back(f.size(), std::vector<int>(nq, -1));
    for (int n = f.size() - 1; n >= 0; --n) {
        for (int ri : p.rules_of_symbol(f.symbol[n])) {
            const WtaRule& r = p.rules()[ri];
            double score = std::log(r.weight);  // log(0) = -inf is fine
            bool viable = true;
            for (std::size_t i = 0; i < r.children.size(); ++i) {
                int c = f.children[n][i];
                if (back[c][r.children[i]] < 0) {
                    viable = false;
                    break;
                }
                score += delta[c][r.children[i]];
            }
            if (!viable) continue;
            double& cur = delta[n][r.lhs];
            int& bp = back[n][r.lhs];
            // ties: smaller child-state tuple wins; canonical rule order
            // makes that the first candidate seen
            if (bp < 0 || score > cur) {
                cur = score;
                bp = ri;
            }
        }
    }
    int best_q = -1;
    double best = kNegInf;
    for (int q = 0; q < nq; ++q) {
        if (back[0][q] < 0) continue;
        double score = std::log(p.root()[q]) + delta[0][q];
        if (best_q < 0 || score > best) {  // strict: smallest maximizing state wins
            best = score;
            best_q = q;
        }
    }
    if (best_q < 0)
        throw ModelError("no run exists for this tree");
    ViterbiResult res;
    res.run.assign(f.size(), -1);
    res.weight = p.root()[best_q];
    res.log_weight = std::log(p.root()[best_q]);
    // pre-order ids ascend, so assigning parents before children works
    res.run[0] = best_q;
    for (int n = 0; n < f.size(); ++n) {
        const WtaRule& r = p.rules()[back[n][res.run[n]]];
        res.weight *= r.weight;
        res.log_weight += std::log(r.weight);
        for (std::size_t i = 0; i < r.children.size(); ++i)
            res.run[f.children[n][i]] = r.children[i];
    }
    return res;
}

ExpectedCounts expected_counts(const Wta& p, const Tree& t) {
    InsideTable in = inside(p, t);
    if (in.log_p == kNegInf)
        throw ModelError("tree has zero probability under the model");
    OutsideTable out = outside(p, t, in);
    FlatTree f = flatten(t, p.alphabet());
    const int nq = p.num_states();
    ExpectedCounts ec;
    ec.rule.assign(p.rules().size(), 0.0);
    ec.root.assign(nq, 0.0);
    ec.log_p = in.log_p;
    for (int n = 0; n < f.size(); ++n) {
        double exponent = out.path_logscale[n];
        for (int c : f.children[n]) exponent += in.subtree_logscale[c];
        double corr = std::exp(exponent - in.log_p);
        for (int ri : p.rules_of_symbol(f.symbol[n])) {
            const WtaRule& r = p.rules()[ri];
            double v = out.alpha[n][r.lhs] * r.weight;
            if (v == 0.0) continue;
            for (std::size_t i = 0; i < r.children.size(); ++i)
                v *= in.beta[f.children[n][i]][r.children[i]];
            ec.rule[ri] += v * corr;
        }
    }
    double root_corr = std::exp(in.subtree_logscale[0] - in.log_p);
    for (int q = 0; q < nq; ++q)
        ec.root[q] = p.root()[q] * in.beta[0][q] * root_corr;
    return ec;
}

namespace {

// Runs fn over [0, n) either threaded or plainly; out-of-line results are
// reduced by the caller in input order either way.
template <class Fn>
void for_each_index(int n, bool parallel, Fn&& fn) {
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) fn(i);
    } else {
        for (int i = 0; i < n; ++i) fn(i);
    }
}

struct ItemStats {
    ExpectedCounts counts;
    std::optional<std::string> error;
};

// shared M-step: counts -> new model
EmStepResult m_step(const Wta& p, const std::vector<double>& rule_counts,
                    const std::vector<double>& root_counts, long long n_trees,
                    double loglik, double smoothing) {
    std::vector<WtaRule> rules = p.rules();
    std::vector<int> untouched;
    for (int q = 0; q < p.num_states(); ++q) {
        const auto& ids = p.rules_of_state(q);
        double tot = 0.0;
        for (int ri : ids) tot += rule_counts[ri] + smoothing;
        if (tot <= 0.0) {
            untouched.push_back(q);  // no mass reached q: keep its old distribution
            continue;
        }
        for (int ri : ids) rules[ri].weight = (rule_counts[ri] + smoothing) / tot;
    }
    std::vector<double> root(p.num_states());
    for (int q = 0; q < p.num_states(); ++q)
        root[q] = root_counts[q] / static_cast<double>(n_trees);
    Wta model(p.alphabet(), p.state_names(), std::move(root), std::move(rules),
              Semiring::real());
    return {std::move(model), loglik, std::move(untouched)};
}

}  // namespace

EmStepResult em_step(const Wta& p, const TreeSample& s, const EmOptions& opts) {
    require_real(p, "em_step");
    if (s.items.empty())
        throw ModelError("em_step: empty sample");
    const int n = static_cast<int>(s.items.size());
    std::vector<ItemStats> per_item(n);
    for_each_index(n, opts.parallel, [&](int i) {
        try {
            per_item[i].counts = expected_counts(p, s.items[i].first);
        } catch (const Error& e) {
            per_item[i].error = e.what();
        }
    });
    std::vector<double> rule_counts(p.rules().size(), 0.0);
    std::vector<double> root_counts(p.num_states(), 0.0);
    double loglik = 0.0;
    for (int i = 0; i < n; ++i) {  // input order: bit-reproducible reduction
        if (per_item[i].error)
            throw ModelError("sample tree #" + std::to_string(i) + ": " + *per_item[i].error);
        const double cnt = static_cast<double>(s.items[i].second);
        const ExpectedCounts& ec = per_item[i].counts;
        for (std::size_t ri = 0; ri < rule_counts.size(); ++ri)
            rule_counts[ri] += cnt * ec.rule[ri];
        for (int q = 0; q < p.num_states(); ++q) root_counts[q] += cnt * ec.root[q];
        loglik += cnt * ec.log_p;
    }
    return m_step(p, rule_counts, root_counts, s.total(), loglik, opts.smoothing);
}

TrainResult train(const Wta& p, const TreeSample& s, int max_iters, double rel_tol,
                  const EmOptions& opts) {
    TrainResult res{p, {}, {}};
    for (int k = 0; k < max_iters; ++k) {
        EmStepResult step = em_step(res.model, s, opts);
        res.trace.push_back(step.log_likelihood);
        res.model = std::move(step.model);
        res.untouched_states = std::move(step.untouched_states);
        if (k > 0) {
            double prev = res.trace[k - 1], cur = res.trace[k];
            double rel = (cur - prev) / std::max(1.0, std::abs(prev));
            if (rel < rel_tol) break;
        }
    }
    return res;
}

namespace {

struct ViterbiStats {
    std::vector<int> rules_used;  // rule index per node
    int root_state = -1;
    double log_weight = 0.0;
    std::optional<std::string> error;
};

}  // namespace

TrainResult viterbi_train(const Wta& p, const TreeSample& s, int max_iters,
                          const EmOptions& opts) {
    require_real(p, "viterbi_train");
    if (s.items.empty())
        throw ModelError("viterbi_train: empty sample");
    TrainResult res{p, {}, {}};
    const int n = static_cast<int>(s.items.size());
    for (int k = 0; k < max_iters; ++k) {
        std::vector<ViterbiStats> per_item(n);
        const Wta& cur = res.model;
        for_each_index(n, opts.parallel, [&](int i) {
            try {
                const Tree& t = s.items[i].first;
                ViterbiResult vr = viterbi(cur, t);
                FlatTree f = flatten(t, cur.alphabet());
                ViterbiStats& st = per_item[i];
                st.root_state = vr.run[0];
                st.log_weight = vr.log_weight;
                st.rules_used.resize(f.size());
                std::vector<int> child_states;
                for (int m = 0; m < f.size(); ++m) {
                    child_states.clear();
                    for (int c : f.children[m]) child_states.push_back(vr.run[c]);
                    st.rules_used[m] = cur.find_rule(vr.run[m], f.symbol[m], child_states);
                }
            } catch (const Error& e) {
                per_item[i].error = e.what();
            }
        });
        std::vector<double> rule_counts(cur.rules().size(), 0.0);
        std::vector<double> root_counts(cur.num_states(), 0.0);
        double loglik = 0.0;
        for (int i = 0; i < n; ++i) {
            if (per_item[i].error)
                throw ModelError("sample tree #" + std::to_string(i) + ": " +
                                 *per_item[i].error);
            const double cnt = static_cast<double>(s.items[i].second);
            for (int ri : per_item[i].rules_used) rule_counts[ri] += cnt;
            root_counts[per_item[i].root_state] += cnt;
            loglik += cnt * per_item[i].log_weight;
        }
        EmStepResult step =
            m_step(cur, rule_counts, root_counts, s.total(), loglik, opts.smoothing);
        res.trace.push_back(loglik);
        res.model = std::move(step.model);
        res.untouched_states = std::move(step.untouched_states);
    }
    return res;
}

static void render_run_rec(const Tree& t, const Run& r, const Wta& a, int& node,
                           std::string& out) {
    out += t.label;
    out += ':';
    out += a.state_name(r[node]);
    ++node;
    if (!t.children.empty()) {
        out += '(';
        for (std::size_t i = 0; i < t.children.size(); ++i) {
            if (i) out += ',';
            render_run_rec(t.children[i], r, a, node, out);
        }
        out += ')';
    }
}

std::string render_run(const Tree& t, const Run& r, const Wta& a) {
    if (static_cast<int>(r.size()) != tree_size(t))
        throw ModelError("run shape does not match the tree");
    std::string out;
    int node = 0;
    render_run_rec(t, r, a, node, out);
    return out;
}

}  // namespace treeauto
