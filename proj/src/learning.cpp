#include "treeauto/learning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <set>

#include "treeauto/errors.hpp"

namespace treeauto {

EmpiricalSeries::EmpiricalSeries(const TreeSample& s) : total_(s.total()) {
    if (s.items.empty())
        throw ModelError("empirical series needs a nonempty sample");
    for (const auto& [t, c] : s.items) counts_[render_tree(t)] += c;
}

double EmpiricalSeries::value(const Tree& t) const {
    auto it = counts_.find(render_tree(t));
    if (it == counts_.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(total_);
}

HankelBlock build_hankel(const SeriesFn& series, std::vector<Context> rows,
                         std::vector<Tree> cols, bool parallel) {
    if (rows.empty() || cols.empty())
        throw ModelError("build_hankel needs nonempty row and column lists");
    HankelBlock h;
    h.rows = std::move(rows);
    h.cols = std::move(cols);
    const int nr = static_cast<int>(h.rows.size());
    const int nc = static_cast<int>(h.cols.size());
    h.values.assign(static_cast<std::size_t>(nr) * nc, 0.0);
    const int total = nr * nc;
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < total; ++k)
            h.values[k] = series(substitute(h.rows[k / nc], h.cols[k % nc]));
    } else {
        for (int k = 0; k < total; ++k)
            h.values[k] = series(substitute(h.rows[k / nc], h.cols[k % nc]));
    }
    return h;
}

namespace {

bool tree_scan_order(const Tree& a, const Tree& b) {
    int sa = tree_size(a), sb = tree_size(b);
    if (sa != sb) return sa < sb;
    return render_tree(a) < render_tree(b);
}

// row of Hankel values for one tree over the context list
Eigen::VectorXd row_of(const SeriesFn& series, const std::vector<Context>& contexts,
                       const Tree& t, bool parallel) {
    const int m = static_cast<int>(contexts.size());
    Eigen::VectorXd v(m);
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < m; ++i) v[i] = series(substitute(contexts[i], t));
    } else {
        for (int i = 0; i < m; ++i) v[i] = series(substitute(contexts[i], t));
    }
    return v;
}

// least-squares coordinates of v in the span of the columns of B
Eigen::VectorXd coords_in(const Eigen::MatrixXd& basis, const Eigen::VectorXd& v) {
    return basis.completeOrthogonalDecomposition().solve(v);
}

LinearRep zero_series_rep(const RankedAlphabet& alphabet) {
    std::vector<std::vector<double>> mu(alphabet.size());
    for (int s = 0; s < alphabet.size(); ++s) mu[s].assign(1, 0.0);  // 1^(p+1) entries
    return LinearRep(alphabet, 1, {0.0}, std::move(mu));
}

}  // namespace

LearnResult learn_rational_series(const SeriesFn& series, const RankedAlphabet& alphabet,
                                  const std::vector<Context>& contexts,
                                  const std::vector<Tree>& candidates,
                                  const LearnOptions& opts) {
    if (candidates.empty())
        throw ModelError("learn_rational_series: empty candidate list (empty sample?)");
    if (contexts.empty())
        throw ModelError("learn_rational_series: empty context list");
    bool has_trivial = false;
    int trivial_at = -1;
    for (std::size_t i = 0; i < contexts.size(); ++i)
        if (contexts[i].pattern() == Tree{std::string(kHoleName), {}}) {
            has_trivial = true;
            trivial_at = static_cast<int>(i);
            break;
        }
    if (!has_trivial)
        throw ModelError("learn_rational_series: contexts must include the trivial context");
    {
        std::set<std::string> cand_set;
        for (const Tree& t : candidates) cand_set.insert(render_tree(t));
        for (const Tree& t : candidates)
            for (const Tree& c : t.children)
                if (!cand_set.count(render_tree(c)))
                    throw ModelError(
                        "learn_rational_series: candidates are not subtree-closed (missing " +
                        render_tree(c) + ")");
    }

    std::vector<Tree> scan = candidates;
    std::sort(scan.begin(), scan.end(), tree_scan_order);
    const int m = static_cast<int>(contexts.size());

    // greedy basis selection on Hankel rows; the Hankel block itself is
    // filled up-front (entry-parallel), the scan is sequential
    HankelBlock block = build_hankel(series, contexts, scan, opts.parallel);
    LearnResult result{zero_series_rep(alphabet), {}, false};
    std::vector<int> basis_ids;
    Eigen::MatrixXd basis(m, 0);
    std::map<std::string, Eigen::VectorXd> row_cache;
    for (int j = 0; j < static_cast<int>(scan.size()); ++j) {
        Eigen::VectorXd v(m);
        for (int i = 0; i < m; ++i) v[i] = block.at(i, j);
        row_cache.emplace(render_tree(scan[j]), v);
        double resid =
            basis.cols() == 0 ? v.norm() : (v - basis * coords_in(basis, v)).norm();
        if (resid > opts.rank_tol) {
            if (static_cast<int>(basis_ids.size()) == opts.max_dim) {
                result.max_dim_reached = true;
                break;
            }
            basis_ids.push_back(j);
            basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
            basis.col(basis.cols() - 1) = v;
        }
    }

    const int d = static_cast<int>(basis_ids.size());
    if (d == 0)  // zero series: dimension-1 zero representation by convention
        return result;
    std::vector<Tree> basis_trees;
    basis_trees.reserve(d);
    for (int id : basis_ids) basis_trees.push_back(scan[id]);
    result.basis = basis_trees;

    // tensor entries: coordinates of f(b_i1, .., b_ip) rows in the basis
    auto coords_of_tree = [&](const Tree& t) -> Eigen::VectorXd {
        std::string key = render_tree(t);
        auto it = row_cache.find(key);
        Eigen::VectorXd v;
        if (it != row_cache.end()) {
            v = it->second;
        } else {
            v = row_of(series, contexts, t, opts.parallel);
            row_cache.emplace(std::move(key), v);
        }
        return coords_in(basis, v);
    };
    std::vector<std::vector<double>> mu(alphabet.size());
    for (int s = 0; s < alphabet.size(); ++s) {
        const int p = alphabet.symbol(s).arity;
        std::size_t n = 1;
        for (int i = 0; i <= p; ++i) n *= static_cast<std::size_t>(d);
        mu[s].assign(n, 0.0);
        const std::size_t stride = n / d;  // d^p
        std::vector<int> tup(p, 0);
        std::size_t flat = 0;
        while (true) {
            Tree combo{alphabet.symbol(s).name, {}};
            combo.children.reserve(p);
            for (int i = 0; i < p; ++i) combo.children.push_back(basis_trees[tup[i]]);
            Eigen::VectorXd coords = coords_of_tree(combo);
            for (int o = 0; o < d; ++o) mu[s][o * stride + flat] = coords[o];
            ++flat;
            int i = p - 1;
            while (i >= 0 && tup[i] == d - 1) tup[i--] = 0;
            if (i < 0) break;
            ++tup[i];
        }
    }

    // lambda: fit eval_linear(basis tree) to its trivial-context value.
    // With mu(b_i) = e_i (the usual case) this is just the value vector.
    LinearRep unfitted(alphabet, d, std::vector<double>(d, 0.0), mu);
    Eigen::MatrixXd basis_vecs(d, d);
    Eigen::VectorXd targets(d);
    for (int i = 0; i < d; ++i) {
        std::vector<std::vector<double>> vecs = mu_vectors(unfitted, basis_trees[i]);
        for (int k = 0; k < d; ++k) basis_vecs(i, k) = vecs[0][k];
        targets[i] = block.at(trivial_at, basis_ids[i]);
    }
    Eigen::VectorXd lambda = basis_vecs.completeOrthogonalDecomposition().solve(targets);
    result.rep = LinearRep(alphabet, d, std::vector<double>(lambda.data(), lambda.data() + d),
                           std::move(mu));
    return result;
}

LearnWtaResult learn_wta(const SeriesFn& series, const RankedAlphabet& alphabet,
                         const std::vector<Context>& contexts,
                         const std::vector<Tree>& candidates, const LearnOptions& opts) {
    LearnResult lr = learn_rational_series(series, alphabet, contexts, candidates, opts);
    return {linear_to_wta(lr.rep), std::move(lr.basis), lr.max_dim_reached};
}

namespace {

// every way to puncture one subtree out of t, bounded by max_nodes
void collect_contexts(const Tree& t, int max_nodes,
                      std::map<std::string, Context>& out) {
    struct Walk {
        static void at(const Tree& whole, const std::vector<int>& path, const Tree& here,
                       int max_nodes, std::map<std::string, Context>& out) {
            Tree punctured = puncture(whole, path, 0);
            if (tree_size(punctured) <= max_nodes) {
                Context c{punctured};
                out.emplace(render_context(c), c);
            }
            for (std::size_t i = 0; i < here.children.size(); ++i) {
                std::vector<int> next = path;
                next.push_back(static_cast<int>(i));
                at(whole, next, here.children[i], max_nodes, out);
            }
        }
        static Tree puncture(const Tree& t, const std::vector<int>& path, std::size_t depth) {
            if (depth == path.size()) return Tree{std::string(kHoleName), {}};
            Tree out{t.label, {}};
            out.children.reserve(t.children.size());
            for (std::size_t i = 0; i < t.children.size(); ++i)
                out.children.push_back(
                    static_cast<int>(i) == path[depth]
                        ? puncture(t.children[i], path, depth + 1)
                        : t.children[i]);
            return out;
        }
    };
    Walk::at(t, {}, t, max_nodes, out);
}

void collect_subtrees(const Tree& t, int max_nodes, std::map<std::string, Tree>& out) {
    if (tree_size(t) <= max_nodes) out.emplace(render_tree(t), t);
    for (const Tree& c : t.children) collect_subtrees(c, max_nodes, out);
}

}  // namespace

// distinct trees of a sample; repeated items would redo identical work
static std::vector<const Tree*> distinct_trees(const TreeSample& s) {
    std::map<std::string, const Tree*> seen;
    for (const auto& [t, c] : s.items) seen.try_emplace(render_tree(t), &t);
    std::vector<const Tree*> out;
    out.reserve(seen.size());
    for (const auto& [k, t] : seen) out.push_back(t);
    return out;
}

std::vector<Context> contexts_from_sample(const TreeSample& s, int max_nodes) {
    std::map<std::string, Context> seen;
    Context trivial{Tree{std::string(kHoleName), {}}};
    seen.emplace(render_context(trivial), trivial);
    for (const Tree* t : distinct_trees(s)) collect_contexts(*t, max_nodes, seen);
    std::vector<Context> out;
    out.reserve(seen.size());
    for (auto& [k, c] : seen) out.push_back(std::move(c));
    std::sort(out.begin(), out.end(), [](const Context& a, const Context& b) {
        return tree_scan_order(a.pattern(), b.pattern());
    });
    return out;
}

std::vector<Tree> candidates_from_sample(const TreeSample& s, int max_nodes) {
    std::map<std::string, Tree> seen;
    for (const Tree* t : distinct_trees(s)) collect_subtrees(*t, max_nodes, seen);
    std::vector<Tree> out;
    out.reserve(seen.size());
    for (auto& [k, t] : seen) out.push_back(std::move(t));
    std::sort(out.begin(), out.end(), tree_scan_order);
    return out;
}

static void collect_symbols(const Tree& t, std::map<std::string, int>& arities) {
    auto [it, inserted] = arities.try_emplace(t.label, static_cast<int>(t.children.size()));
    if (!inserted && it->second != static_cast<int>(t.children.size()))
        throw ModelError("symbol '" + t.label + "' used with arities " +
                         std::to_string(it->second) + " and " +
                         std::to_string(t.children.size()));
    for (const Tree& c : t.children) collect_symbols(c, arities);
}

RankedAlphabet alphabet_from_sample(const TreeSample& s) {
    if (s.items.empty())
        throw ModelError("cannot derive an alphabet from an empty sample");
    std::map<std::string, int> arities;
    for (const auto& [t, c] : s.items) collect_symbols(t, arities);
    std::vector<Symbol> syms;
    syms.reserve(arities.size());
    for (const auto& [name, arity] : arities) syms.push_back({name, arity});
    return RankedAlphabet(std::move(syms));
}

LearnResult learn_from_sample(const TreeSample& s, const SampleLearnOptions& opts) {
    RankedAlphabet alphabet = alphabet_from_sample(s);
    std::vector<Context> contexts = contexts_from_sample(s, opts.context_size);
    std::vector<Tree> candidates = candidates_from_sample(s, opts.candidate_size);
    EmpiricalSeries emp(s);
    LearnOptions lo;
    lo.rank_tol = opts.rank_tol;
    lo.max_dim = opts.max_dim;
    lo.parallel = opts.parallel;
    return learn_rational_series([&emp](const Tree& t) { return emp.value(t); }, alphabet,
                                 contexts, candidates, lo);
}

}  // namespace treeauto
