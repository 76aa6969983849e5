#include "treeauto/wta.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "treeauto/errors.hpp"
#include "treeauto/text.hpp"

namespace treeauto {

Wta::Wta(RankedAlphabet alphabet, std::vector<std::string> state_names,
         std::vector<double> root, std::vector<WtaRule> rules, Semiring semiring)
    : alphabet_(std::move(alphabet)),
      state_names_(std::move(state_names)),
      root_(std::move(root)),
      semiring_(semiring) {
    const int nq = static_cast<int>(state_names_.size());
    if (nq == 0)
        throw ModelError("automaton needs at least one state");
    for (int i = 0; i < nq; ++i) {
        if (!is_identifier(state_names_[i]))
            throw ModelError("bad state name '" + state_names_[i] + "'");
        for (int j = 0; j < i; ++j)
            if (state_names_[j] == state_names_[i])
                throw ModelError("state '" + state_names_[i] + "' declared twice");
    }
    if (static_cast<int>(root_.size()) != nq)
        throw ModelError("root weight vector has wrong length");
    for (double w : root_)
        if (!semiring_.valid_element(w))
            throw ModelError("root weight " + format_double(w) + " is not a valid " +
                             std::string(semiring_.name()) + " element");
    for (const WtaRule& r : rules) {
        if (r.lhs < 0 || r.lhs >= nq)
            throw ModelError("rule with out-of-range state");
        if (r.symbol < 0 || r.symbol >= alphabet_.size())
            throw ModelError("rule with unknown symbol");
        if (static_cast<int>(r.children.size()) != alphabet_.symbol(r.symbol).arity)
            throw ModelError("rule arity does not match symbol '" +
                             alphabet_.symbol(r.symbol).name + "'");
        for (int c : r.children)
            if (c < 0 || c >= nq)
                throw ModelError("rule with out-of-range child state");
        if (!semiring_.valid_element(r.weight))
            throw ModelError("rule weight " + format_double(r.weight) + " is not a valid " +
                             std::string(semiring_.name()) + " element");
    }
    std::sort(rules.begin(), rules.end(), [](const WtaRule& a, const WtaRule& b) {
        return std::tie(a.lhs, a.symbol, a.children) < std::tie(b.lhs, b.symbol, b.children);
    });
    // merge duplicate keys with the semiring plus
    for (const WtaRule& r : rules) {
        if (!rules_.empty()) {
            WtaRule& last = rules_.back();
            if (last.lhs == r.lhs && last.symbol == r.symbol && last.children == r.children) {
                last.weight = semiring_.plus(last.weight, r.weight);
                continue;
            }
        }
        rules_.push_back(r);
    }
    rules_by_symbol_.assign(alphabet_.size(), {});
    rules_by_lhs_.assign(nq, {});
    for (int i = 0; i < static_cast<int>(rules_.size()); ++i) {
        const WtaRule& r = rules_[i];
        rules_by_symbol_[r.symbol].push_back(i);
        rules_by_lhs_[r.lhs].push_back(i);
        rule_index_[{r.lhs, r.symbol, r.children}] = i;
    }
}

int Wta::state_id(std::string_view name) const {
    for (std::size_t i = 0; i < state_names_.size(); ++i)
        if (state_names_[i] == name) return static_cast<int>(i);
    return -1;
}

int Wta::find_rule(int lhs, int symbol, const std::vector<int>& children) const {
    auto it = rule_index_.find({lhs, symbol, children});
    return it == rule_index_.end() ? -1 : it->second;
}

static void flatten_rec(const Tree& t, const RankedAlphabet& sigma, int parent, FlatTree& out) {
    int id = sigma.id_of(t.label);
    if (id < 0)
        throw ModelError("unknown symbol '" + t.label + "'");
    if (static_cast<int>(t.children.size()) != sigma.symbol(id).arity)
        throw ModelError("symbol '" + t.label + "' has arity " +
                         std::to_string(sigma.symbol(id).arity) + ", got " +
                         std::to_string(t.children.size()) + " children");
    int self = out.size();
    out.symbol.push_back(id);
    out.children.emplace_back();
    out.parent.push_back(parent);
    for (const Tree& c : t.children) {
        out.children[self].push_back(out.size());
        flatten_rec(c, sigma, self, out);
    }
}

FlatTree flatten(const Tree& t, const RankedAlphabet& alphabet) {
    FlatTree f;
    flatten_rec(t, alphabet, -1, f);
    return f;
}

double weight_of_run(const Wta& a, const Tree& t, const Run& r) {
    FlatTree f = flatten(t, a.alphabet());
    if (static_cast<int>(r.size()) != f.size())
        throw ModelError("run shape does not match the tree");
    for (int q : r)
        if (q < 0 || q >= a.num_states())
            throw ModelError("run uses an unknown state");
    const Semiring& sr = a.semiring();
    double acc = a.root()[r[0]];
    std::vector<int> child_states;
    for (int n = 0; n < f.size(); ++n) {
        child_states.clear();
        for (int c : f.children[n]) child_states.push_back(r[c]);
        int ri = a.find_rule(r[n], f.symbol[n], child_states);
        if (ri < 0)
            throw ModelError("run uses a nonexistent rule at node " + std::to_string(n));
        acc = sr.times(acc, a.rules()[ri].weight);
    }
    return acc;
}

std::vector<Run> enumerate_runs(const Wta& a, const Tree& t) {
    FlatTree f = flatten(t, a.alphabet());
    const int n = f.size();
    const int nq = a.num_states();
    double candidates = std::pow(static_cast<double>(nq), static_cast<double>(n));
    if (candidates > 1e6)
        throw NumericError("enumerate_runs: " + format_double(candidates) +
                           " candidate assignments exceed the 1e6 guard");
    std::vector<Run> out;
    Run r(n, 0);
    std::vector<int> child_states;
    while (true) {
        bool valid = true;
        for (int i = 0; i < n && valid; ++i) {
            child_states.clear();
            for (int c : f.children[i]) child_states.push_back(r[c]);
            valid = a.find_rule(r[i], f.symbol[i], child_states) >= 0;
        }
        if (valid) out.push_back(r);
        // odometer: last node is least significant, so output order is
        // lexicographic over pre-order assignments
        int i = n - 1;
        while (i >= 0 && r[i] == nq - 1) r[i--] = 0;
        if (i < 0) break;
        ++r[i];
    }
    return out;
}

double evaluate(const Wta& a, const Tree& t) {
    FlatTree f = flatten(t, a.alphabet());
    const Semiring& sr = a.semiring();
    const int nq = a.num_states();
    std::vector<std::vector<double>> beta(f.size(), std::vector<double>(nq, sr.zero()));
    for (int n = f.size() - 1; n >= 0; --n) {
        for (int ri : a.rules_of_symbol(f.symbol[n])) {
            const WtaRule& r = a.rules()[ri];
            double acc = r.weight;
            for (std::size_t i = 0; i < r.children.size(); ++i)
                acc = sr.times(acc, beta[f.children[n][i]][r.children[i]]);
            beta[n][r.lhs] = sr.plus(beta[n][r.lhs], acc);
        }
    }
    double res = sr.zero();
    for (int q = 0; q < nq; ++q)
        res = sr.plus(res, sr.times(a.root()[q], beta[0][q]));
    return res;
}

std::vector<double> evaluate_batch(const Wta& a, const std::vector<Tree>& trees, bool parallel) {
    std::vector<double> out(trees.size());
    const int n = static_cast<int>(trees.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) out[i] = evaluate(a, trees[i]);
    } else {
        for (int i = 0; i < n; ++i) out[i] = evaluate(a, trees[i]);
    }
    return out;
}

bool is_deterministic(const Wta& a) {
    std::map<std::pair<int, std::vector<int>>, int> lhs_of;
    for (const WtaRule& r : a.rules()) {
        auto [it, inserted] = lhs_of.try_emplace({r.symbol, r.children}, r.lhs);
        if (!inserted && it->second != r.lhs) return false;
    }
    return true;
}

static constexpr double kPtaTol = 1e-9;

PtaReport check_pta(const Wta& a) {
    if (a.semiring().kind() != SemiringKind::Real)
        throw ModelError("check_pta requires the real semiring");
    PtaReport rep;
    auto bad_weight = [&](const std::string& where, double w) {
        rep.violations.push_back({PtaViolation::Kind::WeightRange, where, w,
                                  where + " has weight " + format_double(w) +
                                      " outside [0,1]"});
    };
    double root_sum = 0.0;
    for (int q = 0; q < a.num_states(); ++q) {
        double w = a.root()[q];
        if (w < 0.0 || w > 1.0) bad_weight("root(" + a.state_name(q) + ")", w);
        root_sum += w;
    }
    if (std::abs(root_sum - 1.0) > kPtaTol)
        rep.violations.push_back({PtaViolation::Kind::RootSum, "", root_sum,
                                  "root weights sum to " + format_double(root_sum)});
    for (const WtaRule& r : a.rules())
        if (r.weight < 0.0 || r.weight > 1.0)
            bad_weight("rule " + a.state_name(r.lhs) + " -> " +
                           a.alphabet().symbol(r.symbol).name,
                       r.weight);
    for (int q = 0; q < a.num_states(); ++q) {
        const auto& rules = a.rules_of_state(q);
        if (rules.empty()) {
            rep.violations.push_back({PtaViolation::Kind::DeadState, a.state_name(q), 0.0,
                                      "state " + a.state_name(q) +
                                          " has no rules (sampling would block)"});
            continue;
        }
        double s = 0.0;
        for (int ri : rules) s += a.rules()[ri].weight;
        if (std::abs(s - 1.0) > kPtaTol)
            rep.violations.push_back({PtaViolation::Kind::StateSum, a.state_name(q), s,
                                      "state " + a.state_name(q) + " sums to " +
                                          format_double(s)});
    }
    return rep;
}

// uniform in [0,1) with all 53 mantissa bits from the generator,
// identical on every platform
static double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// index drawn from unnormalized weights; deterministic CDF walk
static int draw_index(std::mt19937_64& rng, const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    double u = uniform01(rng) * total;
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        acc += w[i];
        last_positive = static_cast<int>(i);
        if (u < acc) return last_positive;
    }
    if (last_positive < 0)
        throw ModelError("cannot draw from an all-zero distribution");
    return last_positive;
}

static Tree expand_state(const Wta& p, std::mt19937_64& rng, int q, int depth, int max_depth) {
    if (depth > max_depth)
        throw DepthExceeded("sampling exceeded max depth " + std::to_string(max_depth));
    const auto& rule_ids = p.rules_of_state(q);
    std::vector<double> w;
    w.reserve(rule_ids.size());
    for (int ri : rule_ids) w.push_back(p.rules()[ri].weight);
    const WtaRule& rule = p.rules()[rule_ids[draw_index(rng, w)]];
    Tree t{p.alphabet().symbol(rule.symbol).name, {}};
    t.children.reserve(rule.children.size());
    for (int qc : rule.children) t.children.push_back(expand_state(p, rng, qc, depth + 1, max_depth));
    return t;
}

Tree sample(const Wta& pta, std::mt19937_64& rng, int max_depth) {
    if (!check_pta(pta).valid())
        throw ModelError("sample requires a valid pta");
    int q = draw_index(rng, pta.root());
    return expand_state(pta, rng, q, 1, max_depth);
}

Tree sample(const Wta& pta, std::uint64_t seed, int max_depth) {
    std::mt19937_64 rng(seed);
    return sample(pta, rng, max_depth);
}

std::vector<Tree> sample_many(const Wta& pta, int n, std::uint64_t seed, int max_depth) {
    if (!check_pta(pta).valid())
        throw ModelError("sample requires a valid pta");
    std::mt19937_64 rng(seed);
    std::vector<Tree> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        int q = draw_index(rng, pta.root());
        out.push_back(expand_state(pta, rng, q, 1, max_depth));
    }
    return out;
}

MassResult state_mass_fixpoint(const Wta& a, double tol, int max_iter, double divergence_bound) {
    if (a.semiring().kind() != SemiringKind::Real)
        throw ModelError("mass fixed point requires the real semiring");
    const int nq = a.num_states();
    MassResult res;
    res.per_state.assign(nq, 0.0);
    std::vector<double> next(nq, 0.0);
    for (int it = 1; it <= max_iter; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (const WtaRule& r : a.rules()) {
            double term = r.weight;
            for (int c : r.children) term *= res.per_state[c];
            next[r.lhs] += term;
        }
        double delta = 0.0;
        for (int q = 0; q < nq; ++q) {
            if (next[q] > divergence_bound)
                throw NumericError("mass fixed point diverges: Z(" + a.state_name(q) +
                                   ") grew past " + format_double(divergence_bound));
            delta = std::max(delta, std::abs(next[q] - res.per_state[q]));
        }
        res.per_state = next;
        res.iters = it;
        if (delta < tol) {
            res.converged = true;
            break;
        }
    }
    res.total = 0.0;
    for (int q = 0; q < nq; ++q) res.total += a.root()[q] * res.per_state[q];
    return res;
}

Wta to_pta(const Wta& a, double tol, int max_iter) {
    if (a.semiring().kind() != SemiringKind::Real)
        throw ModelError("to_pta requires the real semiring");
    for (double w : a.root())
        if (w < 0.0) throw ModelError("to_pta requires non-negative weights");
    for (const WtaRule& r : a.rules())
        if (r.weight < 0.0) throw ModelError("to_pta requires non-negative weights");
    MassResult z = state_mass_fixpoint(a, tol, max_iter);
    if (!z.converged)
        throw NumericError("to_pta: mass fixed point did not converge in " +
                           std::to_string(max_iter) + " iterations");
    if (z.total <= 0.0)
        throw NumericError("to_pta: total mass is zero");
    // keep only states with positive mass
    std::vector<int> remap(a.num_states(), -1);
    std::vector<std::string> names;
    std::vector<double> root;
    for (int q = 0; q < a.num_states(); ++q) {
        if (z.per_state[q] > 0.0) {
            remap[q] = static_cast<int>(names.size());
            names.push_back(a.state_name(q));
            root.push_back(a.root()[q] * z.per_state[q] / z.total);
        }
    }
    std::vector<WtaRule> rules;
    for (const WtaRule& r : a.rules()) {
        if (remap[r.lhs] < 0) continue;
        double w = r.weight;
        bool dropped = false;
        std::vector<int> children;
        children.reserve(r.children.size());
        for (int c : r.children) {
            if (remap[c] < 0) { dropped = true; break; }
            w *= z.per_state[c];
            children.push_back(remap[c]);
        }
        if (dropped) continue;
        w /= z.per_state[r.lhs];
        if (w == 0.0) continue;
        rules.push_back({remap[r.lhs], r.symbol, std::move(children), w});
    }
    return Wta(a.alphabet(), std::move(names), std::move(root), std::move(rules),
               Semiring::real());
}

// --- text format ----------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// significant lines of a sectioned model file, with line numbers
std::vector<std::pair<std::size_t, std::string>> model_lines(std::istream& in) {
    std::vector<std::pair<std::size_t, std::string>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string_view sig = trim(line);
        if (!sig.empty()) out.emplace_back(lineno, std::string(sig));
    }
    return out;
}

Symbol parse_symbol_decl(std::string_view tok, std::size_t lineno) {
    std::size_t slash = tok.rfind('/');
    if (slash == std::string_view::npos)
        throw ParseError("symbol declaration must be name/arity, got '" + std::string(tok) + "'",
                         lineno);
    std::string name(tok.substr(0, slash));
    int arity;
    try {
        std::size_t used = 0;
        arity = std::stoi(std::string(tok.substr(slash + 1)), &used);
        if (used != tok.size() - slash - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
        throw ParseError("bad arity in '" + std::string(tok) + "'", lineno);
    }
    return {name, arity};
}

}  // namespace

Wta read_wta(std::istream& in) {
    auto lines = model_lines(in);
    if (lines.empty() || lines[0].second != "wta")
        throw ParseError("expected 'wta' header", lines.empty() ? 1 : lines[0].first);

    Semiring sr = Semiring::real();
    std::vector<Symbol> symbols;
    std::vector<std::string> state_names;
    struct RootDecl {
        std::size_t lineno;
        std::string state;
        double weight;
    };
    std::vector<RootDecl> root_decls;
    struct RuleDecl {
        std::size_t lineno;
        std::string lhs, symbol;
        std::vector<std::string> children;
        double weight;
    };
    std::vector<RuleDecl> rule_decls;

    for (std::size_t li = 1; li < lines.size(); ++li) {
        auto [lineno, text] = lines[li];
        std::string_view sv = text;
        auto starts = [&](std::string_view key) {
            if (sv.substr(0, key.size()) != key) return false;
            sv.remove_prefix(key.size());
            sv = trim(sv);
            return true;
        };
        if (starts("semiring:")) {
            sr = Semiring::from_name(sv);
        } else if (starts("alphabet:")) {
            for (const std::string& tok : split_list(sv))
                symbols.push_back(parse_symbol_decl(tok, lineno));
        } else if (starts("states:")) {
            for (std::string& tok : split_list(sv)) state_names.push_back(std::move(tok));
        } else if (starts("root:")) {
            auto toks = split_list(sv);
            if (toks.size() != 2)
                throw ParseError("root line must be 'root: state weight'", lineno);
            root_decls.push_back({lineno, toks[0], parse_double_strict(toks[1], lineno)});
        } else if (starts("rule:")) {
            // q -> f(q1, q2) : w      |      q -> a : w
            std::size_t arrow = sv.find("->");
            std::size_t colon = sv.rfind(':');
            if (arrow == std::string_view::npos || colon == std::string_view::npos ||
                colon < arrow)
                throw ParseError("rule line must be 'rule: q -> rhs : weight'", lineno);
            RuleDecl d;
            d.lineno = lineno;
            d.lhs = std::string(trim(sv.substr(0, arrow)));
            d.weight = parse_double_strict(trim(sv.substr(colon + 1)), lineno);
            std::string_view rhs = trim(sv.substr(arrow + 2, colon - arrow - 2));
            std::size_t paren = rhs.find('(');
            if (paren == std::string_view::npos) {
                d.symbol = std::string(rhs);
            } else {
                if (rhs.back() != ')')
                    throw ParseError("unbalanced '(' in rule", lineno);
                d.symbol = std::string(trim(rhs.substr(0, paren)));
                for (std::string& tok :
                     split_list(rhs.substr(paren + 1, rhs.size() - paren - 2)))
                    d.children.push_back(std::move(tok));
            }
            rule_decls.push_back(std::move(d));
        } else {
            throw ParseError("unrecognized line '" + text + "'", lineno);
        }
    }

    RankedAlphabet alphabet{symbols};
    auto state_of = [&](const std::string& name, std::size_t lineno) {
        for (std::size_t i = 0; i < state_names.size(); ++i)
            if (state_names[i] == name) return static_cast<int>(i);
        throw ParseError("unknown state '" + name + "'", lineno);
    };
    std::vector<double> root(state_names.size(), sr.zero());
    for (const RootDecl& d : root_decls) {
        int q = state_of(d.state, d.lineno);
        root[q] = sr.plus(root[q], d.weight);
    }
    std::vector<WtaRule> rules;
    for (const RuleDecl& d : rule_decls) {
        WtaRule r;
        r.lhs = state_of(d.lhs, d.lineno);
        r.symbol = alphabet.id_of(d.symbol);
        if (r.symbol < 0)
            throw ParseError("unknown symbol '" + d.symbol + "'", d.lineno);
        for (const std::string& c : d.children) r.children.push_back(state_of(c, d.lineno));
        r.weight = d.weight;
        rules.push_back(std::move(r));
    }
    return Wta(alphabet, std::move(state_names), std::move(root), std::move(rules), sr);
}

void write_wta(std::ostream& out, const Wta& a) {
    out << "wta\n";
    out << "semiring: " << a.semiring().name() << '\n';
    out << "alphabet:";
    for (int i = 0; i < a.alphabet().size(); ++i) {
        const Symbol& s = a.alphabet().symbol(i);
        out << (i ? ", " : " ") << s.name << '/' << s.arity;
    }
    out << '\n';
    out << "states:";
    for (int q = 0; q < a.num_states(); ++q) out << ' ' << a.state_name(q);
    out << '\n';
    for (int q = 0; q < a.num_states(); ++q)
        if (a.root()[q] != a.semiring().zero())
            out << "root: " << a.state_name(q) << ' ' << format_double(a.root()[q]) << '\n';
    for (const WtaRule& r : a.rules()) {
        out << "rule: " << a.state_name(r.lhs) << " -> " << a.alphabet().symbol(r.symbol).name;
        if (!r.children.empty()) {
            out << '(';
            for (std::size_t i = 0; i < r.children.size(); ++i)
                out << (i ? ", " : "") << a.state_name(r.children[i]);
            out << ')';
        }
        out << " : " << format_double(r.weight) << '\n';
    }
}

}  // namespace treeauto
