#include "treeauto/hedge.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "treeauto/errors.hpp"
#include "treeauto/text.hpp"

namespace treeauto {

Wfa Wfa::eps(int num_hedge_states) {
    Wfa w;
    w.name = "EPS";
    w.state_names = {"e"};
    w.init = {1.0};
    w.final = {1.0};
    w.trans.assign(1, std::vector<std::vector<double>>(
                          num_hedge_states, std::vector<double>(1, 0.0)));
    return w;
}

double wfa_weight(const Wfa& w, const std::vector<int>& word, const Semiring& sr) {
    const int np = w.num_states();
    std::vector<double> v = w.init;
    std::vector<double> next(np);
    for (int q : word) {
        if (q < 0 || q >= static_cast<int>(w.trans.empty() ? 0 : w.trans[0].size()))
            throw ModelError("wfa_weight: letter outside the alphabet");
        std::fill(next.begin(), next.end(), sr.zero());
        for (int p = 0; p < np; ++p) {
            if (v[p] == sr.zero()) continue;
            for (int p2 = 0; p2 < np; ++p2)
                next[p2] = sr.plus(next[p2], sr.times(v[p], w.trans[p][q][p2]));
        }
        v = next;
    }
    double out = sr.zero();
    for (int p = 0; p < np; ++p) out = sr.plus(out, sr.times(v[p], w.final[p]));
    return out;
}

Wha::Wha(std::vector<std::string> alphabet, std::vector<std::string> state_names,
         std::vector<double> root, std::vector<HedgeRule> hrules, Semiring semiring)
    : alphabet_(std::move(alphabet)),
      state_names_(std::move(state_names)),
      root_(std::move(root)),
      hrules_(std::move(hrules)),
      semiring_(semiring) {
    if (state_names_.empty())
        throw ModelError("hedge automaton needs at least one state");
    for (const std::string& s : alphabet_)
        if (!is_identifier(s) || s == kHoleName)
            throw ModelError("bad alphabet symbol '" + s + "'");
    if (root_.size() != state_names_.size())
        throw ModelError("root weight vector has wrong length");
    const int nq = num_states();
    for (const HedgeRule& r : hrules_) {
        if (r.symbol < 0 || r.symbol >= static_cast<int>(alphabet_.size()))
            throw ModelError("hedge rule with unknown symbol");
        if (r.target < 0 || r.target >= nq)
            throw ModelError("hedge rule with unknown target state");
        const Wfa& w = r.horizontal;
        const int np = w.num_states();
        if (np == 0)
            throw ModelError("horizontal automaton '" + w.name + "' has no states");
        if (static_cast<int>(w.init.size()) != np || static_cast<int>(w.final.size()) != np ||
            static_cast<int>(w.trans.size()) != np)
            throw ModelError("horizontal automaton '" + w.name + "' has inconsistent sizes");
        for (const auto& per_letter : w.trans) {
            if (static_cast<int>(per_letter.size()) != nq)
                throw ModelError("horizontal automaton '" + w.name +
                                 "' transition table does not cover all hedge states");
            for (const auto& row : per_letter)
                if (static_cast<int>(row.size()) != np)
                    throw ModelError("horizontal automaton '" + w.name +
                                     "' transition table has wrong width");
        }
    }
}

int Wha::symbol_id(std::string_view name) const {
    for (std::size_t i = 0; i < alphabet_.size(); ++i)
        if (alphabet_[i] == name) return static_cast<int>(i);
    return -1;
}

int Wha::state_id(std::string_view name) const {
    for (std::size_t i = 0; i < state_names_.size(); ++i)
        if (state_names_[i] == name) return static_cast<int>(i);
    return -1;
}

// inside vector over hedge states; each node's children sequence is fed
// through the horizontal automaton of every matching rule
static std::vector<double> wha_inside(const Wha& h, const Tree& t) {
    const Semiring& sr = h.semiring();
    int sym = h.symbol_id(t.label);
    if (sym < 0)
        throw ModelError("unknown symbol '" + t.label + "'");
    std::vector<std::vector<double>> child_beta;
    child_beta.reserve(t.children.size());
    for (const Tree& c : t.children) child_beta.push_back(wha_inside(h, c));
    std::vector<double> beta(h.num_states(), sr.zero());
    for (const HedgeRule& r : h.hrules()) {
        if (r.symbol != sym) continue;
        const Wfa& w = r.horizontal;
        const int np = w.num_states();
        std::vector<double> v = w.init;
        std::vector<double> next(np);
        for (const std::vector<double>& cb : child_beta) {
            std::fill(next.begin(), next.end(), sr.zero());
            for (int p = 0; p < np; ++p) {
                if (v[p] == sr.zero()) continue;
                for (int q = 0; q < h.num_states(); ++q) {
                    if (cb[q] == sr.zero()) continue;
                    for (int p2 = 0; p2 < np; ++p2)
                        next[p2] = sr.plus(next[p2],
                                           sr.times(sr.times(v[p], w.trans[p][q][p2]), cb[q]));
                }
            }
            v = next;
        }
        double val = sr.zero();
        for (int p = 0; p < np; ++p) val = sr.plus(val, sr.times(v[p], w.final[p]));
        beta[r.target] = sr.plus(beta[r.target], sr.times(r.weight, val));
    }
    return beta;
}

double evaluate_wha(const Wha& h, const Tree& t) {
    const Semiring& sr = h.semiring();
    std::vector<double> beta = wha_inside(h, t);
    double out = sr.zero();
    for (int q = 0; q < h.num_states(); ++q)
        out = sr.plus(out, sr.times(h.root()[q], beta[q]));
    return out;
}

Wta wha_to_wsta(const Wha& h) {
    const Semiring& sr = h.semiring();
    if (!sr.commutative())
        throw ModelError("wha_to_wsta requires a commutative semiring");
    // WSTA states are (hedge rule, wfa state) pairs
    const int nrules = static_cast<int>(h.hrules().size());
    std::vector<int> base(nrules + 1, 0);
    for (int i = 0; i < nrules; ++i)
        base[i + 1] = base[i] + h.hrules()[i].horizontal.num_states();
    const int nstates = base[nrules];
    if (nstates == 0)
        throw ModelError("hedge automaton has no rules");
    std::vector<std::string> names(nstates);
    for (int i = 0; i < nrules; ++i) {
        const Wfa& w = h.hrules()[i].horizontal;
        for (int p = 0; p < w.num_states(); ++p)
            names[base[i] + p] = "r" + std::to_string(i) + "_" + w.state_names[p];
    }
    RankedAlphabet alphabet = stepwise_alphabet(h.alphabet());
    const int at_sym = alphabet.id_of(kStepwiseName);
    std::vector<double> root(nstates, sr.zero());
    std::vector<WtaRule> rules;
    for (int i = 0; i < nrules; ++i) {
        const HedgeRule& r = h.hrules()[i];
        const Wfa& w = r.horizontal;
        const int const_sym = alphabet.id_of(h.alphabet()[r.symbol]);
        for (int p = 0; p < w.num_states(); ++p) {
            // reading of f starts the horizontal run of every f-rule
            if (w.init[p] != sr.zero())
                rules.push_back({base[i] + p, const_sym, {}, w.init[p]});
            // root weight: rule completed at p, target weighted by the root
            double rw = sr.times(sr.times(w.final[p], r.weight), h.root()[r.target]);
            root[base[i] + p] = rw;
        }
        // appending a completed child (rule i2 finished at p2) advances the
        // horizontal run of rule i from p to pn on letter target(i2)
        for (int i2 = 0; i2 < nrules; ++i2) {
            const HedgeRule& r2 = h.hrules()[i2];
            const Wfa& w2 = r2.horizontal;
            for (int p = 0; p < w.num_states(); ++p)
                for (int p2 = 0; p2 < w2.num_states(); ++p2) {
                    double done = sr.times(w2.final[p2], r2.weight);
                    if (done == sr.zero()) continue;
                    for (int pn = 0; pn < w.num_states(); ++pn) {
                        double step = sr.times(done, w.trans[p][r2.target][pn]);
                        if (step == sr.zero()) continue;
                        rules.push_back(
                            {base[i] + pn, at_sym, {base[i] + p, base[i2] + p2}, step});
                    }
                }
        }
    }
    return Wta(std::move(alphabet), std::move(names), std::move(root), std::move(rules), sr);
}

static constexpr double kPhaTol = 1e-9;

PhaReport check_pha(const Wha& h) {
    if (h.semiring().kind() != SemiringKind::Real)
        throw ModelError("check_pha requires the real semiring");
    PhaReport rep;
    auto violation = [&](const std::string& where, double value, const std::string& msg) {
        rep.violations.push_back({where, value, msg});
    };
    auto check_range = [&](const std::string& where, double w) {
        if (w < 0.0 || w > 1.0)
            violation(where, w, where + " has weight " + format_double(w) + " outside [0,1]");
    };
    double root_sum = 0.0;
    for (int q = 0; q < h.num_states(); ++q) {
        check_range("root(" + h.state_names()[q] + ")", h.root()[q]);
        root_sum += h.root()[q];
    }
    if (std::abs(root_sum - 1.0) > kPhaTol)
        violation("root", root_sum, "root weights sum to " + format_double(root_sum));
    std::vector<double> target_sum(h.num_states(), 0.0);
    for (std::size_t i = 0; i < h.hrules().size(); ++i) {
        const HedgeRule& r = h.hrules()[i];
        const std::string where = "hrule #" + std::to_string(i) + " (" +
                                  h.state_names()[r.target] + " -> " +
                                  h.alphabet()[r.symbol] + ")";
        check_range(where, r.weight);
        target_sum[r.target] += r.weight;
        const Wfa& w = r.horizontal;
        double init_sum = 0.0;
        for (int p = 0; p < w.num_states(); ++p) {
            check_range(where + " init(" + w.state_names[p] + ")", w.init[p]);
            init_sum += w.init[p];
        }
        if (std::abs(init_sum - 1.0) > kPhaTol)
            violation(where, init_sum,
                      where + " init weights sum to " + format_double(init_sum));
        for (int p = 0; p < w.num_states(); ++p) {
            double s = w.final[p];
            check_range(where + " final(" + w.state_names[p] + ")", w.final[p]);
            for (int q = 0; q < h.num_states(); ++q)
                for (int p2 = 0; p2 < w.num_states(); ++p2) {
                    check_range(where + " trans", w.trans[p][q][p2]);
                    s += w.trans[p][q][p2];
                }
            if (std::abs(s - 1.0) > kPhaTol)
                violation(where + " state " + w.state_names[p], s,
                          where + " wfa state " + w.state_names[p] + " sums to " +
                              format_double(s));
        }
    }
    for (int q = 0; q < h.num_states(); ++q) {
        if (target_sum[q] == 0.0) {
            violation("state " + h.state_names()[q], 0.0,
                      "state " + h.state_names()[q] + " has no hedge rules");
        } else if (std::abs(target_sum[q] - 1.0) > kPhaTol) {
            violation("state " + h.state_names()[q], target_sum[q],
                      "state " + h.state_names()[q] + " sums to " +
                          format_double(target_sum[q]));
        }
    }
    return rep;
}

// --- text format ----------------------------------------------------------

namespace {

std::string_view trim_view(std::string_view s) {
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

struct WfaDecl {
    std::string name;
    std::vector<std::string> states;
    std::vector<std::tuple<std::string, double>> init, final;
    std::vector<std::tuple<std::string, std::string, std::string, double>> trans;
    std::size_t lineno;
};

}  // namespace

Wha read_wha(std::istream& in) {
    // whole-file scan: wfa blocks may span lines, everything else is
    // line-oriented
    std::string text;
    {
        std::string line;
        while (std::getline(in, line)) {
            if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            text += line;
            text += '\n';
        }
    }
    Semiring sr = Semiring::real();
    bool saw_header = false;
    std::vector<std::string> alphabet, states;
    std::vector<std::pair<std::string, double>> root_decls;
    std::vector<WfaDecl> wfa_decls;
    struct HruleDecl {
        std::string target, symbol, wfa;
        double weight;
        std::size_t lineno;
    };
    std::vector<HruleDecl> hrule_decls;

    std::size_t pos = 0, lineno = 1;
    auto skip_ws = [&] {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
            if (text[pos] == '\n') ++lineno;
            ++pos;
        }
    };
    while (skip_ws(), pos < text.size()) {
        std::size_t stmt_line = lineno;
        if (text.compare(pos, 4, "wfa ") == 0) {
            std::size_t open = text.find('{', pos);
            std::size_t close = text.find('}', pos);
            if (open == std::string::npos || close == std::string::npos || close < open)
                throw ParseError("wfa block needs '{ ... }'", stmt_line);
            WfaDecl d;
            d.lineno = stmt_line;
            d.name = std::string(trim_view(std::string_view(text).substr(pos + 4, open - pos - 4)));
            if (!is_identifier(d.name))
                throw ParseError("bad wfa name '" + d.name + "'", stmt_line);
            std::string body = text.substr(open + 1, close - open - 1);
            lineno += static_cast<std::size_t>(
                std::count(text.begin() + pos, text.begin() + close + 1, '\n'));
            pos = close + 1;
            std::istringstream stmts(body);
            std::string stmt;
            while (std::getline(stmts, stmt, ';')) {
                std::string_view sv = trim_view(stmt);
                if (sv.empty()) continue;
                auto starts = [&](std::string_view key) {
                    if (sv.substr(0, key.size()) != key) return false;
                    sv.remove_prefix(key.size());
                    sv = trim_view(sv);
                    return true;
                };
                if (starts("wfa-states:")) {
                    for (std::string& s : split_list(sv)) d.states.push_back(std::move(s));
                } else if (starts("init:")) {
                    auto toks = split_list(sv);
                    if (toks.size() != 2) throw ParseError("init: state weight", stmt_line);
                    d.init.emplace_back(toks[0], parse_double_strict(toks[1], stmt_line));
                } else if (starts("final:")) {
                    auto toks = split_list(sv);
                    if (toks.size() != 2) throw ParseError("final: state weight", stmt_line);
                    d.final.emplace_back(toks[0], parse_double_strict(toks[1], stmt_line));
                } else if (starts("trans:")) {
                    auto toks = split_list(sv);
                    if (toks.size() != 4)
                        throw ParseError("trans: from letter to weight", stmt_line);
                    d.trans.emplace_back(toks[0], toks[1], toks[2],
                                         parse_double_strict(toks[3], stmt_line));
                } else {
                    throw ParseError("unrecognized wfa statement '" + std::string(sv) + "'",
                                     stmt_line);
                }
            }
            wfa_decls.push_back(std::move(d));
            continue;
        }
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view sv = trim_view(std::string_view(text).substr(pos, eol - pos));
        pos = eol;
        auto starts = [&](std::string_view key) {
            if (sv.substr(0, key.size()) != key) return false;
            sv.remove_prefix(key.size());
            sv = trim_view(sv);
            return true;
        };
        if (sv == "wha" && !saw_header) {
            saw_header = true;
        } else if (starts("semiring:")) {
            sr = Semiring::from_name(sv);
        } else if (starts("alphabet:")) {
            for (std::string& s : split_list(sv)) alphabet.push_back(std::move(s));
        } else if (starts("states:")) {
            for (std::string& s : split_list(sv)) states.push_back(std::move(s));
        } else if (starts("root:")) {
            auto toks = split_list(sv);
            if (toks.size() != 2) throw ParseError("root: state weight", stmt_line);
            root_decls.emplace_back(toks[0], parse_double_strict(toks[1], stmt_line));
        } else if (starts("hrule:")) {
            // qb -> b [W1] : 1.0
            std::size_t arrow = sv.find("->");
            std::size_t lbr = sv.find('[');
            std::size_t rbr = sv.find(']');
            std::size_t colon = sv.rfind(':');
            if (arrow == std::string_view::npos || lbr == std::string_view::npos ||
                rbr == std::string_view::npos || colon == std::string_view::npos ||
                !(arrow < lbr && lbr < rbr && rbr < colon))
                throw ParseError("hrule line must be 'hrule: q -> f [WFA] : weight'",
                                 stmt_line);
            HruleDecl d;
            d.lineno = stmt_line;
            d.target = std::string(trim_view(sv.substr(0, arrow)));
            d.symbol = std::string(trim_view(sv.substr(arrow + 2, lbr - arrow - 2)));
            d.wfa = std::string(trim_view(sv.substr(lbr + 1, rbr - lbr - 1)));
            d.weight = parse_double_strict(trim_view(sv.substr(colon + 1)), stmt_line);
            hrule_decls.push_back(std::move(d));
        } else {
            throw ParseError("unrecognized line '" + std::string(sv) + "'", stmt_line);
        }
    }
    if (!saw_header)
        throw ParseError("expected 'wha' header", 1);

    auto state_of = [&](const std::string& name, std::size_t ln) {
        for (std::size_t i = 0; i < states.size(); ++i)
            if (states[i] == name) return static_cast<int>(i);
        throw ParseError("unknown state '" + name + "'", ln);
    };
    const int nq = static_cast<int>(states.size());
    std::map<std::string, Wfa> wfas;
    for (const WfaDecl& d : wfa_decls) {
        if (d.name == "EPS")
            throw ParseError("wfa name 'EPS' is reserved for the built-in automaton", d.lineno);
        Wfa w;
        w.name = d.name;
        w.state_names = d.states;
        const int np = w.num_states();
        if (np == 0) throw ParseError("wfa '" + d.name + "' declares no states", d.lineno);
        auto wstate_of = [&](const std::string& name) {
            for (int i = 0; i < np; ++i)
                if (w.state_names[i] == name) return i;
            throw ParseError("unknown wfa state '" + name + "' in '" + d.name + "'", d.lineno);
        };
        w.init.assign(np, 0.0);
        w.final.assign(np, 0.0);
        w.trans.assign(np, std::vector<std::vector<double>>(nq, std::vector<double>(np, 0.0)));
        for (const auto& [s, v] : d.init) w.init[wstate_of(s)] += v;
        for (const auto& [s, v] : d.final) w.final[wstate_of(s)] += v;
        for (const auto& [from, letter, to, v] : d.trans)
            w.trans[wstate_of(from)][state_of(letter, d.lineno)][wstate_of(to)] += v;
        if (!wfas.emplace(d.name, std::move(w)).second)
            throw ParseError("wfa '" + d.name + "' declared twice", d.lineno);
    }
    std::vector<double> root(nq, sr.zero());
    for (const auto& [name, v] : root_decls) {
        int q = state_of(name, 1);
        root[q] = sr.plus(root[q], v);
    }
    std::vector<HedgeRule> hrules;
    for (const HruleDecl& d : hrule_decls) {
        HedgeRule r;
        r.target = state_of(d.target, d.lineno);
        int sym = -1;
        for (std::size_t i = 0; i < alphabet.size(); ++i)
            if (alphabet[i] == d.symbol) sym = static_cast<int>(i);
        if (sym < 0) throw ParseError("unknown symbol '" + d.symbol + "'", d.lineno);
        r.symbol = sym;
        if (d.wfa == "EPS") {
            r.horizontal = Wfa::eps(nq);
        } else {
            auto it = wfas.find(d.wfa);
            if (it == wfas.end())
                throw ParseError("unknown wfa '" + d.wfa + "'", d.lineno);
            r.horizontal = it->second;
        }
        r.weight = d.weight;
        hrules.push_back(std::move(r));
    }
    return Wha(std::move(alphabet), std::move(states), std::move(root), std::move(hrules), sr);
}

void write_wha(std::ostream& out, const Wha& h) {
    out << "wha\n";
    out << "semiring: " << h.semiring().name() << '\n';
    out << "alphabet:";
    for (std::size_t i = 0; i < h.alphabet().size(); ++i)
        out << (i ? ", " : " ") << h.alphabet()[i];
    out << '\n';
    out << "states:";
    for (int q = 0; q < h.num_states(); ++q) out << (q ? ", " : " ") << h.state_names()[q];
    out << '\n';
    for (int q = 0; q < h.num_states(); ++q)
        if (h.root()[q] != h.semiring().zero())
            out << "root: " << h.state_names()[q] << ' ' << format_double(h.root()[q]) << '\n';
    // one wfa block per hedge rule, freshly named; the built-in EPS shape
    // is recognized and referenced directly
    auto is_eps = [&](const Wfa& w) {
        if (w.num_states() != 1 || w.init[0] != 1.0 || w.final[0] != 1.0) return false;
        for (const auto& per_letter : w.trans)
            for (const auto& row : per_letter)
                for (double v : row)
                    if (v != 0.0) return false;
        return true;
    };
    std::vector<std::string> rule_wfa_name(h.hrules().size());
    for (std::size_t i = 0; i < h.hrules().size(); ++i) {
        const Wfa& w = h.hrules()[i].horizontal;
        if (is_eps(w)) {
            rule_wfa_name[i] = "EPS";
            continue;
        }
        std::string name = "W" + std::to_string(i);
        rule_wfa_name[i] = name;
        out << "wfa " << name << " {";
        out << " wfa-states:";
        for (int p = 0; p < w.num_states(); ++p) out << (p ? ", " : " ") << w.state_names[p];
        out << ';';
        for (int p = 0; p < w.num_states(); ++p)
            if (w.init[p] != 0.0)
                out << " init: " << w.state_names[p] << ' ' << format_double(w.init[p]) << ';';
        for (int p = 0; p < w.num_states(); ++p)
            for (int q = 0; q < h.num_states(); ++q)
                for (int p2 = 0; p2 < w.num_states(); ++p2)
                    if (w.trans[p][q][p2] != 0.0)
                        out << " trans: " << w.state_names[p] << ' ' << h.state_names()[q]
                            << ' ' << w.state_names[p2] << ' '
                            << format_double(w.trans[p][q][p2]) << ';';
        for (int p = 0; p < w.num_states(); ++p)
            if (w.final[p] != 0.0)
                out << " final: " << w.state_names[p] << ' ' << format_double(w.final[p])
                    << ';';
        out << " }\n";
    }
    for (std::size_t i = 0; i < h.hrules().size(); ++i) {
        const HedgeRule& r = h.hrules()[i];
        out << "hrule: " << h.state_names()[r.target] << " -> " << h.alphabet()[r.symbol]
            << " [" << rule_wfa_name[i] << "] : " << format_double(r.weight) << '\n';
    }
}

}  // namespace treeauto
