#include "treeauto/linear_rep.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "treeauto/errors.hpp"
#include "treeauto/text.hpp"

namespace treeauto {

static std::size_t tensor_size(int dim, int arity) {
    std::size_t n = 1;
    for (int i = 0; i <= arity; ++i) n *= static_cast<std::size_t>(dim);
    return n;
}

LinearRep::LinearRep(RankedAlphabet alphabet, int dim, std::vector<double> lambda,
                     std::vector<std::vector<double>> mu)
    : alphabet_(std::move(alphabet)), dim_(dim), lambda_(std::move(lambda)), mu_(std::move(mu)) {
    if (dim_ < 1)
        throw ModelError("linear representation needs dimension >= 1");
    if (static_cast<int>(lambda_.size()) != dim_)
        throw ModelError("lambda has wrong length");
    if (static_cast<int>(mu_.size()) != alphabet_.size())
        throw ModelError("mu must cover every alphabet symbol");
    for (int s = 0; s < alphabet_.size(); ++s)
        if (mu_[s].size() != tensor_size(dim_, alphabet_.symbol(s).arity))
            throw ModelError("tensor for symbol '" + alphabet_.symbol(s).name +
                             "' has wrong size");
}

std::size_t LinearRep::entry(int symbol, int out, const std::vector<int>& inputs) const {
    (void)symbol;
    std::size_t idx = static_cast<std::size_t>(out);
    for (int i : inputs) idx = idx * dim_ + static_cast<std::size_t>(i);
    return idx;
}

// steps a row-major input tuple; returns false after the last one
static bool next_tuple(std::vector<int>& tup, int base) {
    int i = static_cast<int>(tup.size()) - 1;
    while (i >= 0 && tup[i] == base - 1) tup[i--] = 0;
    if (i < 0) return false;
    ++tup[i];
    return true;
}

// applies the symbol's multilinear map to child vectors
static std::vector<double> apply_mu(const LinearRep& r, int symbol,
                                    const std::vector<const std::vector<double>*>& args) {
    const int d = r.dim();
    const int p = static_cast<int>(args.size());
    const std::vector<double>& ten = r.mu(symbol);
    std::vector<double> out(d, 0.0);
    if (p == 0) {
        std::copy(ten.begin(), ten.end(), out.begin());
        return out;
    }
    std::size_t idx = 0;  // runs over the tensor in row-major order
    for (int o = 0; o < d; ++o) {
        std::vector<int> tup(p, 0);
        do {
            double coef = ten[idx++];
            if (coef != 0.0) {
                double prod = coef;
                for (int i = 0; i < p; ++i) prod *= (*args[i])[tup[i]];
                out[o] += prod;
            }
        } while (next_tuple(tup, d));
    }
    return out;
}

std::vector<std::vector<double>> mu_vectors(const LinearRep& r, const Tree& t) {
    FlatTree f = flatten(t, r.alphabet());
    std::vector<std::vector<double>> vec(f.size());
    for (int n = f.size() - 1; n >= 0; --n) {
        std::vector<const std::vector<double>*> args;
        args.reserve(f.children[n].size());
        for (int c : f.children[n]) args.push_back(&vec[c]);
        vec[n] = apply_mu(r, f.symbol[n], args);
    }
    return vec;
}

double eval_linear(const LinearRep& r, const Tree& t) {
    std::vector<std::vector<double>> vec = mu_vectors(r, t);
    double out = 0.0;
    for (int i = 0; i < r.dim(); ++i) out += r.lambda()[i] * vec[0][i];
    return out;
}

LinearRep wta_to_linear(const Wta& a) {
    if (a.semiring().kind() != SemiringKind::Real)
        throw ModelError("wta_to_linear requires the real semiring");
    const int d = a.num_states();
    std::vector<std::vector<double>> mu(a.alphabet().size());
    for (int s = 0; s < a.alphabet().size(); ++s)
        mu[s].assign(tensor_size(d, a.alphabet().symbol(s).arity), 0.0);
    for (const WtaRule& r : a.rules()) {
        std::size_t idx = static_cast<std::size_t>(r.lhs);
        for (int c : r.children) idx = idx * d + static_cast<std::size_t>(c);
        mu[r.symbol][idx] += r.weight;
    }
    return LinearRep(a.alphabet(), d, a.root(), std::move(mu));
}

Wta linear_to_wta(const LinearRep& r) {
    const int d = r.dim();
    std::vector<std::string> names;
    names.reserve(d);
    for (int i = 0; i < d; ++i) names.push_back("s" + std::to_string(i));
    std::vector<WtaRule> rules;
    for (int s = 0; s < r.alphabet().size(); ++s) {
        const int p = r.alphabet().symbol(s).arity;
        const std::vector<double>& ten = r.mu(s);
        std::size_t idx = 0;
        for (int o = 0; o < d; ++o) {
            std::vector<int> tup(p, 0);
            do {
                if (ten[idx] != 0.0) rules.push_back({o, s, tup, ten[idx]});
                ++idx;
            } while (next_tuple(tup, d));
        }
    }
    return Wta(r.alphabet(), std::move(names), r.lambda(), std::move(rules), Semiring::real());
}

// --- minimization ----------------------------------------------------------

namespace {

// Orthonormal basis of the column span at tolerance tol.  Throws when a
// singular value makes the rank cut ambiguous.
Eigen::MatrixXd orth_columns(const Eigen::MatrixXd& m, double tol) {
    if (m.cols() == 0) return Eigen::MatrixXd(m.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv[i] > tol * 10.0) {
            ++rank;
        } else if (sv[i] >= tol / 10.0) {
            throw NumericError("unstable rank decision: singular value " +
                               format_double(sv[i]) + " within a factor 10 of tolerance " +
                               format_double(tol));
        }
    }
    Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
    // deterministic sign: largest-magnitude component positive
    for (int c = 0; c < u.cols(); ++c) {
        int at = 0;
        u.col(c).cwiseAbs().maxCoeff(&at);
        if (u(at, c) < 0.0) u.col(c) = -u.col(c);
    }
    return u;
}

Eigen::MatrixXd hstack(const std::vector<Eigen::VectorXd>& cols, int rows) {
    Eigen::MatrixXd m(rows, static_cast<int>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) m.col(static_cast<int>(i)) = cols[i];
    return m;
}

// all images mu_f(b_{i1}, .., b_{ip}) over columns of `basis`
std::vector<Eigen::VectorXd> closure_images(const LinearRep& r, const Eigen::MatrixXd& basis) {
    std::vector<Eigen::VectorXd> out;
    const int k = static_cast<int>(basis.cols());
    if (k == 0) return out;
    std::vector<std::vector<double>> cols(k);
    for (int c = 0; c < k; ++c)
        cols[c].assign(basis.col(c).data(), basis.col(c).data() + basis.rows());
    for (int s = 0; s < r.alphabet().size(); ++s) {
        const int p = r.alphabet().symbol(s).arity;
        if (p == 0) continue;
        std::vector<int> tup(p, 0);
        do {
            std::vector<const std::vector<double>*> args;
            args.reserve(p);
            for (int i = 0; i < p; ++i) args.push_back(&cols[tup[i]]);
            std::vector<double> img = apply_mu(r, s, args);
            out.push_back(Eigen::Map<Eigen::VectorXd>(img.data(), img.size()));
        } while (next_tuple(tup, k));
    }
    return out;
}

// change of basis onto orthonormal columns u:
// mu'_f(x1..xp) = u^T mu_f(u x1, .., u xp), lambda' = u^T lambda
LinearRep project(const LinearRep& r, const Eigen::MatrixXd& u) {
    const int d2 = static_cast<int>(u.cols());
    std::vector<std::vector<double>> basis_cols(d2);
    for (int c = 0; c < d2; ++c)
        basis_cols[c].assign(u.col(c).data(), u.col(c).data() + u.rows());
    std::vector<std::vector<double>> mu(r.alphabet().size());
    for (int s = 0; s < r.alphabet().size(); ++s) {
        const int p = r.alphabet().symbol(s).arity;
        std::size_t stride = tensor_size(d2, p) / d2;  // d2^p
        mu[s].assign(tensor_size(d2, p), 0.0);
        std::vector<int> tup(p, 0);
        std::size_t tup_flat = 0;
        do {
            std::vector<const std::vector<double>*> args;
            args.reserve(p);
            for (int i = 0; i < p; ++i) args.push_back(&basis_cols[tup[i]]);
            std::vector<double> img = apply_mu(r, s, args);
            Eigen::Map<Eigen::VectorXd> iv(img.data(), img.size());
            Eigen::VectorXd coords = u.transpose() * iv;
            for (int o = 0; o < d2; ++o) mu[s][o * stride + tup_flat] = coords[o];
            ++tup_flat;
        } while (next_tuple(tup, d2));
    }
    Eigen::Map<const Eigen::VectorXd> lam(r.lambda().data(), r.dim());
    Eigen::VectorXd l2 = u.transpose() * lam;
    return LinearRep(r.alphabet(), d2, std::vector<double>(l2.data(), l2.data() + d2),
                     std::move(mu));
}

LinearRep zero_rep(const RankedAlphabet& alphabet) {
    std::vector<std::vector<double>> mu(alphabet.size());
    for (int s = 0; s < alphabet.size(); ++s)
        mu[s].assign(tensor_size(1, alphabet.symbol(s).arity), 0.0);
    return LinearRep(alphabet, 1, {0.0}, std::move(mu));
}

// basis of span{mu(t) : t a tree}: iterated closure from the nullary
// vectors, rank re-checked after every round
Eigen::MatrixXd forward_basis(const LinearRep& r, double tol) {
    std::vector<Eigen::VectorXd> gen;
    for (int s = 0; s < r.alphabet().size(); ++s)
        if (r.alphabet().symbol(s).arity == 0)
            gen.push_back(Eigen::Map<const Eigen::VectorXd>(r.mu(s).data(), r.dim()));
    Eigen::MatrixXd u = orth_columns(hstack(gen, r.dim()), tol);
    for (int round = 0; round <= r.dim() + 1; ++round) {
        for (Eigen::VectorXd& v : closure_images(r, u)) gen.push_back(std::move(v));
        Eigen::MatrixXd u2 = orth_columns(hstack(gen, r.dim()), tol);
        if (u2.cols() == u.cols()) return u2;  // span closed under every mu_f
        u = std::move(u2);
    }
    return u;  // not reached: rank can grow at most dim times
}

// covectors w . mu_f with all but one argument fixed to coordinate
// vectors; valid on a forward-reduced representation, where tree vectors
// span the whole space
std::vector<Eigen::VectorXd> co_closure_images(const LinearRep& r, const Eigen::MatrixXd& ws) {
    const int d = r.dim();
    std::vector<Eigen::VectorXd> out;
    for (int c = 0; c < ws.cols(); ++c) {
        Eigen::VectorXd w = ws.col(c);
        for (int s = 0; s < r.alphabet().size(); ++s) {
            const int p = r.alphabet().symbol(s).arity;
            if (p == 0) continue;
            const std::vector<double>& ten = r.mu(s);
            const std::size_t stride = tensor_size(d, p) / d;  // d^p
            std::vector<int> inputs(p, 0);
            for (int open = 0; open < p; ++open) {
                std::vector<int> others(p - 1, 0);
                do {
                    Eigen::VectorXd img(d);
                    for (int k = 0; k < d; ++k) {
                        int oi = 0;
                        for (int i = 0; i < p; ++i) inputs[i] = (i == open) ? k : others[oi++];
                        std::size_t flat = 0;
                        for (int i : inputs) flat = flat * d + static_cast<std::size_t>(i);
                        double acc = 0.0;
                        for (int o = 0; o < d; ++o) acc += w[o] * ten[o * stride + flat];
                        img[k] = acc;
                    }
                    out.push_back(std::move(img));
                } while (next_tuple(others, d));
            }
        }
    }
    return out;
}

Eigen::MatrixXd backward_basis(const LinearRep& r, double tol) {
    const int d = r.dim();
    std::vector<Eigen::VectorXd> gen;
    gen.push_back(Eigen::Map<const Eigen::VectorXd>(r.lambda().data(), d));
    Eigen::MatrixXd u = orth_columns(hstack(gen, d), tol);
    for (int round = 0; round <= d + 1; ++round) {
        for (Eigen::VectorXd& v : co_closure_images(r, u)) gen.push_back(std::move(v));
        Eigen::MatrixXd u2 = orth_columns(hstack(gen, d), tol);
        if (u2.cols() == u.cols()) return u2;
        u = std::move(u2);
    }
    return u;
}

}  // namespace

LinearRep minimize(const LinearRep& r, double tol) {
    Eigen::MatrixXd fwd = forward_basis(r, tol);
    if (fwd.cols() == 0) return zero_rep(r.alphabet());
    LinearRep reduced = project(r, fwd);
    Eigen::MatrixXd bwd = backward_basis(reduced, tol);
    if (bwd.cols() == 0) return zero_rep(r.alphabet());
    return project(reduced, bwd);
}

// --- text format ----------------------------------------------------------

namespace {

std::vector<std::pair<std::size_t, std::string>> significant_lines(std::istream& in) {
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string_view sv = line;
        while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.back())))
            sv.remove_suffix(1);
        while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.front())))
            sv.remove_prefix(1);
        if (!sv.empty()) lines.emplace_back(lineno, std::string(sv));
    }
    return lines;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> toks;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) toks.push_back(tok);
    return toks;
}

int parse_int_strict(const std::string& s, std::size_t lineno) {
    try {
        std::size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ParseError("bad integer '" + s + "'", lineno);
    }
}

}  // namespace

LinearRep read_linrep(std::istream& in) {
    auto lines = significant_lines(in);
    if (lines.empty() || lines[0].second != "linrep")
        throw ParseError("expected 'linrep' header", lines.empty() ? 1 : lines[0].first);
    std::size_t li = 1;
    auto need = [&](const char* what) -> std::pair<std::size_t, std::string>& {
        if (li >= lines.size())
            throw ParseError(std::string("unexpected end of file, expected ") + what,
                             lines.back().first);
        return lines[li];
    };

    auto& dim_line = need("dim:");
    if (dim_line.second.rfind("dim:", 0) != 0)
        throw ParseError("expected 'dim: d'", dim_line.first);
    auto dim_toks = split_ws(dim_line.second.substr(4));
    if (dim_toks.size() != 1)
        throw ParseError("expected 'dim: d'", dim_line.first);
    int dim = parse_int_strict(dim_toks[0], dim_line.first);
    ++li;

    auto& lam_line = need("lambda:");
    if (lam_line.second.rfind("lambda:", 0) != 0)
        throw ParseError("expected 'lambda: v1 .. vd'", lam_line.first);
    std::vector<double> lambda;
    for (const std::string& tok : split_ws(lam_line.second.substr(7)))
        lambda.push_back(parse_double_strict(tok, lam_line.first));
    if (static_cast<int>(lambda.size()) != dim)
        throw ParseError("lambda has wrong length", lam_line.first);
    ++li;

    std::vector<Symbol> symbols;
    std::vector<std::vector<double>> tensors;
    while (li < lines.size()) {
        auto& [lineno, text] = lines[li];
        if (text.rfind("mu ", 0) != 0)
            throw ParseError("expected 'mu name/arity:'", lineno);
        std::string rest = text.substr(3);
        std::size_t colon = rest.find(':');
        if (colon == std::string::npos)
            throw ParseError("expected ':' in mu line", lineno);
        std::string decl = rest.substr(0, colon);
        while (!decl.empty() && std::isspace(static_cast<unsigned char>(decl.back())))
            decl.pop_back();
        std::size_t slash = decl.rfind('/');
        if (slash == std::string::npos)
            throw ParseError("mu declaration must be name/arity", lineno);
        Symbol sym{decl.substr(0, slash), parse_int_strict(decl.substr(slash + 1), lineno)};
        std::vector<double> ten;
        for (const std::string& tok : split_ws(rest.substr(colon + 1)))
            ten.push_back(parse_double_strict(tok, lineno));
        ++li;
        if (sym.arity == 0) {
            if (static_cast<int>(ten.size()) != dim)
                throw ParseError("nullary tensor needs exactly dim values", lineno);
        } else {
            if (!ten.empty())
                throw ParseError("tensor rows for arity >= 1 start on the next line", lineno);
            std::size_t row_len = 1;
            for (int i = 0; i < sym.arity; ++i) row_len *= static_cast<std::size_t>(dim);
            for (int row = 0; row < dim; ++row) {
                auto& [rl, rt] = need("tensor row");
                auto toks = split_ws(rt);
                if (toks.size() != row_len)
                    throw ParseError("tensor row needs " + std::to_string(row_len) + " values",
                                     rl);
                for (const std::string& tok : toks)
                    ten.push_back(parse_double_strict(tok, rl));
                ++li;
            }
        }
        symbols.push_back(std::move(sym));
        tensors.push_back(std::move(ten));
    }
    RankedAlphabet alphabet{symbols};
    return LinearRep(std::move(alphabet), dim, std::move(lambda), std::move(tensors));
}

void write_linrep(std::ostream& out, const LinearRep& r) {
    out << "linrep\n";
    out << "dim: " << r.dim() << '\n';
    out << "lambda:";
    for (double v : r.lambda()) out << ' ' << format_double(v);
    out << '\n';
    for (int s = 0; s < r.alphabet().size(); ++s) {
        const Symbol& sym = r.alphabet().symbol(s);
        out << "mu " << sym.name << '/' << sym.arity << ':';
        const std::vector<double>& ten = r.mu(s);
        if (sym.arity == 0) {
            for (double v : ten) out << ' ' << format_double(v);
            out << '\n';
        } else {
            out << '\n';
            std::size_t row_len = ten.size() / static_cast<std::size_t>(r.dim());
            for (int row = 0; row < r.dim(); ++row) {
                for (std::size_t i = 0; i < row_len; ++i)
                    out << (i ? " " : "") << format_double(ten[row * row_len + i]);
                out << '\n';
            }
        }
    }
}

}  // namespace treeauto
