#ifndef TREEAUTO_LINEAR_REP_HPP
#define TREEAUTO_LINEAR_REP_HPP

#include <iosfwd>
#include <vector>

#include "treeauto/tree.hpp"
#include "treeauto/wta.hpp"

namespace treeauto {

// Algebraic view of a recognizable series over the reals: a dimension-d
// vector space, one dense multilinear map per symbol, and a linear output
// form.  The tensor of a symbol of arity p holds d^(p+1) entries indexed
// (output coordinate, input_1, ..., input_p), output slowest.
class LinearRep {
public:
    LinearRep(RankedAlphabet alphabet, int dim, std::vector<double> lambda,
              std::vector<std::vector<double>> mu);  // mu indexed by symbol id

    const RankedAlphabet& alphabet() const { return alphabet_; }
    int dim() const { return dim_; }
    const std::vector<double>& lambda() const { return lambda_; }
    const std::vector<double>& mu(int symbol) const { return mu_[symbol]; }

    // flat index of a tensor entry
    std::size_t entry(int symbol, int out, const std::vector<int>& inputs) const;

private:
    RankedAlphabet alphabet_;
    int dim_;
    std::vector<double> lambda_;
    std::vector<std::vector<double>> mu_;
};

// lambda . mu(t), computed bottom-up with one vector per node.
double eval_linear(const LinearRep& r, const Tree& t);

// Per-node vectors mu(t) for each subtree, pre-order (root first).
std::vector<std::vector<double>> mu_vectors(const LinearRep& r, const Tree& t);

// Transcriptions between the automata view and the algebraic view;
// evaluate(A, t) == eval_linear(wta_to_linear(A), t) for every t.
LinearRep wta_to_linear(const Wta& a);  // requires the real semiring
Wta linear_to_wta(const LinearRep& r);  // states s0..s{d-1}, zero entries skipped

// Minimal-dimension representation of the same series: forward (reachable)
// space reduction followed by backward (co-reachable) reduction, rank
// decisions by singular values against tol.  The zero series minimizes to
// the dimension-1 zero representation.  Throws NumericError when a
// singular value falls inside [tol/10, 10*tol] (unstable rank decision).
LinearRep minimize(const LinearRep& r, double tol = 1e-8);

LinearRep read_linrep(std::istream& in);
void write_linrep(std::ostream& out, const LinearRep& r);

}  // namespace treeauto

#endif
