#include "treeauto/semiring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "treeauto/errors.hpp"

namespace treeauto {

static constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double Semiring::plus(double a, double b) const {
    switch (kind_) {
        case SemiringKind::Real:
            return a + b;
        case SemiringKind::LogReal: {
            if (a == kNegInf) return b;
            if (b == kNegInf) return a;
            double hi = std::max(a, b), lo = std::min(a, b);
            return hi + std::log1p(std::exp(lo - hi));
        }
        case SemiringKind::ViterbiMaxTimes:
            return std::max(a, b);
        case SemiringKind::Boolean:
            return (a != 0.0 || b != 0.0) ? 1.0 : 0.0;
    }
    return 0.0;  // unreachable
}

double Semiring::times(double a, double b) const {
    switch (kind_) {
        case SemiringKind::Real:
            return a * b;
        case SemiringKind::LogReal:
            if (a == kNegInf || b == kNegInf) return kNegInf;
            return a + b;
        case SemiringKind::ViterbiMaxTimes:
            return a * b;
        case SemiringKind::Boolean:
            return (a != 0.0 && b != 0.0) ? 1.0 : 0.0;
    }
    return 0.0;  // unreachable
}

double Semiring::zero() const {
    return kind_ == SemiringKind::LogReal ? kNegInf : 0.0;
}

double Semiring::one() const {
    return kind_ == SemiringKind::LogReal ? 0.0 : 1.0;
}

bool Semiring::valid_element(double w) const {
    if (std::isnan(w)) return false;
    switch (kind_) {
        case SemiringKind::Real:
            return std::isfinite(w);
        case SemiringKind::LogReal:
            return w < std::numeric_limits<double>::infinity();  // -inf is zero
        case SemiringKind::ViterbiMaxTimes:
            return std::isfinite(w) && w >= 0.0;
        case SemiringKind::Boolean:
            return w == 0.0 || w == 1.0;
    }
    return false;
}

std::string_view Semiring::name() const {
    switch (kind_) {
        case SemiringKind::Real: return "real";
        case SemiringKind::LogReal: return "log";
        case SemiringKind::ViterbiMaxTimes: return "viterbi";
        case SemiringKind::Boolean: return "bool";
    }
    return "?";
}

Semiring Semiring::from_name(std::string_view name) {
    if (name == "real") return real();
    if (name == "log") return log_real();
    if (name == "viterbi") return viterbi();
    if (name == "bool") return boolean();
    throw ModelError("unknown semiring '" + std::string(name) + "'");
}

}  // namespace treeauto
