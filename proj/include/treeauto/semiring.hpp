#ifndef TREEAUTO_SEMIRING_HPP
#define TREEAUTO_SEMIRING_HPP

#include <string_view>

namespace treeauto {

enum class SemiringKind { Real, LogReal, ViterbiMaxTimes, Boolean };

// All provided carriers embed in double, so a small value type with
// runtime dispatch does the job:
//   real     (+, *) over doubles
//   log      log-domain reals: plus = log-sum-exp, times = +,
//            zero = -inf, one = 0
//   viterbi  (max, *) over [0, inf)
//   bool     ({0,1}, or, and)
// zero/one are the identities of the carrier, not the numbers 0 and 1.
class Semiring {
public:
    constexpr explicit Semiring(SemiringKind k) : kind_(k) {}

    static constexpr Semiring real() { return Semiring(SemiringKind::Real); }
    static constexpr Semiring log_real() { return Semiring(SemiringKind::LogReal); }
    static constexpr Semiring viterbi() { return Semiring(SemiringKind::ViterbiMaxTimes); }
    static constexpr Semiring boolean() { return Semiring(SemiringKind::Boolean); }

    SemiringKind kind() const { return kind_; }

    double plus(double a, double b) const;
    double times(double a, double b) const;
    double zero() const;
    double one() const;

    bool commutative() const { return true; }  // all provided instances are
    bool idempotent_plus() const {
        return kind_ == SemiringKind::ViterbiMaxTimes || kind_ == SemiringKind::Boolean;
    }

    // carrier membership for stored weights
    bool valid_element(double w) const;

    std::string_view name() const;
    static Semiring from_name(std::string_view name);  // throws ModelError

    bool operator==(const Semiring&) const = default;

private:
    SemiringKind kind_;
};

}  // namespace treeauto

#endif
