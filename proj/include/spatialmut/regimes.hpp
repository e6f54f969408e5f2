#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "spatialmut/asymptotics.hpp"

namespace spatialmut {

using Rational = boost::rational<long long>;

/// Parses "p/q", "p" or "-p/q". Throws InvalidArgumentError otherwise.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);

/// Power-law parameter family: mu_i = N^{a_i}, alpha = N^b, on the
/// d-dimensional torus, asking for the first type-k mutation. `c` holds the
/// limits c_i = lim mu_i/mu_1 in (0, inf] and is only needed when the
/// low-rate regime applies.
struct ScalingFamily {
    int d = 1;
    int k = 1;
    std::vector<Rational> a;
    Rational b{0};
    std::optional<std::vector<double>> c;

    void validate() const;
    bool monotone() const;
};

enum class RegimeKind { Theorem1, Theorem2, Theorem3, Theorem4, Boundary, Unclassified };

std::string_view to_string(RegimeKind kind);

/// Time scale by which sigma_k is divided: 1/(N mu_1), beta_k or beta_l,
/// stored as its N-exponent.
struct TimeScale {
    std::string name;
    Rational exponent{0};
};

struct Regime {
    RegimeKind kind = RegimeKind::Unclassified;
    std::optional<int> l;  // set for Theorem4 (and reported for Theorem2/3)
    std::optional<LimitLaw> law;
    std::optional<TimeScale> scale;
    std::string reason;
};

/// N-exponent of beta_k: -(1 + (k-1) d b + sum_{i<=k} a_i) / ((k-1)d + k).
Rational exponent_of_beta(const ScalingFamily& family, int k);

/// Outcome of the search for l = max{ j >= 2 : mu_j << 1/(alpha^d beta_{j-1}^{d+1}) }.
struct LValue {
    enum class Kind { Finite, Unbounded, Boundary } kind = Kind::Finite;
    int value = 1;  // meaningful for Finite; 1 when the set is empty
    int deciding_type = 0;  // j whose comparison decided the outcome
};

/// Walks j = 2..k; the first j whose condition fails strictly fixes
/// l = j - 1, an exact tie yields Boundary, and holding through j = k
/// yields Unbounded.
LValue compute_l(const ScalingFamily& family);

/// Total: every family maps to exactly one regime. Throws
/// MissingLimitsError if the low-rate regime applies but `c` is absent.
Regime classify(const ScalingFamily& family);

/// Signs (-1, 0, +1) of log(mu_k alpha^d beta_k^{d+1}) and
/// log(mu_k alpha^d beta_{k-1}^{d+1}). The two quantities are positive
/// multiples of each other, so the signs agree.
std::pair<int, int> hardest_lemma_check(const ModelParams& params, int k);
std::pair<int, int> hardest_lemma_check(const ScalingFamily& family, int k);

}  // namespace spatialmut
