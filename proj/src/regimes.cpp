#include "spatialmut/regimes.hpp"

#include <charconv>
#include <cmath>
#include <string>

namespace spatialmut {

namespace {

long long parse_integer(std::string_view text, std::string_view whole) {
    long long value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (first == last || ec != std::errc{} || ptr != last) {
        throw InvalidArgumentError("malformed rational '" + std::string(whole) + "'");
    }
    return value;
}

int sign_of(const Rational& r) { return r > 0 ? 1 : (r < 0 ? -1 : 0); }

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

// N-exponent of 1/(alpha^d beta_j^{d+1}).
Rational crossover_exponent(const ScalingFamily& f, int j) { return -(f.d * f.b + (f.d + 1) * exponent_of_beta(f, j)); }

}  // namespace

Rational parse_rational(std::string_view text) {
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(parse_integer(text, text));
    const long long num = parse_integer(text.substr(0, slash), text);
    const long long den = parse_integer(text.substr(slash + 1), text);
    if (den == 0) throw InvalidArgumentError("zero denominator in '" + std::string(text) + "'");
    return Rational(num, den);
}

std::string to_string(const Rational& r) {
    if (r.denominator() == 1) return std::to_string(r.numerator());
    return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

std::string_view to_string(RegimeKind kind) {
    switch (kind) {
        case RegimeKind::Theorem1: return "Theorem1";
        case RegimeKind::Theorem2: return "Theorem2";
        case RegimeKind::Theorem3: return "Theorem3";
        case RegimeKind::Theorem4: return "Theorem4";
        case RegimeKind::Boundary: return "Boundary";
        case RegimeKind::Unclassified: return "Unclassified";
    }
    return "Unclassified";
}

void ScalingFamily::validate() const {
    if (d < 1 || d > 3) throw InvalidArgumentError("d must be 1, 2 or 3");
    if (k < 1) throw InvalidArgumentError("k must be at least 1");
    if (a.size() < static_cast<std::size_t>(k)) throw InvalidArgumentError("family needs at least k rate exponents");
    if (c) {
        if (c->size() < static_cast<std::size_t>(k)) throw InvalidArgumentError("family needs at least k limits c_i");
        for (double ci : *c) {
            if (!(ci > 0.0)) throw InvalidArgumentError("limits c_i must lie in (0, inf]");
        }
    }
}

bool ScalingFamily::monotone() const {
    for (int i = 1; i < k; ++i) {
        if (a[i] < a[i - 1]) return false;
    }
    return true;
}

Rational exponent_of_beta(const ScalingFamily& family, int k) {
    if (k < 1 || k > family.k) throw InvalidArgumentError("beta index outside 1..k");
    Rational sum(1);
    sum += Rational((k - 1) * family.d) * family.b;
    for (int i = 0; i < k; ++i) sum += family.a[i];
    return -sum / Rational((k - 1) * family.d + k);
}

LValue compute_l(const ScalingFamily& family) {
    family.validate();
    for (int j = 2; j <= family.k; ++j) {
        const Rational threshold = crossover_exponent(family, j - 1);
        const Rational& aj = family.a[j - 1];
        if (aj == threshold) return {LValue::Kind::Boundary, 0, j};
        if (aj > threshold) return {LValue::Kind::Finite, j - 1, j};
    }
    return {LValue::Kind::Unbounded, 0, family.k};
}

Regime classify(const ScalingFamily& family) {
    family.validate();
    Regime out;
    if (!family.monotone()) {
        out.kind = RegimeKind::Unclassified;
        out.reason = "rate exponents are not nondecreasing";
        return out;
    }
    const int d = family.d;
    const int k = family.k;
    const Rational& a1 = family.a[0];
    // mu_1 against alpha / N^{(d+1)/d}
    const Rational fixation = family.b - Rational(d + 1, d);
    const TimeScale first_arrival{"1/(N*mu_1)", exponent_of_beta(family, 1)};

    if (a1 == fixation) {
        out.kind = RegimeKind::Boundary;
        out.reason = "mu_1 is of the same order as alpha/N^((d+1)/d)";
        return out;
    }
    if (a1 < fixation) {
        if (!family.c) throw MissingLimitsError("low-rate regime needs the limits c_i = lim mu_i/mu_1");
        std::vector<double> rates(family.c->begin(), family.c->begin() + k);
        for (int i = 1; i < k; ++i) {
            if (family.a[i] > a1 && std::isfinite(rates[i])) {
                throw InvalidArgumentError("c_" + std::to_string(i + 1) + " must be infinite because mu_" +
                                           std::to_string(i + 1) + " >> mu_1");
            }
        }
        out.kind = RegimeKind::Theorem1;
        out.law = LimitLaw::hypoexponential(std::move(rates));
        out.scale = first_arrival;
        out.reason = "mu_1 << alpha/N^((d+1)/d)";
        return out;
    }

    const LValue l = compute_l(family);
    if (l.kind == LValue::Kind::Boundary) {
        out.kind = RegimeKind::Boundary;
        out.reason = "mu_" + std::to_string(l.deciding_type) + " is of the same order as 1/(alpha^d beta_" +
                     std::to_string(l.deciding_type - 1) + "^(d+1))";
        return out;
    }
    if (l.kind == LValue::Kind::Unbounded || l.value >= k) {
        out.kind = RegimeKind::Theorem3;
        out.law = LimitLaw::weibull(d, k);
        out.scale = TimeScale{"beta_" + std::to_string(k), exponent_of_beta(family, k)};
        out.reason = "mu_j << 1/(alpha^d beta_{j-1}^(d+1)) for every j <= k";
        return out;
    }
    out.l = l.value;
    if (l.value == 1) {
        out.kind = RegimeKind::Theorem2;
        out.law = LimitLaw::exp1();
        out.scale = first_arrival;
        out.reason = "mu_2 >> (N mu_1)^(d+1)/alpha^d";
        return out;
    }
    out.kind = RegimeKind::Theorem4;
    out.law = LimitLaw::weibull(d, l.value);
    out.scale = TimeScale{"beta_" + std::to_string(l.value), exponent_of_beta(family, l.value)};
    out.reason = "mu_" + std::to_string(l.value + 1) + " >> 1/(alpha^d beta_" + std::to_string(l.value) + "^(d+1))";
    return out;
}

std::pair<int, int> hardest_lemma_check(const ModelParams& params, int k) {
    if (k < 2) throw InvalidArgumentError("the comparison needs k >= 2");
    const int d = params.d;
    const double base = std::log(params.mu_of(k)) + d * std::log(params.alpha);
    const double with_k = base + (d + 1) * log_beta_k(params, k);
    const double with_prev = base + (d + 1) * log_beta_k(params, k - 1);
    return {sign_of(with_k), sign_of(with_prev)};
}

std::pair<int, int> hardest_lemma_check(const ScalingFamily& family, int k) {
    family.validate();
    if (k < 2 || k > family.k) throw InvalidArgumentError("the comparison needs 2 <= k <= family.k");
    const Rational base = family.a[k - 1] + family.d * family.b;
    return {sign_of(base + (family.d + 1) * exponent_of_beta(family, k)),
            sign_of(base + (family.d + 1) * exponent_of_beta(family, k - 1))};
}

}  // namespace spatialmut
