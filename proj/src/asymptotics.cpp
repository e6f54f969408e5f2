#include "spatialmut/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace spatialmut {

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
// Exact for polynomials of degree <= 39; the recursion integrands for
// k <= 4, d <= 3 have degree <= 15.
using Legendre = boost::math::quadrature::gauss<double, 20>;

void check_dim(int d) {
    if (d < 1 || d > 3) throw InvalidArgumentError("dimension must be 1, 2 or 3, got " + std::to_string(d));
}

void check_type(const ModelParams& params, int k, int lowest = 1) {
    if (k < lowest || k > params.K || static_cast<std::size_t>(k) > params.mu.size()) {
        throw InvalidArgumentError("type index " + std::to_string(k) + " outside 1.." + std::to_string(params.K));
    }
}

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double sum_log_mu(const ModelParams& params, int k) {
    double s = 0.0;
    for (int i = 1; i <= k; ++i) s += std::log(params.mu_of(i));
    return s;
}

// Everything below exp(-kTailLog) is treated as zero.
constexpr double kTailLog = 37.0;

}  // namespace

double unit_ball_volume(int d) {
    switch (d) {
        case 1: return 2.0;
        case 2: return std::numbers::pi;
        case 3: return 4.0 * std::numbers::pi / 3.0;
        default: throw InvalidArgumentError("unit ball volume only for d in {1,2,3}");
    }
}

double log_beta_k(const ModelParams& params, int k) {
    check_type(params, k);
    const int d = params.d;
    const double log_rate = d * std::log(params.L) + (k - 1) * d * std::log(params.alpha) + sum_log_mu(params, k);
    return -log_rate / ((k - 1) * d + k);
}

double beta_k(const ModelParams& params, int k) { return std::exp(log_beta_k(params, k)); }

double kappa_j(const ModelParams& params, int j) {
    check_type(params, j);
    const int d = params.d;
    return std::exp(-(std::log(params.mu_of(j)) + d * std::log(params.alpha)) / (d + 1));
}

double v_k(const ModelParams& params, int k, double t) {
    if (k == 0) return params.volume();
    check_type(params, k);
    if (t < 0.0) throw InvalidArgumentError("time must be nonnegative");
    if (t == 0.0) return 0.0;
    const int d = params.d;
    const double log_v = k * (std::log(unit_ball_volume(d)) + log_factorial(d)) - log_factorial(k * (d + 1)) +
                         sum_log_mu(params, k) + std::log(params.volume()) + k * d * std::log(params.alpha) +
                         k * (d + 1) * std::log(t);
    return std::exp(log_v);
}

double v_k_by_recursion(const ModelParams& params, int k, double t) {
    if (k != 0) check_type(params, k);
    if (t < 0.0) throw InvalidArgumentError("time must be nonnegative");
    const double gamma = unit_ball_volume(params.d);
    const int d = params.d;
    std::function<double(int, double)> level = [&](int j, double upper) -> double {
        if (j == 0) return params.volume();
        if (upper == 0.0) return 0.0;
        const double mu = params.mu_of(j);
        auto integrand = [&](double r) {
            return mu * level(j - 1, r) * gamma * std::pow(params.alpha * (upper - r), d);
        };
        return Legendre::integrate(integrand, 0.0, upper);
    };
    return level(k, t);
}

double single_ball_passage_cdf(const ModelParams& params, int j, double t) {
    check_type(params, j);
    if (t < 0.0) throw InvalidArgumentError("time must be nonnegative");
    const int d = params.d;
    const double exponent = unit_ball_volume(d) / (d + 1) * params.mu_of(j) * std::pow(params.alpha, d) * std::pow(t, d + 1);
    return -std::expm1(-exponent);
}

double gap_density(int d, double t) {
    check_dim(d);
    if (t <= 0.0) return 0.0;
    const double gamma = unit_ball_volume(d);
    return gamma * std::pow(t, d) * std::exp(-gamma * std::pow(t, d + 1) / (d + 1));
}

double distance_cdf(int d, double s) {
    check_dim(d);
    if (std::isnan(s) || s < 0.0) throw InvalidArgumentError("distance argument must be nonnegative");
    if (s == 0.0) return 0.0;
    const double gamma = unit_ball_volume(d);
    // Beyond `cutoff` the exponential factor is below exp(-37) < 1e-16 and the
    // discarded mass is at most int_cutoff^inf gap_density = exp(-37).
    const double cutoff = std::pow(kTailLog * (d + 1) / gamma, 1.0 / (d + 1));
    if (s >= cutoff) return 1.0;
    // F(s) = 1 - int_s^inf gamma (t^d - s^d) exp(-gamma t^(d+1)/(d+1)) dt: the
    // integrand vanishes below s, so integrating from s is the split at t = s,
    // and the error stays relative to the tail, which keeps F monotone.
    const double sd = std::pow(s, d);
    const double tail = Kronrod::integrate(
        [&](double t) { return gamma * (std::pow(t, d) - sd) * std::exp(-gamma * std::pow(t, d + 1) / (d + 1)); }, s,
        cutoff, 15, 1e-13);
    return std::clamp(1.0 - tail, 0.0, 1.0);
}

double theorem3_integrand(const ModelParams& params, int k, double t) {
    check_type(params, k);
    if (t < 0.0) throw InvalidArgumentError("time must be nonnegative");
    if (k == 1) return 1.0;
    if (t == 0.0) return 0.0;
    const int d = params.d;
    const int power = (k - 1) * (d + 1);
    return std::exp((k - 1) * (std::log(unit_ball_volume(d)) + log_factorial(d)) + power * std::log(t) - log_factorial(power));
}

double theorem3_integrand_from_volume(const ModelParams& params, int k, double t) {
    check_type(params, k);
    const double beta = beta_k(params, k);
    return beta * params.mu_of(k) * v_k(params, k - 1, beta * t);
}

WeibullType WeibullType::for_type(int d, int k) {
    check_dim(d);
    if (k < 1) throw InvalidArgumentError("type index must be positive");
    const int m = (k - 1) * d + k;
    const double log_c = (k - 1) * (std::log(unit_ball_volume(d)) + log_factorial(d)) - log_factorial(m);
    return {std::exp(log_c), m};
}

// ---------------------------------------------------------------------------
// LimitLaw

namespace {

constexpr std::size_t kGridIntervals = std::size_t{1} << 14;
// Closed form is abandoned when its alternating coefficients grow past this,
// which bounds the cancellation error by ~1e-10.
constexpr double kMaxClosedFormCoefficient = 1e6;

std::vector<double> convolution_grid(const std::vector<double>& rates, double end) {
    const double h = end / static_cast<double>(kGridIntervals);
    // CDF of the empty sum: point mass at 0.
    std::vector<double> g(kGridIntervals + 1, 1.0);
    std::vector<double> next(kGridIntervals + 1, 0.0);
    for (double c : rates) {
        // H' = c (G - H) integrated exactly for G linear on each cell.
        const double decay = std::exp(-c * h);
        const double gain = -std::expm1(-c * h);
        const double slope_weight = h - gain / c;
        next[0] = 0.0;
        for (std::size_t i = 0; i < kGridIntervals; ++i) {
            next[i + 1] = decay * next[i] + g[i] * gain + (g[i + 1] - g[i]) / h * slope_weight;
        }
        g.swap(next);
    }
    return g;
}

}  // namespace

LimitLaw::LimitLaw(Kind kind) : kind_(std::move(kind)) {
    if (auto* w = std::get_if<WeibullType>(&kind_)) {
        if (!(w->coefficient > 0.0) || w->exponent < 1) throw InvalidArgumentError("Weibull-type law needs C > 0 and m >= 1");
    } else if (auto* dl = std::get_if<DistanceLaw>(&kind_)) {
        check_dim(dl->d);
    } else if (auto* h = std::get_if<Hypoexponential>(&kind_)) {
        for (double c : h->rates) {
            if (!(c > 0.0)) throw InvalidArgumentError("hypoexponential rates must be positive (or infinite)");
            if (std::isfinite(c)) finite_rates_.push_back(c);
        }
        if (finite_rates_.empty()) throw NoLawError("all hypoexponential rates are infinite: the law is a point mass at 0");
        std::sort(finite_rates_.begin(), finite_rates_.end());

        bool closed = true;
        for (std::size_t i = 0; i < finite_rates_.size() && closed; ++i) {
            double a = 1.0;
            for (std::size_t j = 0; j < finite_rates_.size(); ++j) {
                if (j == i) continue;
                const double gap = finite_rates_[j] - finite_rates_[i];
                if (gap == 0.0) {
                    closed = false;
                    break;
                }
                a *= finite_rates_[j] / gap;
            }
            if (!closed || !(std::abs(a) <= kMaxClosedFormCoefficient)) closed = false;
            else closed_form_coeffs_.push_back(a);
        }
        if (!closed) {
            closed_form_coeffs_.clear();
            double mean = 0.0;
            for (double c : finite_rates_) mean += 1.0 / c;
            // P(sum > 40 * mean) <= k * exp(-40).
            grid_end_ = 40.0 * mean;
            grid_ = convolution_grid(finite_rates_, grid_end_);
        }
    }
}

double LimitLaw::cdf(double t) const {
    if (std::isnan(t)) throw InvalidArgumentError("CDF argument is NaN");
    if (t <= 0.0) return 0.0;
    return std::visit(
        [&](const auto& law) -> double {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Exp1>) {
                return -std::expm1(-t);
            } else if constexpr (std::is_same_v<T, WeibullType>) {
                return -std::expm1(-law.coefficient * std::pow(t, law.exponent));
            } else if constexpr (std::is_same_v<T, DistanceLaw>) {
                if (std::isinf(t)) return 1.0;
                return distance_cdf(law.d, t);
            } else {
                if (std::isinf(t)) return 1.0;
                if (!grid_.empty()) {
                    if (t >= grid_end_) return 1.0;
                    const double pos = t / grid_end_ * static_cast<double>(kGridIntervals);
                    const auto i = static_cast<std::size_t>(pos);
                    const double frac = pos - static_cast<double>(i);
                    return std::clamp(grid_[i] + frac * (grid_[i + 1] - grid_[i]), 0.0, 1.0);
                }
                double survival = 0.0;
                for (std::size_t i = 0; i < finite_rates_.size(); ++i) {
                    survival += closed_form_coeffs_[i] * std::exp(-finite_rates_[i] * t);
                }
                return std::clamp(1.0 - survival, 0.0, 1.0);
            }
        },
        kind_);
}

std::string LimitLaw::name() const {
    std::ostringstream out;
    out.precision(10);
    std::visit(
        [&](const auto& law) {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, Exp1>) {
                out << "exp1";
            } else if constexpr (std::is_same_v<T, WeibullType>) {
                out << "weibull(C=" << law.coefficient << ",m=" << law.exponent << ")";
            } else if constexpr (std::is_same_v<T, DistanceLaw>) {
                out << "distance(d=" << law.d << ")";
            } else {
                out << "hypoexponential(";
                for (std::size_t i = 0; i < law.rates.size(); ++i) {
                    if (i > 0) out << ",";
                    if (std::isinf(law.rates[i])) out << "inf";
                    else out << law.rates[i];
                }
                out << ")";
            }
        },
        kind_);
    return out.str();
}

double limit_cdf(const LimitLaw& law, double t) { return law.cdf(t); }

}  // namespace spatialmut
