#pragma once

#include <string>
#include <variant>
#include <vector>

#include "spatialmut/process.hpp"

namespace spatialmut {

/// Volume of the unit ball: 2, pi, 4*pi/3.
double unit_ball_volume(int d);

/// beta_k = (N alpha^((k-1)d) prod_{i<=k} mu_i)^(-1/((k-1)d+k)).
double beta_k(const ModelParams& params, int k);
double log_beta_k(const ModelParams& params, int k);

/// kappa_j = (mu_j alpha^d)^(-1/(d+1)).
double kappa_j(const ModelParams& params, int j);

/// Deterministic volume approximation of the type >= k region,
/// v_k(t) = gamma_d^k (d!)^k / (k(d+1))! * prod mu_i * N alpha^(kd) t^(k(d+1)).
/// v_0 = N.
double v_k(const ModelParams& params, int k, double t);

/// Same quantity from the integral recursion
/// v_j(t) = int_0^t mu_j v_{j-1}(r) gamma_d (alpha (t - r))^d dr,
/// evaluated by nested Gauss-Legendre quadrature.
double v_k_by_recursion(const ModelParams& params, int k, double t);

/// Probability that a single ball started at time 0 has produced a type-j
/// mutation by time t: 1 - exp(-gamma_d/(d+1) mu_j alpha^d t^(d+1)).
double single_ball_passage_cdf(const ModelParams& params, int j, double t);

/// Density of the rescaled gap (sigma_{j+1} - sigma_j)/kappa_{j+1}:
/// gamma_d t^d exp(-gamma_d t^(d+1)/(d+1)).
double gap_density(int d, double t);

/// Limit CDF of D_{j,k}/(alpha kappa_{j+1}):
/// int_0^inf gamma_d min(t, s)^d exp(-gamma_d t^(d+1)/(d+1)) dt.
double distance_cdf(int d, double s);

/// g_k(t) = gamma_d^(k-1) (d!)^(k-1) t^((k-1)(d+1)) / ((k-1)(d+1))!.
double theorem3_integrand(const ModelParams& params, int k, double t);
/// The same function as beta_k mu_k v_{k-1}(beta_k t).
double theorem3_integrand_from_volume(const ModelParams& params, int k, double t);

/// Coefficient C and exponent m of the tail exp(-C t^m) for the first
/// passage of type k in the many-balls regime: m = (k-1)d + k,
/// C = gamma_d^(k-1) (d!)^(k-1) / m!.
struct WeibullType {
    double coefficient = 1.0;
    int exponent = 1;

    static WeibullType for_type(int d, int k);
};

/// Sum of independent exponentials with rates c_i; infinite rates
/// contribute 0.
struct Hypoexponential {
    std::vector<double> rates;
};

struct Exp1 {};

struct DistanceLaw {
    int d = 1;
};

/// Evaluable limit distribution.
class LimitLaw {
public:
    using Kind = std::variant<Hypoexponential, Exp1, WeibullType, DistanceLaw>;

    LimitLaw(Kind kind);

    static LimitLaw exp1() { return LimitLaw(Exp1{}); }
    static LimitLaw hypoexponential(std::vector<double> rates) { return LimitLaw(Hypoexponential{std::move(rates)}); }
    static LimitLaw weibull(int d, int k) { return LimitLaw(WeibullType::for_type(d, k)); }
    static LimitLaw distance(int d) { return LimitLaw(DistanceLaw{d}); }

    double cdf(double t) const;
    const Kind& kind() const noexcept { return kind_; }
    std::string name() const;
    /// True when the hypoexponential CDF comes from the convolution grid.
    bool uses_convolution_grid() const noexcept { return !grid_.empty(); }

private:
    Kind kind_;
    // Hypoexponential with well-separated rates: F = 1 - sum_i A_i e^{-c_i t}.
    std::vector<double> finite_rates_;
    std::vector<double> closed_form_coeffs_;
    // Otherwise: CDF tabulated on a uniform grid [0, grid_end_].
    std::vector<double> grid_;
    double grid_end_ = 0.0;
};

double limit_cdf(const LimitLaw& law, double t);

}  // namespace spatialmut
