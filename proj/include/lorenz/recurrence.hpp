#pragma once

#include "lorenz/lorenz_map.hpp"
#include "lorenz/noise.hpp"
#include "lorenz/orbit.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lorenz {

inline constexpr double kDefaultDeltaStar = 0.05;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const noexcept { return hi - lo; }
    bool contains(double x) const noexcept { return x > lo && x < hi; }
    bool empty() const noexcept { return !(hi > lo); }
};

/// Critical neighbourhood B~(delta) = f^-1(c1+, c1+ + delta) u f^-1(c1- - delta, c1-), an open
/// interval around c.
struct CriticalNbhd {
    double delta = 0.0;
    double c = 0.5;
    double left_radius = 0.0;
    double right_radius = 0.0;
    double delta_star = kDefaultDeltaStar;

    double size() const noexcept { return left_radius + right_radius; }
    double D() const noexcept { return delta / size(); }
    double lo() const noexcept { return c - left_radius; }
    double hi() const noexcept { return c + right_radius; }
    Interval interval() const noexcept { return {lo(), hi()}; }
    bool contains(double x) const noexcept { return x > lo() && x < hi(); }
};

/// Throws DeltaOutOfRange unless 0 < delta < min(u - (1 - v), u, v).
CriticalNbhd tilde_B(const MapParams& params, double delta, double delta_star = kDefaultDeltaStar);

/// d(f(x), CV) for the critical value on x's side: u((c-x)/c)^l or v((x-c)/(1-c))^l.
double delta_of(const MapParams& params, double x);

/// d_*(x, c): delta_of(x) inside B~(delta_star), delta_star outside.
double d_star(const MapParams& params, double x, double delta_star = kDefaultDeltaStar);

enum class ReturnKind { landing, theta_good, tau_scale };

const char* to_string(ReturnKind k);

struct ReturnEvent {
    ReturnKind kind = ReturnKind::landing;
    std::size_t s = 0;
    double delta = 0.0;      ///< scale of the neighbourhood that was hit
    double param = 0.0;      ///< theta for theta_good, tau for tau_scale
    double theta0 = 0.0;     ///< only used by tau_scale
    double df = 1.0;         ///< Df_w^s(x)
    double asum = 0.0;       ///< A(x, w, s)
    double nbhd_size = 0.0;  ///< |B~(delta)|
    double point = 0.0;      ///< f_w^s(x)

    /// Re-evaluates the defining inequality from the stored witnesses.
    bool satisfied() const;
};

/// l_delta: first s >= 0 with f_w^s(x) in B~(delta), s <= horizon.
std::optional<std::size_t> landing_time(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                        double delta, std::size_t horizon);

/// h^theta_delta: first s in [1, horizon] with f_w^s(x) in B~(delta) and
/// theta Df_w^s(x) >= A(x, w, s) |B~(delta)|.
std::optional<ReturnEvent> good_return_time(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                            double delta, double theta, std::size_t horizon);

struct HatHParams {
    double delta = 0.01;
    double theta = 0.01;
    double theta0 = 0.01;
    double tau = 1.0;
    double delta_star = kDefaultDeltaStar;
    unsigned grid_refine = 1;  ///< the delta' grid is delta e^{k / grid_refine}
    std::size_t horizon = 1000;
};

/// Scales delta e^{k/q} <= delta_star (always containing delta itself).
std::vector<double> delta_grid(double delta, double delta_star, unsigned grid_refine);

/// min(inf_{delta' >= delta} h^theta_delta', T^tau) with delta' on the grid above. A step that
/// qualifies both ways is tagged theta_good.
std::optional<ReturnEvent> hat_h(const PerturbedFamily& family, const OmegaStream& omega, double x,
                                 const HatHParams& p);

struct BadFlags {
    bool clause1 = false;  ///< Q_0^s > min(m, kappa Gamma_0^s) for every observed s
    bool clause2 = false;  ///< Q_0^{n-1} >= m, standing in for the limit
    bool approximate = true;
    bool bad() const noexcept { return clause1 && clause2; }
};

struct DepthTrace {
    double eps = 0.0;
    double x0 = 0.0;
    std::vector<int> q;            ///< q_eps(F^j(x, w)), j < n
    std::vector<double> df;        ///< Df_{w_j}(x_j)
    std::vector<double> dist;      ///< d(x_j, c)
    std::vector<char> in_nbhd;     ///< x_j in B~(eps)
    std::vector<long long> q_prefix;   ///< q_prefix[k] = sum_{j<k} q_j
    std::vector<long long> g_prefix;   ///< g_prefix[k] = #{j<k : x_j in B~(eps)}

    std::size_t size() const noexcept { return q.size(); }
    /// Q_{n1}^{n2}, inclusive bounds.
    long long Q(std::size_t n1, std::size_t n2) const;
    long long Gamma(std::size_t n1, std::size_t n2) const;
    BadFlags bad(double m, double kappa) const;
    /// (x, w) in Bad^c_m(kappa): bad and x in B~(eps).
    bool bad_c(double m, double kappa) const;
};

/// q_eps(x, t) = min{q >= 0 : Df_t(x) d(x, c) >= e^-q eps}.
int depth_of(double df, double dist, double eps);

DepthTrace depth_trace(const PerturbedFamily& family, const OmegaStream& omega, double x, double eps,
                       std::size_t n);

struct BindingConstants {
    double theta = 0.5;
    double L = 8.5;
    double zeta = 0.25;
    double theta1 = 5.0;
    double delta_star = kDefaultDeltaStar;

    /// Throws InvalidParams for L <= 2^(l+1), zeta outside (0, 1/l), theta outside (0, 1)
    /// or 4 theta W0 > theta1.
    void validate(const MapParams& params, double W0) const;
};

struct BindingPeriodRecord {
    Side side = Side::left;  ///< left: v = c1-, right: v = c1+
    double v = 0.0;
    double delta = 0.0;
    std::size_t M = 0;
    BindingConstants constants;
    double A_M = 0.0;          ///< A(v, f, M)
    double df_M1 = 0.0;        ///< Df^{M+1}(v)
    double delta_prime = 0.0;  ///< max(d_*(f^M v, c), delta)

    /// Recomputes the critical orbit and checks the three defining inequalities.
    bool verify(const MapParams& params) const;
};

struct BindingSearch {
    std::optional<BindingPeriodRecord> record;
    std::size_t N = 0;   ///< largest n <= horizon with A(v, f, n) <= theta/delta
    std::size_t M2 = 0;  ///< first j >= 0 with f^j(v) in B~(L delta), or horizon
    double W0 = 0.0;
    bool horizon_reached = false;
};

/// W0 = max over v in CV of sum_{n < horizon} 1/Df^n(v).
double critical_sum_W0(const MapParams& params, std::size_t horizon = 2000);

/// Largest M <= N satisfying the avoidance and derivative conditions; none when no M qualifies.
BindingSearch binding_period(const MapParams& params, Side value_side, double delta, const BindingConstants& k,
                             std::size_t horizon);

/// Sequence G_0, ..., G_s with G_s the target and G_j a component of f_{w_j}^-1(G_{j+1}).
struct PullbackChain {
    std::vector<Interval> G;
    std::vector<Side> path;      ///< branch used at step j
    std::vector<char> touches_c; ///< c is an endpoint of G_j
    std::size_t order = 0;

    std::size_t s() const noexcept { return path.size(); }
};

/// One backward step: the preimage of (lo, hi) on the given branch of f_t. Empty if the
/// interval misses the branch image. at_c is set when an endpoint pulled back onto c.
Interval pullback_step(const PerturbedFamily& family, double t, Interval target, Side side, bool& at_c);

/// Pullback along an explicit branch path; omega may be empty for the unperturbed map.
/// Throws EmptyPullback.
PullbackChain pullback_component(const PerturbedFamily& family, std::span<const double> omega, Interval target,
                                 std::span<const Side> path);

/// Pullback along the orbit of x (the branch at step j is the side of f_w^j(x)).
PullbackChain pullback_along_orbit(const PerturbedFamily& family, std::span<const double> omega, Interval target,
                                   double x, std::size_t s);

struct BCViolation {
    double delta = 0.0;
    std::size_t s = 0;
    Interval W;
    double dist_cv = 0.0;
};

struct BCReport {
    double r = 0.0;
    std::vector<double> deltas;
    std::size_t s_max = 0;
    std::size_t components = 0;       ///< distinct components visited
    std::size_t near_cv = 0;          ///< distinct components with dist(W, CV) < delta
    double max_ratio = 0.0;           ///< max |W| / delta over components near CV
    std::vector<BCViolation> violations;
    bool vacuous = false;
};

struct BCOptions {
    std::size_t samples = 4000;
    std::uint64_t seed = 1;
};

/// Guided search for components W of f^-s(B~(r delta)) with dist(W, CV) < delta and |W| >= delta.
BCReport backward_contraction_check(const MapParams& params, double r, std::span<const double> deltas,
                                    std::size_t s_max, const BCOptions& opts = {});

} // namespace lorenz
