#pragma once

#include "lorenz/lorenz_map.hpp"
#include "lorenz/noise.hpp"

#include <Eigen/SparseCore>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lorenz {

/// Bin edges on [0,1]. Uniform, except that the edges nearest to the special points
/// (c and the critical values) are moved onto them.
class Partition {
public:
    Partition() : Partition(std::size_t{1}) {}
    explicit Partition(std::size_t n_bins);
    Partition(std::size_t n_bins, const MapParams& params);
    explicit Partition(std::vector<double> edges);

    std::size_t size() const noexcept { return edges_.size() - 1; }
    const std::vector<double>& edges() const noexcept { return edges_; }
    double left(std::size_t i) const { return edges_[i]; }
    double right(std::size_t i) const { return edges_[i + 1]; }
    double width(std::size_t i) const { return edges_[i + 1] - edges_[i]; }

    /// Bin containing y (right-closed at 1).
    std::size_t locate(double y) const;
    bool has_edge(double x) const;

    bool operator==(const Partition& o) const { return edges_ == o.edges_; }

private:
    std::vector<double> edges_;
};

/// Piecewise-constant probability density.
struct Density {
    Partition partition;
    std::vector<double> weights;

    static Density uniform(const Partition& p);
    static Density from_masses(const Partition& p, std::span<const double> masses);
    std::vector<double> masses() const;
    double integral() const;
};

double l1_distance(const Density& a, const Density& b);
double tv_distance(const Density& a, const Density& b);

/// One increasing branch x in [a, b] -> [forward(a), forward(b)] with an inverse on its image.
struct MonotoneBranch {
    double a;
    double b;
    std::function<double(double)> forward;
    std::function<double(double)> inverse;
};

/// Branch list of f_t (limits at c are taken from the side of the branch).
std::vector<MonotoneBranch> family_branches(const PerturbedFamily& family, double t);

struct UlamOptions {
    std::size_t nodes = 32;  ///< Gauss-Legendre nodes (uniform) or nodes per half (triangular, halved)
};

struct UlamMatrix {
    Partition partition;
    Eigen::SparseMatrix<double, Eigen::RowMajor> P;
    std::string mode;  ///< "deterministic" or "randomized"
    double eps = 0.0;
    NoiseKind kind = NoiseKind::uniform;
    std::size_t nodes = 0;

    double max_row_defect() const;
};

/// Deterministic Ulam matrix when model is null or eps == 0, noise-averaged otherwise.
UlamMatrix build_ulam(const PerturbedFamily& family, const NoiseModel* model, const Partition& partition,
                      const UlamOptions& opts = {});

/// Ulam matrix of a weighted mixture of branch systems (sum of weights = 1).
UlamMatrix build_ulam_from_branches(const Partition& partition,
                                    const std::function<std::vector<MonotoneBranch>(std::size_t)>& branches_at,
                                    std::span<const double> weights);

/// Quadrature nodes and weights (weights sum to 1) for nu_eps.
void noise_quadrature(const NoiseModel& model, std::size_t nodes, std::vector<double>& t, std::vector<double>& w);

struct StationaryOptions {
    double tol = 1e-10;
    std::size_t max_iters = 200000;
    bool damping = true;  ///< iterate (P + I)/2: same fixed points, no oscillation on cyclic supports
    std::optional<Density> initial;
};

struct StationaryResult {
    Density density;
    double residual = 0.0;  ///< ||pi P - pi||_1 for the returned pi (mass vector)
    std::size_t iterations = 0;
};

/// Left fixed vector of P by power iteration. Throws NoConvergence.
StationaryResult stationary_density(const UlamMatrix& m, const StationaryOptions& opts = {});

/// ||pi P - pi||_1 for a mass vector pi.
double stationarity_residual(const UlamMatrix& m, std::span<const double> masses);

/// pi -> pi P.
std::vector<double> apply_left(const UlamMatrix& m, std::span<const double> masses);

struct BirkhoffResult {
    Density density;
    std::size_t restarts = 0;
};

/// Histogram of x_{burn_in}, ..., x_{n_steps-1} along a random orbit (stream 0 of the model).
/// Critical hits restart the orbit from a jittered point and are counted.
BirkhoffResult birkhoff_density(const PerturbedFamily& family, const NoiseModel& model, double x0,
                                std::size_t n_steps, std::size_t burn_in, const Partition& partition,
                                std::uint64_t stream_id = 0);

struct SweepRow {
    double eps;
    double l1 = 0.0;
    double residual = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::string error;
};

struct SweepResult {
    Density zeta0;
    double zeta0_residual = 0.0;
    std::vector<SweepRow> rows;
};

struct SweepOptions {
    NoiseKind kind = NoiseKind::uniform;
    UlamOptions ulam;
    StationaryOptions stationary;
};

/// ||zeta_eps - zeta_0||_1 over a descending ladder. Per-rung failures are recorded, not thrown.
SweepResult stability_sweep(const PerturbedFamily& family, std::span<const double> ladder,
                            const Partition& partition, const SweepOptions& opts = {});

/// Density of (f_omega^n)_*(Leb|J) / |J| from a midpoint grid on J.
Density push_forward_density(const PerturbedFamily& family, std::span<const double> omega, double j_lo,
                             double j_hi, std::size_t n, const Partition& partition, std::size_t grid = 100000);

} // namespace lorenz
