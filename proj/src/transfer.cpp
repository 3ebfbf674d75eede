#include "lorenz/transfer.hpp"
#include "lorenz/orbit.hpp"
#include "lorenz/parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lorenz {

Partition::Partition(std::size_t n_bins)
{
    if (n_bins < 1)
        throw InvalidParams("partition needs at least one bin");
    edges_.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i)
        edges_[i] = static_cast<double>(i) / static_cast<double>(n_bins);
    edges_.back() = 1.0;
}

Partition::Partition(std::size_t n_bins, const MapParams& params) : Partition(n_bins)
{
    std::vector<bool> moved(edges_.size(), false);
    for (double p : {params.c(), params.c1_plus(), params.c1_minus()}) {
        if (has_edge(p))
            continue;
        const double pos = p * static_cast<double>(n_bins);
        auto k = static_cast<std::size_t>(std::llround(pos));
        k = std::clamp<std::size_t>(k, 1, n_bins - 1);
        if (n_bins >= 2 && !moved[k]) {
            edges_[k] = p;
            moved[k] = true;
        } else {
            edges_.insert(std::upper_bound(edges_.begin(), edges_.end(), p), p);
            moved.insert(moved.begin() + static_cast<std::ptrdiff_t>(locate(p)), true);
        }
    }
}

Partition::Partition(std::vector<double> edges) : edges_(std::move(edges))
{
    if (edges_.size() < 2 || edges_.front() != 0.0 || edges_.back() != 1.0)
        throw InvalidParams("partition edges must run from 0 to 1");
    for (std::size_t i = 1; i < edges_.size(); ++i)
        if (!(edges_[i] > edges_[i - 1]))
            throw InvalidParams("partition edges must be strictly increasing");
}

std::size_t Partition::locate(double y) const
{
    if (y >= 1.0)
        return size() - 1;
    if (y <= 0.0)
        return 0;
    auto it = std::upper_bound(edges_.begin(), edges_.end(), y);
    return static_cast<std::size_t>(it - edges_.begin()) - 1;
}

bool Partition::has_edge(double x) const { return std::binary_search(edges_.begin(), edges_.end(), x); }

Density Density::uniform(const Partition& p) { return Density{p, std::vector<double>(p.size(), 1.0)}; }

Density Density::from_masses(const Partition& p, std::span<const double> masses)
{
    const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
    Density d{p, std::vector<double>(p.size())};
    for (std::size_t i = 0; i < p.size(); ++i)
        d.weights[i] = masses[i] / total / p.width(i);
    return d;
}

std::vector<double> Density::masses() const
{
    std::vector<double> m(weights.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        m[i] = weights[i] * partition.width(i);
    return m;
}

double Density::integral() const
{
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i)
        s += weights[i] * partition.width(i);
    return s;
}

double l1_distance(const Density& a, const Density& b)
{
    if (!(a.partition == b.partition))
        throw PartitionMismatch();
    double s = 0.0;
    for (std::size_t i = 0; i < a.weights.size(); ++i)
        s += std::abs(a.weights[i] - b.weights[i]) * a.partition.width(i);
    return s;
}

double tv_distance(const Density& a, const Density& b) { return 0.5 * l1_distance(a, b); }

std::vector<MonotoneBranch> family_branches(const PerturbedFamily& family, double t)
{
    family.check_noise(t);
    const double c = family.base().c();
    const double top = family.left_sup(t);
    const double bottom = family.right_inf(t);
    MonotoneBranch left{0.0, c,
                        [&family, t, c, top](double x) { return x >= c ? top : family.value(t, x); },
                        [&family, t](double y) { return *family.inverse(t, y, Side::left); }};
    MonotoneBranch right{c, 1.0,
                         [&family, t, c, bottom](double x) { return x <= c ? bottom : family.value(t, x); },
                         [&family, t](double y) { return *family.inverse(t, y, Side::right); }};
    return {left, right};
}

namespace {

// Adds the mass fractions of bin [a, b] sent by one branch into the row accumulator.
void accumulate_row(const Partition& part, const MonotoneBranch& br, double a, double b, double weight,
                    std::vector<double>& acc, std::vector<std::size_t>& touched)
{
    const double lo = std::max(a, br.a);
    const double hi = std::min(b, br.b);
    if (!(hi > lo))
        return;
    const double ya = br.forward(lo);
    const double yb = br.forward(hi);
    const std::size_t ja = part.locate(ya);
    const std::size_t jb = part.locate(yb);
    const double scale = weight / (b - a);
    if (ja == jb) {
        if (acc[ja] == 0.0)
            touched.push_back(ja);
        acc[ja] += (hi - lo) * scale;
        return;
    }
    double x_prev = lo;
    for (std::size_t j = ja; j <= jb; ++j) {
        double x_next = hi;
        if (j < jb)
            x_next = std::clamp(br.inverse(part.right(j)), x_prev, hi);
        const double len = x_next - x_prev;
        if (len > 0.0) {
            if (acc[j] == 0.0)
                touched.push_back(j);
            acc[j] += len * scale;
        }
        x_prev = x_next;
    }
}

} // namespace

UlamMatrix build_ulam_from_branches(const Partition& partition,
                                    const std::function<std::vector<MonotoneBranch>(std::size_t)>& branches_at,
                                    std::span<const double> weights)
{
    const std::size_t n = partition.size();
    std::vector<std::vector<MonotoneBranch>> systems(weights.size());
    for (std::size_t k = 0; k < weights.size(); ++k)
        systems[k] = branches_at(k);

    std::vector<std::vector<std::pair<std::size_t, double>>> rows(n);
    parallel_for(n, [&](std::size_t i) {
        std::vector<double> acc(n, 0.0);
        std::vector<std::size_t> touched;
        const double a = partition.left(i), b = partition.right(i);
        for (std::size_t k = 0; k < systems.size(); ++k)
            for (const auto& br : systems[k])
                accumulate_row(partition, br, a, b, weights[k], acc, touched);
        std::sort(touched.begin(), touched.end());
        double total = 0.0;
        for (std::size_t j : touched)
            total += acc[j];
        auto& row = rows[i];
        for (std::size_t j : touched)
            if (acc[j] > 0.0)
                row.emplace_back(j, acc[j] / total);
    });

    UlamMatrix m{partition, Eigen::SparseMatrix<double, Eigen::RowMajor>(static_cast<Eigen::Index>(n),
                                                                          static_cast<Eigen::Index>(n)),
                 "deterministic"};
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < n; ++i)
        for (auto [j, v] : rows[i])
            trips.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    m.P.setFromTriplets(trips.begin(), trips.end());
    m.P.makeCompressed();
    return m;
}

namespace {

template <int N>
void gauss_nodes(std::vector<double>& x, std::vector<double>& w)
{
    using Q = boost::math::quadrature::gauss<double, N>;
    x.clear();
    w.clear();
    const auto& ab = Q::abscissa();
    const auto& wt = Q::weights();
    for (std::size_t k = 0; k < ab.size(); ++k) {
        if (ab[k] == 0.0) {
            x.push_back(0.0);
            w.push_back(wt[k]);
            continue;
        }
        x.push_back(-ab[k]);
        w.push_back(wt[k]);
        x.push_back(ab[k]);
        w.push_back(wt[k]);
    }
}

void legendre(std::size_t nodes, std::vector<double>& x, std::vector<double>& w)
{
    switch (nodes) {
    case 4: gauss_nodes<4>(x, w); break;
    case 8: gauss_nodes<8>(x, w); break;
    case 16: gauss_nodes<16>(x, w); break;
    case 32: gauss_nodes<32>(x, w); break;
    case 64: gauss_nodes<64>(x, w); break;
    default: throw InvalidParams("quadrature node count must be one of 4, 8, 16, 32, 64");
    }
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto i, auto j) { return x[i] < x[j]; });
    std::vector<double> xs, ws;
    for (auto i : idx) {
        xs.push_back(x[i]);
        ws.push_back(w[i]);
    }
    x = std::move(xs);
    w = std::move(ws);
}

} // namespace

void noise_quadrature(const NoiseModel& model, std::size_t nodes, std::vector<double>& t, std::vector<double>& w)
{
    t.clear();
    w.clear();
    if (model.eps == 0.0) {
        t.push_back(0.0);
        w.push_back(1.0);
        return;
    }
    std::vector<double> x, g;
    const double e = model.eps;
    if (model.kind == NoiseKind::uniform) {
        legendre(nodes, x, g);
        for (std::size_t k = 0; k < x.size(); ++k) {
            t.push_back(e * x[k]);
            w.push_back(0.5 * g[k]);
        }
    } else {
        legendre(nodes / 2, x, g);
        for (double sgn : {-1.0, 1.0}) {
            for (std::size_t k = 0; k < x.size(); ++k) {
                const double s = 0.5 * e * (1.0 + x[k]);
                t.push_back(sgn * s);
                w.push_back(0.5 * e * g[k] * (e - s) / (e * e));
            }
        }
    }
}

UlamMatrix build_ulam(const PerturbedFamily& family, const NoiseModel* model, const Partition& partition,
                      const UlamOptions& opts)
{
    const double c = family.base().c();
    if (!partition.has_edge(c))
        throw PartitionTooCoarse("no partition edge at the critical point");

    std::vector<double> t, w;
    if (model == nullptr || model->eps == 0.0) {
        t = {0.0};
        w = {1.0};
    } else {
        model->validate(family);
        noise_quadrature(*model, opts.nodes, t, w);
    }
    auto m = build_ulam_from_branches(
        partition, [&](std::size_t k) { return family_branches(family, t[k]); }, w);
    if (model != nullptr && model->eps > 0.0) {
        m.mode = "randomized";
        m.eps = model->eps;
        m.kind = model->kind;
        m.nodes = t.size();
    }
    return m;
}

double UlamMatrix::max_row_defect() const
{
    double worst = 0.0;
    for (Eigen::Index i = 0; i < P.outerSize(); ++i) {
        double s = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P, i); it; ++it)
            s += it.value();
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

std::vector<double> apply_left(const UlamMatrix& m, std::span<const double> masses)
{
    std::vector<double> out(masses.size(), 0.0);
    for (Eigen::Index i = 0; i < m.P.outerSize(); ++i) {
        const double pi = masses[static_cast<std::size_t>(i)];
        if (pi == 0.0)
            continue;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m.P, i); it; ++it)
            out[static_cast<std::size_t>(it.col())] += pi * it.value();
    }
    return out;
}

double stationarity_residual(const UlamMatrix& m, std::span<const double> masses)
{
    const auto next = apply_left(m, masses);
    double r = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i)
        r += std::abs(next[i] - masses[i]);
    return r;
}

StationaryResult stationary_density(const UlamMatrix& m, const StationaryOptions& opts)
{
    const std::size_t n = m.partition.size();
    std::vector<double> pi;
    if (opts.initial) {
        if (!(opts.initial->partition == m.partition))
            throw PartitionMismatch();
        pi = opts.initial->masses();
    } else {
        pi = Density::uniform(m.partition).masses();
    }
    const double total = std::accumulate(pi.begin(), pi.end(), 0.0);
    for (double& p : pi)
        p /= total;

    double residual = 0.0;
    for (std::size_t it = 0; it <= opts.max_iters; ++it) {
        auto next = apply_left(m, pi);
        residual = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            residual += std::abs(next[i] - pi[i]);
        if (residual <= opts.tol)
            return {Density::from_masses(m.partition, pi), residual, it};
        if (opts.damping)
            for (std::size_t i = 0; i < n; ++i)
                next[i] = 0.5 * (next[i] + pi[i]);
        const double s = std::accumulate(next.begin(), next.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            pi[i] = next[i] / s;
    }
    throw NoConvergence(opts.max_iters, residual);
}

BirkhoffResult birkhoff_density(const PerturbedFamily& family, const NoiseModel& model, double x0,
                                std::size_t n_steps, std::size_t burn_in, const Partition& partition,
                                std::uint64_t stream_id)
{
    if (n_steps <= burn_in)
        throw InvalidParams("birkhoff_density needs n_steps > burn_in");
    if (model.eps > 0.0)
        model.validate(family);
    const OmegaStream omega(model, stream_id);
    AuxRng jitter(model.seed, stream_id ^ 0x5151ULL);
    const double c = family.base().c();

    std::vector<double> counts(partition.size(), 0.0);
    BirkhoffResult res;
    double x = x0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        if (std::abs(x - c) < kCriticalGuard) {
            ++res.restarts;
            x = std::clamp(x + 1e-9 * (jitter.uniform() - 0.5) + 1e-12, 1e-12, 1.0 - 1e-12);
            if (x == c)
                x = c + 1e-12;
        }
        if (i >= burn_in)
            counts[partition.locate(x)] += 1.0;
        x = family.value(omega[i], x);
    }
    res.density = Density::from_masses(partition, counts);
    return res;
}

SweepResult stability_sweep(const PerturbedFamily& family, std::span<const double> ladder,
                            const Partition& partition, const SweepOptions& opts)
{
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        if (!(ladder[k] > 0.0) || ladder[k] > family.eps_max())
            throw InvalidParams("ladder rung outside (0, eps_max]");
        if (k > 0 && !(ladder[k] < ladder[k - 1]))
            throw InvalidParams("noise ladder must be strictly decreasing");
    }
    SweepResult res;
    const auto det = build_ulam(family, nullptr, partition, opts.ulam);
    auto st0 = stationary_density(det, opts.stationary);
    res.zeta0 = st0.density;
    res.zeta0_residual = st0.residual;

    res.rows.resize(ladder.size());
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        SweepRow& row = res.rows[k];
        row.eps = ladder[k];
        NoiseModel model;
        model.eps = ladder[k];
        model.kind = opts.kind;
        try {
            const auto m = build_ulam(family, &model, partition, opts.ulam);
            auto st = stationary_density(m, opts.stationary);
            row.l1 = l1_distance(st.density, res.zeta0);
            row.residual = st.residual;
            row.iterations = st.iterations;
            row.converged = true;
        } catch (const NoConvergence& e) {
            row.error = e.what();
            row.residual = e.residual();
            row.iterations = e.iterations();
        }
    }
    return res;
}

Density push_forward_density(const PerturbedFamily& family, std::span<const double> omega, double j_lo,
                             double j_hi, std::size_t n, const Partition& partition, std::size_t grid)
{
    if (!(j_lo >= 0.0 && j_hi <= 1.0 && j_hi > j_lo))
        throw InvalidParams("push-forward interval must be a nonempty subinterval of [0,1]");
    if (omega.size() < n)
        throw InvalidParams("noise prefix shorter than n");
    if (n == 0) {
        std::vector<double> w(partition.size(), 0.0);
        for (std::size_t i = 0; i < partition.size(); ++i) {
            const double ov = std::min(partition.right(i), j_hi) - std::max(partition.left(i), j_lo);
            w[i] = std::max(0.0, ov);
        }
        return Density::from_masses(partition, w);
    }
    const double c = family.base().c();
    std::vector<double> counts(partition.size(), 0.0);
    const double h = (j_hi - j_lo) / static_cast<double>(grid);
    for (std::size_t g = 0; g < grid; ++g) {
        double x = j_lo + (static_cast<double>(g) + 0.5) * h;
        bool ok = true;
        for (std::size_t k = 0; k < n && ok; ++k) {
            if (x == c) {
                ok = false;
                break;
            }
            x = family.value(omega[k], x);
        }
        if (ok)
            counts[partition.locate(x)] += 1.0;
    }
    return Density::from_masses(partition, counts);
}

} // namespace lorenz
