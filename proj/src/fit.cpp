#include "otom/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "otom/prng.hpp"

namespace otom {
namespace {

constexpr int kDim = 4;
constexpr int kLhsBlock = 10;       // starts are drawn from stacked 10-point
                                    // Latin-hypercube blocks so a longer run
                                    // extends, never replaces, a shorter one
constexpr double kExactCost = 1e-26;  // round-trip recovery floor; further
                                      // starts cannot improve meaningfully

struct Box {
    std::array<double, 2> lo_hi[kDim];
};

std::array<Range, kDim> bounds_array(const TissueRanges& b) {
    return {b.kmw, b.m0m, b.t2m, b.t1w};
}

TissueParams from_unit(const std::array<double, kDim>& u, const std::array<Range, kDim>& b) {
    TissueParams p;
    p.kmw = b[0].lo + u[0] * (b[0].hi - b[0].lo);
    p.m0m = b[1].lo + u[1] * (b[1].hi - b[1].lo);
    p.t2m = b[2].lo + u[2] * (b[2].hi - b[2].lo);
    p.t1w = b[3].lo + u[3] * (b[3].hi - b[3].lo);
    return p;
}

// Latin-hypercube start points, prefix-stable in the start index.
std::vector<std::array<double, kDim>> lhs_starts(int n, std::uint64_t seed) {
    std::vector<std::array<double, kDim>> pts;
    pts.reserve(n);
    for (int block = 0; static_cast<int>(pts.size()) < n; ++block) {
        Xoshiro256 rng(derive_seed(seed, static_cast<std::uint64_t>(block)));
        int perm[kDim][kLhsBlock];
        for (int d = 0; d < kDim; ++d) {
            for (int j = 0; j < kLhsBlock; ++j) perm[d][j] = j;
            for (int j = kLhsBlock; j > 1; --j) {
                const auto k = static_cast<int>(rng.uniform_int(0, j - 1));
                std::swap(perm[d][j - 1], perm[d][k]);
            }
        }
        for (int j = 0; j < kLhsBlock && static_cast<int>(pts.size()) < n; ++j) {
            std::array<double, kDim> u{};
            for (int d = 0; d < kDim; ++d) {
                u[d] = (perm[d][j] + rng.uniform()) / kLhsBlock;
            }
            pts.push_back(u);
        }
    }
    return pts;
}

// Solves the 4x4 system M x = rhs by Gaussian elimination with partial
// pivoting. Returns false when M is numerically singular.
bool solve4(double M[kDim][kDim], double rhs[kDim], double x[kDim]) {
    int piv[kDim] = {0, 1, 2, 3};
    for (int col = 0; col < kDim; ++col) {
        int best = col;
        for (int r = col + 1; r < kDim; ++r) {
            if (std::abs(M[piv[r]][col]) > std::abs(M[piv[best]][col])) best = r;
        }
        std::swap(piv[col], piv[best]);
        const double p = M[piv[col]][col];
        if (std::abs(p) < 1e-300) return false;
        for (int r = col + 1; r < kDim; ++r) {
            const double f = M[piv[r]][col] / p;
            for (int c = col; c < kDim; ++c) M[piv[r]][c] -= f * M[piv[col]][c];
            rhs[piv[r]] -= f * rhs[piv[col]];
        }
    }
    for (int col = kDim - 1; col >= 0; --col) {
        double acc = rhs[piv[col]];
        for (int c = col + 1; c < kDim; ++c) acc -= M[piv[col]][c] * x[c];
        x[col] = acc / M[piv[col]][col];
    }
    for (int d = 0; d < kDim; ++d) {
        if (!std::isfinite(x[d])) return false;
    }
    return true;
}

}  // namespace

std::vector<double> residual(const TissueParams& params, const Fingerprint& fp,
                             const Schedule& schedule, const PoolConstants& consts) {
    if (fp.size() != schedule.size()) {
        throw std::domain_error("fingerprint and schedule lengths differ");
    }
    const Fingerprint sim = simulate_fingerprint(params, consts, schedule);
    std::vector<double> r(fp.size());
    for (std::size_t i = 0; i < fp.size(); ++i) r[i] = sim[i] - fp[i];
    return r;
}

FitResult fit_bloch(const Fingerprint& fp, const Schedule& schedule, const FitConfig& config,
                    const PoolConstants& consts) {
    if (schedule.size() < 4) throw std::domain_error("fit needs at least 4 scans");
    if (fp.size() != schedule.size()) {
        throw std::domain_error("fingerprint and schedule lengths differ");
    }
    const auto bounds = bounds_array(config.bounds);
    for (const Range& r : bounds) {
        if (!(r.lo < r.hi)) throw std::domain_error("invalid fit bounds");
    }
    if (config.n_starts < 1 || config.max_iterations < 1) {
        throw std::domain_error("invalid fit configuration");
    }
    const std::size_t N = fp.size();

    const auto cost_of = [&](const std::array<double, kDim>& u, std::vector<double>* r_out) {
        const std::vector<double> r = residual(from_unit(u, bounds), fp, schedule, consts);
        double c = 0.0;
        for (double v : r) c += v * v;
        if (r_out) *r_out = r;
        return c;
    };

    const auto starts = lhs_starts(config.n_starts, config.seed);
    FitResult best;
    double best_cost = std::numeric_limits<double>::infinity();

    for (int s = 0; s < config.n_starts; ++s) {
        std::array<double, kDim> u = starts[s];
        std::vector<double> r;
        double cost = cost_of(u, &r);
        double lambda = 1e-3;
        int accepted = 0;
        bool converged = cost <= config.cost_tolerance;

        for (int it = 0; it < config.max_iterations && !converged; ++it) {
            // Forward-difference Jacobian in normalized space, step 1e-6,
            // reflected at the box edge.
            constexpr double h = 1e-6;
            std::vector<double> J(N * kDim);
            for (int d = 0; d < kDim; ++d) {
                std::array<double, kDim> up = u;
                up[d] = (u[d] + h <= 1.0) ? u[d] + h : u[d] - h;
                const double step = up[d] - u[d];
                std::vector<double> rp;
                cost_of(up, &rp);
                for (std::size_t i = 0; i < N; ++i) J[i * kDim + d] = (rp[i] - r[i]) / step;
            }
            double A[kDim][kDim];
            double g[kDim];
            for (int a = 0; a < kDim; ++a) {
                g[a] = 0.0;
                for (std::size_t i = 0; i < N; ++i) g[a] += J[i * kDim + a] * r[i];
                for (int b = 0; b <= a; ++b) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < N; ++i) acc += J[i * kDim + a] * J[i * kDim + b];
                    A[a][b] = A[b][a] = acc;
                }
            }

            bool improved = false;
            double step_norm = 0.0;
            for (int tries = 0; tries < 10; ++tries) {
                double M[kDim][kDim];
                double rhs[kDim];
                for (int a = 0; a < kDim; ++a) {
                    for (int b = 0; b < kDim; ++b) M[a][b] = A[a][b];
                    M[a][a] += lambda;
                    rhs[a] = -g[a];
                }
                double delta[kDim];
                if (solve4(M, rhs, delta)) {
                    std::array<double, kDim> un;
                    step_norm = 0.0;
                    for (int d = 0; d < kDim; ++d) {
                        un[d] = std::clamp(u[d] + delta[d], 0.0, 1.0);
                        const double moved = un[d] - u[d];
                        step_norm += moved * moved;
                    }
                    step_norm = std::sqrt(step_norm);
                    std::vector<double> rn;
                    const double cn = cost_of(un, &rn);
                    if (cn < cost) {
                        u = un;
                        r = std::move(rn);
                        cost = cn;
                        lambda = std::max(lambda * 0.3, 1e-12);
                        improved = true;
                        ++accepted;
                        break;
                    }
                }
                lambda *= 10.0;
            }
            if (!improved) break;
            if (cost <= config.cost_tolerance || step_norm <= config.step_tolerance) {
                converged = true;
            }
        }

        if (cost < best_cost) {
            best_cost = cost;
            best.params = from_unit(u, bounds);
            best.residual_rms = std::sqrt(cost / static_cast<double>(N));
            best.iterations = accepted;
            best.converged = converged;
            best.start_index = s;
        }
        if (best_cost <= kExactCost) break;
    }
    return best;
}

}  // namespace otom
