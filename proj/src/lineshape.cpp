#include "otom/lineshape.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace otom {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)

// tanh-sinh abscissae/weights for one half-interval, precomputed once.
struct TanhSinhRule {
    std::vector<double> x;  // node position in [0, 1] of the half-interval
    std::vector<double> w;

    TanhSinhRule(int n, double tmax) {
        const double h = 2.0 * tmax / n;
        x.resize(n);
        w.resize(n);
        for (int i = 0; i < n; ++i) {
            const double t = -tmax + (i + 0.5) * h;
            const double st = std::sinh(t);
            const double u = 0.5 * kPi * st;
            x[i] = 0.5 * (1.0 + std::tanh(u));
            const double ch = std::cosh(u);
            w[i] = 0.5 * h * (0.5 * kPi * std::cosh(t)) / (ch * ch);
        }
    }
};

const TanhSinhRule& ts_rule() {
    static const TanhSinhRule rule(128, 3.5);
    return rule;
}

double sl_integrand(double x, double u) {
    const double s = 3.0 * x * x - 1.0;
    if (s == 0.0) return 0.0;
    const double q = u / s;
    return std::exp(-2.0 * q * q) / std::fabs(s);
}

}  // namespace

double super_lorentzian_factor(double u, int n_half) {
    // Integrate over x = cos(theta) in [0, 1], split at the zero of
    // 3x^2 - 1. The double-exponential map clusters nodes at the split so
    // the narrow flanks of the integrable singularity are resolved.
    const double x0 = 1.0 / std::sqrt(3.0);
    const TanhSinhRule local(n_half, 3.5);
    const TanhSinhRule& rule = (n_half == 128) ? ts_rule() : local;

    double total = 0.0;
    const std::array<std::array<double, 2>, 2> segments = {{{0.0, x0}, {x0, 1.0}}};
    for (const auto& seg : segments) {
        const double width = seg[1] - seg[0];
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.x.size(); ++i) {
            acc += rule.w[i] * sl_integrand(seg[0] + width * rule.x[i], u);
        }
        total += width * acc;
    }
    return kSqrt2OverPi * total;
}

namespace {

struct SlTable {
    static constexpr int kKnots = 4096;
    static constexpr double kUMin = 1e-5;
    static constexpr double kUMax = 1e3;

    std::array<double, kKnots> f{};
    double log_umin = 0.0;
    double inv_dlog = 0.0;

    SlTable() {
        log_umin = std::log(kUMin);
        const double dlog = (std::log(kUMax) - log_umin) / (kKnots - 1);
        inv_dlog = 1.0 / dlog;
        for (int i = 0; i < kKnots; ++i) {
            f[i] = super_lorentzian_factor(std::exp(log_umin + i * dlog));
        }
    }

    double value(double u) const {
        const double pos = (std::log(u) - log_umin) * inv_dlog;
        const int i = static_cast<int>(pos);
        const double frac = pos - i;
        return f[i] + frac * (f[i + 1] - f[i]);
    }
};

}  // namespace

double super_lorentzian_factor_fast(double u) {
    static const SlTable table;
    if (u < SlTable::kUMin || u >= SlTable::kUMax) return super_lorentzian_factor(u);
    return table.value(u);
}

double lineshape_value(Lineshape kind, double dw, double t2) {
    if (t2 <= 0.0) throw std::invalid_argument("lineshape: t2 must be positive");
    const double a = dw * t2;
    switch (kind) {
        case Lineshape::lorentzian:
            return (t2 / kPi) / (1.0 + a * a);
        case Lineshape::gaussian:
            return t2 / std::sqrt(2.0 * kPi) * std::exp(-0.5 * a * a);
        case Lineshape::super_lorentzian:
            if (dw == 0.0)
                throw std::domain_error("lineshape: super-Lorentzian diverges at zero offset");
            return t2 * super_lorentzian_factor(std::fabs(a));
    }
    throw std::invalid_argument("lineshape: unknown kind");
}

}  // namespace otom
