#include "otom/bloch.hpp"

#include <cmath>
#include <stdexcept>

#include "otom/lineshape.hpp"
#include "otom/schedule.hpp"

namespace otom {

namespace {

constexpr double kTwoPi = 6.28318530717958647693;

// Coupled longitudinal system dM/dt = A M + c.
struct TwoPoolSystem {
    double a11, a12, a21, a22;
    double c1, c2;
};

TwoPoolSystem build_system(const TissueParams& tissue, const PoolConstants& consts,
                           const ScanPoint& scan) {
    double rrf_w = 0.0, rrf_m = 0.0;
    saturation_rates(tissue, consts, scan, &rrf_w, &rrf_m);
    const double r1w = 1.0 / tissue.t1w;
    const double r1m = 1.0 / consts.t1m;
    const double kwm = tissue.kmw * tissue.m0m / consts.m0w;
    return TwoPoolSystem{
        -(r1w + kwm + rrf_w), tissue.kmw,
        kwm, -(r1m + tissue.kmw + rrf_m),
        r1w * consts.m0w, r1m * tissue.m0m,
    };
}

}  // namespace

double rf_amplitude(double b1_ut, const PoolConstants& consts) {
    if (b1_ut < 0.0) throw std::invalid_argument("rf_amplitude: negative B1");
    return consts.gamma * b1_ut;
}

double offset_rad_per_sec(double omega_ppm, const PoolConstants& consts) {
    return kTwoPi * omega_ppm * consts.hz_per_ppm();
}

void saturation_rates(const TissueParams& tissue, const PoolConstants& consts,
                      const ScanPoint& scan, double* rrf_w, double* rrf_m) {
    const double w1 = rf_amplitude(scan.b1, consts);
    if (w1 == 0.0) {
        *rrf_w = 0.0;
        *rrf_m = 0.0;
        return;
    }
    const double dw = offset_rad_per_sec(scan.omega, consts);
    const double a = dw * consts.t2w;
    *rrf_w = w1 * w1 * consts.t2w / (1.0 + a * a);

    const double w1sq_pi = 3.14159265358979323846 * w1 * w1;
    if (consts.semisolid_lineshape == Lineshape::super_lorentzian) {
        if (dw == 0.0)
            throw std::domain_error("saturation_rates: super-Lorentzian diverges at zero offset");
        const double u = std::fabs(dw) * tissue.t2m;
        *rrf_m = w1sq_pi * tissue.t2m * super_lorentzian_factor_fast(u);
    } else {
        *rrf_m = w1sq_pi * lineshape_value(consts.semisolid_lineshape, dw, tissue.t2m);
    }
}

SaturationResponse steady_state(const TissueParams& tissue, const PoolConstants& consts,
                                const ScanPoint& scan) {
    SaturationResponse out;
    saturation_rates(tissue, consts, scan, &out.rrf_w, &out.rrf_m);

    const double r1w = 1.0 / tissue.t1w;
    const double r1m = 1.0 / consts.t1m;
    const double a = -(r1w + out.rrf_w);              // m0m = 0 single-pool rate
    const double d = -(r1m + tissue.kmw + out.rrf_m);

    if (tissue.m0m == 0.0) {
        // Single-pool short circuit: the water dynamics decouple entirely, so
        // the result is independent of kmw and t2m.
        out.mss_w = r1w * consts.m0w / (r1w + out.rrf_w);
        out.mss_m = 0.0;
        out.lambda = std::fmin(-a, -d);
        return out;
    }

    const double kwm = tissue.kmw * tissue.m0m / consts.m0w;
    const double a11 = -(r1w + kwm + out.rrf_w);
    const double a12 = tissue.kmw;
    const double a21 = kwm;
    const double a22 = d;
    const double c1 = r1w * consts.m0w;
    const double c2 = r1m * tissue.m0m;

    const double det = a11 * a22 - a12 * a21;
    if (det == 0.0 || !std::isfinite(det))
        throw std::runtime_error("steady_state: singular longitudinal system");
    out.mss_w = -(a22 * c1 - a12 * c2) / det;
    out.mss_m = -(a11 * c2 - a21 * c1) / det;

    // Both eigenvalues are real and negative: the off-diagonal product is
    // positive so the discriminant is nonnegative, and trace < 0, det > 0.
    const double tr = a11 + a22;
    const double disc = std::sqrt((a11 - a22) * (a11 - a22) + 4.0 * a12 * a21);
    const double e1 = 0.5 * (tr + disc);
    const double e2 = 0.5 * (tr - disc);
    out.lambda = std::fmin(std::fabs(e1), std::fabs(e2));
    return out;
}

double transient_signal(const TissueParams& tissue, const PoolConstants& consts,
                        const ScanPoint& scan) {
    const SaturationResponse ss = steady_state(tissue, consts, scan);
    const double recovered = consts.m0w * (1.0 - std::exp(-scan.td / tissue.t1w));
    return (recovered - ss.mss_w) * std::exp(-ss.lambda * scan.ts) + ss.mss_w;
}

Fingerprint simulate_fingerprint(const TissueParams& tissue, const PoolConstants& consts,
                                 const Schedule& schedule) {
    if (schedule.points.empty())
        throw std::invalid_argument("simulate_fingerprint: empty schedule");
    Fingerprint fp;
    fp.values.reserve(schedule.size());
    for (const ScanPoint& scan : schedule.points) {
        fp.values.push_back(transient_signal(tissue, consts, scan));
    }
    return fp;
}

double rk4_signal(const TissueParams& tissue, const PoolConstants& consts,
                  const ScanPoint& scan, double dt) {
    if (dt <= 0.0 || dt > 1e-4)
        throw std::invalid_argument("rk4_signal: dt must be in (0, 1e-4] s");

    const TwoPoolSystem sys = build_system(tissue, consts, scan);
    double mw = consts.m0w * (1.0 - std::exp(-scan.td / tissue.t1w));
    double mm = tissue.m0m * (1.0 - std::exp(-scan.td / consts.t1m));

    const auto deriv = [&sys](double w, double m, double* dw, double* dm) {
        *dw = sys.a11 * w + sys.a12 * m + sys.c1;
        *dm = sys.a21 * w + sys.a22 * m + sys.c2;
    };

    const auto step = [&](double h) {
        double k1w, k1m, k2w, k2m, k3w, k3m, k4w, k4m;
        deriv(mw, mm, &k1w, &k1m);
        deriv(mw + 0.5 * h * k1w, mm + 0.5 * h * k1m, &k2w, &k2m);
        deriv(mw + 0.5 * h * k2w, mm + 0.5 * h * k2m, &k3w, &k3m);
        deriv(mw + h * k3w, mm + h * k3m, &k4w, &k4m);
        mw += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        mm += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
    };

    const auto n_full = static_cast<long>(scan.ts / dt);
    for (long i = 0; i < n_full; ++i) step(dt);
    const double rem = scan.ts - static_cast<double>(n_full) * dt;
    if (rem > 0.0) step(rem);
    return mw;
}

}  // namespace otom
