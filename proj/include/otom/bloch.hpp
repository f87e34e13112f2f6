#pragma once

#include <cstddef>
#include <vector>

// Two-pool exchange signal model for saturation-transfer fingerprinting.
//
// The free bulk water pool (w) and the semisolid macromolecular pool (m) are
// coupled by magnetization exchange; continuous RF irradiation saturates both
// pools at rates set by their absorption lineshapes. Per dynamic scan the
// longitudinal water magnetization recovers for Td from zero (spoiled
// readout), is saturated for Ts, and is read out. The analytic signal uses
// the steady state and the slow relaxation eigenrate of the coupled 2x2
// longitudinal system; an RK4 integrator of the same system serves as an
// independent reference.
namespace otom {

// The four estimated tissue quantities.
struct TissueParams {
    double kmw = 30.0;    // exchange rate m -> w (Hz)
    double m0m = 0.10;    // semisolid pool fraction of water M0 (dimensionless)
    double t2m = 20e-6;   // semisolid transverse relaxation (s)
    double t1w = 1.2;     // water longitudinal relaxation (s)
};

enum class Lineshape { super_lorentzian, lorentzian, gaussian };

// Fixed pool constants. Everything the model needs besides the four
// estimated parameters.
struct PoolConstants {
    double m0w = 1.0;    // water equilibrium magnetization (normalization unit)
    double t2w = 0.04;   // water transverse relaxation (s)
    double t1m = 1.0;    // semisolid longitudinal relaxation (s)
    double b0 = 3.0;     // main field (T)
    double gamma = 267.522;  // gyromagnetic ratio (rad s^-1 uT^-1)
    Lineshape semisolid_lineshape = Lineshape::super_lorentzian;

    double hz_per_ppm() const { return 42.5756 * b0; }
};

// One dynamic scan of the acquisition train.
struct ScanPoint {
    double b1 = 1.0;     // RF saturation power (uT)
    double omega = 8.0;  // frequency offset (ppm)
    double ts = 1.0;     // saturation time (s)
    double td = 4.0;     // relaxation delay (s)
};

// Saturation rates, steady state and slow eigenrate for one scan.
struct SaturationResponse {
    double rrf_w = 0.0;   // water saturation rate (s^-1)
    double rrf_m = 0.0;   // semisolid saturation rate (s^-1)
    double mss_w = 0.0;   // steady-state water longitudinal magnetization
    double mss_m = 0.0;   // steady-state semisolid longitudinal magnetization
    double lambda = 0.0;  // slow longitudinal relaxation rate under saturation (s^-1)
};

struct Schedule;  // schedule.hpp

// One normalized transient signal per dynamic scan.
struct Fingerprint {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

// RF amplitude omega_1 = gamma * B1 (rad/s). Throws on negative B1.
double rf_amplitude(double b1_ut, const PoolConstants& consts);

// Frequency offset in rad/s from ppm: 2*pi * omega * hz_per_ppm.
double offset_rad_per_sec(double omega_ppm, const PoolConstants& consts);

// Saturation rates of both pools for one scan. Water always uses the
// Lorentzian closed form; the semisolid pool uses consts.semisolid_lineshape
// (memoized super-Lorentzian by default). b1 = 0 short-circuits to (0, 0).
void saturation_rates(const TissueParams& tissue, const PoolConstants& consts,
                      const ScanPoint& scan, double* rrf_w, double* rrf_m);

// Steady state (fixed point of the coupled longitudinal system) and slow
// eigenrate under continuous saturation.
SaturationResponse steady_state(const TissueParams& tissue, const PoolConstants& consts,
                                const ScanPoint& scan);

// Analytic transient signal for one scan:
//   S = [m0w (1 - exp(-Td/T1w)) - Mss_w] exp(-lambda Ts) + Mss_w
double transient_signal(const TissueParams& tissue, const PoolConstants& consts,
                        const ScanPoint& scan);

// Applies transient_signal to every scan of the schedule. Scans are
// independent: each delay period restarts recovery from zero water
// magnetization. Throws on an empty schedule.
Fingerprint simulate_fingerprint(const TissueParams& tissue, const PoolConstants& consts,
                                 const Schedule& schedule);

// Independent reference: RK4 integration of the coupled longitudinal
// equations over the saturation period, starting from the post-delay state
//   Mzw(0) = m0w (1 - exp(-Td/T1w)),  Mzm(0) = m0m (1 - exp(-Td/T1m)).
// Returns Mzw(Ts). Requires dt <= 1e-4 s.
double rk4_signal(const TissueParams& tissue, const PoolConstants& consts,
                  const ScanPoint& scan, double dt);

}  // namespace otom
