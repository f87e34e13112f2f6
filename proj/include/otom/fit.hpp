#pragma once

#include <cstdint>
#include <vector>

#include "otom/bloch.hpp"
#include "otom/dataset.hpp"
#include "otom/schedule.hpp"

namespace otom {

// Bounded nonlinear least squares over the four tissue parameters:
// Levenberg-Marquardt-style damped Gauss-Newton in the [0, 1]-normalized
// parameter box, forward-difference Jacobian, multi-start from
// Latin-hypercube points. Pure and deterministic given the seed.
struct FitConfig {
    TissueRanges bounds;  // box constraints; also the normalization ranges
    int n_starts = 10;
    int max_iterations = 200;
    double cost_tolerance = 1e-12;  // on the sum of squared residuals
    double step_tolerance = 1e-10;  // on the normalized-space step norm
    std::uint64_t seed = 0;
};

struct FitResult {
    TissueParams params;
    double residual_rms = 0.0;
    int iterations = 0;     // accepted iterations of the winning start
    bool converged = false;
    int start_index = -1;   // which start won
};

// r_i = simulate(params)_i - fingerprint_i. Throws on length mismatch.
std::vector<double> residual(const TissueParams& params, const Fingerprint& fp,
                             const Schedule& schedule, const PoolConstants& consts = {});

// Requires at least 4 scans (identifiability floor). Fitted parameters
// always lie within config.bounds; converged=false flags runs where no
// start improved to tolerance (not an exception).
FitResult fit_bloch(const Fingerprint& fp, const Schedule& schedule, const FitConfig& config,
                    const PoolConstants& consts = {});

}  // namespace otom
