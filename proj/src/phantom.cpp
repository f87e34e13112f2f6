#include "otom/phantom.hpp"

#include <stdexcept>

#include "otom/prng.hpp"
#include "otom/threads.hpp"

namespace otom {
namespace {

constexpr int kSize = 64;

constexpr std::array<std::array<double, 5>, 4> kBandValues = {{
    {5.0, 25.0, 50.0, 75.0, 100.0},           // kmw [Hz]
    {0.02, 0.06, 0.10, 0.14, 0.17},           // m0m [fraction]
    {1e-6, 25e-6, 50e-6, 75e-6, 100e-6},      // t2m [s]
    {0.2, 0.9, 1.6, 2.3, 3.0},                // t1w [s]
}};

double& param_ref(TissueParams& p, int idx) {
    switch (idx) {
        case 0: return p.kmw;
        case 1: return p.m0m;
        case 2: return p.t2m;
        default: return p.t1w;
    }
}

}  // namespace

std::vector<Phantom> build_phantoms(std::uint64_t seed, const TissueRanges& ranges) {
    std::vector<Phantom> phantoms(4);
    for (int p = 0; p < 4; ++p) {
        Phantom& ph = phantoms[p];
        ph.name = kTissueParamNames[p];
        ph.swept = p;
        ph.width = kSize;
        ph.height = kSize;
        ph.band_values = kBandValues[p];
        ph.pixels.resize(static_cast<std::size_t>(kSize) * kSize);
        for (int y = 0; y < kSize; ++y) {
            const double band_value = ph.band_values[ph.band_of_row(y)];
            for (int x = 0; x < kSize; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * kSize + x;
                const std::uint64_t pixel_seed =
                    derive_seed(seed, static_cast<std::uint64_t>(p) * kSize * kSize + i);
                TissueParams t = sample_tissue(pixel_seed, ranges);
                param_ref(t, p) = band_value;
                ph.pixels[i] = t;
            }
        }
    }
    return phantoms;
}

std::vector<Fingerprint> simulate_phantom(const Phantom& phantom, const Schedule& schedule,
                                          const NoiseSpec& noise, std::uint64_t seed,
                                          const PoolConstants& consts, int workers) {
    if (phantom.pixels.empty()) throw std::domain_error("phantom has no pixels");
    if (schedule.size() == 0) throw std::domain_error("schedule is empty");
    std::vector<Fingerprint> out(phantom.pixels.size());
    parallel_chunks(phantom.pixels.size(), effective_workers(workers),
                    [&](std::size_t begin, std::size_t end, int) {
                        for (std::size_t i = begin; i < end; ++i) {
                            Fingerprint clean =
                                simulate_fingerprint(phantom.pixels[i], consts, schedule);
                            out[i] = add_noise(clean, noise, derive_seed(seed, i));
                        }
                    });
    return out;
}

}  // namespace otom
