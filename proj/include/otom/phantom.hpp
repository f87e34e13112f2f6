#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "otom/bloch.hpp"
#include "otom/dataset.hpp"
#include "otom/schedule.hpp"

namespace otom {

inline constexpr std::array<const char*, 4> kTissueParamNames = {"kmw", "m0m", "t2m", "t1w"};

// Digital phantom: a width x height grid of tissue parameter maps. One
// parameter is swept over five equal horizontal bands with pinned values; the
// other three vary uniformly per pixel so estimation errors cannot hide
// behind constant backgrounds.
struct Phantom {
    std::string name;   // name of the swept parameter
    int swept = 0;      // index into kTissueParamNames
    int width = 0;
    int height = 0;
    std::array<double, 5> band_values{};
    std::vector<TissueParams> pixels;  // row-major, width * height entries

    int band_of_row(int y) const { return y * 5 / height; }
    const TissueParams& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Builds the four standard 64x64 phantoms (one per swept parameter), fully
// determined by the seed. Non-swept values are drawn from `ranges`.
std::vector<Phantom> build_phantoms(std::uint64_t seed, const TissueRanges& ranges = {});

// Simulates every pixel of the phantom under the given schedule and adds
// noise. The per-pixel noise stream depends only on (seed, pixel index), so
// the result is independent of the worker count.
std::vector<Fingerprint> simulate_phantom(const Phantom& phantom, const Schedule& schedule,
                                          const NoiseSpec& noise, std::uint64_t seed,
                                          const PoolConstants& consts = {}, int workers = 0);

}  // namespace otom
