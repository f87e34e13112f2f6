#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otom/bloch.hpp"

namespace otom {

// Ordered list of dynamic-scan parameters. "Pattern" is the value sequence,
// "length" is N.
struct Schedule {
    std::vector<ScanPoint> points;
    std::string name;

    std::size_t size() const { return points.size(); }
    const ScanPoint& operator[](std::size_t i) const { return points[i]; }
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct ScheduleRanges {
    Range b1{0.5, 2.0};     // uT
    Range omega{8.0, 50.0}; // ppm
    Range ts{0.4, 2.0};     // s
    Range td{3.5, 5.0};     // s
    int n_min = 10;
    int n_max = 40;
};

// Random schedule: N uniform in {n_min..n_max}, every scan parameter an
// independent uniform draw. Deterministic for a fixed seed.
Schedule sample_schedule(std::uint64_t seed, const ScheduleRanges& ranges);

// Random schedule with the length forced to n (pattern sampling only).
Schedule sample_schedule_with_length(std::uint64_t seed, int n, const ScheduleRanges& ranges);

// CSV with one header line "index,b1_uT,omega_ppm,ts_s,td_s", LF endings,
// 17 significant digits so a save/load round trip is exact. Values outside
// the default sampling ranges load with a warning, not an error.
Schedule load_schedule(const std::string& path);
void save_schedule(const Schedule& schedule, const std::string& path);

// First n points, order preserved. Throws unless 1 <= n <= N.
Schedule truncate_schedule(const Schedule& schedule, std::size_t n);

}  // namespace otom
