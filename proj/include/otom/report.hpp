#pragma once

#include <array>
#include <string>
#include <vector>

#include "otom/bloch.hpp"
#include "otom/phantom.hpp"

namespace otom {

// Display-unit conversion from SI storage units, per tissue parameter:
// kmw Hz -> Hz, m0m fraction -> percent, t2m s -> microseconds, t1w s -> ms.
inline constexpr std::array<double, 4> kDisplayScale = {1.0, 100.0, 1e6, 1e3};
inline constexpr std::array<const char*, 4> kDisplayUnit = {"Hz", "%", "us", "ms"};

struct ParamMetrics {
    double mae = 0.0;         // mean |estimate - truth|, display units
    double correlation = 0.0; // Pearson r vs truth; 0 when either map is constant
    double mean_diff = 0.0;   // mean (estimate - truth), display units
};

// Per-phantom evaluation result: metrics plus full per-pixel maps (display
// units, row-major) so difference images can be exported later.
struct EvalReport {
    std::string method;
    std::string schedule_name;
    std::string phantom_name;
    int width = 0;
    int height = 0;
    std::array<ParamMetrics, 4> params;
    std::array<std::vector<double>, 4> truth;
    std::array<std::vector<double>, 4> estimate;
    std::array<std::vector<double>, 4> difference;  // estimate - truth
    double runtime_seconds = 0.0;
};

// Pearson correlation coefficient; returns 0 when either input has zero
// variance. Throws std::domain_error on length mismatch or empty input.
double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

// Builds the report for one phantom from per-pixel parameter estimates.
// `runtime_seconds` is left at 0 for the caller to fill.
EvalReport evaluate_maps(const std::string& method, const std::string& schedule_name,
                         const Phantom& phantom, const std::vector<TissueParams>& estimates);

// JSON serialization. With include_maps the truth/estimate/difference maps
// are embedded; without, only the scalar metrics.
std::string report_to_json(const EvalReport& report, bool include_maps);
EvalReport report_from_json_file(const std::string& path);

// One-line-per-report CSV mirroring the MAE table layout.
std::string mae_csv_header();
std::string mae_csv_row(const EvalReport& report);

}  // namespace otom
