#include "otom/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace otom {
namespace {

double param_value(const TissueParams& p, int idx) {
    switch (idx) {
        case 0: return p.kmw;
        case 1: return p.m0m;
        case 2: return p.t2m;
        default: return p.t1w;
    }
}

std::string format_full(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::domain_error("correlation inputs differ in length");
    if (a.empty()) throw std::domain_error("correlation of empty input");
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

EvalReport evaluate_maps(const std::string& method, const std::string& schedule_name,
                         const Phantom& phantom, const std::vector<TissueParams>& estimates) {
    if (estimates.size() != phantom.pixels.size()) {
        throw std::domain_error("estimate count differs from phantom pixel count");
    }
    if (estimates.empty()) throw std::domain_error("phantom has no pixels");
    EvalReport r;
    r.method = method;
    r.schedule_name = schedule_name;
    r.phantom_name = phantom.name;
    r.width = phantom.width;
    r.height = phantom.height;
    const std::size_t n = estimates.size();
    for (int p = 0; p < 4; ++p) {
        auto& truth = r.truth[p];
        auto& est = r.estimate[p];
        auto& diff = r.difference[p];
        truth.resize(n);
        est.resize(n);
        diff.resize(n);
        double sum_abs = 0.0, sum_diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = param_value(phantom.pixels[i], p) * kDisplayScale[p];
            est[i] = param_value(estimates[i], p) * kDisplayScale[p];
            diff[i] = est[i] - truth[i];
            sum_abs += std::abs(diff[i]);
            sum_diff += diff[i];
        }
        r.params[p].mae = sum_abs / static_cast<double>(n);
        r.params[p].mean_diff = sum_diff / static_cast<double>(n);
        r.params[p].correlation = pearson_correlation(est, truth);
    }
    return r;
}

std::string report_to_json(const EvalReport& report, bool include_maps) {
    nlohmann::ordered_json j;
    j["method"] = report.method;
    j["schedule"] = report.schedule_name;
    j["phantom"] = report.phantom_name;
    j["width"] = report.width;
    j["height"] = report.height;
    nlohmann::ordered_json metrics;
    for (int p = 0; p < 4; ++p) {
        nlohmann::ordered_json m;
        m["unit"] = kDisplayUnit[p];
        m["mae"] = report.params[p].mae;
        m["correlation"] = report.params[p].correlation;
        m["meanDiff"] = report.params[p].mean_diff;
        metrics[kTissueParamNames[p]] = m;
    }
    j["metrics"] = metrics;
    j["runtimeSeconds"] = report.runtime_seconds;
    if (include_maps) {
        nlohmann::ordered_json maps;
        for (int p = 0; p < 4; ++p) {
            nlohmann::ordered_json m;
            m["truth"] = report.truth[p];
            m["estimate"] = report.estimate[p];
            m["difference"] = report.difference[p];
            maps[kTissueParamNames[p]] = m;
        }
        j["maps"] = maps;
    }
    return j.dump(2) + "\n";
}

EvalReport report_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("cannot parse report " + path + ": " + e.what());
    }
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.schedule_name = j.at("schedule").get<std::string>();
    r.phantom_name = j.at("phantom").get<std::string>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    const auto& metrics = j.at("metrics");
    for (int p = 0; p < 4; ++p) {
        const auto& m = metrics.at(kTissueParamNames[p]);
        r.params[p].mae = m.at("mae").get<double>();
        r.params[p].correlation = m.at("correlation").get<double>();
        r.params[p].mean_diff = m.at("meanDiff").get<double>();
    }
    r.runtime_seconds = j.value("runtimeSeconds", 0.0);
    if (j.contains("maps")) {
        const auto& maps = j.at("maps");
        for (int p = 0; p < 4; ++p) {
            const auto& m = maps.at(kTissueParamNames[p]);
            r.truth[p] = m.at("truth").get<std::vector<double>>();
            r.estimate[p] = m.at("estimate").get<std::vector<double>>();
            r.difference[p] = m.at("difference").get<std::vector<double>>();
            const auto expect = static_cast<std::size_t>(r.width) * r.height;
            if (r.truth[p].size() != expect || r.estimate[p].size() != expect ||
                r.difference[p].size() != expect) {
                throw std::runtime_error("map size mismatch in report: " + path);
            }
        }
    }
    return r;
}

std::string mae_csv_header() { return "schedule,method,phantom,kmw_Hz,m0m_pct,t2m_us,t1w_ms\n"; }

std::string mae_csv_row(const EvalReport& report) {
    std::ostringstream os;
    os << report.schedule_name << ',' << report.method << ',' << report.phantom_name;
    for (int p = 0; p < 4; ++p) os << ',' << format_full(report.params[p].mae);
    os << '\n';
    return os.str();
}

}  // namespace otom
