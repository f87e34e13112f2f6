#include "otom/schedule.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "otom/prng.hpp"

namespace otom {

namespace {

void check_range(const Range& r, const char* name) {
    if (!(r.lo <= r.hi)) throw std::invalid_argument(std::string("inverted range for ") + name);
}

ScanPoint sample_point(Xoshiro256& rng, const ScheduleRanges& ranges) {
    ScanPoint p;
    p.b1 = rng.uniform(ranges.b1.lo, ranges.b1.hi);
    p.omega = rng.uniform(ranges.omega.lo, ranges.omega.hi);
    p.ts = rng.uniform(ranges.ts.lo, ranges.ts.hi);
    p.td = rng.uniform(ranges.td.lo, ranges.td.hi);
    return p;
}

void validate(const ScheduleRanges& ranges) {
    check_range(ranges.b1, "b1");
    check_range(ranges.omega, "omega");
    check_range(ranges.ts, "ts");
    check_range(ranges.td, "td");
    if (ranges.n_min < 1 || ranges.n_max < ranges.n_min)
        throw std::invalid_argument("invalid schedule length range");
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_field(const std::string& field, std::size_t line_no) {
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw std::runtime_error("schedule CSV: malformed value '" + field + "' on line " +
                                 std::to_string(line_no));
    return v;
}

}  // namespace

Schedule sample_schedule(std::uint64_t seed, const ScheduleRanges& ranges) {
    validate(ranges);
    Xoshiro256 rng(seed);
    const int n = static_cast<int>(rng.uniform_int(ranges.n_min, ranges.n_max));
    Schedule s;
    s.points.reserve(n);
    for (int i = 0; i < n; ++i) s.points.push_back(sample_point(rng, ranges));
    return s;
}

Schedule sample_schedule_with_length(std::uint64_t seed, int n, const ScheduleRanges& ranges) {
    validate(ranges);
    if (n < 1) throw std::invalid_argument("schedule length must be >= 1");
    Xoshiro256 rng(seed);
    Schedule s;
    s.points.reserve(n);
    for (int i = 0; i < n; ++i) s.points.push_back(sample_point(rng, ranges));
    return s;
}

void save_schedule(const Schedule& schedule, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "index,b1_uT,omega_ppm,ts_s,td_s\n";
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const ScanPoint& p = schedule[i];
        out << i << ',' << format_value(p.b1) << ',' << format_value(p.omega) << ','
            << format_value(p.ts) << ',' << format_value(p.td) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Schedule load_schedule(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open schedule: " + path);

    Schedule s;
    s.name = path;
    const ScheduleRanges defaults;
    std::string line;
    std::size_t line_no = 0;
    bool warned = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) continue;  // header
        if (line.empty()) continue;

        std::array<std::string, 5> fields;
        std::size_t start = 0;
        int nf = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (nf >= 5)
                    throw std::runtime_error("schedule CSV: too many fields on line " +
                                             std::to_string(line_no));
                fields[nf++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (nf != 5)
            throw std::runtime_error("schedule CSV: expected 5 fields on line " +
                                     std::to_string(line_no) + ", got " + std::to_string(nf));

        ScanPoint p;
        parse_field(fields[0], line_no);  // index, value unused
        p.b1 = parse_field(fields[1], line_no);
        p.omega = parse_field(fields[2], line_no);
        p.ts = parse_field(fields[3], line_no);
        p.td = parse_field(fields[4], line_no);

        const bool in_range = p.b1 >= defaults.b1.lo && p.b1 <= defaults.b1.hi &&
                              p.omega >= defaults.omega.lo && p.omega <= defaults.omega.hi &&
                              p.ts >= defaults.ts.lo && p.ts <= defaults.ts.hi &&
                              p.td >= defaults.td.lo && p.td <= defaults.td.hi;
        if (!in_range && !warned) {
            std::cerr << "warning: " << path << " line " << line_no
                      << ": scan parameters outside the default sampling ranges\n";
            warned = true;
        }
        s.points.push_back(p);
    }
    if (s.points.empty())
        throw std::runtime_error("schedule CSV has no data rows: " + path);
    return s;
}

Schedule truncate_schedule(const Schedule& schedule, std::size_t n) {
    if (n < 1 || n > schedule.size())
        throw std::invalid_argument("truncate_schedule: n out of bounds");
    Schedule out;
    out.name = schedule.name;
    out.points.assign(schedule.points.begin(), schedule.points.begin() + n);
    return out;
}

}  // namespace otom
