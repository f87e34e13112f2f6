#include "otom/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace otom {

void write_pgm(const std::string& path, const std::vector<double>& values, int width, int height,
               double lo, double hi) {
    if (width <= 0 || height <= 0) throw std::domain_error("image dimensions must be positive");
    if (values.size() != static_cast<std::size_t>(width) * height) {
        throw std::domain_error("value count differs from width*height");
    }
    if (!(hi > lo)) throw std::domain_error("window requires hi > lo");
    std::vector<std::uint8_t> bytes(values.size());
    const double scale = 255.0 / (hi - lo);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double t = std::clamp((values[i] - lo) * scale, 0.0, 255.0);
        bytes[i] = static_cast<std::uint8_t>(std::lround(t));
    }
    std::ostringstream header;
    header.precision(17);
    header << "P5\n# window " << lo << ' ' << hi << "\n" << width << ' ' << height << "\n255\n";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const std::string h = header.str();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<double, double> auto_window(const std::vector<double>& values) {
    if (values.empty()) throw std::domain_error("cannot window empty data");
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    if (!(hi > lo)) hi = lo + 1.0;
    return {lo, hi};
}

}  // namespace otom
