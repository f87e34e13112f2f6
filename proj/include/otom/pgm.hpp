#pragma once

#include <string>
#include <utility>
#include <vector>

namespace otom {

// Linear window [lo, hi) -> 8-bit gray: u = round(255 * clamp((v-lo)/(hi-lo))).
// Written as binary PGM (P5) with the window recorded in a header comment so
// the mapping stays recoverable. Requires hi > lo and width*height values.
void write_pgm(const std::string& path, const std::vector<double>& values, int width, int height,
               double lo, double hi);

// Full data range of the values; widens degenerate (constant) input by one
// unit so the window stays valid.
std::pair<double, double> auto_window(const std::vector<double>& values);

}  // namespace otom
