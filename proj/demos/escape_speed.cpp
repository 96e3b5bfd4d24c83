// Prints nu_c(g) and the escape speed theta(g) for a few repelling strengths,
// then the power-law exponent of theta at small g.

#include <cstdio>
#include <vector>

#include "wsaw/wsaw.hpp"

int main() {
    using namespace wsaw;
    const std::vector<double> gs = log_spaced(1e-3, 1e-1, 7);
    std::vector<std::pair<double, double>> pts;
    std::printf("%10s %16s %16s\n", "g", "nu_c", "theta");
    for (const auto& row : sweep(gs)) {
        if (!row.point) {
            std::printf("%10.4g  failed: %s\n", row.g, row.error.c_str());
            continue;
        }
        std::printf("%10.4g %16.10f %16.10f\n", row.g, row.point->nu_c, row.point->theta);
        pts.emplace_back(row.g, row.point->theta);
    }
    if (pts.size() >= 6) std::printf("theta ~ g^%.4f\n", exponent_fit(pts).exponent);
}
