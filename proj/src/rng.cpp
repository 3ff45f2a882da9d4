#include "mla/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace mla {

double Rng::next_normal() {
    double u1 = next_open_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::next_positive_normal(double mu, double sigma, std::uint64_t* rejections) {
    if (sigma < 0.0) throw std::domain_error("positive normal: sigma must be >= 0");
    if (sigma == 0.0) {
        if (mu <= 0.0) throw std::domain_error("positive normal: degenerate draw requires mu > 0");
        return mu;
    }
    // Rejection terminates quickly whenever P(N > 0) is non-negligible; the
    // iteration cap guards against absurd mu/sigma combinations.
    for (int attempt = 0; attempt < 1'000'000; ++attempt) {
        double draw = mu + sigma * next_normal();
        if (draw > 0.0) return draw;
        if (rejections) ++*rejections;
    }
    throw std::domain_error("positive normal: rejection sampling did not terminate");
}

}  // namespace mla
