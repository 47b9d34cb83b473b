#include "displab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace displab {

DecayFit fit_decay_exponent(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_decay_exponent: size mismatch");
    if (x.size() < 3) throw std::invalid_argument("fit_decay_exponent: need >= 3 samples");

    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::invalid_argument("fit_decay_exponent: samples must be strictly positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const auto [xmin, xmax] = std::minmax_element(lx.begin(), lx.end());
    if (*xmax - *xmin < std::log(10.0) - 1e-9)
        throw std::invalid_argument("fit_decay_exponent: x must span at least one decade");

    const double n = static_cast<double>(lx.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) { sx += lx[i]; sy += ly[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }

    DecayFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = (syy <= 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    fit.n_samples = static_cast<int>(lx.size());
    return fit;
}

}  // namespace displab
