#pragma once

#include "spinchain/dmrg.hpp"
#include "spinchain/error.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace spinchain {

/// T(L) = log2[(N/pi) sin(pi L / N)], the chord length of a cut in an open chain.
inline double conformal_distance(int n, int l) {
    if (l < 1 || l > n - 1)
        throw std::out_of_range("L=" + std::to_string(l) + " outside 1.." + std::to_string(n - 1));
    // Evaluate on the shorter side so T(L) and T(N-L) are bitwise equal.
    const int x = std::min(l, n - l);
    return std::log2(n / std::numbers::pi * std::sin(std::numbers::pi * x / n));
}

/// (c/6) T(L) + A, the open-boundary finite-size scaling form.
inline double cft_entropy(int n, int l, double c, double a) { return c / 6.0 * conformal_distance(n, l) + a; }

enum class Parity { even, odd, all };
enum class SlopeFactor { sixth, third };

inline bool parity_matches(int l, Parity p) {
    return p == Parity::all || (p == Parity::even ? l % 2 == 0 : l % 2 != 0);
}

/// c(L) = 6 (S_{L+2} - S_{L-2}) / (T(L+2) - T(L-2)).
inline double local_central_charge(const EntropyProfile &profile, int l) {
    const int n = profile.spec.n;
    if (l < 3 || l > n - 3)
        throw std::out_of_range("local central charge needs 3 <= L <= N-3, got L=" + std::to_string(l));
    const double dt = conformal_distance(n, l + 2) - conformal_distance(n, l - 2);
    if (std::abs(dt) <= 1e-12)
        throw SingularityError("T(L+2) - T(L-2) vanishes at L=" + std::to_string(l));
    return 6.0 * (profile.entropy_at(l + 2) - profile.entropy_at(l - 2)) / dt;
}

struct CftFit {
    double c = 0.0;
    double a = 0.0;
    double slope = 0.0;
    SlopeFactor slope_factor = SlopeFactor::sixth;
    double residual_rms = 0.0;
    int l_min = 0;
    int l_max = 0;
    Parity parity = Parity::even;
    int points = 0;
};

namespace detail {

inline CftFit least_squares(const std::vector<double> &x, const std::vector<double> &y) {
    const auto k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0)
        throw SingularityError("fit regressor is constant over the selected range");
    CftFit f;
    f.slope = sxy / sxx;
    f.a = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.slope * x[i] + f.a);
        ss += r * r;
    }
    f.residual_rms = std::sqrt(ss / k);
    f.points = static_cast<int>(x.size());
    return f;
}

template <class Regressor>
CftFit fit_profile(const EntropyProfile &profile, int l_min, int l_max, Parity parity, Regressor &&regressor) {
    const int n = profile.spec.n;
    if (l_min < 1 || l_max > n - 1 || l_min > l_max)
        throw std::out_of_range("fit range [" + std::to_string(l_min) + ", " + std::to_string(l_max) + "] invalid");
    std::vector<double> x, y;
    for (int l = l_min; l <= l_max; ++l) {
        if (!parity_matches(l, parity))
            continue;
        x.push_back(regressor(l));
        y.push_back(profile.entropy_at(l));
    }
    if (x.size() < 3)
        throw std::invalid_argument("central-charge fit needs at least 3 points, got " + std::to_string(x.size()));
    CftFit f = least_squares(x, y);
    f.l_min = l_min;
    f.l_max = l_max;
    f.parity = parity;
    return f;
}

} // namespace detail

/// Least squares of S_L against T(L). The raw slope is the same for either factor;
/// c = 6 slope for SlopeFactor::sixth (open boundary), c = 3 slope for SlopeFactor::third.
inline CftFit fit_central_charge(const EntropyProfile &profile, int l_min, int l_max, Parity parity,
                                 SlopeFactor factor = SlopeFactor::sixth) {
    const int n = profile.spec.n;
    CftFit f = detail::fit_profile(profile, l_min, l_max, parity, [n](int l) { return conformal_distance(n, l); });
    f.slope_factor = factor;
    f.c = (factor == SlopeFactor::sixth ? 6.0 : 3.0) * f.slope;
    return f;
}

/// Infinite-chain form S_L = (c/3) log2 L + k, with k stored in `a`.
inline CftFit fit_log_length(const EntropyProfile &profile, int l_min, int l_max, Parity parity) {
    CftFit f = detail::fit_profile(profile, l_min, l_max, parity, [](int l) { return std::log2(static_cast<double>(l)); });
    f.slope_factor = SlopeFactor::third;
    f.c = 3.0 * f.slope;
    return f;
}

/// Fit with c held fixed: A = mean of S_L - (c/6) T(L) over the selected points.
inline double fit_cft_constant(const EntropyProfile &profile, double c, int l_min, int l_max, Parity parity) {
    double sum = 0.0;
    int count = 0;
    for (int l = l_min; l <= l_max; ++l) {
        if (!parity_matches(l, parity))
            continue;
        sum += profile.entropy_at(l) - c / 6.0 * conformal_distance(profile.spec.n, l);
        ++count;
    }
    if (count == 0)
        throw std::invalid_argument("no points in range");
    return sum / count;
}

/// Impurity entanglement entropy S_L(alpha) - S_L(baseline), index L-1.
inline std::vector<double> entropy_difference(const EntropyProfile &with_impurity, const EntropyProfile &baseline) {
    if (with_impurity.spec.n != baseline.spec.n)
        throw std::invalid_argument("entropy_difference: chain lengths differ (" + std::to_string(with_impurity.spec.n) +
                                    " vs " + std::to_string(baseline.spec.n) + ")");
    std::vector<double> d(with_impurity.s.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] = with_impurity.s[i] - baseline.s[i];
    return d;
}

/// c(l) at a fixed cut for each alpha.
inline std::map<double, double> central_charge_scan(const std::map<double, EntropyProfile> &profiles, int l) {
    std::map<double, double> out;
    std::optional<int> n;
    for (const auto &[alpha, prof] : profiles) {
        if (n && *n != prof.spec.n)
            throw std::invalid_argument("central_charge_scan: profiles have different chain lengths");
        n = prof.spec.n;
        out.emplace(alpha, local_central_charge(prof, l));
    }
    return out;
}

} // namespace spinchain
