#pragma once

#include "spinchain/error.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace spinchain {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Spin magnitude stored as 2s so that half-integers stay exact.
class Spin {
  public:
    constexpr Spin() = default;
    static constexpr Spin half() { return Spin(1); }
    static constexpr Spin one() { return Spin(2); }
    static Spin from_twice(int twice) {
        if (twice != 1 && twice != 2)
            throw ConfigError("unsupported spin 2s=" + std::to_string(twice) + " (only 1/2 and 1)");
        return Spin(twice);
    }

    constexpr int twice() const { return twice_; }
    constexpr double value() const { return 0.5 * twice_; }
    constexpr int dim() const { return twice_ + 1; }

    std::string label() const { return twice_ % 2 ? std::to_string(twice_) + "/2" : std::to_string(twice_ / 2); }

    friend constexpr bool operator==(Spin, Spin) = default;

  private:
    constexpr explicit Spin(int twice) : twice_(twice) {}
    int twice_ = 1;
};

/// Spin matrices for one site in the |s, m> basis, m = s, s-1, ..., -s.
struct SiteOperators {
    Spin spin;
    int dim = 0;
    Matrix sz;
    Matrix sp;
    Matrix sm;

    /// 2m of basis state k.
    int twice_m(int k) const { return spin.twice() - 2 * k; }
};

inline SiteOperators make_site(Spin spin) {
    const int d = spin.dim();
    const double s = spin.value();
    SiteOperators op{spin, d, Matrix::Zero(d, d), Matrix::Zero(d, d), Matrix::Zero(d, d)};
    for (int k = 0; k < d; ++k) {
        const double m = s - k;
        op.sz(k, k) = m;
        // S+ |m> = sqrt(s(s+1) - m(m+1)) |m+1>, and |m+1> sits one row above.
        if (k > 0)
            op.sp(k - 1, k) = std::sqrt(s * (s + 1) - m * (m + 1));
    }
    op.sm = op.sp.transpose();
    return op;
}

/// J (Sz.Sz + (S+S- + S-S+)/2) on the product space a (x) b, with b the fast index.
inline Matrix heisenberg_bond(const SiteOperators &a, const SiteOperators &b, double coupling) {
    const Eigen::Index n = a.dim * b.dim;
    Matrix h = Matrix::Zero(n, n);
    for (int i = 0; i < a.dim; ++i)
        for (int ip = 0; ip < a.dim; ++ip)
            for (int j = 0; j < b.dim; ++j)
                for (int jp = 0; jp < b.dim; ++jp) {
                    const double v = a.sz(i, ip) * b.sz(j, jp) +
                                     0.5 * (a.sp(i, ip) * b.sm(j, jp) + a.sm(i, ip) * b.sp(j, jp));
                    h(i * b.dim + j, ip * b.dim + jp) = coupling * v;
                }
    return h;
}

} // namespace spinchain
