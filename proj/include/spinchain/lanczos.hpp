#pragma once

#include "spinchain/spin_ops.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace spinchain {

struct LanczosOptions {
    double tol = 1e-10;  ///< target for ||Ax - theta x||
    int max_iter = 1000; ///< total matrix-vector products
    int krylov_dim = 60; ///< restart length
};

struct LanczosResult {
    double value = 0.0;
    Vector vector;
    double residual = std::numeric_limits<double>::infinity();
    int matvecs = 0;
    bool converged = false;
    /// Second Ritz value of the last Krylov space; NaN when the space was one-dimensional.
    double second_ritz = std::numeric_limits<double>::quiet_NaN();
};

/// Deterministic pseudo-random start vector.
inline Vector random_vector(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = dist(rng);
    return v;
}

namespace detail {

inline void project_out(Vector &w, std::span<const Vector> basis) {
    for (const auto &q : basis)
        w.noalias() -= q.dot(w) * q;
}

} // namespace detail

/// Lowest eigenpair of a symmetric operator given only its action `apply(x, y)` (y = A x).
///
/// Explicitly restarted Lanczos with full reorthogonalization. Each cycle builds a Krylov
/// space of at most `krylov_dim` vectors from the current Ritz vector. Vectors in `deflate`
/// (orthonormal) are projected out at every step, which gives the lowest eigenpair in their
/// orthogonal complement.
template <class Apply>
LanczosResult lowest_eigenpair(Apply &&apply, Vector start, const LanczosOptions &opt,
                               std::span<const Vector> deflate = {}) {
    LanczosResult res;
    const Eigen::Index n = start.size();
    detail::project_out(start, deflate);
    double nrm = start.norm();
    if (n == 0 || nrm == 0.0 || !std::isfinite(nrm)) {
        start = random_vector(n, 0x5eed);
        detail::project_out(start, deflate);
        nrm = start.norm();
    }
    if (n == 0 || nrm == 0.0)
        throw ConvergenceError("lanczos: empty search space", res.residual);
    Vector x = start / nrm;

    const int kmax = std::max(2, opt.krylov_dim);
    std::vector<Vector> basis;
    basis.reserve(static_cast<std::size_t>(kmax));
    Vector w(n);
    Vector ax(n);

    while (true) {
        basis.clear();
        basis.push_back(x);
        std::vector<double> diag;
        std::vector<double> off;
        Eigen::SelfAdjointEigenSolver<Matrix> tri;
        bool breakdown = false;

        for (int k = 0; k < kmax && res.matvecs < opt.max_iter; ++k) {
            apply(basis.back(), w);
            ++res.matvecs;
            diag.push_back(basis.back().dot(w));
            w.noalias() -= diag.back() * basis.back();
            if (k > 0)
                w.noalias() -= off.back() * basis[basis.size() - 2];
            // Two passes of classical Gram-Schmidt keep the basis orthogonal to working precision.
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto &q : basis)
                    w.noalias() -= q.dot(w) * q;
                detail::project_out(w, deflate);
            }
            const double beta = w.norm();

            const auto dim = static_cast<Eigen::Index>(diag.size());
            Vector d = Eigen::Map<const Vector>(diag.data(), dim);
            Vector e = dim > 1 ? Vector(Eigen::Map<const Vector>(off.data(), dim - 1)) : Vector(0);
            tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
            const double estimate = beta * std::abs(tri.eigenvectors()(dim - 1, 0));

            if (beta <= 1e-13 * std::max(1.0, std::abs(tri.eigenvalues()[0]))) {
                breakdown = true;
                break;
            }
            if (estimate < 0.1 * opt.tol)
                break;
            if (k + 1 < kmax) {
                off.push_back(beta);
                basis.push_back(w / beta);
            }
        }

        const auto dim = static_cast<Eigen::Index>(diag.size());
        const Vector s = tri.eigenvectors().col(0);
        x.setZero();
        for (Eigen::Index i = 0; i < dim; ++i)
            x.noalias() += s[i] * basis[static_cast<std::size_t>(i)];
        detail::project_out(x, deflate);
        x.normalize();
        if (dim > 1)
            res.second_ritz = tri.eigenvalues()[1];

        apply(x, ax);
        ++res.matvecs;
        const double theta = x.dot(ax);
        const double residual = (ax - theta * x).norm();
        if (residual < res.residual) {
            res.value = theta;
            res.vector = x;
            res.residual = residual;
        }
        if (residual < opt.tol || (breakdown && residual < 1e3 * opt.tol)) {
            res.converged = true;
            return res;
        }
        if (res.matvecs >= opt.max_iter)
            return res;
    }
}

} // namespace spinchain
