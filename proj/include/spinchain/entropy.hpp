#pragma once

#include "spinchain/error.hpp"
#include "spinchain/spin_ops.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <span>
#include <string>

namespace spinchain {

/// Weights below this contribute nothing to -lambda log2 lambda.
inline constexpr double kSpectrumCutoff = 1e-14;

/// Von Neumann entropy in bits of a density-matrix spectrum.
inline double entropy_from_spectrum(std::span<const double> spectrum) {
    double sum = 0.0;
    double s = 0.0;
    for (const double w : spectrum) {
        if (w < -1e-10 || !std::isfinite(w))
            throw IntegrityError("density-matrix weight " + std::to_string(w) + " is negative");
        sum += w;
        if (w > kSpectrumCutoff)
            s -= w * std::log2(w);
    }
    if (std::abs(sum - 1.0) > 1e-8)
        throw IntegrityError("density-matrix spectrum sums to " + std::to_string(sum));
    return s > 0.0 ? s : 0.0;
}

/// -Tr(rho log2 rho) for a symmetric unit-trace density matrix.
inline double entropy(const Matrix &rho) {
    if (rho.rows() != rho.cols())
        throw IntegrityError("density matrix is not square");
    if (std::abs(rho.trace() - 1.0) > 1e-8)
        throw IntegrityError("density matrix trace " + std::to_string(rho.trace()) + " differs from 1");
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(rho, Eigen::EigenvaluesOnly);
    const Vector &lam = eig.eigenvalues();
    if (lam.size() > 0 && lam.minCoeff() < -1e-8)
        throw IntegrityError("density matrix has negative eigenvalue " + std::to_string(lam.minCoeff()));
    double s = 0.0;
    for (const double w : lam)
        if (w > kSpectrumCutoff)
            s -= w * std::log2(w);
    return s > 0.0 ? s : 0.0;
}

} // namespace spinchain
