#pragma once

// Brute-force reference built from Kronecker products over the full product space.
// Independent of the sector enumeration and of the DMRG block machinery.

#include "spinchain/model.hpp"
#include "spinchain/spin_ops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <vector>

namespace oracle {

using spinchain::Matrix;
using spinchain::Vector;

/// local acts on sites [first, first + sites) of the product space (0-based).
inline Matrix embed(const std::vector<int> &dims, int first, int sites, const Matrix &local) {
    long left = 1, right = 1;
    for (int i = 0; i < first; ++i)
        left *= dims[static_cast<std::size_t>(i)];
    for (std::size_t i = static_cast<std::size_t>(first + sites); i < dims.size(); ++i)
        right *= dims[i];
    return Eigen::kroneckerProduct(Eigen::kroneckerProduct(Matrix::Identity(left, left), local).eval(),
                                   Matrix::Identity(right, right));
}

/// Full-space Hamiltonian; site 1 is the most significant tensor factor.
inline Matrix full_hamiltonian(const spinchain::ChainSpec &spec, std::vector<int> *dims_out = nullptr) {
    std::vector<spinchain::SiteOperators> sites;
    std::vector<int> dims;
    for (int i = 1; i <= spec.n; ++i) {
        sites.push_back(spinchain::make_site(spinchain::site_spin(spec, i)));
        dims.push_back(sites.back().dim);
    }
    long total = 1;
    for (int d : dims)
        total *= d;
    Matrix h = Matrix::Zero(total, total);
    for (int i = 1; i < spec.n; ++i) {
        const auto &a = sites[static_cast<std::size_t>(i - 1)];
        const auto &b = sites[static_cast<std::size_t>(i)];
        const Matrix bond = spinchain::bond_coupling(spec, i) *
                            (Matrix(Eigen::kroneckerProduct(a.sz, b.sz)) +
                             0.5 * (Matrix(Eigen::kroneckerProduct(a.sp, b.sm)) + Matrix(Eigen::kroneckerProduct(a.sm, b.sp))));
        h += embed(dims, i - 1, 2, bond);
    }
    if (dims_out)
        *dims_out = dims;
    return h;
}

/// Total 2Sz of each full-space basis state.
inline std::vector<int> twice_sz(const std::vector<int> &dims) {
    long total = 1;
    for (int d : dims)
        total *= d;
    std::vector<int> out(static_cast<std::size_t>(total), 0);
    for (long code = 0; code < total; ++code) {
        long rest = code;
        int sum = 0;
        for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
            const int d = dims[static_cast<std::size_t>(i)];
            const int k = static_cast<int>(rest % d);
            rest /= d;
            sum += (d - 1) - 2 * k;
        }
        out[static_cast<std::size_t>(code)] = sum;
    }
    return out;
}

struct DenseGround {
    double energy;
    double gap;
    Vector psi; ///< full-space amplitudes
    std::vector<int> dims;
};

/// Lowest state of the requested 2Sz sector, by dense diagonalization of the restricted matrix.
inline DenseGround dense_ground(const spinchain::ChainSpec &spec) {
    std::vector<int> dims;
    const Matrix h = full_hamiltonian(spec, &dims);
    const auto sz = twice_sz(dims);
    std::vector<int> idx;
    for (std::size_t i = 0; i < sz.size(); ++i)
        if (sz[i] == spec.target_twice_sz)
            idx.push_back(static_cast<int>(i));
    const Matrix hs = h(idx, idx);
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(hs);
    Vector psi = Vector::Zero(h.rows());
    for (std::size_t k = 0; k < idx.size(); ++k)
        psi[idx[k]] = eig.eigenvectors()(static_cast<Eigen::Index>(k), 0);
    const double gap = idx.size() > 1 ? eig.eigenvalues()[1] - eig.eigenvalues()[0] : 0.0;
    return {eig.eigenvalues()[0], gap, psi, dims};
}

/// S_L for L = 1..N-1 from singular values of the reshaped amplitude matrix.
inline std::vector<double> svd_entropies(const DenseGround &g) {
    std::vector<double> s;
    long left = 1;
    const long total = g.psi.size();
    for (std::size_t l = 0; l + 1 < g.dims.size(); ++l) {
        left *= g.dims[l];
        const long right = total / left;
        // Row-major reshape: code = left_index * right + right_index.
        Matrix m(left, right);
        for (long c = 0; c < total; ++c)
            m(c / right, c % right) = g.psi[c];
        const Eigen::BDCSVD<Matrix> svd(m);
        double e = 0.0;
        for (Eigen::Index k = 0; k < svd.singularValues().size(); ++k) {
            const double w = svd.singularValues()[k] * svd.singularValues()[k];
            if (w > 1e-14)
                e -= w * std::log2(w);
        }
        s.push_back(e);
    }
    return s;
}

} // namespace oracle
