#pragma once

#include "spinchain/entropy.hpp"
#include "spinchain/error.hpp"
#include "spinchain/lanczos.hpp"
#include "spinchain/model.hpp"
#include "spinchain/spin_ops.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace spinchain {

/// Product configurations of a fixed-Sz sector.
///
/// A configuration is encoded in mixed radix over the site basis indices k_i (m_i = s_i - k_i),
/// site 1 most significant. Codes are strictly increasing, i.e. states are in lexicographic
/// order of (k_1, ..., k_N), which is descending lexicographic order of the m-values.
struct SectorBasis {
    ChainSpec spec;
    std::vector<SiteOperators> sites;
    std::vector<std::uint64_t> stride; ///< stride[i] = prod_{j>i} dim_j (0-based site i)
    std::vector<std::uint64_t> codes;

    std::size_t size() const { return codes.size(); }

    int digit(std::uint64_t code, int site0) const {
        const auto d = static_cast<std::uint64_t>(sites[static_cast<std::size_t>(site0)].dim);
        return static_cast<int>((code / stride[static_cast<std::size_t>(site0)]) % d);
    }

    std::vector<int> configuration(std::size_t idx) const {
        std::vector<int> k(sites.size());
        for (std::size_t i = 0; i < sites.size(); ++i)
            k[i] = digit(codes[idx], static_cast<int>(i));
        return k;
    }

    /// Position of a code, or size() if it is not in the sector.
    std::size_t find(std::uint64_t code) const {
        const auto it = std::lower_bound(codes.begin(), codes.end(), code);
        return (it != codes.end() && *it == code) ? static_cast<std::size_t>(it - codes.begin()) : size();
    }

    /// Dimension of the full product space of sites [first, last) (0-based).
    std::uint64_t product_dim(int first, int last) const {
        std::uint64_t d = 1;
        for (int i = first; i < last; ++i)
            d *= static_cast<std::uint64_t>(sites[static_cast<std::size_t>(i)].dim);
        return d;
    }
};

inline constexpr std::size_t kDefaultSectorCap = 20'000'000;

inline SectorBasis build_sector_basis(const ChainSpec &spec, std::size_t cap = kDefaultSectorCap) {
    if (spec.n < 2 || spec.n > 40)
        throw CapacityError("exact diagonalization supports 2..40 sites, got " + std::to_string(spec.n),
                            static_cast<std::size_t>(std::max(spec.n, 0)));
    SectorBasis b;
    b.spec = spec;
    const int n = spec.n;
    for (int i = 1; i <= n; ++i)
        b.sites.push_back(make_site(site_spin(spec, i)));
    b.stride.assign(static_cast<std::size_t>(n), 1);
    for (int i = n - 2; i >= 0; --i)
        b.stride[static_cast<std::size_t>(i)] =
            b.stride[static_cast<std::size_t>(i + 1)] * static_cast<std::uint64_t>(b.sites[static_cast<std::size_t>(i + 1)].dim);

    // ways[i][x]: number of ways sites i..n-1 reach 2Sz = x - offset.
    int max_tail = 0;
    for (const auto &s : b.sites)
        max_tail += s.spin.twice();
    const int offset = max_tail;
    const int width = 2 * max_tail + 1;
    std::vector<std::vector<double>> ways(static_cast<std::size_t>(n + 1), std::vector<double>(static_cast<std::size_t>(width), 0.0));
    ways[static_cast<std::size_t>(n)][static_cast<std::size_t>(offset)] = 1.0;
    for (int i = n - 1; i >= 0; --i) {
        const auto &site = b.sites[static_cast<std::size_t>(i)];
        for (int x = 0; x < width; ++x)
            for (int k = 0; k < site.dim; ++k) {
                const int y = x - site.twice_m(k);
                if (y >= 0 && y < width)
                    ways[static_cast<std::size_t>(i)][static_cast<std::size_t>(x)] += ways[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(y)];
            }
    }
    const int target = spec.target_twice_sz + offset;
    const double count = (target >= 0 && target < width) ? ways[0][static_cast<std::size_t>(target)] : 0.0;
    if (count > static_cast<double>(cap))
        throw CapacityError("sector dimension " + std::to_string(static_cast<std::size_t>(count)) +
                                " exceeds cap " + std::to_string(cap),
                            static_cast<std::size_t>(count));
    b.codes.reserve(static_cast<std::size_t>(count));

    // Depth-first in increasing k keeps codes sorted.
    auto recurse = [&](auto &&self, int i, int remaining, std::uint64_t code) -> void {
        if (i == n) {
            if (remaining == 0)
                b.codes.push_back(code);
            return;
        }
        const auto &site = b.sites[static_cast<std::size_t>(i)];
        for (int k = 0; k < site.dim; ++k) {
            const int rest = remaining - site.twice_m(k) + offset;
            if (rest < 0 || rest >= width || ways[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(rest)] == 0.0)
                continue;
            self(self, i + 1, remaining - site.twice_m(k), code + static_cast<std::uint64_t>(k) * b.stride[static_cast<std::size_t>(i)]);
        }
    };
    recurse(recurse, 0, spec.target_twice_sz, 0);
    return b;
}

/// Matrix-free H v on the sector, summing every bond with its bond_coupling weight.
inline Vector apply_hamiltonian(const ChainSpec &spec, const SectorBasis &basis, const Vector &v) {
    if (static_cast<std::size_t>(v.size()) != basis.size())
        throw std::invalid_argument("vector length " + std::to_string(v.size()) + " does not match sector dimension " +
                                    std::to_string(basis.size()));
    const int n = spec.n;
    std::vector<double> coupling(static_cast<std::size_t>(n - 1));
    for (int i = 1; i < n; ++i)
        coupling[static_cast<std::size_t>(i - 1)] = bond_coupling(spec, i);

    Vector out = Vector::Zero(v.size());
    std::vector<int> k(static_cast<std::size_t>(n));
    for (std::size_t idx = 0; idx < basis.size(); ++idx) {
        const double amp = v[static_cast<Eigen::Index>(idx)];
        if (amp == 0.0)
            continue;
        const std::uint64_t code = basis.codes[idx];
        for (int i = 0; i < n; ++i)
            k[static_cast<std::size_t>(i)] = basis.digit(code, i);
        double diag = 0.0;
        for (int i = 0; i + 1 < n; ++i) {
            const auto &a = basis.sites[static_cast<std::size_t>(i)];
            const auto &b = basis.sites[static_cast<std::size_t>(i + 1)];
            const int ka = k[static_cast<std::size_t>(i)];
            const int kb = k[static_cast<std::size_t>(i + 1)];
            const double jb = coupling[static_cast<std::size_t>(i)];
            diag += jb * a.sz(ka, ka) * b.sz(kb, kb);
            // S+_a S-_b: raise a (k -> k-1), lower b (k -> k+1).
            if (ka > 0 && kb + 1 < b.dim) {
                const std::uint64_t to = code - basis.stride[static_cast<std::size_t>(i)] + basis.stride[static_cast<std::size_t>(i + 1)];
                const std::size_t t = basis.find(to);
                out[static_cast<Eigen::Index>(t)] += 0.5 * jb * a.sp(ka - 1, ka) * b.sm(kb + 1, kb) * amp;
            }
            if (ka + 1 < a.dim && kb > 0) {
                const std::uint64_t to = code + basis.stride[static_cast<std::size_t>(i)] - basis.stride[static_cast<std::size_t>(i + 1)];
                const std::size_t t = basis.find(to);
                out[static_cast<Eigen::Index>(t)] += 0.5 * jb * a.sm(ka + 1, ka) * b.sp(kb - 1, kb) * amp;
            }
        }
        out[static_cast<Eigen::Index>(idx)] += diag * amp;
    }
    return out;
}

struct ExactOptions {
    std::uint64_t seed = 20240601;
    double tol = 1e-11;
    int max_iter = 5000;
    std::size_t cap = kDefaultSectorCap;
};

struct GroundState {
    SectorBasis basis;
    double energy = 0.0;
    Vector amplitudes;
    double residual = 0.0;
    double first_excited = 0.0; ///< lowest sector eigenvalue orthogonal to the ground state
    bool degenerate = false;    ///< first_excited - energy < 1e-10
};

inline GroundState ground_state(const ChainSpec &spec, const ExactOptions &opt = {}) {
    spec.validate(2);
    GroundState gs;
    gs.basis = build_sector_basis(spec, opt.cap);
    const auto dim = static_cast<Eigen::Index>(gs.basis.size());
    auto apply = [&](const Vector &x, Vector &y) { y = apply_hamiltonian(spec, gs.basis, x); };
    const LanczosOptions lopt{opt.tol, opt.max_iter, 80};
    auto r = lowest_eigenpair(apply, random_vector(dim, opt.seed), lopt);
    if (!r.converged)
        throw ConvergenceError("exact ground state did not converge, best residual " + std::to_string(r.residual), r.residual);
    gs.energy = r.value;
    gs.amplitudes = r.vector;
    gs.residual = r.residual;
    gs.first_excited = std::numeric_limits<double>::infinity();
    if (dim > 1) {
        const std::vector<Vector> found{r.vector};
        auto ex = lowest_eigenpair(apply, random_vector(dim, opt.seed + 1), lopt, found);
        gs.first_excited = ex.value;
    }
    gs.degenerate = gs.first_excited - gs.energy < 1e-10;
    return gs;
}

/// Ground-state amplitudes reshaped as psi(left config of sites 1..L, right config of sites L+1..N).
inline Matrix schmidt_matrix(const GroundState &gs, int l) {
    const auto &b = gs.basis;
    const int n = b.spec.n;
    if (l < 1 || l > n - 1)
        throw std::out_of_range("cut L=" + std::to_string(l) + " outside 1.." + std::to_string(n - 1));
    const std::uint64_t right = b.product_dim(l, n);
    const std::uint64_t left = b.product_dim(0, l);
    if (left * right > 100'000'000ULL)
        throw CapacityError("full product space too large for a dense Schmidt matrix", left * right);
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(right));
    for (std::size_t i = 0; i < b.size(); ++i)
        m(static_cast<Eigen::Index>(b.codes[i] / right), static_cast<Eigen::Index>(b.codes[i] % right)) =
            gs.amplitudes[static_cast<Eigen::Index>(i)];
    return m;
}

inline constexpr std::uint64_t kMaxDenseRhoDim = 4096;

/// rho_L = Tr_{L+1..N} |gs><gs| over the full product basis of sites 1..L.
inline Matrix reduced_density_matrix(const GroundState &gs, int l) {
    const int n = gs.basis.spec.n;
    if (l < 1 || l > n - 1)
        throw std::out_of_range("cut L=" + std::to_string(l) + " outside 1.." + std::to_string(n - 1));
    const std::uint64_t left = gs.basis.product_dim(0, l);
    if (left > kMaxDenseRhoDim)
        throw CapacityError("reduced density matrix dimension " + std::to_string(left) + " too large", left);
    const Matrix m = schmidt_matrix(gs, l);
    Matrix rho = m * m.transpose();
    return rho;
}

/// S_L for L = 1..N-1 (index L-1). Uses whichever side of the cut is smaller.
inline std::vector<double> entanglement_profile(const GroundState &gs) {
    const int n = gs.basis.spec.n;
    std::vector<double> s;
    s.reserve(static_cast<std::size_t>(n - 1));
    for (int l = 1; l < n; ++l) {
        const Matrix m = schmidt_matrix(gs, l);
        const Matrix gram = m.rows() <= m.cols() ? Matrix(m * m.transpose()) : Matrix(m.transpose() * m);
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
        const Vector &lam = eig.eigenvalues();
        s.push_back(entropy_from_spectrum(std::span<const double>(lam.data(), static_cast<std::size_t>(lam.size()))));
    }
    return s;
}

} // namespace spinchain
