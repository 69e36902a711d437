#pragma once

#include "spinchain/entropy.hpp"
#include "spinchain/error.hpp"
#include "spinchain/lanczos.hpp"
#include "spinchain/model.hpp"
#include "spinchain/spin_ops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinchain {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Renormalized block of contiguous sites.
///
/// The basis is grouped by total Sz: `sz_labels` (2*Sz of each state) is non-increasing, so
/// every Sz sector is a contiguous index range. The edge operators act on the site that touches
/// the rest of the chain.
struct Block {
    int length = 0;
    Matrix h;
    Matrix edge_sz;
    Matrix edge_sp;
    Matrix edge_sm;
    std::vector<int> sz_labels;

    // Enlarged blocks: product index (parent * site_dim + s) of each sorted state.
    std::vector<int> parent_index;
    int site_dim = 0;
    // Truncated blocks: kept states as columns in the sorted basis of the enlarged parent.
    Matrix transform;

    Eigen::Index dim() const { return h.rows(); }
};

struct Sector {
    int twice_sz;
    Eigen::Index offset;
    Eigen::Index size;
};

inline std::vector<Sector> sectors_of(const std::vector<int> &labels) {
    std::vector<Sector> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (out.empty() || out.back().twice_sz != labels[i])
            out.push_back({labels[i], static_cast<Eigen::Index>(i), 0});
        ++out.back().size;
    }
    return out;
}

/// One bare site as a block.
inline Block site_block(const SiteOperators &site) {
    Block b;
    b.length = 1;
    b.h = Matrix::Zero(site.dim, site.dim);
    b.edge_sz = site.sz;
    b.edge_sp = site.sp;
    b.edge_sm = site.sm;
    for (int k = 0; k < site.dim; ++k)
        b.sz_labels.push_back(site.twice_m(k));
    return b;
}

/// Block (x) site with the bond between the block edge and the new site.
inline Block enlarge_block(const Block &b, const SiteOperators &site, double coupling) {
    const Eigen::Index d = site.dim;
    const Eigen::Index n = b.dim() * d;
    const Matrix id_site = Matrix::Identity(d, d);
    const Matrix id_block = Matrix::Identity(b.dim(), b.dim());

    Matrix h = Eigen::kroneckerProduct(b.h, id_site);
    if (coupling != 0.0) {
        h += coupling * Matrix(Eigen::kroneckerProduct(b.edge_sz, site.sz));
        h += (0.5 * coupling) * Matrix(Eigen::kroneckerProduct(b.edge_sp, site.sm));
        h += (0.5 * coupling) * Matrix(Eigen::kroneckerProduct(b.edge_sm, site.sp));
    }

    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < b.dim(); ++i)
        for (Eigen::Index s = 0; s < d; ++s)
            labels[static_cast<std::size_t>(i * d + s)] =
                b.sz_labels[static_cast<std::size_t>(i)] + site.twice_m(static_cast<int>(s));

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return labels[static_cast<std::size_t>(x)] > labels[static_cast<std::size_t>(y)];
    });

    Block out;
    out.length = b.length + 1;
    out.h = h(order, order);
    out.edge_sz = Matrix(Eigen::kroneckerProduct(id_block, site.sz))(order, order);
    out.edge_sp = Matrix(Eigen::kroneckerProduct(id_block, site.sp))(order, order);
    out.edge_sm = Matrix(Eigen::kroneckerProduct(id_block, site.sm))(order, order);
    out.sz_labels.reserve(order.size());
    for (const int o : order)
        out.sz_labels.push_back(labels[static_cast<std::size_t>(o)]);
    out.parent_index = std::move(order);
    out.site_dim = site.dim;
    return out;
}

enum class Side { system, environment };

struct Truncation {
    Matrix transform;             ///< columns: kept density-matrix eigenvectors
    std::vector<double> spectrum; ///< all density-matrix eigenvalues, descending
    double truncation_error = 0.0;
    std::vector<int> kept_labels; ///< 2Sz of each kept state (empty when no labels were given)
};

/// Density-matrix truncation of psi (rows: system states, columns: environment states).
///
/// With `labels` for the truncated side, rho is diagonalized sector by sector and the kept
/// states come out grouped by Sz; without labels rho is diagonalized as a whole.
inline Truncation truncate(const Matrix &psi, Side side, int m, std::span<const int> labels = {}) {
    const Matrix rho = side == Side::system ? Matrix(psi * psi.transpose()) : Matrix(psi.transpose() * psi);
    const Eigen::Index dim = rho.rows();

    struct Candidate {
        double weight;
        int label;
        Eigen::Index sector_offset;
        Eigen::Index sector_size;
        Vector vec;
    };
    std::vector<Candidate> cand;
    cand.reserve(static_cast<std::size_t>(dim));
    auto diagonalize = [&](Eigen::Index off, Eigen::Index size, int label) {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(rho.block(off, off, size, size));
        for (Eigen::Index k = size - 1; k >= 0; --k)
            cand.push_back({eig.eigenvalues()[k], label, off, size, eig.eigenvectors().col(k)});
    };
    if (labels.empty()) {
        diagonalize(0, dim, 0);
    } else {
        if (static_cast<Eigen::Index>(labels.size()) != dim)
            throw std::invalid_argument("truncate: label count does not match density-matrix dimension");
        for (const auto &sec : sectors_of(std::vector<int>(labels.begin(), labels.end())))
            diagonalize(sec.offset, sec.size, sec.twice_sz);
    }

    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cand[a].weight > cand[b].weight; });

    Truncation t;
    t.spectrum.reserve(order.size());
    for (const auto i : order)
        t.spectrum.push_back(cand[i].weight);

    const auto keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(m, 1)), order.size());
    std::vector<std::size_t> kept(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep));
    // Regroup kept states by sector (descending 2Sz); weight order is preserved inside a sector.
    std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) { return cand[a].label > cand[b].label; });

    t.transform = Matrix::Zero(dim, static_cast<Eigen::Index>(keep));
    double kept_weight = 0.0;
    for (std::size_t c = 0; c < kept.size(); ++c) {
        const auto &k = cand[kept[c]];
        t.transform.col(static_cast<Eigen::Index>(c)).segment(k.sector_offset, k.sector_size) = k.vec;
        kept_weight += k.weight;
        if (!labels.empty())
            t.kept_labels.push_back(k.label);
    }
    t.truncation_error = std::max(0.0, 1.0 - kept_weight);
    return t;
}

/// Project an enlarged block onto the kept states of a truncation.
inline Block rotate(const Block &enlarged, const Truncation &t) {
    const Matrix &u = t.transform;
    Block b;
    b.length = enlarged.length;
    b.h = u.transpose() * enlarged.h * u;
    b.h = 0.5 * (b.h + b.h.transpose()).eval();
    b.edge_sz = u.transpose() * enlarged.edge_sz * u;
    b.edge_sp = u.transpose() * enlarged.edge_sp * u;
    b.edge_sm = b.edge_sp.transpose();
    b.sz_labels = t.kept_labels;
    b.transform = u;
    return b;
}

/// H_sys (x) 1 + 1 (x) H_env + J S_sys.S_env restricted to one total-Sz sector.
///
/// Vectors are packed sector pair by sector pair; pair (i, j) stores the dense
/// sys-sector-i x env-sector-j slice of psi in column-major order.
class Superblock {
  public:
    Superblock(const Block &sys, const Block &env, double coupling, int target_twice_sz)
        : sys_dim_(sys.dim()), env_dim_(env.dim()), coupling_(coupling) {
        const auto ss = sectors_of(sys.sz_labels);
        const auto es = sectors_of(env.sz_labels);
        auto find_env = [&](int label) -> int {
            for (std::size_t j = 0; j < es.size(); ++j)
                if (es[j].twice_sz == label)
                    return static_cast<int>(j);
            return -1;
        };
        for (const auto &s : ss) {
            const int j = find_env(target_twice_sz - s.twice_sz);
            if (j < 0)
                continue;
            const auto &e = es[static_cast<std::size_t>(j)];
            Pair p;
            p.sys = s;
            p.env = e;
            p.offset = size_;
            p.h_sys = sys.h.block(s.offset, s.offset, s.size, s.size);
            p.h_env_t = env.h.block(e.offset, e.offset, e.size, e.size).transpose();
            p.sz_sys = sys.edge_sz.block(s.offset, s.offset, s.size, s.size).sparseView();
            p.sz_env_t = SparseMatrix(env.edge_sz.block(e.offset, e.offset, e.size, e.size).transpose().sparseView());
            size_ += s.size * e.size;
            pairs_.push_back(std::move(p));
        }
        if (pairs_.empty())
            throw ConfigError("superblock has no states with 2Sz=" + std::to_string(target_twice_sz));
        auto pair_with_sys_label = [&](int label) -> int {
            for (std::size_t q = 0; q < pairs_.size(); ++q)
                if (pairs_[q].sys.twice_sz == label)
                    return static_cast<int>(q);
            return -1;
        };
        for (auto &p : pairs_) {
            // S+_sys S-_env: source pair has sys label - 2 and env label + 2.
            if (const int q = pair_with_sys_label(p.sys.twice_sz - 2); q >= 0) {
                const auto &src = pairs_[static_cast<std::size_t>(q)];
                p.raise = q;
                p.sp_sys = sys.edge_sp.block(p.sys.offset, src.sys.offset, p.sys.size, src.sys.size).sparseView();
                p.sm_env_t = SparseMatrix(env.edge_sm.block(p.env.offset, src.env.offset, p.env.size, src.env.size).transpose().sparseView());
            }
            if (const int q = pair_with_sys_label(p.sys.twice_sz + 2); q >= 0) {
                const auto &src = pairs_[static_cast<std::size_t>(q)];
                p.lower = q;
                p.sm_sys = sys.edge_sm.block(p.sys.offset, src.sys.offset, p.sys.size, src.sys.size).sparseView();
                p.sp_env_t = SparseMatrix(env.edge_sp.block(p.env.offset, src.env.offset, p.env.size, src.env.size).transpose().sparseView());
            }
        }
    }

    Eigen::Index size() const { return size_; }

    void apply(const Vector &x, Vector &y) const {
        y.resize(size_);
        for (const auto &p : pairs_) {
            const auto xs = slice(x, p);
            auto ys = slice(y, p);
            ys.noalias() = p.h_sys * xs;
            ys.noalias() += xs * p.h_env_t;
            if (coupling_ == 0.0)
                continue;
            tmp_.noalias() = p.sz_sys * xs;
            ys.noalias() += coupling_ * (tmp_ * p.sz_env_t);
            if (p.raise >= 0) {
                tmp_.noalias() = p.sp_sys * slice(x, pairs_[static_cast<std::size_t>(p.raise)]);
                ys.noalias() += (0.5 * coupling_) * (tmp_ * p.sm_env_t);
            }
            if (p.lower >= 0) {
                tmp_.noalias() = p.sm_sys * slice(x, pairs_[static_cast<std::size_t>(p.lower)]);
                ys.noalias() += (0.5 * coupling_) * (tmp_ * p.sp_env_t);
            }
        }
    }

    /// Packed vector -> dense sys.dim x env.dim matrix (zero outside the sector).
    Matrix unpack(const Vector &x) const {
        Matrix psi = Matrix::Zero(sys_dim_, env_dim_);
        for (const auto &p : pairs_)
            psi.block(p.sys.offset, p.env.offset, p.sys.size, p.env.size) = slice(x, p);
        return psi;
    }

    /// Dense matrix -> packed vector (entries outside the sector are dropped).
    Vector pack(const Matrix &psi) const {
        Vector x(size_);
        for (const auto &p : pairs_)
            slice(x, p) = psi.block(p.sys.offset, p.env.offset, p.sys.size, p.env.size);
        return x;
    }

  private:
    struct Pair {
        Sector sys{};
        Sector env{};
        Eigen::Index offset = 0;
        Matrix h_sys;
        Matrix h_env_t;
        SparseMatrix sz_sys, sz_env_t;
        int raise = -1;
        SparseMatrix sp_sys, sm_env_t;
        int lower = -1;
        SparseMatrix sm_sys, sp_env_t;
    };

    static Eigen::Map<const Matrix> slice(const Vector &x, const Pair &p) {
        return {x.data() + p.offset, p.sys.size, p.env.size};
    }
    static Eigen::Map<Matrix> slice(Vector &x, const Pair &p) { return {x.data() + p.offset, p.sys.size, p.env.size}; }

    Eigen::Index sys_dim_;
    Eigen::Index env_dim_;
    double coupling_;
    Eigen::Index size_ = 0;
    std::vector<Pair> pairs_;
    mutable Matrix tmp_;
};

struct SweepConfig {
    int m = 128;
    int max_sweeps = 12;
    double energy_tol = 1e-9;
    double lanczos_tol = 1e-9;
    int lanczos_max_iter = 400;
    std::uint64_t seed = 20240601;

    void validate() const {
        if (m < 2)
            throw ConfigError("m must be >= 2");
        if (max_sweeps < 1)
            throw ConfigError("max_sweeps must be >= 1");
        if (!(energy_tol > 0.0) || !(lanczos_tol > 0.0))
            throw ConfigError("tolerances must be positive");
        if (lanczos_max_iter < 1)
            throw ConfigError("lanczos_max_iter must be >= 1");
    }
};

struct SuperblockSolution {
    double energy = 0.0;
    Matrix psi; ///< sys.dim x env.dim, unit Frobenius norm
    double residual = 0.0;
    int matvecs = 0;
    bool converged = false;
};

inline SuperblockSolution superblock_ground_state(const Block &sys, const Block &env, double coupling, int target_twice_sz,
                                                  const SweepConfig &cfg, const Matrix *guess = nullptr) {
    const Superblock sb(sys, env, coupling, target_twice_sz);
    Vector start = guess ? sb.pack(*guess) : Vector();
    if (!guess || start.norm() < 1e-8)
        start = random_vector(sb.size(), cfg.seed ^ (static_cast<std::uint64_t>(sys.dim()) << 20) ^ static_cast<std::uint64_t>(env.dim()));
    auto apply = [&](const Vector &x, Vector &y) { sb.apply(x, y); };
    const auto r = lowest_eigenpair(apply, std::move(start), LanczosOptions{cfg.lanczos_tol, cfg.lanczos_max_iter, 40});
    return {r.value, sb.unpack(r.vector), r.residual, r.matvecs, r.converged};
}

/// Density-matrix spectrum of the bare block inside an enlarged block (block (x) site),
/// tracing out the free site together with the other side. `psi` rows index `enlarged`.
inline std::vector<double> bare_block_spectrum(const Block &enlarged, const Matrix &psi) {
    const Eigen::Index d = enlarged.site_dim;
    const Eigen::Index n = enlarged.dim() / d;
    Matrix w = Matrix::Zero(n, d * psi.cols());
    for (Eigen::Index row = 0; row < enlarged.dim(); ++row) {
        const int prod = enlarged.parent_index[static_cast<std::size_t>(row)];
        const Eigen::Index a = prod / d;
        const Eigen::Index s = prod % d;
        w.block(a, s * psi.cols(), 1, psi.cols()) = psi.row(row);
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(w * w.transpose()), Eigen::EigenvaluesOnly);
    std::vector<double> spec(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
    std::sort(spec.rbegin(), spec.rend());
    return spec;
}

/// Map the ground state at one position onto the next, for use as a Lanczos start vector.
///
/// `psi` rows index the growing side's enlarged block, columns the shrinking side's enlarged
/// block `shrink_enlarged`. `grow` is the truncation just applied to the growing side;
/// `shrink_transform` is the transform that produced the shrinking side's bare block;
/// `grow_next` is the growing side's enlarged block at the next position.
inline Matrix transfer_wavefunction(const Matrix &psi, const Truncation &grow, const Block &shrink_enlarged,
                                    const Matrix &shrink_transform, const Block &grow_next) {
    const Matrix phi = grow.transform.transpose() * psi; // kept x shrink_enlarged.dim
    const Eigen::Index d = shrink_enlarged.site_dim;
    const Eigen::Index kept = phi.rows();
    const Eigen::Index bare = shrink_transform.cols();

    std::vector<int> inverse(grow_next.parent_index.size());
    for (std::size_t i = 0; i < inverse.size(); ++i)
        inverse[static_cast<std::size_t>(grow_next.parent_index[i])] = static_cast<int>(i);

    Matrix out = Matrix::Zero(grow_next.dim(), shrink_transform.rows());
    Matrix gathered(kept, bare);
    for (Eigen::Index s = 0; s < d; ++s) {
        gathered.setZero();
        for (Eigen::Index col = 0; col < shrink_enlarged.dim(); ++col) {
            const int prod = shrink_enlarged.parent_index[static_cast<std::size_t>(col)];
            if (prod % d == s)
                gathered.col(prod / d) = phi.col(col);
        }
        const Matrix rows = gathered * shrink_transform.transpose();
        for (Eigen::Index a = 0; a < kept; ++a)
            out.row(inverse[static_cast<std::size_t>(a * d + s)]) = rows.row(a);
    }
    return out;
}

struct EntropyProfile {
    ChainSpec spec;
    int m = 0;
    std::uint64_t seed = 0;
    std::vector<double> s;                ///< S_L in bits, index L-1, L = 1..N-1
    std::vector<double> truncation_error; ///< discarded weight at each cut, index L-1
    double energy = 0.0;
    double max_truncation_error = 0.0;
    int sweeps_used = 0;
    bool converged = false;
    bool degeneracy_flag = false;
    double excitation_gap = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> sweep_energies;

    double entropy_at(int l) const { return s.at(static_cast<std::size_t>(l - 1)); }
};

struct SweepReport {
    int sweep;
    double energy;
    double max_truncation_error;
};

namespace detail {

inline int warmup_target(const ChainSpec &spec, int superblock_sites) {
    // Largest reachable 2|Sz| for the partial chain: two boundary sites plus spin-1/2 bulk.
    const int reach = 2 * spec.impurity_spin.twice() + (superblock_sites - 2);
    const int t = spec.target_twice_sz;
    return std::clamp(t, -reach, reach);
}

} // namespace detail

/// Two-site finite-system DMRG: infinite-system warmup to N sites, then full sweeps until the
/// sweep energy changes by less than `energy_tol`. Entropies of every cut come from the final sweep.
inline EntropyProfile run_dmrg(const ChainSpec &spec, const SweepConfig &cfg,
                               const std::function<void(const SweepReport &)> &observer = {}) {
    spec.validate();
    cfg.validate();
    const int n = spec.n;
    std::vector<SiteOperators> site(static_cast<std::size_t>(n + 1));
    for (int i = 1; i <= n; ++i)
        site[static_cast<std::size_t>(i)] = make_site(site_spin(spec, i));
    auto site_at = [&](int i) -> const SiteOperators & { return site[static_cast<std::size_t>(i)]; };

    std::vector<Block> left(static_cast<std::size_t>(n));
    std::vector<Block> right(static_cast<std::size_t>(n));
    left[1] = site_block(site_at(1));
    right[1] = site_block(site_at(n));

    EntropyProfile prof;
    prof.spec = spec;
    prof.m = cfg.m;
    prof.seed = cfg.seed;

    // Infinite-system warmup: both blocks grow by one site per step.
    Matrix psi;
    for (int l = 1; l < n / 2; ++l) {
        const Block sys = enlarge_block(left[static_cast<std::size_t>(l)], site_at(l + 1), bond_coupling(spec, l));
        const Block env = enlarge_block(right[static_cast<std::size_t>(l)], site_at(n - l), bond_coupling(spec, n - l));
        const auto sol = superblock_ground_state(sys, env, bond_coupling(spec, l + 1), detail::warmup_target(spec, 2 * l + 2), cfg);
        psi = sol.psi;
        if (l + 1 < n / 2) {
            left[static_cast<std::size_t>(l + 1)] = rotate(sys, truncate(psi, Side::system, cfg.m, sys.sz_labels));
            right[static_cast<std::size_t>(l + 1)] = rotate(env, truncate(psi, Side::environment, cfg.m, env.sz_labels));
        }
    }

    prof.s.assign(static_cast<std::size_t>(n - 1), 0.0);
    prof.truncation_error.assign(static_cast<std::size_t>(n - 1), 0.0);
    auto record = [&](int cut, const std::vector<double> &spectrum, double terr) {
        prof.s[static_cast<std::size_t>(cut - 1)] = entropy_from_spectrum(spectrum);
        prof.truncation_error[static_cast<std::size_t>(cut - 1)] = terr;
    };

    const int center = n / 2 - 1;
    int l = center;
    bool moving_right = true;
    double previous = std::numeric_limits<double>::infinity();
    Matrix guess = psi;
    bool have_guess = true;

    for (int sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
        double sweep_energy = std::numeric_limits<double>::infinity();
        double sweep_terr = 0.0;
        do {
            const int r = n - l - 2;
            const Block sys = enlarge_block(left[static_cast<std::size_t>(l)], site_at(l + 1), bond_coupling(spec, l));
            const Block env = enlarge_block(right[static_cast<std::size_t>(r)], site_at(l + 2), bond_coupling(spec, l + 2));
            const auto sol = superblock_ground_state(sys, env, bond_coupling(spec, l + 1), spec.target_twice_sz, cfg,
                                                     have_guess ? &guess : nullptr);
            psi = sol.psi;
            sweep_energy = std::min(sweep_energy, sol.energy);

            if (l == 1)
                record(1, bare_block_spectrum(sys, psi), 0.0);
            if (l == n - 3)
                record(n - 1, bare_block_spectrum(env, Matrix(psi.transpose())), 0.0);

            if (n == 4) {
                // Single position: nothing to sweep, both cuts around it are exact.
                const auto t = truncate(psi, Side::system, cfg.m, sys.sz_labels);
                record(2, t.spectrum, t.truncation_error);
                guess = psi;
                break;
            }

            const bool grow_left = moving_right ? (l < n - 3) : (l == 1);
            if (grow_left) {
                const auto t = truncate(psi, Side::system, cfg.m, sys.sz_labels);
                record(l + 1, t.spectrum, t.truncation_error);
                sweep_terr = std::max(sweep_terr, t.truncation_error);
                left[static_cast<std::size_t>(l + 1)] = rotate(sys, t);
                const Block next_sys =
                    enlarge_block(left[static_cast<std::size_t>(l + 1)], site_at(l + 2), bond_coupling(spec, l + 1));
                guess = transfer_wavefunction(psi, t, env, right[static_cast<std::size_t>(r)].transform, next_sys);
                moving_right = true;
                ++l;
            } else {
                const auto t = truncate(psi, Side::environment, cfg.m, env.sz_labels);
                record(l + 1, t.spectrum, t.truncation_error);
                sweep_terr = std::max(sweep_terr, t.truncation_error);
                right[static_cast<std::size_t>(r + 1)] = rotate(env, t);
                const Block next_env =
                    enlarge_block(right[static_cast<std::size_t>(r + 1)], site_at(l + 1), bond_coupling(spec, l + 1));
                guess = transfer_wavefunction(Matrix(psi.transpose()), t, sys, left[static_cast<std::size_t>(l)].transform, next_env)
                            .transpose();
                moving_right = false;
                --l;
            }
            have_guess = true;
        } while (!(l == center && moving_right));

        prof.sweep_energies.push_back(sweep_energy);
        prof.sweeps_used = sweep;
        prof.energy = sweep_energy;
        prof.max_truncation_error = sweep_terr;
        if (observer)
            observer({sweep, sweep_energy, sweep_terr});
        if (std::abs(sweep_energy - previous) < cfg.energy_tol) {
            prof.converged = true;
            break;
        }
        previous = sweep_energy;
    }

    // Degeneracy probe at the center: lowest state orthogonal to the converged one.
    {
        const int r = n - l - 2;
        const Block sys = enlarge_block(left[static_cast<std::size_t>(l)], site_at(l + 1), bond_coupling(spec, l));
        const Block env = enlarge_block(right[static_cast<std::size_t>(r)], site_at(l + 2), bond_coupling(spec, l + 2));
        const Superblock sb(sys, env, bond_coupling(spec, l + 1), spec.target_twice_sz);
        auto apply = [&](const Vector &x, Vector &y) { sb.apply(x, y); };
        const LanczosOptions lopt{cfg.lanczos_tol, cfg.lanczos_max_iter, 40};
        const auto g = lowest_eigenpair(apply, sb.pack(guess), lopt);
        if (sb.size() > 1) {
            const std::vector<Vector> found{g.vector};
            const auto ex = lowest_eigenpair(apply, random_vector(sb.size(), cfg.seed + 1), lopt, found);
            prof.excitation_gap = ex.value - g.value;
            prof.degeneracy_flag = prof.excitation_gap < 1e-10;
        }
    }
    return prof;
}

} // namespace spinchain
