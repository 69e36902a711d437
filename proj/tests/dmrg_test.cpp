#include "spinchain/dmrg.hpp"
#include "spinchain/exact_diag.hpp"

#include "support/dense_oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace spinchain;

namespace {

ChainSpec chain(int n, double alpha, Spin imp = Spin::half()) {
    ChainSpec s;
    s.n = n;
    s.alpha = alpha;
    s.impurity_spin = imp;
    return s;
}

SweepConfig exact_config(int m) {
    SweepConfig c;
    c.m = m;
    c.lanczos_tol = 1e-12;
    c.energy_tol = 1e-12;
    return c;
}

std::vector<double> spectrum(const Matrix &h) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    return {eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size()};
}

void expect_block_invariants(const Block &b) {
    EXPECT_LT((b.h - b.h.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((b.edge_sm - b.edge_sp.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    ASSERT_EQ(static_cast<Eigen::Index>(b.sz_labels.size()), b.dim());
    for (std::size_t i = 1; i < b.sz_labels.size(); ++i)
        EXPECT_GE(b.sz_labels[i - 1], b.sz_labels[i]);
}

/// Dense superblock Hamiltonian from Kronecker products, sys index slow.
Matrix dense_superblock(const Block &sys, const Block &env, double j) {
    const Matrix is = Matrix::Identity(sys.dim(), sys.dim());
    const Matrix ie = Matrix::Identity(env.dim(), env.dim());
    return Matrix(Eigen::kroneckerProduct(sys.h, ie)) + Matrix(Eigen::kroneckerProduct(is, env.h)) +
           j * (Matrix(Eigen::kroneckerProduct(sys.edge_sz, env.edge_sz)) +
                0.5 * (Matrix(Eigen::kroneckerProduct(sys.edge_sp, env.edge_sm)) +
                       Matrix(Eigen::kroneckerProduct(sys.edge_sm, env.edge_sp))));
}

} // namespace

TEST(EnlargeBlock, OneBondSpectrum) {
    const auto half = make_site(Spin::half());
    const auto b = enlarge_block(site_block(half), half, 1.0);
    EXPECT_EQ(b.dim(), 4);
    EXPECT_EQ(b.length, 2);
    const auto ev = spectrum(b.h);
    EXPECT_NEAR(ev[0], -0.75, 1e-14);
    for (int k = 1; k < 4; ++k)
        EXPECT_NEAR(ev[static_cast<std::size_t>(k)], 0.25, 1e-14);
    expect_block_invariants(b);
}

TEST(EnlargeBlock, ZeroCouplingKeepsBlockHamiltonian) {
    const auto half = make_site(Spin::half());
    const auto b2 = enlarge_block(site_block(half), half, 1.0);
    const auto b3 = enlarge_block(b2, half, 0.0);
    // Spectrum of h (x) 1: each eigenvalue of b2.h twice.
    const auto ev = spectrum(b3.h);
    const std::vector<double> expected{-0.75, -0.75, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25};
    for (std::size_t k = 0; k < ev.size(); ++k)
        EXPECT_NEAR(ev[k], expected[k], 1e-14);
}

TEST(EnlargeBlock, SpinOneSeedWithImpurityBond) {
    const auto b = enlarge_block(site_block(make_site(Spin::one())), make_site(Spin::half()), 0.5);
    EXPECT_EQ(b.dim(), 6);
    const auto ev = spectrum(b.h);
    const std::vector<double> expected{-0.5, -0.5, 0.25, 0.25, 0.25, 0.25};
    for (std::size_t k = 0; k < ev.size(); ++k)
        EXPECT_NEAR(ev[k], expected[k], 1e-14);
    expect_block_invariants(b);
    // Labels are the sums of the parent labels.
    for (Eigen::Index i = 0; i < b.dim(); ++i) {
        const int prod = b.parent_index[static_cast<std::size_t>(i)];
        EXPECT_EQ(b.sz_labels[static_cast<std::size_t>(i)], (2 - 2 * (prod / 2)) + (1 - 2 * (prod % 2)));
    }
}

TEST(Superblock, TwoSiteSinglet) {
    const auto half = make_site(Spin::half());
    const auto sol = superblock_ground_state(site_block(half), site_block(half), 1.0, 0, exact_config(8));
    EXPECT_NEAR(sol.energy, -0.75, 1e-12);
    ASSERT_EQ(sol.psi.rows(), 2);
    EXPECT_NEAR(std::abs(sol.psi(0, 1)), 1.0 / std::sqrt(2.0), 1e-10);
    EXPECT_NEAR(sol.psi(0, 1), -sol.psi(1, 0), 1e-10);
    EXPECT_NEAR(sol.psi(0, 0), 0.0, 1e-12);
}

TEST(Superblock, FourSitesMatchExactDiagonalization) {
    for (const auto imp : {Spin::half(), Spin::one()})
        for (const double a : {0.3, 1.0}) {
            const auto spec = chain(4, a, imp);
            const auto s1 = make_site(site_spin(spec, 1));
            const auto s2 = make_site(site_spin(spec, 2));
            const auto sys = enlarge_block(site_block(s1), s2, bond_coupling(spec, 1));
            const auto env = enlarge_block(site_block(make_site(site_spin(spec, 4))), make_site(site_spin(spec, 3)),
                                           bond_coupling(spec, 3));
            const auto sol = superblock_ground_state(sys, env, bond_coupling(spec, 2), 0, exact_config(16));
            EXPECT_NEAR(sol.energy, ground_state(spec).energy, 1e-9);
            EXPECT_NEAR(sol.psi.norm(), 1.0, 1e-12);
        }
}

TEST(Superblock, ZeroCouplingIsAdditive) {
    const auto half = make_site(Spin::half());
    const auto pair = enlarge_block(site_block(half), half, 1.0);
    const auto sol = superblock_ground_state(pair, pair, 0.0, 0, exact_config(8));
    EXPECT_NEAR(sol.energy, -1.5, 1e-12);
}

TEST(Superblock, ApplyMatchesDenseKroneckerOperator) {
    // Random truncated blocks from a real warmup step, checked sector by sector.
    const auto spec = chain(10, 0.4, Spin::one());
    auto b = site_block(make_site(site_spin(spec, 1)));
    for (int l = 1; l < 3; ++l)
        b = enlarge_block(b, make_site(site_spin(spec, l + 1)), bond_coupling(spec, l));
    auto env = enlarge_block(site_block(make_site(Spin::half())), make_site(Spin::half()), 1.0);
    const Matrix dense = dense_superblock(b, env, 0.7);
    for (const int target : {-2, 0, 2, 4}) {
        const Superblock sb(b, env, 0.7, target);
        const Vector x = random_vector(sb.size(), 42 + static_cast<std::uint64_t>(target + 10));
        Vector y;
        sb.apply(x, y);
        const Matrix psi = sb.unpack(x);
        Vector flat(psi.size());
        for (Eigen::Index i = 0; i < psi.rows(); ++i)
            for (Eigen::Index j = 0; j < psi.cols(); ++j)
                flat[i * psi.cols() + j] = psi(i, j);
        const Vector ref = dense * flat;
        Matrix ref_m(psi.rows(), psi.cols());
        for (Eigen::Index i = 0; i < psi.rows(); ++i)
            for (Eigen::Index j = 0; j < psi.cols(); ++j)
                ref_m(i, j) = ref[i * psi.cols() + j];
        EXPECT_LT((sb.unpack(y) - ref_m).cwiseAbs().maxCoeff(), 1e-12) << "target " << target;
        EXPECT_LT((sb.pack(ref_m) - y).norm(), 1e-12);
    }
}

TEST(Superblock, EmptySectorRejected) {
    const auto half = make_site(Spin::half());
    EXPECT_THROW(Superblock(site_block(half), site_block(half), 1.0, 4), ConfigError);
}

TEST(Truncate, SingletKeepsBothStates) {
    Matrix psi(2, 2);
    psi << 0, 1, -1, 0;
    psi /= std::sqrt(2.0);
    const auto t = truncate(psi, Side::system, 2);
    ASSERT_EQ(t.spectrum.size(), 2u);
    EXPECT_NEAR(t.spectrum[0], 0.5, 1e-15);
    EXPECT_NEAR(t.spectrum[1], 0.5, 1e-15);
    EXPECT_NEAR(t.truncation_error, 0.0, 1e-15);
    EXPECT_NEAR(entropy_from_spectrum(t.spectrum), 1.0, 1e-14);
}

TEST(Truncate, ProductStateIsExactWithOneState) {
    Vector a(3), b(4);
    a << 1, 2, 2;
    b << 0, 3, 4, 0;
    const Matrix psi = (a / 3.0) * (b / 5.0).transpose();
    for (const auto side : {Side::system, Side::environment}) {
        const auto t = truncate(psi, side, 1);
        EXPECT_NEAR(t.spectrum.front(), 1.0, 1e-14);
        EXPECT_LT(t.truncation_error, 1e-14);
        EXPECT_EQ(t.transform.cols(), 1);
    }
}

TEST(Truncate, FullRankHasNoError) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Vector v = random_vector(6 * 9, seed);
        Matrix psi = Eigen::Map<const Matrix>(v.data(), 6, 9);
        psi /= psi.norm();
        const auto t = truncate(psi, Side::system, 6);
        EXPECT_LT(t.truncation_error, 1e-12);
        double sum = 0.0;
        for (std::size_t k = 0; k < t.spectrum.size(); ++k) {
            sum += t.spectrum[k];
            if (k > 0) {
                EXPECT_GE(t.spectrum[k - 1], t.spectrum[k]);
            }
        }
        EXPECT_NEAR(sum, 1.0, 1e-10);
        // Environment side shares the nonzero spectrum.
        const auto te = truncate(psi, Side::environment, 9);
        for (std::size_t k = 0; k < 6; ++k)
            EXPECT_NEAR(te.spectrum[k], t.spectrum[k], 1e-12);
    }
}

TEST(EntropyFromSpectrum, ClosedForms) {
    EXPECT_NEAR(entropy_from_spectrum(std::vector<double>{0.5, 0.5}), 1.0, 1e-15);
    EXPECT_EQ(entropy_from_spectrum(std::vector<double>{1.0}), 0.0);
    EXPECT_NEAR(entropy_from_spectrum(std::vector<double>{0.9, 0.1}), 0.468995593589281, 1e-14);
    EXPECT_EQ(entropy_from_spectrum(std::vector<double>{1.0, 1e-16, -1e-15}), 0.0);
}

TEST(RunDmrg, EightSitesUntruncatedMatchesExact) {
    const auto spec = chain(8, 1.0);
    const auto prof = run_dmrg(spec, exact_config(64));
    const auto gs = ground_state(spec);
    const auto exact = entanglement_profile(gs);
    EXPECT_NEAR(prof.energy, gs.energy, 1e-9);
    ASSERT_EQ(prof.s.size(), 7u);
    for (std::size_t i = 0; i < exact.size(); ++i)
        EXPECT_NEAR(prof.s[i], exact[i], 1e-8) << "L=" << i + 1;
    EXPECT_TRUE(prof.converged);
    EXPECT_LT(prof.max_truncation_error, 1e-12);
    EXPECT_FALSE(prof.degeneracy_flag);
}

TEST(RunDmrg, FourSiteChain) {
    const auto spec = chain(4, 0.5, Spin::one());
    const auto prof = run_dmrg(spec, exact_config(16));
    EXPECT_NEAR(prof.energy, ground_state(spec).energy, 1e-10);
    const auto exact = entanglement_profile(ground_state(spec));
    for (std::size_t i = 0; i < exact.size(); ++i)
        EXPECT_NEAR(prof.s[i], exact[i], 1e-8);
}

TEST(RunDmrg, OracleEquivalenceSample) {
    for (const auto &[n, a, imp] : {std::tuple{6, 0.1, Spin::one()}, std::tuple{10, 2.0, Spin::half()},
                                    std::tuple{12, 0.5, Spin::one()}}) {
        const auto spec = chain(n, a, imp);
        const auto prof = run_dmrg(spec, exact_config(256));
        const auto gs = ground_state(spec);
        const auto exact = entanglement_profile(gs);
        EXPECT_NEAR(prof.energy, gs.energy, 1e-8);
        for (std::size_t i = 0; i < exact.size(); ++i)
            EXPECT_NEAR(prof.s[i], exact[i], 1e-7) << "n=" << n << " L=" << i + 1;
    }
}

TEST(RunDmrg, TruncatedRunInvariants) {
    const auto spec = chain(40, 0.5);
    SweepConfig cfg;
    cfg.m = 12;
    cfg.max_sweeps = 6;
    const auto prof = run_dmrg(spec, cfg);
    for (std::size_t k = 1; k < prof.sweep_energies.size(); ++k)
        EXPECT_LE(prof.sweep_energies[k], prof.sweep_energies[k - 1] + 1e-10) << "sweep " << k + 1;
    const double bound = std::log2(static_cast<double>(cfg.m)) + 1.0;
    for (int l = 1; l < spec.n; ++l) {
        EXPECT_GE(prof.entropy_at(l), -1e-10);
        EXPECT_LE(prof.entropy_at(l), bound);
        // Exact block dimension caps the entropy near the ends.
        EXPECT_LE(prof.entropy_at(l), std::min(l, spec.n - l) + 1e-10);
        EXPECT_NEAR(prof.entropy_at(l), prof.entropy_at(spec.n - l), 5e-3);
    }
    EXPECT_GT(prof.max_truncation_error, 0.0);
}

TEST(RunDmrg, DeterministicGivenSeed) {
    const auto spec = chain(20, 0.3, Spin::one());
    SweepConfig cfg;
    cfg.m = 16;
    cfg.max_sweeps = 3;
    const auto a = run_dmrg(spec, cfg);
    const auto b = run_dmrg(spec, cfg);
    EXPECT_EQ(a.s, b.s);
    EXPECT_EQ(a.energy, b.energy);
}

TEST(RunDmrg, RejectsInvalidInput) {
    EXPECT_THROW(run_dmrg(chain(7, 1.0), SweepConfig{}), ConfigError);
    SweepConfig bad;
    bad.m = 1;
    EXPECT_THROW(run_dmrg(chain(8, 1.0), bad), ConfigError);
}

TEST(RunDmrg, ObserverSeesEverySweep) {
    SweepConfig cfg;
    cfg.m = 8;
    cfg.max_sweeps = 3;
    cfg.energy_tol = 1e-30;
    int calls = 0;
    const auto prof = run_dmrg(chain(16, 1.0), cfg, [&](const SweepReport &r) {
        ++calls;
        EXPECT_EQ(r.sweep, calls);
    });
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(prof.sweeps_used, 3);
    EXPECT_FALSE(prof.converged);
}
