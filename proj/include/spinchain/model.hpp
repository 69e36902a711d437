#pragma once

#include "spinchain/error.hpp"
#include "spinchain/spin_ops.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace spinchain {

/// Open Heisenberg chain with boundary impurities:
///   H = sum_{i=2}^{N-2} J S_i.S_{i+1} + alpha (S_1.S_2 + S_{N-1}.S_N)
/// Sites 1 and N carry `impurity_spin`; all other sites are spin-1/2.
struct ChainSpec {
    int n = 0;
    double j = 1.0;
    double alpha = 1.0;
    Spin impurity_spin = Spin::half();
    int target_twice_sz = 0; ///< 2 * total Sz of the targeted sector

    /// Largest attainable 2*|Sz| for this chain.
    int max_twice_sz() const { return (n - 2) + 2 * impurity_spin.twice(); }

    /// Small-chain oracles accept min_n = 2; the DMRG engine needs the default 4.
    void validate(int min_n = 4) const {
        if (n < min_n || n % 2 != 0)
            throw ConfigError("chain length must be even and >= " + std::to_string(min_n) + ", got " + std::to_string(n));
        if (!(j > 0.0) || !std::isfinite(j))
            throw ConfigError("bulk coupling j must be positive and finite");
        if (!(alpha > 0.0) || !std::isfinite(alpha))
            throw ConfigError("impurity coupling alpha must be positive and finite");
        if (std::abs(target_twice_sz) > max_twice_sz() || (target_twice_sz - max_twice_sz()) % 2 != 0)
            throw ConfigError("target Sz=" + std::to_string(target_twice_sz) + "/2 is not attainable");
    }

    /// Same chain without impurities (alpha = J, spin-1/2 ends).
    ChainSpec uniform_baseline() const {
        ChainSpec b = *this;
        b.alpha = j;
        b.impurity_spin = Spin::half();
        return b;
    }
};

/// Spin of site i (1-based).
inline Spin site_spin(const ChainSpec &spec, int i) {
    if (i < 1 || i > spec.n)
        throw std::out_of_range("site index " + std::to_string(i) + " outside 1.." + std::to_string(spec.n));
    return (i == 1 || i == spec.n) ? spec.impurity_spin : Spin::half();
}

/// Coupling of bond i, which joins sites i and i+1 (1-based).
inline double bond_coupling(const ChainSpec &spec, int i) {
    if (i < 1 || i > spec.n - 1)
        throw std::out_of_range("bond index " + std::to_string(i) + " outside 1.." + std::to_string(spec.n - 1));
    return (i == 1 || i == spec.n - 1) ? spec.alpha : spec.j;
}

} // namespace spinchain
