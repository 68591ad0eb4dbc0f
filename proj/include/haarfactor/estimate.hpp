#pragma once

#include <cstdint>
#include <optional>

#include "haarfactor/haar_operator.hpp"

namespace haarfactor {

// Deterministic splitmix64 generator; all randomized estimation is seeded.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    // Uniform in [0, 1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }
    // Uniform in [-1, 1].
    double symmetric() { return 2.0 * uniform() - 1.0; }
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return next() % n; }
    double gaussian();

private:
    std::uint64_t state_;
    std::optional<double> spare_;
};

struct NormBracket {
    double lower = 0.0;       // certified by the witness
    double upper = 0.0;       // heuristic/analytic upper bound
    bool converged = false;   // upper - lower <= tol within budget
    HaarVector witness;       // feasible point achieving `lower`
};

// Dual norm sup{ |<g,f>| : ||f|| <= 1 } by multi-start projected subgradient ascent.
// The lower bound is certified by the returned witness; the upper bound combines
// ascent stagnation with the exact conjugate-exponent square-function bound
// ||g||_* <= ||g||_{H^{p'}(H^{q'})}.
NormBracket dual_norm_estimate(const HaarVector& g, const Exponents& e, double tol, int budget,
                               std::uint64_t seed = 1);

// Operator norm sup{ ||Tf|| : ||f|| <= 1 } over the space at T's resolution restricted
// to the support relevant to T (touched rows/columns); same ascent scheme.
NormBracket operator_norm_estimate(const HaarOperator& t, const Exponents& e, double tol,
                                   int budget, std::uint64_t seed = 1);

// p = q = 2 exact spectral norm of the |Q|^{1/2}-weighted matrix (dense; small inputs).
double operator_norm_l2_exact(const HaarOperator& t);

}  // namespace haarfactor
