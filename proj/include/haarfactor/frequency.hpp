#pragma once

#include <functional>
#include <vector>

#include "haarfactor/haar_vector.hpp"

namespace haarfactor {

// Budget-normalized data of the combinatorial selection lemma.
struct FrequencyContext {
    std::vector<HaarVector> x_list;  // functionals
    std::vector<HaarVector> y_list;  // functions
    Exponents e;
    DyadicInterval k0;  // base rectangle K0 × L0
    DyadicInterval l0;
    double tau = 0.0;       // > 0
    double rho = 0.0;       // in (0,1)
    int r = 0;              // scan starts at level offset r
    int level_cap = kMaxLevel;

    void validate() const;
    // Budget check Σ||x_j||_* <= |K0|^{1/p'}|L0|^{1/q'} and Σ||y_j|| <= |K0|^{1/p}|L0|^{1/q}:
    // rejects only when the certified lower bound already violates the budget; returns a
    // warning string otherwise when the upper bracket straddles.
    std::string check_budgets(double tol, int budget, std::uint64_t seed) const;
};

// f(K×L) = Σ_j |<x_j, h_{K×L}>| + |<h_{K×L}, y_j>|.
double frequency_weight(const FrequencyContext& ctx, const DyadicRectangle& rect);

struct LevelSelection {
    int k = 0;                      // selected level offset, in [r, floor(4/(ρ²τ²)) + r]
    RectangleCollection rects;      // the admissible rectangles at that level
    DyadicRational covered_measure; // exact pointset measure of the selection
    DyadicRational bound_a;         // the scan bound A = floor(4/(ρ²τ²)) + r (clamped to cap)
    std::string warning;            // nonempty when the budget bracket straddles
};

// Scans k = r, r+1, ... and returns the first level whose admissible rectangles
// {K×L0 : K ⊂ K0, |K| = 2^{-k}|K0|, f(K×L0) <= τ|K×L0|} cover measure
// >= (1-ρ)|K0×L0| (ties count as success). Throws CapError with the scan trace when the
// level cap is reached first.
LevelSelection select_level_x(const FrequencyContext& ctx);
LevelSelection select_level_y(const FrequencyContext& ctx);

// Engine entry point: the weight is supplied as a callable (aggregated sources), ρ is
// exact, and the scan runs over the y-axis below L0 with K0 fixed.
LevelSelection select_level_y_weighted(const std::function<double(const DyadicRectangle&)>& weight,
                                       const DyadicInterval& k0, const DyadicInterval& l0,
                                       double tau, const DyadicRational& rho, int r,
                                       int level_cap);

}  // namespace haarfactor
