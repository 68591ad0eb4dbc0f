#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "haarfactor/engine.hpp"
#include "haarfactor/estimate.hpp"

namespace haarfactor {

enum class HChoice { T, IdMinusT };

// Factorization Id = P ∘ H ∘ E on the small space, with certified norm data.
struct FactorizationResult {
    HaarOperator E;  // small -> large, h_R ↦ (sign-corrected) b_R^{(ε)}
    HaarOperator P;  // large -> small
    HChoice h_choice = HChoice::T;
    NormBracket norm_E;
    NormBracket norm_P;
    double residual = 0.0;          // max_R ||h_R - P H E h_R||
    double condition = 0.0;         // condition estimate of (UTJ) in the b-coordinates
    double invertibility_ratio = 0.0;  // measured max off-diagonal row mass of (UTJ)
    DiagCertificate diag_certificate;  // from the engine run (or the supplied family)
    int m = 0, n = 0, big_N = 0;
};

struct FactorizationParams {
    int m = 1;
    int n = 1;
    double gamma_bound = 1.0;
    double eta = 0.5;
    Exponents e{2.0, 2.0};
    int nmax = 26;
    double tol = 1e-9;
    int budget = 400;
    std::uint64_t seed = 1;
};

// Thm 4.5: requires |<h_R, T h_R>| >= δ|R| at the working resolution and ||T|| <= Γ.
// T = shift·Id with no sparse entries factors trivially with ||E|| ||P|| = 1/shift.
FactorizationResult local_factorization(const HaarOperator& t, double delta,
                                        const FactorizationParams& params);

// The Remark 4.4 route: factorize through a supplied block family (e.g. the reiterated
// basis) whose vectors almost-diagonalize H with diagonal >= delta * l2sq.
FactorizationResult factorize_with_family(const HaarOperator& h, const BlockBasisFamily& fam,
                                          const BlockVectors& vectors, double delta,
                                          const FactorizationParams& params, HChoice choice);

// Membership coloring of D^n × D^n.
class RectColoring {
public:
    RectColoring(int n, RectangleCollection members) : n_(n), members_(std::move(members)) {
        for (const auto& r : members_)
            if (r.x().level() > n_ || r.y().level() > n_)
                throw DomainError("RectColoring: member outside D^n x D^n");
    }
    int n() const { return n_; }
    bool color(const DyadicRectangle& r) const { return members_.contains(r); }
    const RectangleCollection& members() const { return members_; }

private:
    int n_ = 0;
    RectangleCollection members_;
};

struct RamseyResult {
    IntervalCollection a;  // 𝒜
    IntervalCollection b;  // 𝓑
    bool color = false;    // true: 𝒜×𝓑 ⊂ 𝒞, false: in the complement
    DyadicRational carleson_a;
    DyadicRational carleson_b;
    bool reached_target = false;
    bool exhaustive = false;  // search was exhaustive (n <= 3)
};

// Monochromatic product 𝒜×𝓑 maximizing min(⟦𝒜⟧,⟦𝓑⟧); exhaustive for n <= 3,
// greedy chain-growing beyond. Missing the target is reported, not thrown.
RamseyResult ramsey_search(const RectColoring& coloring, const Rational& target);

// Exact affine rescale x ↦ (x - inf E0)/|E0| of dyadic data inside E0.
DyadicInterval affine_rescale(const DyadicInterval& i, const DyadicInterval& e0);

struct GammaExtraction {
    std::map<DyadicInterval, IntervalCollection> per_index;  // I ∈ D^n ↦ {E_I} ⊂ ℰ
    DyadicInterval root;                                     // E0 = E_{[0,1)}
};

// Greedy γ-collection extraction: a depth-n half-splitting subtree of ℰ rooted at the
// largest admissible member. Fails loudly when ℰ has no such subtree.
GammaExtraction extract_gamma_collections(const IntervalCollection& family, int n);

struct ReiteratedBasis {
    BlockBasisFamily family;   // B̃ over D^n_t × D^n_t (unrescaled; used for pairings)
    BlockVectors vectors;      // b̃_R
    HChoice h_choice = HChoice::T;
    LpcReport rescaled_lpc;    // (P1)-(P4) of the ψ⊗ψ-rescaled copy
    double offdiag_ratio = 0.0;   // max_R Σ_{R'≠R}|<b̃_R, H b̃_{R'}>| / ||b̃_R||²  (the measured c)
    double min_diag_ratio = 0.0;  // min_R |<b̃_R, H b̃_R>| / ||b̃_R||²
    DyadicInterval psi_x_root;
    DyadicInterval psi_y_root;
};

// Main-proof assembly: compose the diagonalizing family over the Ramsey-selected
// γ-collections, dispatch H by the achieved color, and measure the diagonal estimates.
ReiteratedBasis build_reiterated_basis(const BlockBasisFamily& fam, const BlockVectors& vectors,
                                       const HaarOperator& d_op, const RamseyResult& ramsey,
                                       int n_target);

// Blocks of an operator on (Σ_{j<=M} X_j)_r, X_j = H^p_j(H^q_j).
struct SumSpaceOperator {
    int truncation = 1;  // M
    double r = 2.0;      // exponent of the sum, may be infinity
    Exponents e{2.0, 2.0};
    std::map<std::pair<int, int>, HaarOperator> blocks;  // (j,k) ↦ T_jk : X_k -> X_j

    const HaarOperator* block(int j, int k) const;
    void validate() const;
};

struct GlueResult {
    std::vector<FactorizationResult> per_level;
    HChoice h_choice = HChoice::T;
    double norm_product = 0.0;  // measured ||P|| ||Q|| = max_n ||R_n|| ||S_n|| after balancing
    double bound = 0.0;         // 1 + η + ε
    bool pass = false;
    double offdiag_mass_upper = 0.0;  // ‖T - Σ P_n T P_n‖ upper bound at the truncation
    double offdiag_mass_lower = 0.0;
};

// Prop 5.4 at finite truncation: factorize each diagonal block, reject mixed H choices,
// and compose block-diagonally; the ℓ^r norm of a block-diagonal operator is the max of
// the block norms.
GlueResult glue_factorizations(const SumSpaceOperator& sum, double delta,
                               const FactorizationParams& params, double eps_slack = 0.01);

// Prop 5.7: re-index a finitely supported family over (m,n) into the diagonal sum,
// embedding X_{m,n} ⊆ X_{k,k} by coefficient inclusion; the ℓ^r norm is preserved.
struct IndexedComponent {
    int m = 0, n = 0;
    HaarVector f;
};
std::map<int, HaarVector> reindex_double_sum(const std::vector<IndexedComponent>& components);

}  // namespace haarfactor
