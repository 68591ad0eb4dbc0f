#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "haarfactor/block_basis.hpp"
#include "haarfactor/haar_operator.hpp"

namespace haarfactor {

// Parameters of the almost-diagonalization run. eta_prime is derived, not supplied:
// the largest dyadic 2^-k with (1-η')^{-1} <= 1+η and η'(1-η')^{-2} 4^{m+n} Γ <= η.
struct EngineParams {
    int m = 1;
    int n = 1;
    double gamma_bound = 1.0;  // Γ with ||T|| <= Γ
    double eta = 0.5;          // η > 0
    double delta = 0.0;        // δ >= 0; 0 skips sign selection (all +1)
    Exponents e{2.0, 2.0};
    int nmax = 26;  // cap on the working y-resolution (index levels)

    void validate() const;
};

DyadicRational derive_eta_prime(int m, int n, double gamma_bound, double eta);

// One-parameter block bases (e_K), (f_L) defining h̃_{K×L} = e_K ⊗ f_L. Index intervals
// below the deepest table entry extend canonically: the block of a child interval is
// the corresponding halves of the parent's block. The identity table gives the
// standard Haar system.
class GeneralizedBasis {
public:
    struct AxisBlock {
        IntervalCollection intervals;
        std::vector<std::int8_t> signs;  // aligned with intervals
    };

    static GeneralizedBasis standard();
    GeneralizedBasis(std::map<DyadicInterval, AxisBlock> x_blocks,
                     std::map<DyadicInterval, AxisBlock> y_blocks);

    bool is_standard() const { return standard_; }

    AxisBlock x_block(const DyadicInterval& k) const;
    AxisBlock y_block(const DyadicInterval& l) const;

    // h̃_{K×L} expanded in the physical Haar system.
    HaarVector expand(const DyadicRectangle& index_rect, int phys_m, int phys_n) const;
    DyadicRational l2sq(const DyadicRectangle& index_rect) const;
    // Physical y-level of the (extended) block at index level `level`.
    int physical_y_level(int index_level) const;
    int physical_x_level(int index_level) const;

private:
    GeneralizedBasis() : standard_(true) {}
    static AxisBlock derive_block(const std::map<DyadicInterval, AxisBlock>& table,
                                  const DyadicInterval& idx);
    static void validate_axis(const std::map<DyadicInterval, AxisBlock>& table, const char* label);

    bool standard_ = true;
    std::map<DyadicInterval, AxisBlock> x_blocks_, y_blocks_;
};

struct DiagRow {
    DyadicRectangle R;
    double offdiag = 0.0;  // Σ_{R'≠R} |<b_R, T b_{R'}>|
    double diag = 0.0;     // <b_R, T b_R>
    DyadicRational l2sq;
    bool pass = true;
};

struct StepTrace {
    DyadicRectangle R;    // index constructed at this step
    int cover_level = 0;  // level of the high-frequency cover W
    double tau = 0.0;     // τ_{i0} = η' β / (count · 4^{i0+1})
};

struct DiagCertificate {
    int achieved_N = 0;  // deepest index y-level used by the output family
    DyadicRational eta_prime;
    std::vector<DiagRow> rows;
    std::vector<StepTrace> steps;
    LpcReport lpc;
    bool pass = false;
    // δ > 0 hypothesis is checked at the achieved resolution only (adaptive mode).
    bool delta_checked_at_achieved_resolution = false;
    std::string warnings;
};

struct EngineResult {
    BlockBasisFamily family;  // indexed by D^m × D^n; X_{I×J} = {I}
    DiagCertificate certificate;
    BlockVectors vectors;  // expanded b_R^{(ε)}
};

// Extra frequency sources (the η/2-net of Thm 4.3); norm_bound must dominate the
// H^p(H^q) norm of vec.
struct ExtraSource {
    HaarVector vec;
    double norm_bound = 1.0;
};

// The inductive construction of the almost-diagonalizing block basis. `basis`
// switches the building blocks to h̃ = e ⊗ f (generalized mode).
EngineResult almost_diagonalize(const HaarOperator& t, const EngineParams& params,
                                const GeneralizedBasis& basis = GeneralizedBasis::standard(),
                                const std::vector<ExtraSource>& extras = {});

// Signs for one block: achieves <b^{(ε)}, T b^{(ε)}> >= δ ||b^{(ε)}||_2² given
// α_Q >= δ on the block, by fixing signs one at a time with nonnegative conditional
// mean of the cross term.
std::map<DyadicRectangle, int> select_signs(const RectangleCollection& block,
                                            const HaarOperator& t, double delta);

// Recomputes the scaled frequency sources of every step from (T, family) alone and
// re-checks f_{i0}(Q) <= τ_{i0} |Q| on each chosen block.
bool verify_frequency_thresholds(const HaarOperator& t, const EngineResult& result,
                                 const EngineParams& params,
                                 const GeneralizedBasis& basis = GeneralizedBasis::standard(),
                                 const std::vector<ExtraSource>& extras = {});

// Exact verifier of the measure recursion on an engine output family:
// (|J0|/|J|)(1-η')|L| <= |L ∩ Y_{I0×J0}| <= (|J0|/|J|)|L| for all nested index pairs
// and L in the outer block's Y. Returns a witness description on failure.
bool verify_measure_recursion(const BlockBasisFamily& fam, const DyadicRational& eta_prime,
                              std::string* witness = nullptr);

struct AnnihilationResult {
    BlockBasisFamily family;
    DiagCertificate certificate;
    BlockVectors vectors;
    std::vector<HaarVector> net;  // the η/2-net of the unit ball of F actually used
};

// Thm 4.3: builds a family whose span's orthogonal projection almost annihilates the
// span of `subspace` (all signs +1, δ = 0, frequency weight from the net).
AnnihilationResult annihilating_projection(const std::vector<HaarVector>& subspace,
                                           const EngineParams& params, int dim_cap = 3,
                                           std::size_t net_cap = 100000);

}  // namespace haarfactor
