#pragma once

#include <vector>

#include "haarfactor/haar_vector.hpp"

namespace haarfactor {

// Sparse operator T h_Q = shift * h_Q + Σ_{Q'} t[Q',Q] h_{Q'}, stored column-major
// (the engine consumes T h_Q repeatedly). <h_{Q'}, T h_Q> = t[Q',Q] |Q'| plus the
// shift term when Q' = Q.
class HaarOperator {
public:
    struct Entry {
        DyadicRectangle row;
        DyadicRectangle col;
        double value;
    };

    HaarOperator() = default;
    HaarOperator(int m, int N, std::vector<Entry> entries, double shift = 0.0);

    static HaarOperator identity(int m, int N) { return HaarOperator(m, N, {}, 1.0); }
    static HaarOperator scaled_identity(int m, int N, double s) { return HaarOperator(m, N, {}, s); }

    int m() const { return m_; }
    int N() const { return N_; }
    double shift() const { return shift_; }
    const std::vector<Entry>& entries() const { return entries_; }  // sorted by (col, row)
    std::size_t nnz() const { return entries_.size(); }

    double entry(const DyadicRectangle& row, const DyadicRectangle& col) const;

    // Sparse column t[., col] as a vector (excluding the shift term).
    HaarVector column(const DyadicRectangle& col, Role role = Role::function) const;

    HaarVector apply(const HaarVector& f) const;
    HaarOperator adjoint() const;
    HaarOperator scaled(double c) const;
    HaarOperator plus(const HaarOperator& o) const;

    // alpha_Q = <h_Q, T h_Q> / |Q| = shift + t[Q,Q].
    double alpha(const DyadicRectangle& q) const { return shift_ + entry(q, q); }
    // r_Q with T h_Q = alpha_Q h_Q + r_Q.
    HaarVector residual_column(const DyadicRectangle& q) const;

    // Minimum of alpha over all of D^m x D^N (at most nnz distinct values plus shift).
    double min_alpha() const;
    double min_abs_alpha() const;
    // A rectangle attaining a diagonal value below the threshold, if any.
    bool find_alpha_below(double threshold, DyadicRectangle* witness) const;
    bool find_abs_alpha_below(double threshold, DyadicRectangle* witness) const;

private:
    int m_ = 0;
    int N_ = 0;
    double shift_ = 0.0;
    std::vector<Entry> entries_;
};

// Exact entrywise split T h_Q = alpha_Q h_Q + r_Q over all columns that carry data.
struct DiagonalDecomposition {
    std::vector<std::pair<DyadicRectangle, double>> alphas;  // for stored columns
    double shift;                                            // alpha of untouched columns
};
DiagonalDecomposition decompose_diagonal(const HaarOperator& t);

}  // namespace haarfactor
