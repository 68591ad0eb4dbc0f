#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "haarfactor/dyadic.hpp"

namespace haarfactor {

// 1 <= p, q < infinity, with conjugates p', q' (possibly infinity).
struct Exponents {
    double p = 2.0;
    double q = 2.0;

    Exponents() = default;
    Exponents(double p_, double q_) : p(p_), q(q_) {
        if (!(p >= 1.0) || !(q >= 1.0) || !std::isfinite(p) || !std::isfinite(q))
            throw DomainError("Exponents: require 1 <= p,q < infinity");
    }

    double p_conj() const { return p == 1.0 ? std::numeric_limits<double>::infinity() : p / (p - 1.0); }
    double q_conj() const { return q == 1.0 ? std::numeric_limits<double>::infinity() : q / (q - 1.0); }
    Exponents conjugate_unchecked() const {
        Exponents e;
        e.p = p_conj();
        e.q = q_conj();
        return e;
    }
};

enum class Role { function, functional };

// Finitely supported coefficient map rectangle -> coefficient. With role `function`
// it represents f = Σ a_Q h_Q; with role `functional` it stores coefficients b_Q of
// g = Σ b_Q h_Q viewed as a functional via <g, f> = Σ b_Q a_Q |Q|.
class HaarVector {
public:
    using Entry = std::pair<DyadicRectangle, double>;

    HaarVector() = default;
    HaarVector(Role role, int m, int N) : role_(role), m_(m), N_(N) {}
    HaarVector(Role role, int m, int N, std::vector<Entry> coeffs);

    static HaarVector basis(Role role, int m, int N, const DyadicRectangle& q, double a = 1.0) {
        return HaarVector(role, m, N, {{q, a}});
    }

    Role role() const { return role_; }
    int m() const { return m_; }
    int N() const { return N_; }
    const std::vector<Entry>& coeffs() const { return coeffs_; }
    std::size_t support_size() const { return coeffs_.size(); }
    bool is_zero() const { return coeffs_.empty(); }

    double coeff(const DyadicRectangle& q) const;

    HaarVector with_role(Role r) const {
        HaarVector v = *this;
        v.role_ = r;
        return v;
    }
    HaarVector scaled(double c) const;
    HaarVector plus(const HaarVector& o) const;

    // Σ a_Q^2 |Q| (floating point).
    double l2sq() const;

    // Pointwise value Σ a_Q h_Q(x, y) at grid coordinates (x, y on the 2^-62 grid,
    // cell midpoints avoided by evaluating at left endpoints of cells).
    double evaluate(double x, double y) const;

private:
    void normalize();

    Role role_ = Role::function;
    int m_ = 0;
    int N_ = 0;
    std::vector<Entry> coeffs_;  // sorted by rectangle, zero coefficients dropped
};

// Builder for incremental accumulation (sums of basis vectors, operator columns).
class HaarVectorBuilder {
public:
    HaarVectorBuilder(Role role, int m, int N) : role_(role), m_(m), N_(N) {}
    void add(const DyadicRectangle& q, double a) { if (a != 0.0) entries_.emplace_back(q, a); }
    HaarVector build();

private:
    Role role_;
    int m_, N_;
    std::vector<HaarVector::Entry> entries_;
};

// Exact-grid mixed norm: the square function is piecewise constant on the product of
// the support's x- and y-interval boundaries; the nested integral is a finite sum,
// with p-th and q-th roots in floating point. `e` may carry infinite exponents
// internally (sup over the corresponding variable).
double mixed_norm(const HaarVector& f, const Exponents& e);
double mixed_norm_pq(const HaarVector& f, double p, double q);

// <g, f> = Σ_Q b_Q a_Q |Q|.
double dual_pairing(const HaarVector& g, const HaarVector& f);

// Exact norms of b = Σ_{K in xs, L in ys} ±h_{K×L} for pairwise disjoint xs, ys:
// primal |∪xs|^{1/p} |∪ys|^{1/q}, dual |∪xs|^{1/p'} |∪ys|^{1/q'}.
double product_block_norm(const IntervalCollection& xs, const IntervalCollection& ys,
                          const Exponents& e);
double product_block_dual_norm(const IntervalCollection& xs, const IntervalCollection& ys,
                               const Exponents& e);

}  // namespace haarfactor
