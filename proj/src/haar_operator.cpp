#include "haarfactor/haar_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace haarfactor {

namespace {

bool entry_less(const HaarOperator::Entry& a, const HaarOperator::Entry& b) {
    if (a.col != b.col) return a.col < b.col;
    return a.row < b.row;
}

}  // namespace

HaarOperator::HaarOperator(int m, int N, std::vector<Entry> entries, double shift)
    : m_(m), N_(N), shift_(shift), entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (e.row.x().level() > m_ || e.row.y().level() > N_ || e.col.x().level() > m_ ||
            e.col.y().level() > N_)
            throw ShapeError("HaarOperator: entry outside declared resolution");
    }
    std::sort(entries_.begin(), entries_.end(), entry_less);
    std::vector<Entry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
        if (!out.empty() && out.back().col == e.col && out.back().row == e.row)
            out.back().value += e.value;
        else
            out.push_back(e);
    }
    out.erase(std::remove_if(out.begin(), out.end(), [](const Entry& e) { return e.value == 0.0; }),
              out.end());
    entries_ = std::move(out);
}

double HaarOperator::entry(const DyadicRectangle& row, const DyadicRectangle& col) const {
    Entry probe{row, col, 0.0};
    auto it = std::lower_bound(entries_.begin(), entries_.end(), probe, entry_less);
    if (it != entries_.end() && it->col == col && it->row == row) return it->value;
    return 0.0;
}

HaarVector HaarOperator::column(const DyadicRectangle& col, Role role) const {
    Entry probe{DyadicRectangle(), col, 0.0};
    probe.row = DyadicRectangle(DyadicInterval(0, 0), DyadicInterval(0, 0));
    auto it = std::lower_bound(entries_.begin(), entries_.end(), col,
                               [](const Entry& e, const DyadicRectangle& c) { return e.col < c; });
    HaarVectorBuilder b(role, m_, N_);
    for (; it != entries_.end() && it->col == col; ++it) b.add(it->row, it->value);
    return b.build();
}

HaarVector HaarOperator::apply(const HaarVector& f) const {
    if (f.m() > m_ || f.N() > N_) throw ShapeError("HaarOperator::apply: resolution mismatch");
    HaarVectorBuilder b(f.role(), m_, N_);
    for (const auto& [q, a] : f.coeffs()) {
        if (shift_ != 0.0) b.add(q, shift_ * a);
        auto it = std::lower_bound(entries_.begin(), entries_.end(), q,
                                   [](const Entry& e, const DyadicRectangle& c) { return e.col < c; });
        for (; it != entries_.end() && it->col == q; ++it) b.add(it->row, a * it->value);
    }
    return b.build();
}

HaarOperator HaarOperator::adjoint() const {
    // t*[Q',Q] = t[Q,Q'] |Q| / |Q'|, shift unchanged.
    std::vector<Entry> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) {
        const double w = e.row.measure().to_double() / e.col.measure().to_double();
        out.push_back({e.col, e.row, e.value * w});
    }
    return HaarOperator(m_, N_, std::move(out), shift_);
}

HaarOperator HaarOperator::scaled(double c) const {
    if (c == 0.0) return HaarOperator(m_, N_, {}, 0.0);
    std::vector<Entry> out = entries_;
    for (auto& e : out) e.value *= c;
    return HaarOperator(m_, N_, std::move(out), shift_ * c);
}

HaarOperator HaarOperator::plus(const HaarOperator& o) const {
    std::vector<Entry> out = entries_;
    out.insert(out.end(), o.entries_.begin(), o.entries_.end());
    return HaarOperator(std::max(m_, o.m_), std::max(N_, o.N_), std::move(out), shift_ + o.shift_);
}

HaarVector HaarOperator::residual_column(const DyadicRectangle& q) const {
    HaarVectorBuilder b(Role::function, m_, N_);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), q,
                               [](const Entry& e, const DyadicRectangle& c) { return e.col < c; });
    for (; it != entries_.end() && it->col == q; ++it)
        if (it->row != q) b.add(it->row, it->value);
    return b.build();
}

namespace {

std::size_t stored_diagonal_count(const std::vector<HaarOperator::Entry>& entries) {
    std::size_t c = 0;
    for (const auto& e : entries)
        if (e.row == e.col) ++c;
    return c;
}

// A column with no stored diagonal entry, if one exists.
bool find_untouched_column(const HaarOperator& t, DyadicRectangle* out) {
    if (stored_diagonal_count(t.entries()) >= rect_order_count(t.m(), t.N())) return false;
    for (std::uint64_t i = 0; i < rect_order_count(t.m(), t.N()); ++i) {
        const DyadicRectangle q = rect_order_inverse(i, t.m(), t.N());
        if (t.entry(q, q) == 0.0) {
            if (out) *out = q;
            return true;
        }
    }
    return false;
}

}  // namespace

double HaarOperator::min_alpha() const {
    double best = std::numeric_limits<double>::infinity();
    if (stored_diagonal_count(entries_) < rect_order_count(m_, N_)) best = shift_;
    for (const auto& e : entries_)
        if (e.row == e.col) best = std::min(best, shift_ + e.value);
    return best;
}

double HaarOperator::min_abs_alpha() const {
    double best = std::numeric_limits<double>::infinity();
    if (stored_diagonal_count(entries_) < rect_order_count(m_, N_)) best = std::abs(shift_);
    for (const auto& e : entries_)
        if (e.row == e.col) best = std::min(best, std::abs(shift_ + e.value));
    return best;
}

bool HaarOperator::find_alpha_below(double threshold, DyadicRectangle* witness) const {
    for (const auto& e : entries_)
        if (e.row == e.col && shift_ + e.value < threshold) {
            if (witness) *witness = e.col;
            return true;
        }
    if (shift_ < threshold) return find_untouched_column(*this, witness);
    return false;
}

bool HaarOperator::find_abs_alpha_below(double threshold, DyadicRectangle* witness) const {
    for (const auto& e : entries_)
        if (e.row == e.col && std::abs(shift_ + e.value) < threshold) {
            if (witness) *witness = e.col;
            return true;
        }
    if (std::abs(shift_) < threshold) return find_untouched_column(*this, witness);
    return false;
}

DiagonalDecomposition decompose_diagonal(const HaarOperator& t) {
    DiagonalDecomposition d;
    d.shift = t.shift();
    std::map<DyadicRectangle, double> alpha;
    for (const auto& e : t.entries()) {
        alpha.try_emplace(e.col, t.shift());
        if (e.row == e.col) alpha[e.col] = t.shift() + e.value;
    }
    d.alphas.assign(alpha.begin(), alpha.end());
    return d;
}

}  // namespace haarfactor
