#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "haarfactor/errors.hpp"
#include "haarfactor/exact.hpp"

namespace haarfactor {

// Positions are kept in machine words; level 62 leaves endpoints representable on a
// common 2^-62 grid in a uint64_t.
inline constexpr int kMaxLevel = 62;

// [pos*2^-level, (pos+1)*2^-level) inside [0,1).
class DyadicInterval {
public:
    DyadicInterval() : level_(0), pos_(0) {}
    DyadicInterval(int level, std::uint64_t pos);

    static DyadicInterval unit() { return DyadicInterval(0, 0); }

    int level() const { return level_; }
    std::uint64_t pos() const { return pos_; }

    DyadicRational measure() const { return DyadicRational::pow2(-level_); }
    DyadicRational inf() const { return DyadicRational(BigInt(pos_), -level_); }

    // Endpoints on the common 2^-62 grid.
    std::uint64_t grid_lo() const { return pos_ << (kMaxLevel - level_); }
    std::uint64_t grid_hi() const { return (pos_ + 1) << (kMaxLevel - level_); }

    bool is_unit() const { return level_ == 0; }

    bool contains(const DyadicInterval& j) const {
        return j.level_ >= level_ && (j.pos_ >> (j.level_ - level_)) == pos_;
    }
    bool intersects(const DyadicInterval& j) const { return contains(j) || j.contains(*this); }

    // The unique dyadic interval with predecessor ⊃ this and double the measure.
    DyadicInterval predecessor() const;
    DyadicInterval left_half() const;
    DyadicInterval right_half() const;
    bool is_left_half_of_predecessor() const { return (pos_ & 1u) == 0; }

    // All level-N descendants (N >= level).
    std::vector<DyadicInterval> grid(int N) const;

    auto operator<=>(const DyadicInterval&) const = default;

private:
    int level_;
    std::uint64_t pos_;
};

class DyadicRectangle {
public:
    DyadicRectangle() = default;
    DyadicRectangle(DyadicInterval x, DyadicInterval y) : x_(x), y_(y) {}

    static DyadicRectangle unit() { return {DyadicInterval::unit(), DyadicInterval::unit()}; }

    const DyadicInterval& x() const { return x_; }
    const DyadicInterval& y() const { return y_; }

    DyadicRational measure() const { return x_.measure() * y_.measure(); }
    bool contains(const DyadicRectangle& r) const {
        return x_.contains(r.x()) && y_.contains(r.y());
    }
    bool intersects(const DyadicRectangle& r) const {
        return x_.intersects(r.x()) && y_.intersects(r.y());
    }

    auto operator<=>(const DyadicRectangle&) const = default;

private:
    DyadicInterval x_;
    DyadicInterval y_;
};

// Sorted, duplicate-free set of dyadic intervals.
class IntervalCollection {
public:
    IntervalCollection() = default;
    explicit IntervalCollection(std::vector<DyadicInterval> items);

    static IntervalCollection full_grid(int m);  // 𝒟^m: all intervals with measure >= 2^-m

    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }
    const DyadicInterval& operator[](std::size_t i) const { return items_[i]; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    bool contains(const DyadicInterval& i) const {
        return std::binary_search(items_.begin(), items_.end(), i);
    }

    void insert(const DyadicInterval& i);
    IntervalCollection set_union(const IntervalCollection& o) const;
    IntervalCollection set_intersection(const IntervalCollection& o) const;
    bool set_disjoint(const IntervalCollection& o) const {
        return set_intersection(o).empty();
    }
    bool pairwise_disjoint() const;  // as subsets of [0,1)
    int min_level() const;
    int max_level() const;

    bool operator==(const IntervalCollection&) const = default;

private:
    std::vector<DyadicInterval> items_;
};

class RectangleCollection {
public:
    RectangleCollection() = default;
    explicit RectangleCollection(std::vector<DyadicRectangle> items);

    static RectangleCollection full_grid(int m, int n);  // 𝒟^m × 𝒟^n

    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }
    const DyadicRectangle& operator[](std::size_t i) const { return items_[i]; }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    bool contains(const DyadicRectangle& r) const {
        return std::binary_search(items_.begin(), items_.end(), r);
    }

    void insert(const DyadicRectangle& r);
    RectangleCollection set_union(const RectangleCollection& o) const;
    RectangleCollection set_intersection(const RectangleCollection& o) const;

    bool operator==(const RectangleCollection&) const = default;

private:
    std::vector<DyadicRectangle> items_;
};

// A finite union of dyadic intervals as a measurable subset of [0,1): disjoint merged
// half-open runs on the common 2^-62 grid.
class IntervalSet {
public:
    IntervalSet() = default;
    static IntervalSet unit_interval() { return IntervalSet({{0, kGridOne}}); }
    static IntervalSet of(const DyadicInterval& i) { return IntervalSet({{i.grid_lo(), i.grid_hi()}}); }
    static IntervalSet of(const IntervalCollection& c);

    static constexpr std::uint64_t kGridOne = std::uint64_t(1) << kMaxLevel;

    bool empty() const { return runs_.empty(); }
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& runs() const { return runs_; }

    DyadicRational measure() const;
    IntervalSet set_union(const IntervalSet& o) const;
    IntervalSet set_intersection(const IntervalSet& o) const;
    bool disjoint(const IntervalSet& o) const { return set_intersection(o).empty(); }
    bool contains_set(const IntervalSet& o) const;
    bool contains(const DyadicInterval& i) const;

    // Exact measure of (this ∩ i).
    DyadicRational intersection_measure(const DyadicInterval& i) const;

    // All level-g dyadic intervals entirely inside the set.
    std::vector<DyadicInterval> level_cells_inside(int g) const;

    bool operator==(const IntervalSet&) const = default;

private:
    explicit IntervalSet(std::vector<std::pair<std::uint64_t, std::uint64_t>> runs)
        : runs_(std::move(runs)) {}
    void merge_normalize();

    std::vector<std::pair<std::uint64_t, std::uint64_t>> runs_;
};

struct CarlesonResult {
    DyadicRational value;
    DyadicInterval witness;  // maximizing top interval
};

// ⟦𝒞⟧ = sup over I in c of (1/|I|) Σ_{J in c, J ⊆ I} |J|, exact.
CarlesonResult carleson_constant(const IntervalCollection& c);

// Linear order ⊏ on 𝒟^m × 𝒟^n: R0 ⊏ R1 iff
// (|J1|,|I1|,inf I0,inf J0) <_lex (|J0|,|I0|,inf I1,inf J1).
bool rect_less(const DyadicRectangle& a, const DyadicRectangle& b);

std::uint64_t rect_order_count(int m, int n);  // (2^{m+1}-1)(2^{n+1}-1)
std::uint64_t rect_order_index(const DyadicRectangle& r, int m, int n);
DyadicRectangle rect_order_inverse(std::uint64_t index, int m, int n);

}  // namespace haarfactor
