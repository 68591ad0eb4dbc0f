#include "haarfactor/dyadic.hpp"

#include <string>

namespace haarfactor {

DyadicInterval::DyadicInterval(int level, std::uint64_t pos) : level_(level), pos_(pos) {
    if (level < 0 || level > kMaxLevel)
        throw CapError("DyadicInterval: level " + std::to_string(level) + " outside [0, " +
                       std::to_string(kMaxLevel) + "]");
    if (level < 64 && pos >= (std::uint64_t(1) << level))
        throw DomainError("DyadicInterval: pos " + std::to_string(pos) + " >= 2^" +
                          std::to_string(level));
}

DyadicInterval DyadicInterval::predecessor() const {
    if (level_ == 0) throw DomainError("predecessor of [0,1) does not exist");
    return DyadicInterval(level_ - 1, pos_ >> 1);
}

DyadicInterval DyadicInterval::left_half() const {
    if (level_ >= kMaxLevel) throw CapError("left_half: level cap " + std::to_string(kMaxLevel));
    return DyadicInterval(level_ + 1, pos_ << 1);
}

DyadicInterval DyadicInterval::right_half() const {
    if (level_ >= kMaxLevel) throw CapError("right_half: level cap " + std::to_string(kMaxLevel));
    return DyadicInterval(level_ + 1, (pos_ << 1) | 1u);
}

std::vector<DyadicInterval> DyadicInterval::grid(int N) const {
    if (N < level_) throw DomainError("grid: N < level");
    if (N > kMaxLevel) throw CapError("grid: level cap");
    std::vector<DyadicInterval> out;
    const std::uint64_t count = std::uint64_t(1) << (N - level_);
    out.reserve(count);
    const std::uint64_t base = pos_ << (N - level_);
    for (std::uint64_t k = 0; k < count; ++k) out.emplace_back(N, base + k);
    return out;
}

IntervalCollection::IntervalCollection(std::vector<DyadicInterval> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

IntervalCollection IntervalCollection::full_grid(int m) {
    std::vector<DyadicInterval> v;
    for (int k = 0; k <= m; ++k)
        for (std::uint64_t j = 0; j < (std::uint64_t(1) << k); ++j) v.emplace_back(k, j);
    return IntervalCollection(std::move(v));
}

void IntervalCollection::insert(const DyadicInterval& i) {
    auto it = std::lower_bound(items_.begin(), items_.end(), i);
    if (it == items_.end() || *it != i) items_.insert(it, i);
}

IntervalCollection IntervalCollection::set_union(const IntervalCollection& o) const {
    std::vector<DyadicInterval> v;
    v.reserve(items_.size() + o.items_.size());
    std::set_union(items_.begin(), items_.end(), o.items_.begin(), o.items_.end(),
                   std::back_inserter(v));
    IntervalCollection out;
    out.items_ = std::move(v);
    return out;
}

IntervalCollection IntervalCollection::set_intersection(const IntervalCollection& o) const {
    std::vector<DyadicInterval> v;
    std::set_intersection(items_.begin(), items_.end(), o.items_.begin(), o.items_.end(),
                          std::back_inserter(v));
    IntervalCollection out;
    out.items_ = std::move(v);
    return out;
}

bool IntervalCollection::pairwise_disjoint() const {
    // Sort by grid_lo; disjointness of dyadic intervals fails only via nesting.
    std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
    spans.reserve(items_.size());
    for (const auto& i : items_) spans.emplace_back(i.grid_lo(), i.grid_hi());
    std::sort(spans.begin(), spans.end());
    for (std::size_t k = 1; k < spans.size(); ++k)
        if (spans[k].first < spans[k - 1].second) return false;
    return true;
}

int IntervalCollection::min_level() const {
    if (items_.empty()) throw DomainError("min_level of empty collection");
    int v = kMaxLevel;
    for (const auto& i : items_) v = std::min(v, i.level());
    return v;
}

int IntervalCollection::max_level() const {
    if (items_.empty()) throw DomainError("max_level of empty collection");
    int v = 0;
    for (const auto& i : items_) v = std::max(v, i.level());
    return v;
}

RectangleCollection::RectangleCollection(std::vector<DyadicRectangle> items)
    : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

RectangleCollection RectangleCollection::full_grid(int m, int n) {
    std::vector<DyadicRectangle> v;
    auto xs = IntervalCollection::full_grid(m);
    auto ys = IntervalCollection::full_grid(n);
    v.reserve(xs.size() * ys.size());
    for (const auto& x : xs)
        for (const auto& y : ys) v.emplace_back(x, y);
    return RectangleCollection(std::move(v));
}

void RectangleCollection::insert(const DyadicRectangle& r) {
    auto it = std::lower_bound(items_.begin(), items_.end(), r);
    if (it == items_.end() || *it != r) items_.insert(it, r);
}

RectangleCollection RectangleCollection::set_union(const RectangleCollection& o) const {
    std::vector<DyadicRectangle> v;
    v.reserve(items_.size() + o.items_.size());
    std::set_union(items_.begin(), items_.end(), o.items_.begin(), o.items_.end(),
                   std::back_inserter(v));
    RectangleCollection out;
    out.items_ = std::move(v);
    return out;
}

RectangleCollection RectangleCollection::set_intersection(const RectangleCollection& o) const {
    std::vector<DyadicRectangle> v;
    std::set_intersection(items_.begin(), items_.end(), o.items_.begin(), o.items_.end(),
                          std::back_inserter(v));
    RectangleCollection out;
    out.items_ = std::move(v);
    return out;
}

IntervalSet IntervalSet::of(const IntervalCollection& c) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> runs;
    runs.reserve(c.size());
    for (const auto& i : c) runs.emplace_back(i.grid_lo(), i.grid_hi());
    IntervalSet s(std::move(runs));
    s.merge_normalize();
    return s;
}

void IntervalSet::merge_normalize() {
    std::sort(runs_.begin(), runs_.end());
    std::vector<std::pair<std::uint64_t, std::uint64_t>> merged;
    for (const auto& r : runs_) {
        if (r.first >= r.second) continue;
        if (!merged.empty() && r.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, r.second);
        else
            merged.push_back(r);
    }
    runs_ = std::move(merged);
}

DyadicRational IntervalSet::measure() const {
    // Total <= 2^62, fits a single word.
    std::uint64_t total = 0;
    for (const auto& r : runs_) total += r.second - r.first;
    return DyadicRational(BigInt(total), -kMaxLevel);
}

IntervalSet IntervalSet::set_union(const IntervalSet& o) const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> runs = runs_;
    runs.insert(runs.end(), o.runs_.begin(), o.runs_.end());
    IntervalSet s(std::move(runs));
    s.merge_normalize();
    return s;
}

IntervalSet IntervalSet::set_intersection(const IntervalSet& o) const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    std::size_t i = 0, j = 0;
    while (i < runs_.size() && j < o.runs_.size()) {
        const auto lo = std::max(runs_[i].first, o.runs_[j].first);
        const auto hi = std::min(runs_[i].second, o.runs_[j].second);
        if (lo < hi) out.emplace_back(lo, hi);
        if (runs_[i].second < o.runs_[j].second)
            ++i;
        else
            ++j;
    }
    return IntervalSet(std::move(out));
}

bool IntervalSet::contains_set(const IntervalSet& o) const {
    return set_intersection(o) == o;
}

bool IntervalSet::contains(const DyadicInterval& i) const {
    const std::uint64_t lo = i.grid_lo(), hi = i.grid_hi();
    auto it = std::upper_bound(runs_.begin(), runs_.end(), std::make_pair(lo, kGridOne + 1));
    if (it == runs_.begin()) return false;
    --it;
    return it->first <= lo && hi <= it->second;
}

DyadicRational IntervalSet::intersection_measure(const DyadicInterval& i) const {
    const std::uint64_t lo = i.grid_lo(), hi = i.grid_hi();
    std::uint64_t total = 0;
    // First run whose end lies past lo.
    auto it = std::partition_point(runs_.begin(), runs_.end(),
                                   [lo](const auto& r) { return r.second <= lo; });
    for (; it != runs_.end() && it->first < hi; ++it) {
        const auto a = std::max(it->first, lo);
        const auto b = std::min(it->second, hi);
        if (a < b) total += b - a;
    }
    return DyadicRational(BigInt(total), -kMaxLevel);
}

std::vector<DyadicInterval> IntervalSet::level_cells_inside(int g) const {
    if (g < 0 || g > kMaxLevel) throw CapError("level_cells_inside: level cap");
    std::vector<DyadicInterval> out;
    const std::uint64_t cell = std::uint64_t(1) << (kMaxLevel - g);
    for (const auto& r : runs_) {
        std::uint64_t a = (r.first + cell - 1) / cell;  // first cell fully inside
        std::uint64_t b = r.second / cell;              // one past last
        for (std::uint64_t p = a; p < b; ++p) out.emplace_back(g, p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

CarlesonResult carleson_constant(const IntervalCollection& c) {
    if (c.empty()) throw DomainError("carleson_constant: empty collection");
    CarlesonResult best{DyadicRational(-1), DyadicInterval::unit()};
    for (const auto& top : c) {
        // Σ_{J ⊆ top} |J| in units of 2^-62; bounded by 63 * 2^62, use unsigned __int128.
        unsigned __int128 sum = 0;
        for (const auto& j : c)
            if (top.contains(j)) sum += j.grid_hi() - j.grid_lo();
        // Divide by |top| = 2^{-level}: multiply by 2^level.
        BigInt numer = BigInt(std::uint64_t(sum >> 64)) << 64 |
                       BigInt(std::uint64_t(sum & ~std::uint64_t(0)));
        DyadicRational ratio(numer, top.level() - kMaxLevel);
        if (ratio > best.value) best = {ratio, top};
    }
    return best;
}

bool rect_less(const DyadicRectangle& a, const DyadicRectangle& b) {
    // (|J1|,|I1|,inf I0,inf J0) <_lex (|J0|,|I0|,inf I1,inf J1)
    const auto& i0 = a.x();
    const auto& j0 = a.y();
    const auto& i1 = b.x();
    const auto& j1 = b.y();
    if (j1.level() != j0.level()) return j1.level() > j0.level();  // |J1| < |J0|
    if (i1.level() != i0.level()) return i1.level() > i0.level();
    // Same levels on both axes: inf comparisons reduce to positions.
    if (i0.pos() != i1.pos()) return i0.pos() < i1.pos();
    return j0.pos() < j1.pos();
}

std::uint64_t rect_order_count(int m, int n) {
    if (m < 0 || n < 0 || m + n > 60)
        throw CapError("rect_order_count: index resolution out of range");
    return ((std::uint64_t(1) << (m + 1)) - 1) * ((std::uint64_t(1) << (n + 1)) - 1);
}

std::uint64_t rect_order_index(const DyadicRectangle& r, int m, int n) {
    const int li = r.x().level();
    const int lj = r.y().level();
    if (li > m || lj > n)
        throw DomainError("rect_order_index: rectangle outside D^m x D^n");
    const std::uint64_t im = (std::uint64_t(1) << (m + 1)) - 1;
    // Blocks ordered by (lj asc, li asc), inside a block by (pos_x, pos_y).
    std::uint64_t idx = im * ((std::uint64_t(1) << lj) - 1);
    idx += ((std::uint64_t(1) << li) - 1) << lj;
    idx += (r.x().pos() << lj) + r.y().pos();
    return idx;
}

DyadicRectangle rect_order_inverse(std::uint64_t index, int m, int n) {
    if (index >= rect_order_count(m, n)) throw DomainError("rect_order_inverse: index out of range");
    const std::uint64_t im = (std::uint64_t(1) << (m + 1)) - 1;
    int lj = 0;
    while (index >= im * (std::uint64_t(1) << lj)) {
        index -= im * (std::uint64_t(1) << lj);
        ++lj;
    }
    int li = 0;
    while (index >= (std::uint64_t(1) << (li + lj))) {
        index -= std::uint64_t(1) << (li + lj);
        ++li;
    }
    const std::uint64_t px = index >> lj;
    const std::uint64_t py = index & ((std::uint64_t(1) << lj) - 1);
    return {DyadicInterval(li, px), DyadicInterval(lj, py)};
}

}  // namespace haarfactor
