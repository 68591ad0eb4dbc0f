#include "haarfactor/engine.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "haarfactor/estimate.hpp"
#include "haarfactor/frequency.hpp"

namespace haarfactor {

void EngineParams::validate() const {
    if (m < 0 || n < 0) throw DomainError("EngineParams: m, n must be nonnegative");
    if (!(gamma_bound > 0.0)) throw DomainError("EngineParams: Γ must be positive");
    if (!(eta > 0.0)) throw DomainError("EngineParams: η must be positive");
    if (delta < 0.0) throw DomainError("EngineParams: δ must be nonnegative");
    if (nmax < 1 || nmax > kMaxLevel) throw DomainError("EngineParams: nmax out of range");
}

DyadicRational derive_eta_prime(int m, int n, double gamma_bound, double eta) {
    const Rational eta_r = Rational::from_double(eta);
    const Rational gamma_r = Rational::from_double(gamma_bound);
    const Rational four_mn = Rational(BigInt(1) << (2 * (m + n)));
    for (int k = 1; k <= 512; ++k) {
        const Rational ep(BigInt(1), BigInt(1) << k);
        const Rational one_minus = Rational(1) - ep;
        // (1-η')^{-1} <= 1+η  <=>  1 <= (1+η)(1-η')
        if (Rational(1) > (Rational(1) + eta_r) * one_minus) continue;
        // η'(1-η')^{-2} 4^{m+n} Γ <= η  <=>  η' 4^{m+n} Γ <= η (1-η')²
        if (ep * four_mn * gamma_r > eta_r * one_minus * one_minus) continue;
        return DyadicRational(BigInt(1), -k);
    }
    throw DomainError("derive_eta_prime: no admissible dyadic η' found");
}

GeneralizedBasis GeneralizedBasis::standard() { return GeneralizedBasis(); }

GeneralizedBasis::GeneralizedBasis(std::map<DyadicInterval, AxisBlock> x_blocks,
                                   std::map<DyadicInterval, AxisBlock> y_blocks)
    : standard_(false), x_blocks_(std::move(x_blocks)), y_blocks_(std::move(y_blocks)) {
    validate_axis(x_blocks_, "x");
    validate_axis(y_blocks_, "y");
}

void GeneralizedBasis::validate_axis(const std::map<DyadicInterval, AxisBlock>& table,
                                     const char* label) {
    if (table.empty()) throw DomainError("GeneralizedBasis: empty axis table");
    if (table.find(DyadicInterval::unit()) == table.end())
        throw DomainError("GeneralizedBasis: axis table must define the block of [0,1)");
    for (const auto& [k, blk] : table) {
        if (blk.intervals.empty())
            throw DegeneracyError(std::string("GeneralizedBasis: empty block on axis ") + label);
        if (blk.signs.size() != blk.intervals.size())
            throw ShapeError("GeneralizedBasis: sign/interval size mismatch");
        for (auto s : blk.signs)
            if (s != 1 && s != -1) throw DomainError("GeneralizedBasis: signs must be ±1");
        if (!blk.intervals.pairwise_disjoint())
            throw HypothesisError(std::string("GeneralizedBasis: block not pairwise disjoint (") +
                                  label + ", hypothesis (i))");
    }
    for (auto a = table.begin(); a != table.end(); ++a)
        for (auto b = std::next(a); b != table.end(); ++b)
            if (!a->second.intervals.set_disjoint(b->second.intervals))
                throw HypothesisError(std::string("GeneralizedBasis: blocks share intervals (") +
                                      label + ", hypothesis (i))");
    // (ii): nesting of index intervals lifts to element inclusion.
    for (const auto& [k0, b0] : table)
        for (const auto& [k1, b1] : table) {
            if (k0 == k1 || !k1.contains(k0)) continue;
            for (const auto& e0 : b0.intervals) {
                bool found = false;
                for (const auto& e1 : b1.intervals)
                    if (e1.contains(e0)) {
                        found = true;
                        break;
                    }
                if (!found)
                    throw HypothesisError(
                        std::string("GeneralizedBasis: nesting hypothesis (ii) fails on axis ") +
                        label);
            }
        }
}

GeneralizedBasis::AxisBlock GeneralizedBasis::derive_block(
    const std::map<DyadicInterval, AxisBlock>& table, const DyadicInterval& idx) {
    auto it = table.find(idx);
    if (it != table.end()) return it->second;
    // Canonical extension below the table: the block of a child index interval is the
    // matching halves of the parent's block.
    AxisBlock parent = derive_block(table, idx.predecessor());
    const bool left = idx.is_left_half_of_predecessor();
    std::vector<DyadicInterval> halves;
    halves.reserve(parent.intervals.size());
    for (std::size_t i = 0; i < parent.intervals.size(); ++i)
        halves.push_back(left ? parent.intervals[i].left_half() : parent.intervals[i].right_half());
    AxisBlock out;
    out.intervals = IntervalCollection(std::move(halves));
    out.signs = parent.signs;  // halving preserves the sorted order
    return out;
}

GeneralizedBasis::AxisBlock GeneralizedBasis::x_block(const DyadicInterval& k) const {
    if (standard_) return {IntervalCollection({k}), {1}};
    return derive_block(x_blocks_, k);
}

GeneralizedBasis::AxisBlock GeneralizedBasis::y_block(const DyadicInterval& l) const {
    if (standard_) return {IntervalCollection({l}), {1}};
    return derive_block(y_blocks_, l);
}

HaarVector GeneralizedBasis::expand(const DyadicRectangle& index_rect, int phys_m,
                                    int phys_n) const {
    if (standard_) return HaarVector::basis(Role::function, phys_m, phys_n, index_rect);
    const AxisBlock bx = x_block(index_rect.x());
    const AxisBlock by = y_block(index_rect.y());
    HaarVectorBuilder b(Role::function, phys_m, phys_n);
    for (std::size_t i = 0; i < bx.intervals.size(); ++i)
        for (std::size_t j = 0; j < by.intervals.size(); ++j)
            b.add(DyadicRectangle(bx.intervals[i], by.intervals[j]),
                  double(bx.signs[i]) * double(by.signs[j]));
    return b.build();
}

DyadicRational GeneralizedBasis::l2sq(const DyadicRectangle& index_rect) const {
    if (standard_) return index_rect.measure();
    const AxisBlock bx = x_block(index_rect.x());
    const AxisBlock by = y_block(index_rect.y());
    return IntervalSet::of(bx.intervals).measure() * IntervalSet::of(by.intervals).measure();
}

int GeneralizedBasis::physical_y_level(int index_level) const {
    if (standard_) return index_level;
    int deepest = 0;
    for (const auto& [l, blk] : y_blocks_)
        deepest = std::max(deepest,
                           blk.intervals.max_level() + std::max(0, index_level - l.level()));
    return deepest;
}

int GeneralizedBasis::physical_x_level(int index_level) const {
    if (standard_) return index_level;
    int deepest = 0;
    for (const auto& [k, blk] : x_blocks_)
        deepest = std::max(deepest,
                           blk.intervals.max_level() + std::max(0, index_level - k.level()));
    return deepest;
}

namespace {

std::string rect_label(const DyadicRectangle& r) {
    std::ostringstream os;
    os << "(" << r.x().pos() << "/2^" << r.x().level() << ")x(" << r.y().pos() << "/2^"
       << r.y().level() << ")";
    return os.str();
}

// Σ u_Q v_Q |Q| over coefficient maps (role-agnostic).
double coeff_pairing(const HaarVector& u, const HaarVector& v) {
    double s = 0.0;
    const auto& a = u.coeffs();
    const auto& b = v.coeffs();
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i].first < b[j].first)
            ++i;
        else if (b[j].first < a[i].first)
            ++j;
        else {
            s += a[i].second * b[j].second * a[i].first.measure().to_double();
            ++i;
            ++j;
        }
    }
    return s;
}

struct StepEntry {
    DyadicRectangle R;
    IntervalCollection ys;
    std::vector<std::int8_t> signs;
    HaarVector b;
    IntervalSet y_ptset;
    IntervalCollection phys_x, phys_y;
    DyadicRational l2sq;
};

// Scaled frequency sources of one induction step; aggregated absolute coefficients in
// the standard-basis mode, raw vectors otherwise.
struct StepSources {
    bool aggregated = false;
    std::vector<std::pair<DyadicRectangle, double>> agg;
    std::vector<HaarVector> raw;

    double weight(const DyadicRectangle& q, const GeneralizedBasis& basis, int phys_m,
                  int phys_n) const {
        if (aggregated) {
            auto it = std::lower_bound(
                agg.begin(), agg.end(), q,
                [](const auto& e, const DyadicRectangle& r) { return e.first < r; });
            if (it == agg.end() || it->first != q) return 0.0;
            return it->second * q.measure().to_double();
        }
        const HaarVector hq = basis.expand(q, phys_m, phys_n);
        double f = 0.0;
        for (const auto& src : raw) f += std::abs(coeff_pairing(src, hq));
        return f;
    }
};

std::vector<std::int8_t> greedy_signs(std::size_t n,
                                      const std::function<double(std::size_t, std::size_t)>& cross) {
    // Fix signs one at a time keeping the conditional mean of the cross term
    // Σ_{i≠j} ε_i ε_j c_ij nonnegative: ε_t = sign(Σ_{i<t} ε_i (c_it + c_ti)).
    std::vector<std::int8_t> eps(n, 1);
    for (std::size_t t = 1; t < n; ++t) {
        double s = 0.0;
        for (std::size_t i = 0; i < t; ++i) s += eps[i] * (cross(i, t) + cross(t, i));
        eps[t] = (s >= 0.0) ? 1 : -1;
    }
    return eps;
}

// Same greedy with the cross terms read off T's sparse entries; rects must be sorted.
std::vector<std::int8_t> greedy_signs_sparse(const std::vector<DyadicRectangle>& rects,
                                             const HaarOperator& t) {
    const std::size_t n = rects.size();
    std::vector<std::int8_t> eps(n, 1);
    std::vector<double> running(n, 0.0);
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    auto find_idx = [&](const DyadicRectangle& q) -> std::ptrdiff_t {
        auto it = std::lower_bound(rects.begin(), rects.end(), q);
        if (it != rects.end() && *it == q) return it - rects.begin();
        return -1;
    };
    for (const auto& en : t.entries()) {
        const auto i = find_idx(en.row);
        const auto j = find_idx(en.col);
        if (i < 0 || j < 0 || i == j) continue;
        // c_{ij} = <h_{Q_i}, T h_{Q_j}> = t[Q_i, Q_j] |Q_i|
        const double c = en.value * rects[std::size_t(i)].measure().to_double();
        adj[std::size_t(i)].emplace_back(std::size_t(j), c);
        adj[std::size_t(j)].emplace_back(std::size_t(i), c);
    }
    for (std::size_t tdx = 0; tdx < n; ++tdx) {
        if (tdx > 0) eps[tdx] = (running[tdx] >= 0.0) ? 1 : -1;
        for (const auto& [u, c] : adj[tdx])
            if (u > tdx) running[u] += eps[tdx] * c;
    }
    return eps;
}

}  // namespace

std::map<DyadicRectangle, int> select_signs(const RectangleCollection& block,
                                            const HaarOperator& t, double delta) {
    std::vector<DyadicRectangle> rects(block.begin(), block.end());
    for (const auto& q : rects)
        if (t.alpha(q) < delta)
            throw HypothesisError("select_signs: α_Q < δ at " + rect_label(q));
    auto cross = [&](std::size_t i, std::size_t j) -> double {
        if (i == j) return 0.0;
        return t.entry(rects[i], rects[j]) * rects[i].measure().to_double();
    };
    const auto eps = greedy_signs(rects.size(), cross);
    std::map<DyadicRectangle, int> out;
    for (std::size_t i = 0; i < rects.size(); ++i) out[rects[i]] = eps[i];
    return out;
}

EngineResult almost_diagonalize(const HaarOperator& t, const EngineParams& params,
                                const GeneralizedBasis& basis,
                                const std::vector<ExtraSource>& extras) {
    params.validate();
    const DyadicRational etap =
        derive_eta_prime(params.m, params.n, params.gamma_bound, params.eta);
    std::string warnings;

    {
        NormBracket nb = operator_norm_estimate(t, params.e, 1e-6, 300, 7);
        if (nb.lower > params.gamma_bound * (1.0 + 1e-9))
            throw HypothesisError("almost_diagonalize: certified ||T|| >= " +
                                  std::to_string(nb.lower) + " exceeds Γ = " +
                                  std::to_string(params.gamma_bound));
        if (nb.upper > params.gamma_bound) warnings += "operator norm bracket straddles Γ; ";
    }
    bool delta_checked = false;
    if (params.delta > 0.0 && basis.is_standard()) {
        DyadicRectangle w;
        if (t.find_alpha_below(params.delta, &w))
            throw HypothesisError("almost_diagonalize: <h_R, T h_R> < δ|R| at R = " +
                                  rect_label(w));
        delta_checked = true;
    }

    const std::uint64_t count = rect_order_count(params.m, params.n);
    const HaarOperator t_adj = t.adjoint();
    const std::size_t n_extra = extras.size();
    const int phys_m = t.m();
    const int phys_n = t.N();

    // Working index resolution: capped by nmax and by the resolution the operator is
    // defined at (no extrapolation of T).
    int index_cap = params.nmax;
    if (basis.is_standard()) {
        index_cap = std::min(index_cap, t.N());
    } else {
        while (index_cap > 0 && basis.physical_y_level(index_cap) > t.N()) --index_cap;
        if (index_cap == 0)
            throw ShapeError("almost_diagonalize: generalized basis too deep for the operator");
    }

    std::vector<StepEntry> entries;
    entries.reserve(count);
    std::vector<StepTrace> step_traces;
    int deepest = 0;

    for (std::uint64_t i0 = 0; i0 < count; ++i0) {
        const DyadicRectangle r0 = rect_order_inverse(i0, params.m, params.n);
        if (i0 == 0 && n_extra == 0) {
            // The induction starts at the unit square. (With extra frequency sources —
            // the annihilation variant — the first block passes the selection too, else
            // the projection retains everything the sources load on h_{[0,1)x[0,1)}.)
            StepEntry e0;
            e0.R = r0;
            e0.ys = IntervalCollection({DyadicInterval::unit()});
            e0.signs = {1};
            e0.b = basis.expand(DyadicRectangle::unit(), phys_m, phys_n);
            e0.y_ptset = IntervalSet::unit_interval();
            e0.phys_x = basis.x_block(DyadicInterval::unit()).intervals;
            e0.phys_y = basis.y_block(DyadicInterval::unit()).intervals;
            e0.l2sq = basis.l2sq(DyadicRectangle::unit());
            if (params.delta > 0.0 && !basis.is_standard()) {
                const double d0 = coeff_pairing(e0.b, t.apply(e0.b));
                if (d0 < params.delta * e0.l2sq.to_double())
                    throw HypothesisError(
                        "almost_diagonalize: generalized large-diagonal hypothesis fails at the "
                        "unit square");
            }
            step_traces.push_back({r0, 0, 0.0});
            entries.push_back(std::move(e0));
            continue;
        }

        const DyadicInterval I0 = r0.x();
        const DyadicInterval J0 = r0.y();
        const bool case1 = !I0.is_unit();

        // Intersection classes of P_{I0×J0}, keyed by (I, level of J); W(A) is the union
        // of the Y-pointsets in a class, W the intersection of all W(A). J-siblings share
        // P, hence W, γ and the cover cells.
        IntervalSet w = IntervalSet::unit_interval();
        int finest_p_level = 0;
        if (i0 > 0) {
            std::map<std::pair<DyadicInterval, int>, IntervalSet> class_union;
            for (std::uint64_t j = 0; j < i0; ++j) {
                const auto& rj = entries[j].R;
                const bool in_p = case1 ? (rj.x() != I0) : (rj.y().level() < J0.level());
                if (!in_p) continue;
                finest_p_level = std::max(finest_p_level, entries[j].ys.max_level());
                auto key = std::make_pair(rj.x(), rj.y().level());
                auto [it, fresh] = class_union.try_emplace(key, entries[j].y_ptset);
                if (!fresh) it->second = it->second.set_union(entries[j].y_ptset);
            }
            if (class_union.empty())
                throw DegeneracyError("almost_diagonalize: empty P at step " + std::to_string(i0));
            for (const auto& [key, u] : class_union) w = w.set_intersection(u);
        }

        // High-frequency cover at half the finest length appearing in P (the unit
        // interval itself for a selected first step).
        const int g = i0 == 0 ? 0 : finest_p_level + 1;
        if (g > index_cap)
            throw CapError("almost_diagonalize: resolution cap " + std::to_string(index_cap) +
                           " reached while forming the high-frequency cover at step " +
                           std::to_string(i0) + " (index " + rect_label(r0) + ")");
        const auto cells = w.level_cells_inside(g);
        if (cells.empty())
            throw DegeneracyError("almost_diagonalize: empty high-frequency cover W at step " +
                                  std::to_string(i0) + " (index " + rect_label(r0) + ")");

        const DyadicRational beta = I0.measure() * DyadicRational::pow2(-g);
        const double beta_d = beta.to_double();
        const std::size_t n_src = std::size_t(i0) + n_extra;
        // τ = η' β / (n_src 4^{i0+1}),  ρ = η' / 4^{i0}  (exact).
        const Rational tau_r = etap.to_rational() * beta.to_rational() /
                               (Rational(BigInt(n_src)) * Rational(BigInt(1) << (2 * (i0 + 1))));
        const double tau = tau_r.to_double();
        const DyadicRational rho(etap.mantissa(), etap.exponent() - 2 * int(i0));

        StepSources sources;
        sources.aggregated = basis.is_standard();
        {
            std::vector<std::pair<DyadicRectangle, double>> pool;
            for (std::uint64_t j = 0; j < i0; ++j) {
                const double ndual =
                    product_block_dual_norm(entries[j].phys_x, entries[j].phys_y, params.e);
                const double nprim =
                    product_block_norm(entries[j].phys_x, entries[j].phys_y, params.e);
                // x_j = β/(Γ n ||b_j||_*) T* b_j   and   y_j = β/(Γ n ||b_j||) T b_j
                const HaarVector xj = t_adj.apply(entries[j].b);
                const HaarVector yj = t.apply(entries[j].b);
                const double sx = beta_d / (params.gamma_bound * double(n_src) * ndual);
                const double sy = beta_d / (params.gamma_bound * double(n_src) * nprim);
                if (sources.aggregated) {
                    for (const auto& [q, a] : xj.coeffs()) pool.emplace_back(q, std::abs(a) * sx);
                    for (const auto& [q, a] : yj.coeffs()) pool.emplace_back(q, std::abs(a) * sy);
                } else {
                    sources.raw.push_back(xj.scaled(sx));
                    sources.raw.push_back(yj.scaled(sy));
                }
            }
            for (const auto& ex : extras) {
                const double s = beta_d / (double(n_src) * std::max(ex.norm_bound, 1e-300));
                if (sources.aggregated) {
                    for (const auto& [q, a] : ex.vec.coeffs())
                        pool.emplace_back(q, std::abs(a) * s);
                } else {
                    sources.raw.push_back(ex.vec.scaled(s));
                }
            }
            if (sources.aggregated) {
                std::sort(pool.begin(), pool.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
                for (const auto& [q, v] : pool) {
                    if (!sources.agg.empty() && sources.agg.back().first == q)
                        sources.agg.back().second += v;
                    else
                        sources.agg.emplace_back(q, v);
                }
            }
        }

        // The scan compares against τ|Q|; in generalized mode the threshold is
        // τ||h̃_Q||_2², folded into the weight as the ratio |Q|/||h̃_Q||_2².
        auto weight = [&](const DyadicRectangle& q) {
            double f = sources.weight(q, basis, phys_m, phys_n);
            if (!basis.is_standard())
                f *= q.measure().to_double() / basis.l2sq(q).to_double();
            return f;
        };

        std::vector<DyadicInterval> selected;
        for (const auto& l0 : cells) {
            const LevelSelection sel =
                select_level_y_weighted(weight, I0, l0, tau, rho, 1, index_cap);
            for (const auto& rect : sel.rects) selected.push_back(rect.y());
        }
        std::sort(selected.begin(), selected.end());

        // Case dispatch. Case 1 keeps frequencies inside the predecessor block's
        // pointset. Case 2 keeps frequencies in the left/right half of their cover cell
        // (the halving J-siblings share), within the parent's pointset. A selected first
        // step has no neighbour to respect.
        IntervalSet allowed;
        if (i0 == 0) {
            allowed = IntervalSet::unit_interval();
        } else if (case1) {
            const DyadicRectangle parent(I0.predecessor(), J0);
            allowed = entries[rect_order_index(parent, params.m, params.n)].y_ptset;
        } else {
            const DyadicRectangle parent(DyadicInterval::unit(), J0.predecessor());
            const IntervalSet& parent_pts =
                entries[rect_order_index(parent, params.m, params.n)].y_ptset;
            const bool left = J0.is_left_half_of_predecessor();
            std::vector<DyadicInterval> halves;
            halves.reserve(cells.size());
            for (const auto& l0 : cells)
                if (parent_pts.contains(l0))
                    halves.push_back(left ? l0.left_half() : l0.right_half());
            allowed = IntervalSet::of(IntervalCollection(std::move(halves)));
        }
        std::vector<DyadicInterval> kept;
        kept.reserve(selected.size());
        for (const auto& l : selected)
            if (allowed.contains(l)) kept.push_back(l);
        IntervalCollection ys(std::move(kept));
        if (ys.empty())
            throw DegeneracyError("almost_diagonalize: empty block at step " + std::to_string(i0) +
                                  " (index " + rect_label(r0) +
                                  "): selection vanished under the case restriction");

        std::vector<DyadicRectangle> rects;
        rects.reserve(ys.size());
        for (const auto& l : ys) rects.emplace_back(I0, l);
        std::vector<std::int8_t> signs(rects.size(), 1);
        if (params.delta > 0.0) {
            if (basis.is_standard()) {
                signs = greedy_signs_sparse(rects, t);
            } else {
                std::vector<HaarVector> expanded, images;
                expanded.reserve(rects.size());
                for (const auto& q : rects) {
                    expanded.push_back(basis.expand(q, phys_m, phys_n));
                    images.push_back(t.apply(expanded.back()));
                    const double dq = coeff_pairing(expanded.back(), images.back());
                    if (dq < params.delta * basis.l2sq(q).to_double())
                        throw HypothesisError(
                            "almost_diagonalize: generalized large-diagonal hypothesis fails at " +
                            rect_label(q));
                }
                auto cross = [&](std::size_t i, std::size_t j) -> double {
                    if (i == j) return 0.0;
                    return coeff_pairing(expanded[i], images[j]);
                };
                signs = greedy_signs(rects.size(), cross);
            }
        }

        step_traces.push_back({r0, g, tau});

        StepEntry e;
        e.R = r0;
        e.ys = ys;
        e.signs = signs;
        {
            HaarVectorBuilder bb(Role::function, phys_m, phys_n);
            DyadicRational l2(0);
            std::vector<DyadicInterval> py;
            for (std::size_t i = 0; i < rects.size(); ++i) {
                const HaarVector part = basis.expand(rects[i], phys_m, phys_n);
                for (const auto& [q, a] : part.coeffs()) bb.add(q, double(signs[i]) * a);
                l2 = l2 + basis.l2sq(rects[i]);
                const auto& yb = basis.y_block(rects[i].y()).intervals;
                py.insert(py.end(), yb.begin(), yb.end());
            }
            e.b = bb.build();
            e.l2sq = l2;
            e.phys_x = basis.x_block(I0).intervals;
            e.phys_y = IntervalCollection(std::move(py));
        }
        e.y_ptset = IntervalSet::of(ys);
        deepest = std::max(deepest, ys.max_level());
        entries.push_back(std::move(e));
    }

    std::vector<SignedBlock> blocks;
    blocks.reserve(entries.size());
    for (const auto& e : entries)
        blocks.emplace_back(e.R, IntervalCollection({e.R.x()}), e.ys, e.signs);
    EngineResult result;
    result.family = BlockBasisFamily(std::move(blocks));

    // Certificate: every pairing recomputed from (T, family) alone.
    DiagCertificate cert;
    cert.achieved_N = deepest;
    cert.eta_prime = etap;
    cert.warnings = warnings;
    cert.delta_checked_at_achieved_resolution = delta_checked;
    cert.steps = std::move(step_traces);

    std::vector<HaarVector> images;
    images.reserve(entries.size());
    for (const auto& e : entries) images.push_back(t.apply(e.b));
    bool all_pass = true;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        DiagRow row;
        row.R = entries[i].R;
        row.l2sq = entries[i].l2sq;
        for (std::size_t j = 0; j < entries.size(); ++j) {
            const double pairing = coeff_pairing(entries[i].b, images[j]);
            if (i == j)
                row.diag = pairing;
            else
                row.offdiag += std::abs(pairing);
        }
        const double l2 = row.l2sq.to_double();
        row.pass = row.offdiag <= params.eta * l2;
        if (params.delta > 0.0) row.pass = row.pass && row.diag >= params.delta * l2;
        all_pass = all_pass && row.pass;
        cert.rows.push_back(row);
    }
    cert.lpc = check_local_product(result.family);
    const Rational one_plus_eta = Rational(1) + Rational::from_double(params.eta);
    cert.pass = all_pass && cert.lpc.satisfied && cert.lpc.c_x == Rational(1) &&
                cert.lpc.c_y <= one_plus_eta;

    BlockVectors bv;
    for (const auto& e : entries) {
        bv.vecs.emplace_back(e.R, e.b);
        bv.l2sq.emplace(e.R, e.l2sq);
    }
    std::sort(bv.vecs.begin(), bv.vecs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    result.vectors = std::move(bv);
    result.certificate = std::move(cert);
    return result;
}

bool verify_frequency_thresholds(const HaarOperator& t, const EngineResult& result,
                                 const EngineParams& params, const GeneralizedBasis& basis,
                                 const std::vector<ExtraSource>& extras) {
    const HaarOperator t_adj = t.adjoint();
    const int phys_m = t.m(), phys_n = t.N();
    const std::uint64_t count = rect_order_count(params.m, params.n);
    if (result.certificate.steps.size() != count) return false;

    // Entries in construction order.
    std::vector<const SignedBlock*> ordered(count, nullptr);
    for (const auto& b : result.family.blocks())
        ordered[rect_order_index(b.R(), params.m, params.n)] = &b;
    for (const auto* p : ordered)
        if (!p) return false;

    for (std::uint64_t i0 = 0; i0 < count; ++i0) {
        const StepTrace& tr = result.certificate.steps[i0];
        if (rect_order_index(tr.R, params.m, params.n) != i0) return false;
        if (tr.tau == 0.0 && i0 == 0) continue;  // unselected init block
        const std::size_t n_src = std::size_t(i0) + extras.size();
        const DyadicRational beta =
            tr.R.x().measure() * DyadicRational::pow2(-tr.cover_level);
        const double beta_d = beta.to_double();

        std::vector<HaarVector> sources;
        for (std::uint64_t j = 0; j < i0; ++j) {
            const SignedBlock& bj = *ordered[j];
            IntervalCollection px = basis.x_block(bj.R().x()).intervals;
            std::vector<DyadicInterval> pyv;
            for (const auto& l : bj.Y()) {
                const auto& yb = basis.y_block(l).intervals;
                pyv.insert(pyv.end(), yb.begin(), yb.end());
            }
            IntervalCollection py(std::move(pyv));
            const HaarVector& vb = result.vectors.of(bj.R());
            const double ndual = product_block_dual_norm(px, py, params.e);
            const double nprim = product_block_norm(px, py, params.e);
            sources.push_back(
                t_adj.apply(vb).scaled(beta_d / (params.gamma_bound * double(n_src) * ndual)));
            sources.push_back(
                t.apply(vb).scaled(beta_d / (params.gamma_bound * double(n_src) * nprim)));
        }
        for (const auto& ex : extras)
            sources.push_back(ex.vec.scaled(beta_d / (double(n_src) * std::max(ex.norm_bound, 1e-300))));

        const SignedBlock& blk = *ordered[i0];
        for (const auto& l : blk.Y()) {
            const DyadicRectangle q(blk.R().x(), l);
            const HaarVector hq = basis.expand(q, phys_m, phys_n);
            double f = 0.0;
            for (const auto& src : sources) f += std::abs(coeff_pairing(src, hq));
            const double cap = tr.tau * basis.l2sq(q).to_double();
            // Standard basis: l2sq(h_Q) = |Q|, so this is exactly f(Q) <= τ|Q|.
            if (f > cap * (1.0 + 1e-9) + 1e-300) return false;
        }
    }
    return true;
}

bool verify_measure_recursion(const BlockBasisFamily& fam, const DyadicRational& eta_prime,
                              std::string* witness) {
    const Rational shrink = Rational(1) - eta_prime.to_rational();
    for (const auto& outer : fam.blocks()) {
        for (const auto& inner : fam.blocks()) {
            if (inner.R() == outer.R()) continue;
            if (!(outer.R().x().contains(inner.R().x()) && outer.R().y().contains(inner.R().y())))
                continue;
            const Rational factor =
                inner.R().y().measure().to_rational() / outer.R().y().measure().to_rational();
            for (const auto& l : outer.Y()) {
                const Rational cut = inner.y_pointset().intersection_measure(l).to_rational();
                const Rational lmeas = l.measure().to_rational();
                const Rational lower = factor * shrink * lmeas;
                const Rational upper = factor * lmeas;
                if (cut < lower || cut > upper) {
                    if (witness) {
                        std::ostringstream os;
                        os << "measure recursion fails: inner " << rect_label(inner.R())
                           << " outer " << rect_label(outer.R()) << " L level " << l.level()
                           << " pos " << l.pos() << ": |L ∩ Y| = " << cut.to_string()
                           << " outside [" << lower.to_string() << ", " << upper.to_string()
                           << "]";
                        *witness = os.str();
                    }
                    return false;
                }
            }
        }
    }
    return true;
}

AnnihilationResult annihilating_projection(const std::vector<HaarVector>& subspace,
                                           const EngineParams& params, int dim_cap,
                                           std::size_t net_cap) {
    const std::size_t d = subspace.size();
    if (int(d) > dim_cap)
        throw CapError("annihilating_projection: subspace dimension " + std::to_string(d) +
                       " exceeds the cap " + std::to_string(dim_cap));
    int phys_m = params.m;
    const int phys_n = params.nmax;
    for (const auto& f : subspace) {
        if (f.role() != Role::function)
            throw RoleError("annihilating_projection: subspace vectors must be functions");
        phys_m = std::max(phys_m, f.m());
        if (f.N() > params.nmax)
            throw ShapeError("annihilating_projection: subspace deeper than nmax");
    }

    // L²-orthonormal basis of F (detects linear dependence).
    std::vector<HaarVector> ortho;
    for (const auto& f : subspace) {
        HaarVector v(Role::function, phys_m, phys_n, f.coeffs());
        for (const auto& u : ortho) {
            const double c = coeff_pairing(u, v);
            v = v.plus(u.scaled(-c));
        }
        const double n2 = v.l2sq();
        if (n2 <= 1e-24)
            throw HypothesisError("annihilating_projection: subspace vectors are dependent");
        ortho.push_back(v.scaled(1.0 / std::sqrt(n2)));
    }

    // η/2-net of the unit ball of F: a lattice over the coefficient box [-B_i, B_i] with
    // step η/(2 Σ||u_i||); rounding any ball point to the lattice moves it by at most
    // η/2 in norm.
    std::vector<HaarVector> net;
    if (!ortho.empty()) {
        const Exponents& e = params.e;
        std::vector<double> bnd(d), norms(d);
        double norm_sum = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            norms[i] = mixed_norm(ortho[i], e);
            bnd[i] = mixed_norm_pq(ortho[i].with_role(Role::function), e.p_conj(), e.q_conj());
            norm_sum += norms[i];
        }
        const double step = params.eta / (2.0 * norm_sum);
        std::vector<long> lo(d), hi(d);
        double total = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            hi[i] = long(std::ceil(bnd[i] / step)) + 1;
            lo[i] = -hi[i];
            total *= double(hi[i] - lo[i] + 1);
        }
        if (total > double(net_cap))
            throw CapError("annihilating_projection: net size exceeds the cap");
        std::vector<long> idx = lo;
        while (true) {
            HaarVector point(Role::function, phys_m, phys_n);
            for (std::size_t i = 0; i < d; ++i)
                if (idx[i] != 0) point = point.plus(ortho[i].scaled(double(idx[i]) * step));
            if (!point.is_zero()) {
                const double nn = mixed_norm(point, e);
                if (nn <= 1.0 + params.eta / 2.0) net.push_back(point);
            }
            std::size_t k = 0;
            while (k < d && idx[k] == hi[k]) {
                idx[k] = lo[k];
                ++k;
            }
            if (k == d) break;
            ++idx[k];
        }
    }

    std::vector<ExtraSource> extras;
    extras.reserve(net.size());
    for (const auto& y : net)
        extras.push_back({y, std::max(mixed_norm(y, params.e), 1e-12)});

    EngineParams run = params;
    run.delta = 0.0;  // no large diagonal needed: all signs +1
    const HaarOperator zero(phys_m, phys_n, {}, 0.0);
    EngineResult er = almost_diagonalize(zero, run, GeneralizedBasis::standard(), extras);

    AnnihilationResult out;
    out.family = std::move(er.family);
    out.certificate = std::move(er.certificate);
    out.vectors = std::move(er.vectors);
    out.net = std::move(net);
    return out;
}

}  // namespace haarfactor
