#include "haarfactor/block_basis.hpp"

#include <algorithm>
#include <sstream>

#include "haarfactor/estimate.hpp"

namespace haarfactor {

namespace {

std::string ivl_str(const DyadicInterval& i) {
    std::ostringstream os;
    os << "[" << i.pos() << "/2^" << i.level() << ")";
    return os.str();
}

std::string rect_str(const DyadicRectangle& r) {
    return ivl_str(r.x()) + "x" + ivl_str(r.y());
}

}  // namespace

SignedBlock::SignedBlock(DyadicRectangle r, IntervalCollection x, IntervalCollection y,
                         std::vector<std::int8_t> signs)
    : r_(r), x_(std::move(x)), y_(std::move(y)), signs_(std::move(signs)) {
    if (x_.empty() || y_.empty())
        throw DegeneracyError("SignedBlock: empty X or Y collection for index " + rect_str(r_));
    if (signs_.size() != x_.size() * y_.size())
        throw ShapeError("SignedBlock: sign grid size mismatch for index " + rect_str(r_));
    for (auto s : signs_)
        if (s != 1 && s != -1) throw DomainError("SignedBlock: signs must be ±1");
    x_set_ = IntervalSet::of(x_);
    y_set_ = IntervalSet::of(y_);
}

SignedBlock::SignedBlock(DyadicRectangle r, IntervalCollection x, IntervalCollection y)
    : SignedBlock(r, x, y, std::vector<std::int8_t>(x.size() * y.size(), 1)) {}

int SignedBlock::sign_of(const DyadicInterval& k, const DyadicInterval& l) const {
    auto ix = std::lower_bound(x_.begin(), x_.end(), k) - x_.begin();
    auto iy = std::lower_bound(y_.begin(), y_.end(), l) - y_.begin();
    if (std::size_t(ix) >= x_.size() || x_[ix] != k || std::size_t(iy) >= y_.size() || y_[iy] != l)
        throw DomainError("SignedBlock: rectangle not in block");
    return sign_at(ix, iy);
}

BlockBasisFamily::BlockBasisFamily(std::vector<SignedBlock> blocks) : blocks_(std::move(blocks)) {
    std::sort(blocks_.begin(), blocks_.end(),
              [](const SignedBlock& a, const SignedBlock& b) { return a.R() < b.R(); });
    std::vector<DyadicRectangle> idx;
    idx.reserve(blocks_.size());
    for (const auto& b : blocks_) {
        if (!idx.empty() && idx.back() == b.R())
            throw DomainError("BlockBasisFamily: duplicate index rectangle " + rect_str(b.R()));
        idx.push_back(b.R());
        idx_m_ = std::max(idx_m_, b.R().x().level());
        idx_n_ = std::max(idx_n_, b.R().y().level());
        phys_m_ = std::max(phys_m_, b.X().max_level());
        phys_n_ = std::max(phys_n_, b.Y().max_level());
    }
    index_ = RectangleCollection(std::move(idx));
    for (const auto& b : blocks_) {
        auto [itx, newx] = x_point_.try_emplace(b.R().x(), b.x_pointset());
        if (!newx) itx->second = itx->second.set_union(b.x_pointset());
        auto [ity, newy] = y_point_.try_emplace(b.R().y(), b.y_pointset());
        if (!newy) ity->second = ity->second.set_union(b.y_pointset());
    }
}

bool BlockBasisFamily::has_block(const DyadicRectangle& r) const {
    return index_.contains(r);
}

const SignedBlock& BlockBasisFamily::block(const DyadicRectangle& r) const {
    auto it = std::lower_bound(blocks_.begin(), blocks_.end(), r,
                               [](const SignedBlock& b, const DyadicRectangle& q) { return b.R() < q; });
    if (it == blocks_.end() || it->R() != r)
        throw DomainError("BlockBasisFamily: no block for " + rect_str(r));
    return *it;
}

const IntervalSet& BlockBasisFamily::x_pointset_of(const DyadicInterval& i) const {
    auto it = x_point_.find(i);
    if (it == x_point_.end()) throw DomainError("x_pointset_of: no such index interval");
    return it->second;
}

const IntervalSet& BlockBasisFamily::y_pointset_of(const DyadicInterval& j) const {
    auto it = y_point_.find(j);
    if (it == y_point_.end()) throw DomainError("y_pointset_of: no such index interval");
    return it->second;
}

BlockBasisFamily BlockBasisFamily::identity(int m, int n) {
    std::vector<SignedBlock> blocks;
    for (const auto& r : RectangleCollection::full_grid(m, n))
        blocks.emplace_back(r, IntervalCollection({r.x()}), IntervalCollection({r.y()}));
    return BlockBasisFamily(std::move(blocks));
}

namespace {

Rational ratio_of(const DyadicRational& a, const DyadicRational& b) {
    return a.to_rational() / b.to_rational();
}

}  // namespace

LpcReport check_local_product(const BlockBasisFamily& fam, std::size_t triple_cap) {
    return check_local_product_scaled(fam, Rational(1), Rational(1), triple_cap);
}

LpcReport check_local_product_scaled(const BlockBasisFamily& fam, const Rational& sx,
                                     const Rational& sy, std::size_t triple_cap) {
    LpcReport rep;
    rep.c_x = Rational(1);
    rep.c_y = Rational(1);
    const auto& blocks = fam.blocks();

    // (P1) within each block: the product rectangles are pairwise disjoint, which for a
    // product grid means both axes are pairwise disjoint.
    for (const auto& b : blocks) {
        if (!b.X().pairwise_disjoint() || !b.Y().pairwise_disjoint()) {
            rep.violation = {"P1", "overlapping intervals inside block " + rect_str(b.R())};
            return rep;
        }
    }
    // (P1) across blocks: no shared rectangle.
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        for (std::size_t j = i + 1; j < blocks.size(); ++j) {
            if (!blocks[i].X().set_disjoint(blocks[j].X()) &&
                !blocks[i].Y().set_disjoint(blocks[j].Y())) {
                rep.violation = {"P1", "blocks " + rect_str(blocks[i].R()) + " and " +
                                           rect_str(blocks[j].R()) + " share a rectangle"};
                return rep;
            }
        }
    }

    // (P2): for triples with I0∪I1 ⊂ I disjointly and J0∪J1 ⊂ J disjointly.
    for (std::size_t a = 0; a < blocks.size(); ++a) {
        const auto& I = blocks[a].R().x();
        const auto& J = blocks[a].R().y();
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (b == a) continue;
            const auto& I0 = blocks[b].R().x();
            const auto& J0 = blocks[b].R().y();
            if (!(I.contains(I0) && J.contains(J0))) continue;
            for (std::size_t c = b + 1; c < blocks.size(); ++c) {
                if (c == a) continue;
                const auto& I1 = blocks[c].R().x();
                const auto& J1 = blocks[c].R().y();
                if (!(I.contains(I1) && J.contains(J1))) continue;
                if (I0.intersects(I1) || J0.intersects(J1)) continue;
                if (++rep.checked_triples > triple_cap)
                    throw CapError("check_local_product: P2 triple cap exceeded");
                const auto& XI0 = fam.x_pointset_of(I0);
                const auto& XI1 = fam.x_pointset_of(I1);
                const auto& XI = fam.x_pointset_of(I);
                const auto& YJ0 = fam.y_pointset_of(J0);
                const auto& YJ1 = fam.y_pointset_of(J1);
                const auto& YJ = fam.y_pointset_of(J);
                if (!XI0.disjoint(XI1)) {
                    rep.violation = {"P2", "X_{" + ivl_str(I0) + "} meets X_{" + ivl_str(I1) + "}"};
                    return rep;
                }
                if (!XI.contains_set(XI0.set_union(XI1))) {
                    rep.violation = {"P2", "X_{" + ivl_str(I0) + "} ∪ X_{" + ivl_str(I1) +
                                               "} not inside X_{" + ivl_str(I) + "}"};
                    return rep;
                }
                if (!YJ0.disjoint(YJ1)) {
                    rep.violation = {"P2", "Y_{" + ivl_str(J0) + "} meets Y_{" + ivl_str(J1) + "}"};
                    return rep;
                }
                if (!YJ.contains_set(YJ0.set_union(YJ1))) {
                    rep.violation = {"P2", "Y_{" + ivl_str(J0) + "} ∪ Y_{" + ivl_str(J1) +
                                               "} not inside Y_{" + ivl_str(J) + "}"};
                    return rep;
                }
            }
        }
    }

    // (P3): C_X^{-1} sx|I| <= |X_I| <= C_X sx|I|, and the same for Y_J with sy.
    for (const auto& b : blocks) {
        Rational up = fam.x_pointset_of(b.R().x()).measure().to_rational() /
                      (sx * b.R().x().measure().to_rational());
        Rational dn = up.reciprocal();
        if (up > rep.c_x) rep.c_x = up;
        if (dn > rep.c_x) rep.c_x = dn;
        up = fam.y_pointset_of(b.R().y()).measure().to_rational() /
             (sy * b.R().y().measure().to_rational());
        dn = up.reciprocal();
        if (up > rep.c_y) rep.c_y = up;
        if (dn > rep.c_y) rep.c_y = dn;
    }

    // (P4): proportional intersections for nested index pairs.
    for (const auto& outer : blocks) {
        const auto& I = outer.R().x();
        const auto& J = outer.R().y();
        for (const auto& inner : blocks) {
            const auto& I0 = inner.R().x();
            const auto& J0 = inner.R().y();
            if (!(I.contains(I0) && J.contains(J0))) continue;
            const auto& XI0 = fam.x_pointset_of(I0);
            const auto& XI = fam.x_pointset_of(I);
            const Rational rx = ratio_of(XI0.measure(), XI.measure());
            for (const auto& K : outer.X()) {
                const DyadicRational cut = XI0.intersection_measure(K);
                if (cut.is_zero()) {
                    rep.violation = {"P4", "K = " + ivl_str(K) + " misses X_{" + ivl_str(I0) + "}"};
                    return rep;
                }
                // C_X >= (|X_{I0}|/|X_I|) * (|K| / |K ∩ X_{I0}|)
                const Rational c = rx * ratio_of(K.measure(), cut);
                if (c > rep.c_x) rep.c_x = c;
            }
            const auto& YJ0 = fam.y_pointset_of(J0);
            const auto& YJ = fam.y_pointset_of(J);
            const Rational ry = ratio_of(YJ0.measure(), YJ.measure());
            for (const auto& L : outer.Y()) {
                const DyadicRational cut = YJ0.intersection_measure(L);
                if (cut.is_zero()) {
                    rep.violation = {"P4", "L = " + ivl_str(L) + " misses Y_{" + ivl_str(J0) + "}"};
                    return rep;
                }
                const Rational c = ry * ratio_of(L.measure(), cut);
                if (c > rep.c_y) rep.c_y = c;
            }
        }
    }

    rep.satisfied = true;
    return rep;
}

bool check_with_constants(const BlockBasisFamily& fam, const Rational& c_x, const Rational& c_y,
                          std::size_t triple_cap) {
    LpcReport rep = check_local_product(fam, triple_cap);
    return rep.satisfied && rep.c_x <= c_x && rep.c_y <= c_y;
}

HaarVector build_block_vector(const SignedBlock& b, int phys_m, int phys_n) {
    HaarVectorBuilder out(Role::function, phys_m, phys_n);
    for (std::size_t ix = 0; ix < b.X().size(); ++ix)
        for (std::size_t iy = 0; iy < b.Y().size(); ++iy)
            out.add(DyadicRectangle(b.X()[ix], b.Y()[iy]), double(b.sign_at(ix, iy)));
    return out.build();
}

DyadicRational block_l2sq(const SignedBlock& b) {
    // Σ_{Q in B_R} |Q| = |∪X| · |∪Y| for pairwise disjoint axes; computed as the plain
    // sum so it is valid for any block.
    DyadicRational total(0);
    DyadicRational ysum(0);
    for (const auto& l : b.Y()) ysum = ysum + l.measure();
    for (const auto& k : b.X()) total = total + k.measure() * ysum;
    return total;
}

const HaarVector& BlockVectors::of(const DyadicRectangle& r) const {
    auto it = std::lower_bound(vecs.begin(), vecs.end(), r,
                               [](const auto& e, const DyadicRectangle& q) { return e.first < q; });
    if (it == vecs.end() || it->first != r) throw DomainError("BlockVectors: no vector for index");
    return it->second;
}

BlockVectors build_block_basis(const BlockBasisFamily& fam) {
    BlockVectors out;
    out.vecs.reserve(fam.blocks().size());
    for (const auto& b : fam.blocks()) {
        out.vecs.emplace_back(b.R(), build_block_vector(b, fam.physical_m(), fam.physical_N()));
        out.l2sq.emplace(b.R(), block_l2sq(b));
    }
    return out;
}

HaarVector project_onto_block_basis(const BlockBasisFamily& fam, const HaarVector& f) {
    if (f.m() > fam.physical_m() || f.N() > fam.physical_N())
        throw ShapeError("project_onto_block_basis: input beyond family resolution");
    HaarVectorBuilder out(f.role(), fam.physical_m(), fam.physical_N());
    for (const auto& b : fam.blocks()) {
        // Pairing over the block grid; walk the sparser of the two index sets.
        double pairing = 0.0;
        if (f.support_size() < b.block_size()) {
            for (const auto& [q, a] : f.coeffs()) {
                auto ix = std::lower_bound(b.X().begin(), b.X().end(), q.x()) - b.X().begin();
                if (std::size_t(ix) >= b.X().size() || b.X()[ix] != q.x()) continue;
                auto iy = std::lower_bound(b.Y().begin(), b.Y().end(), q.y()) - b.Y().begin();
                if (std::size_t(iy) >= b.Y().size() || b.Y()[iy] != q.y()) continue;
                pairing += b.sign_at(ix, iy) * a * q.measure().to_double();
            }
        } else {
            for (std::size_t ix = 0; ix < b.X().size(); ++ix)
                for (std::size_t iy = 0; iy < b.Y().size(); ++iy) {
                    const DyadicRectangle q(b.X()[ix], b.Y()[iy]);
                    const double a = f.coeff(q);
                    if (a != 0.0) pairing += b.sign_at(ix, iy) * a * q.measure().to_double();
                }
        }
        if (pairing == 0.0) continue;
        const double scale = pairing / block_l2sq(b).to_double();
        for (std::size_t ix = 0; ix < b.X().size(); ++ix)
            for (std::size_t iy = 0; iy < b.Y().size(); ++iy)
                out.add(DyadicRectangle(b.X()[ix], b.Y()[iy]), scale * b.sign_at(ix, iy));
    }
    return out.build();
}

NormEquivalenceResult norm_equivalence_test(const BlockBasisFamily& fam, const Exponents& e,
                                            int trials, std::uint64_t seed) {
    {
        const LpcReport rep = check_local_product(fam);
        if (!rep.satisfied)
            throw HypothesisError("norm_equivalence_test: family violates " +
                                  rep.violation->condition + " (" + rep.violation->detail + ")");
    }
    NormEquivalenceResult res;
    Rng rng(seed);
    const BlockVectors bv = build_block_basis(fam);
    const int mi = fam.index_m(), ni = fam.index_n();

    for (int t = 0; t < trials; ++t) {
        HaarVectorBuilder hb(Role::function, mi, ni);
        HaarVector combo(Role::function, fam.physical_m(), fam.physical_N());
        for (const auto& [r, vec] : bv.vecs) {
            const double a = rng.symmetric();
            hb.add(r, a);
            combo = combo.plus(vec.scaled(a));
        }
        const HaarVector fh = hb.build();
        const double nh = mixed_norm(fh, e);
        const double nb = mixed_norm(combo, e);
        if (nh > 0.0 && nb > 0.0) {
            res.c_equiv = std::max({res.c_equiv, nb / nh, nh / nb});
        }

        // Companion measurement: projection bound on a random vector of the big space.
        HaarVectorBuilder pb(Role::function, fam.physical_m(), fam.physical_N());
        for (const auto& [r, vec] : bv.vecs)
            for (const auto& [q, a] : vec.coeffs())
                if (rng.uniform() < 0.5) pb.add(q, rng.symmetric());
        const HaarVector probe = pb.build();
        const double np = mixed_norm(probe, e);
        if (np > 0.0) {
            const double nq = mixed_norm(project_onto_block_basis(fam, probe), e);
            res.c_proj = std::max(res.c_proj, nq / np);
        }
    }
    return res;
}

BlockBasisFamily OuterTensorFamily::as_family() const {
    std::vector<SignedBlock> blocks;
    blocks.reserve(index.size());
    for (const auto& r : index) {
        auto ei = ex.find(r.x());
        auto fj = fy.find(r.y());
        if (ei == ex.end() || fj == fy.end())
            throw ShapeError("OuterTensorFamily: missing ℰ_I or ℱ_J for an index rectangle");
        blocks.emplace_back(r, ei->second, fj->second);
    }
    return BlockBasisFamily(std::move(blocks));
}

namespace {

void check_axis_hypotheses(const std::map<DyadicInterval, IntervalCollection>& per_interval,
                           const char* label) {
    // (i) each collection consists of pairwise disjoint intervals; collections attached
    // to distinct index intervals are disjoint as sets.
    for (const auto& [i, coll] : per_interval) {
        if (coll.empty())
            throw HypothesisError(std::string(label) + "_{" + ivl_str(i) + "} is empty");
        if (!coll.pairwise_disjoint())
            throw HypothesisError(std::string(label) + "_{" + ivl_str(i) +
                                  "} has overlapping intervals (hypothesis (i))");
    }
    for (auto a = per_interval.begin(); a != per_interval.end(); ++a)
        for (auto b = std::next(a); b != per_interval.end(); ++b)
            if (!a->second.set_disjoint(b->second))
                throw HypothesisError(std::string(label) + "_{" + ivl_str(a->first) + "} and " +
                                      label + "_{" + ivl_str(b->first) +
                                      "} share an interval (hypothesis (i))");
    // (ii) nesting lifts to element inclusion.
    for (const auto& [i0, c0] : per_interval)
        for (const auto& [i1, c1] : per_interval) {
            if (i0 == i1 || !i1.contains(i0)) continue;
            for (const auto& e0 : c0) {
                bool found = false;
                for (const auto& e1 : c1)
                    if (e1.contains(e0)) {
                        found = true;
                        break;
                    }
                if (!found)
                    throw HypothesisError(std::string(label) + ": element " + ivl_str(e0) + " of " +
                                          label + "_{" + ivl_str(i0) +
                                          "} has no superset in the collection at " + ivl_str(i1) +
                                          " (hypothesis (ii))");
            }
        }
}

}  // namespace

void check_reiteration_hypotheses(const OuterTensorFamily& outer) {
    check_axis_hypotheses(outer.ex, "E");
    check_axis_hypotheses(outer.fy, "F");
}

BlockBasisFamily reiterate(const OuterTensorFamily& outer, const BlockBasisFamily& inner) {
    check_reiteration_hypotheses(outer);
    {
        LpcReport rep = check_local_product(outer.as_family());
        if (!rep.satisfied)
            throw HypothesisError("reiterate: outer family violates " + rep.violation->condition +
                                  " (" + rep.violation->detail + ")");
    }
    {
        LpcReport rep = check_local_product(inner);
        if (!rep.satisfied)
            throw HypothesisError("reiterate: inner family violates " + rep.violation->condition +
                                  " (" + rep.violation->detail + ")");
    }

    std::vector<SignedBlock> blocks;
    blocks.reserve(outer.index.size());
    for (const auto& r : outer.index) {
        const IntervalCollection& es = outer.ex.at(r.x());
        const IntervalCollection& fs = outer.fy.at(r.y());
        IntervalCollection xt, yt;
        std::map<std::pair<DyadicInterval, DyadicInterval>, int> signs;
        for (const auto& e : es)
            for (const auto& f : fs) {
                const DyadicRectangle ef(e, f);
                if (!inner.has_block(ef))
                    throw ShapeError("reiterate: inner family lacks a block for " + rect_str(ef));
                const SignedBlock& ib = inner.block(ef);
                xt = xt.set_union(ib.X());
                yt = yt.set_union(ib.Y());
                for (std::size_t ix = 0; ix < ib.X().size(); ++ix)
                    for (std::size_t iy = 0; iy < ib.Y().size(); ++iy)
                        signs[{ib.X()[ix], ib.Y()[iy]}] = ib.sign_at(ix, iy);
            }
        // The lemma's identity B̃ = X̃ × Ỹ: every grid pair must have been contributed.
        if (signs.size() != xt.size() * yt.size())
            throw DegeneracyError("reiterate: composed block at " + rect_str(r) +
                                  " is not a product collection");
        std::vector<std::int8_t> grid(xt.size() * yt.size(), 1);
        for (std::size_t ix = 0; ix < xt.size(); ++ix)
            for (std::size_t iy = 0; iy < yt.size(); ++iy) {
                auto it = signs.find({xt[ix], yt[iy]});
                if (it == signs.end())
                    throw DegeneracyError("reiterate: composed block at " + rect_str(r) +
                                          " is not a product collection");
                grid[ix * yt.size() + iy] = std::int8_t(it->second);
            }
        blocks.emplace_back(r, std::move(xt), std::move(yt), std::move(grid));
    }
    return BlockBasisFamily(std::move(blocks));
}

BlockBasisFamily restrict_family(const BlockBasisFamily& fam, const RectangleCollection& indices) {
    std::vector<SignedBlock> blocks;
    blocks.reserve(indices.size());
    for (const auto& r : indices) blocks.push_back(fam.block(r));
    return BlockBasisFamily(std::move(blocks));
}

}  // namespace haarfactor
