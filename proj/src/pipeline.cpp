#include "haarfactor/pipeline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "haarfactor/estimate.hpp"

namespace haarfactor {

namespace {

std::string rect_label(const DyadicRectangle& r) {
    std::ostringstream os;
    os << "(" << r.x().pos() << "/2^" << r.x().level() << ")x(" << r.y().pos() << "/2^"
       << r.y().level() << ")";
    return os.str();
}

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

// Exact p=q=2 operator norms of the factorization legs via the block Gram structure
// (the ambient dimension is far too large for a dense SVD, but the b_R have disjoint
// supports, so the Grams are tiny).
double norm_E_l2(const std::vector<DyadicRectangle>& small_rects, const std::vector<double>& l2) {
    double best = 0.0;
    for (std::size_t i = 0; i < small_rects.size(); ++i)
        best = std::max(best, std::sqrt(l2[i] / small_rects[i].measure().to_double()));
    return best;
}

double norm_P_l2(const std::vector<DyadicRectangle>& small_rects, const Eigen::MatrixXd& minv,
                 const std::vector<double>& d, const std::vector<double>& l2) {
    const int n = int(small_rects.size());
    // w_R = Sum_{R''} Minv[R,R''] b_{R''} / d_{R''}; <w_R, w_S> diagonalizes over the
    // disjoint blocks.
    Eigen::MatrixXd gram(n, n);
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
            double acc = 0.0;
            for (int k = 0; k < n; ++k) acc += minv(r, k) * minv(s, k) * l2[k] / (d[k] * d[k]);
            gram(r, s) = acc * std::sqrt(small_rects[r].measure().to_double() *
                                         small_rects[s].measure().to_double());
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

struct AssembledFactorization {
    HaarOperator E;
    HaarOperator P;
    double residual = 0.0;
    double condition = 0.0;
    double invertibility_ratio = 0.0;
    NormBracket norm_E;
    NormBracket norm_P;
};

// Common assembly: given H and block vectors b_R (already carrying every sign
// correction) with d_R = <b_R, H b_R> away from zero, build E : h_R -> b_R and
// P = E^{-1} (U H J)^{-1} U where U f = Sum <b_R, f>/d_R b_R.
AssembledFactorization assemble(const HaarOperator& h,
                                const std::vector<DyadicRectangle>& small_rects,
                                const std::vector<const HaarVector*>& b,
                                const std::vector<double>& l2,
                                const FactorizationParams& params) {
    const int n = int(small_rects.size());
    std::vector<HaarVector> images(n);
    for (int j = 0; j < n; ++j) images[j] = h.apply(*b[j]);

    Eigen::MatrixXd m(n, n);
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) {
        d[i] = coeff_pairing(*b[i], images[i]);
        if (d[i] == 0.0)
            throw DegeneracyError("factorization: vanishing diagonal pairing at " +
                                  rect_label(small_rects[i]));
    }
    double offmass = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            m(i, j) = coeff_pairing(*b[i], images[j]) / d[i];
            if (i != j) row += std::abs(m(i, j));
        }
        offmass = std::max(offmass, row);
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible())
        throw DegeneracyError("factorization: (UTJ) is numerically singular; measured "
                              "off-diagonal row mass " +
                              std::to_string(offmass));
    const Eigen::MatrixXd minv = lu.inverse();
    const double cond = m.norm() * minv.norm();

    AssembledFactorization out;
    out.condition = cond;
    out.invertibility_ratio = offmass;

    const int big_m = h.m(), big_n = h.N();
    {
        std::vector<HaarOperator::Entry> entries;
        for (int j = 0; j < n; ++j)
            for (const auto& [q, a] : b[j]->coeffs()) entries.push_back({q, small_rects[j], a});
        out.E = HaarOperator(big_m, big_n, std::move(entries), 0.0);
    }
    {
        // p[R, Q] = Sum_{R''} Minv[R,R''] b_{R''}[Q] |Q| / d_{R''}
        std::vector<HaarOperator::Entry> entries;
        for (int k = 0; k < n; ++k)
            for (const auto& [q, a] : b[k]->coeffs()) {
                const double w = a * q.measure().to_double() / d[k];
                for (int r = 0; r < n; ++r) {
                    const double v = minv(r, k) * w;
                    if (v != 0.0) entries.push_back({small_rects[r], q, v});
                }
            }
        out.P = HaarOperator(big_m, big_n, std::move(entries), 0.0);
    }

    // Identity residual on every basis vector, in the run's norm.
    for (int i = 0; i < n; ++i) {
        const HaarVector hi = HaarVector::basis(Role::function, big_m, big_n, small_rects[i]);
        const HaarVector back = out.P.apply(h.apply(out.E.apply(hi)));
        const HaarVector diff = back.plus(hi.scaled(-1.0));
        out.residual = std::max(out.residual, mixed_norm(diff, params.e));
    }

    if (params.e.p == 2.0 && params.e.q == 2.0) {
        const double ne = norm_E_l2(small_rects, l2);
        const double np = norm_P_l2(small_rects, minv, d, l2);
        out.norm_E = {ne, ne, true, HaarVector()};
        out.norm_P = {np, np, true, HaarVector()};
    } else {
        out.norm_E = operator_norm_estimate(out.E, params.e, params.tol, params.budget,
                                            params.seed + 11);
        out.norm_P = operator_norm_estimate(out.P, params.e, params.tol, params.budget,
                                            params.seed + 13);
    }
    return out;
}

}  // namespace

FactorizationResult local_factorization(const HaarOperator& t, double delta,
                                        const FactorizationParams& params) {
    if (!(delta > 0.0)) throw DomainError("local_factorization: delta must be positive");

    FactorizationResult res;
    res.m = params.m;
    res.n = params.n;

    // T = shift * Id factors through itself with no enlargement: E the coefficient
    // inclusion, P the restriction scaled by 1/shift.
    if (t.entries().empty() && std::abs(t.shift()) >= delta) {
        const double s = t.shift();
        std::vector<HaarOperator::Entry> e_entries, p_entries;
        auto small_rects = RectangleCollection::full_grid(params.m, params.n);
        for (const auto& r : small_rects) {
            e_entries.push_back({r, r, 1.0});
            p_entries.push_back({r, r, 1.0 / s});
        }
        res.E = HaarOperator(t.m(), t.N(), std::move(e_entries), 0.0);
        res.P = HaarOperator(t.m(), t.N(), std::move(p_entries), 0.0);
        res.h_choice = HChoice::T;
        res.norm_E = {1.0, 1.0, true, HaarVector()};
        res.norm_P = {1.0 / std::abs(s), 1.0 / std::abs(s), true, HaarVector()};
        res.residual = 0.0;
        res.condition = 1.0;
        res.invertibility_ratio = 0.0;
        res.big_N = t.N();
        DiagCertificate cert;
        cert.achieved_N = params.n;
        cert.eta_prime = derive_eta_prime(params.m, params.n, params.gamma_bound, params.eta);
        for (const auto& r : small_rects) {
            DiagRow row;
            row.R = r;
            row.diag = s * r.measure().to_double();
            row.offdiag = 0.0;
            row.l2sq = r.measure();
            row.pass = true;
            cert.rows.push_back(row);
        }
        cert.lpc = check_local_product(BlockBasisFamily::identity(params.m, params.n));
        cert.pass = true;
        res.diag_certificate = std::move(cert);
        return res;
    }

    DyadicRectangle witness;
    if (t.find_abs_alpha_below(delta, &witness))
        throw HypothesisError("local_factorization: |<h_R, T h_R>| < delta|R| at R = " +
                              rect_label(witness));
    if (t.shift() < 0.0)
        throw DomainError(
            "local_factorization: negative identity component; negate the operator instead");

    // Sign normalization M h_R = sign(<h_R, T h_R>) h_R; run the engine on T o M, which
    // has a nonnegative large diagonal. T o M flips the stored columns with negative
    // alpha and adds a -2*shift diagonal correction there.
    std::vector<HaarOperator::Entry> tm_entries;
    for (const auto& en : t.entries()) {
        const double sc = t.alpha(en.col) < 0.0 ? -1.0 : 1.0;
        tm_entries.push_back({en.row, en.col, en.value * sc});
    }
    for (const auto& en : t.entries())
        if (en.row == en.col && t.alpha(en.col) < 0.0)
            tm_entries.push_back({en.col, en.col, -2.0 * t.shift()});
    const HaarOperator tm(t.m(), t.N(), std::move(tm_entries), t.shift());

    EngineParams ep;
    ep.m = params.m;
    ep.n = params.n;
    ep.gamma_bound = params.gamma_bound;
    ep.eta = params.eta;
    ep.delta = delta;
    ep.e = params.e;
    ep.nmax = params.nmax;
    EngineResult er = almost_diagonalize(tm, ep);

    // Fold M into the block vectors: E = M o (h_R -> b_R), so every pairing below runs
    // against the original T.
    std::vector<HaarVector> corrected;
    corrected.reserve(er.vectors.vecs.size());
    for (const auto& [r, vec] : er.vectors.vecs) {
        std::vector<HaarVector::Entry> ce;
        ce.reserve(vec.coeffs().size());
        for (const auto& [q, a] : vec.coeffs())
            ce.emplace_back(q, t.alpha(q) < 0.0 ? -a : a);
        corrected.emplace_back(Role::function, vec.m(), vec.N(), std::move(ce));
    }

    std::vector<DyadicRectangle> small_rects;
    std::vector<const HaarVector*> bptr;
    std::vector<double> l2;
    for (std::size_t i = 0; i < er.vectors.vecs.size(); ++i) {
        small_rects.push_back(er.vectors.vecs[i].first);
        bptr.push_back(&corrected[i]);
        l2.push_back(er.vectors.l2sq.at(er.vectors.vecs[i].first).to_double());
    }

    AssembledFactorization asmb = assemble(t, small_rects, bptr, l2, params);
    res.E = std::move(asmb.E);
    res.P = std::move(asmb.P);
    res.h_choice = HChoice::T;
    res.norm_E = asmb.norm_E;
    res.norm_P = asmb.norm_P;
    res.residual = asmb.residual;
    res.condition = asmb.condition;
    res.invertibility_ratio = asmb.invertibility_ratio;
    res.diag_certificate = std::move(er.certificate);
    res.big_N = t.N();
    return res;
}

FactorizationResult factorize_with_family(const HaarOperator& h, const BlockBasisFamily& fam,
                                          const BlockVectors& vectors, double delta,
                                          const FactorizationParams& params, HChoice choice) {
    if (!(delta > 0.0)) throw DomainError("factorize_with_family: delta must be positive");
    std::vector<DyadicRectangle> small_rects;
    std::vector<const HaarVector*> bptr;
    std::vector<double> l2;
    for (const auto& [r, vec] : vectors.vecs) {
        small_rects.push_back(r);
        bptr.push_back(&vec);
        l2.push_back(vectors.l2sq.at(r).to_double());
    }
    for (std::size_t i = 0; i < small_rects.size(); ++i) {
        const double d = coeff_pairing(*bptr[i], h.apply(*bptr[i]));
        if (std::abs(d) < delta * l2[i])
            throw HypothesisError("factorize_with_family: |<b_R, H b_R>| < delta ||b_R||^2 at " +
                                  rect_label(small_rects[i]));
    }

    FactorizationResult res;
    res.m = fam.index_m();
    res.n = fam.index_n();
    res.big_N = h.N();
    res.h_choice = choice;
    AssembledFactorization asmb = assemble(h, small_rects, bptr, l2, params);
    res.E = std::move(asmb.E);
    res.P = std::move(asmb.P);
    res.norm_E = asmb.norm_E;
    res.norm_P = asmb.norm_P;
    res.residual = asmb.residual;
    res.condition = asmb.condition;
    res.invertibility_ratio = asmb.invertibility_ratio;
    res.diag_certificate.lpc = check_local_product(fam);
    return res;
}

RamseyResult ramsey_search(const RectColoring& coloring, const Rational& target) {
    const int n = coloring.n();
    const auto universe_coll = IntervalCollection::full_grid(n);
    std::vector<DyadicInterval> universe(universe_coll.begin(), universe_coll.end());
    const std::size_t s = universe.size();

    RamseyResult best;
    Rational best_value(-1);

    auto maximal_b = [&](const std::vector<DyadicInterval>& a, bool color) {
        std::vector<DyadicInterval> b;
        for (const auto& cand : universe) {
            bool ok = true;
            for (const auto& ai : a)
                if (coloring.color(DyadicRectangle(ai, cand)) != color) {
                    ok = false;
                    break;
                }
            if (ok) b.push_back(cand);
        }
        return b;
    };

    auto consider = [&](const std::vector<DyadicInterval>& a, const std::vector<DyadicInterval>& b,
                        bool color) -> Rational {
        if (a.empty() || b.empty()) return Rational(-1);
        const Rational ca = carleson_constant(IntervalCollection(a)).value.to_rational();
        const Rational cb = carleson_constant(IntervalCollection(b)).value.to_rational();
        const Rational v = ca < cb ? ca : cb;
        if (v > best_value) {
            best_value = v;
            best.a = IntervalCollection(a);
            best.b = IntervalCollection(b);
            best.color = color;
            best.carleson_a = carleson_constant(best.a).value;
            best.carleson_b = carleson_constant(best.b).value;
        }
        return v;
    };

    if (n <= 3) {
        // Exhaustive: for each A the best B for a color is the maximal admissible one
        // (the Carleson constant is monotone under enlargement).
        for (std::uint32_t mask = 1; mask < (1u << s); ++mask) {
            std::vector<DyadicInterval> a;
            for (std::size_t i = 0; i < s; ++i)
                if (mask & (1u << i)) a.push_back(universe[i]);
            for (int color = 0; color <= 1; ++color)
                consider(a, maximal_b(a, bool(color)), bool(color));
        }
        best.exhaustive = true;
    } else {
        // Greedy chain-growing per color.
        for (int color = 0; color <= 1; ++color) {
            std::vector<DyadicInterval> a;
            Rational cur(-1);
            bool improved = true;
            while (improved) {
                improved = false;
                std::vector<DyadicInterval> arg;
                Rational top = cur;
                for (const auto& cand : universe) {
                    if (std::find(a.begin(), a.end(), cand) != a.end()) continue;
                    std::vector<DyadicInterval> trial = a;
                    trial.push_back(cand);
                    const auto b = maximal_b(trial, bool(color));
                    if (b.empty()) continue;
                    const Rational ca =
                        carleson_constant(IntervalCollection(trial)).value.to_rational();
                    const Rational cb =
                        carleson_constant(IntervalCollection(b)).value.to_rational();
                    const Rational v = ca < cb ? ca : cb;
                    if (v > top) {
                        top = v;
                        arg = trial;
                        improved = true;
                    }
                }
                if (improved) {
                    a = arg;
                    cur = top;
                    consider(a, maximal_b(a, bool(color)), bool(color));
                }
            }
        }
    }

    if (best_value < Rational(0))
        throw DegeneracyError("ramsey_search: no monochromatic product found");
    best.reached_target = best_value >= target;
    return best;
}

DyadicInterval affine_rescale(const DyadicInterval& i, const DyadicInterval& e0) {
    if (!e0.contains(i)) throw DomainError("affine_rescale: interval not inside the root");
    const int level = i.level() - e0.level();
    return DyadicInterval(level, i.pos() - (e0.pos() << level));
}

GammaExtraction extract_gamma_collections(const IntervalCollection& family, int n) {
    if (family.empty()) throw DomainError("extract_gamma_collections: empty family");
    std::function<bool(const DyadicInterval&, int)> tree = [&](const DyadicInterval& e,
                                                               int d) -> bool {
        if (!family.contains(e)) return false;
        if (d == 0) return true;
        if (e.level() >= kMaxLevel) return false;
        return tree(e.left_half(), d - 1) && tree(e.right_half(), d - 1);
    };
    // Largest admissible root, earliest in canonical order.
    for (const auto& e : family) {
        if (tree(e, n)) {
            GammaExtraction out;
            out.root = e;
            for (const auto& idx : IntervalCollection::full_grid(n)) {
                const DyadicInterval image(e.level() + idx.level(),
                                           (e.pos() << idx.level()) + idx.pos());
                out.per_index[idx] = IntervalCollection({image});
            }
            return out;
        }
    }
    throw DegeneracyError(
        "extract_gamma_collections: no depth-" + std::to_string(n) +
        " half-splitting subtree in the collection (its Carleson mass is too thin here)");
}

ReiteratedBasis build_reiterated_basis(const BlockBasisFamily& fam, const BlockVectors& vectors,
                                       const HaarOperator& d_op, const RamseyResult& ramsey,
                                       int n_target) {
    const GammaExtraction ex = extract_gamma_collections(ramsey.a, n_target);
    const GammaExtraction fy = extract_gamma_collections(ramsey.b, n_target);

    // Precondition: the selected product is monochromatic for
    // C = {R : |<b_R, D b_R>| >= ||b_R||^2 / 2}, re-derived from (diag, D) directly.
    for (const auto& [i, ecoll] : ex.per_index)
        for (const auto& [j, fcoll] : fy.per_index)
            for (const auto& ei : ecoll)
                for (const auto& fj : fcoll) {
                    const DyadicRectangle ef(ei, fj);
                    const HaarVector& b = vectors.of(ef);
                    const double dd = coeff_pairing(b, d_op.apply(b));
                    const bool member = std::abs(dd) >= 0.5 * vectors.l2sq.at(ef).to_double();
                    if (member != ramsey.color)
                        throw HypothesisError(
                            "build_reiterated_basis: Ramsey output is not monochromatic at " +
                            rect_label(ef));
                }

    // Compose: the reiterated collection over D^n x D^n; with singleton gamma-chains
    // this re-indexes the engine blocks at E_I x F_J.
    std::vector<SignedBlock> blocks;
    BlockVectors composed;
    for (const auto& [i, ecoll] : ex.per_index)
        for (const auto& [j, fcoll] : fy.per_index) {
            const DyadicRectangle idx(i, j);
            const DyadicRectangle ef(ecoll[0], fcoll[0]);
            const SignedBlock& inner = fam.block(ef);
            std::vector<std::int8_t> signs;
            for (std::size_t a = 0; a < inner.X().size(); ++a)
                for (std::size_t bb = 0; bb < inner.Y().size(); ++bb)
                    signs.push_back(std::int8_t(inner.sign_at(a, bb)));
            blocks.emplace_back(idx, inner.X(), inner.Y(), std::move(signs));
            composed.vecs.emplace_back(idx, vectors.of(ef));
            composed.l2sq.emplace(idx, vectors.l2sq.at(ef));
        }
    std::sort(composed.vecs.begin(), composed.vecs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    ReiteratedBasis out;
    out.family = BlockBasisFamily(std::move(blocks));
    out.vectors = std::move(composed);
    out.h_choice = ramsey.color ? HChoice::T : HChoice::IdMinusT;
    out.psi_x_root = ex.root;
    out.psi_y_root = fy.root;

    // (P1)-(P4) of the affine copy: the reference measures carry the roots' lengths.
    out.rescaled_lpc = check_local_product_scaled(
        out.family, ex.root.measure().to_rational(), fy.root.measure().to_rational());

    // Diagonal estimates against H.
    HaarOperator h = d_op;
    if (out.h_choice == HChoice::IdMinusT)
        h = HaarOperator::identity(d_op.m(), d_op.N()).plus(d_op.scaled(-1.0));
    double offdiag_ratio = 0.0;
    double min_diag = 1e300;
    std::vector<HaarVector> images;
    for (const auto& [r, vec] : out.vectors.vecs) images.push_back(h.apply(vec));
    for (std::size_t i = 0; i < out.vectors.vecs.size(); ++i) {
        double off = 0.0;
        double dg = 0.0;
        for (std::size_t j = 0; j < out.vectors.vecs.size(); ++j) {
            const double v = coeff_pairing(out.vectors.vecs[i].second, images[j]);
            if (i == j)
                dg = v;
            else
                off += std::abs(v);
        }
        const double l2 = out.vectors.l2sq.at(out.vectors.vecs[i].first).to_double();
        offdiag_ratio = std::max(offdiag_ratio, off / l2);
        min_diag = std::min(min_diag, std::abs(dg) / l2);
    }
    out.offdiag_ratio = offdiag_ratio;
    out.min_diag_ratio = min_diag;
    return out;
}

const HaarOperator* SumSpaceOperator::block(int j, int k) const {
    auto it = blocks.find({j, k});
    return it == blocks.end() ? nullptr : &it->second;
}

void SumSpaceOperator::validate() const {
    if (truncation < 1) throw ShapeError("SumSpaceOperator: truncation must be >= 1");
    if (!(r >= 1.0)) throw ShapeError("SumSpaceOperator: r must be in [1, inf]");
    for (const auto& [jk, op] : blocks) {
        const auto [j, k] = jk;
        if (j < 1 || j > truncation || k < 1 || k > truncation)
            throw ShapeError("SumSpaceOperator: block index outside the truncation");
        for (const auto& en : op.entries()) {
            if (en.row.x().level() > j || en.row.y().level() > j)
                throw ShapeError("SumSpaceOperator: block row outside X_j");
            if (en.col.x().level() > k || en.col.y().level() > k)
                throw ShapeError("SumSpaceOperator: block column outside X_k");
        }
        if (j != k && op.shift() != 0.0)
            throw ShapeError("SumSpaceOperator: off-diagonal block with identity component");
    }
}

GlueResult glue_factorizations(const SumSpaceOperator& sum, double delta,
                               const FactorizationParams& params, double eps_slack) {
    sum.validate();
    GlueResult out;
    out.bound = 1.0 + params.eta + eps_slack;

    for (int level = 1; level <= sum.truncation; ++level) {
        FactorizationParams p = params;
        p.m = level;
        p.n = level;
        HaarOperator tnn = HaarOperator(level, std::max(level, params.nmax), {}, 0.0);
        if (const HaarOperator* blk = sum.block(level, level))
            tnn = HaarOperator(blk->m(), std::max(blk->N(), params.nmax), blk->entries(),
                               blk->shift());
        FactorizationResult fr;
        HChoice choice = HChoice::T;
        try {
            fr = local_factorization(tnn, delta, p);
        } catch (const HypothesisError&) {
            // H_n = Id - T_n side of the dispatch.
            const HaarOperator complement =
                HaarOperator::identity(tnn.m(), tnn.N()).plus(tnn.scaled(-1.0));
            fr = local_factorization(complement, delta, p);
            choice = HChoice::IdMinusT;
        }
        fr.h_choice = choice;
        out.per_level.push_back(std::move(fr));
    }

    for (std::size_t i = 1; i < out.per_level.size(); ++i)
        if (out.per_level[i].h_choice != out.per_level[0].h_choice)
            throw ShapeError("glue_factorizations: mixed H choices across levels (level " +
                             std::to_string(i + 1) +
                             " disagrees); a single global H = T or Id - T is required");
    out.h_choice = out.per_level.empty() ? HChoice::T : out.per_level[0].h_choice;

    // Balancing R_n <- t_n R_n, S_n <- S_n / t_n equalizes the leg norms, so the
    // block-diagonal composition attains max_n ||R_n|| ||S_n|| for every r.
    double worst = 0.0;
    bool residuals_ok = true;
    for (const auto& fr : out.per_level) {
        worst = std::max(worst, fr.norm_E.upper * fr.norm_P.upper);
        residuals_ok = residuals_ok && fr.residual <= 1e-9;
    }
    out.norm_product = worst;
    out.pass = residuals_ok && worst <= out.bound + 1e-12;

    // Off-diagonal mass diagnostics at the truncation (the gliding-hump compression is
    // out of scope; this reports how non-diagonal the input is).
    double upper = 0.0, lower = 0.0;
    for (const auto& [jk, op] : sum.blocks) {
        if (jk.first == jk.second) continue;
        const NormBracket nb = operator_norm_estimate(op, sum.e, 1e-6, 200, params.seed + 17);
        upper += nb.upper;
        lower = std::max(lower, nb.lower);
    }
    out.offdiag_mass_upper = upper;
    out.offdiag_mass_lower = lower;
    return out;
}

std::map<int, HaarVector> reindex_double_sum(const std::vector<IndexedComponent>& components) {
    std::vector<IndexedComponent> sorted = components;
    std::sort(sorted.begin(), sorted.end(),
              [](const IndexedComponent& a, const IndexedComponent& b) {
                  const int ka = std::max(a.m, a.n), kb = std::max(b.m, b.n);
                  if (ka != kb) return ka < kb;
                  if (a.m != b.m) return a.m < b.m;
                  return a.n < b.n;
              });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i].m == sorted[i - 1].m && sorted[i].n == sorted[i - 1].n)
            throw ShapeError("reindex_double_sum: duplicate (m, n) component");

    std::map<int, HaarVector> out;
    int next_slot = 0;
    for (const auto& c : sorted) {
        const int k = std::max({c.m, c.n, c.f.m(), c.f.N()});
        const int slot = std::max(next_slot, k);
        out.emplace(slot, HaarVector(c.f.role(), slot, slot, c.f.coeffs()));
        next_slot = slot + 1;
    }
    return out;
}

}  // namespace haarfactor
