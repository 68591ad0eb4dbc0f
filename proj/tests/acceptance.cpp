// Acceptance suite: one criterion per section, one pass/fail line each, pinned
// tolerances. Exit code 0 iff every criterion passes within its runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <vector>

#include "haarfactor/engine.hpp"
#include "haarfactor/estimate.hpp"
#include "haarfactor/json_io.hpp"
#include "haarfactor/pipeline.hpp"

using namespace haarfactor;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int idx, const char* name, bool pass, double seconds, double budget_seconds) {
    const bool in_time = seconds <= budget_seconds;
    std::printf("criterion %2d [%s] %-58s (%.2fs, budget %.0fs)\n", idx,
                pass && in_time ? "PASS" : "FAIL", name, seconds, budget_seconds);
    if (!(pass && in_time)) ++g_failures;
}

void run(int idx, const char* name, double budget_seconds, const std::function<bool()>& body) {
    const auto t0 = Clock::now();
    bool pass = false;
    try {
        pass = body();
    } catch (const std::exception& ex) {
        std::printf("  criterion %d threw: %s\n", idx, ex.what());
        pass = false;
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    report(idx, name, pass, secs, budget_seconds);
}

DyadicInterval ivl(int level, std::uint64_t pos) { return DyadicInterval(level, pos); }

double pairing(const HaarVector& u, const HaarVector& v) {
    return dual_pairing(u.with_role(Role::functional), v);
}

HaarOperator random_sparse_bounded(Rng& rng, int m, int N, int coarse, double bound) {
    std::vector<HaarOperator::Entry> entries;
    auto rects = RectangleCollection::full_grid(m, coarse);
    for (const auto& r : rects)
        for (const auto& c : rects)
            if (rng.uniform() < 0.15) entries.push_back({r, c, rng.symmetric()});
    HaarOperator t(m, N, std::move(entries), 0.0);
    const double nrm = operator_norm_l2_exact(t);
    if (nrm > bound) t = t.scaled(0.95 * bound / nrm);
    return t;
}

HaarOperator random_dominant_bounded(Rng& rng, int m, int N, int coarse, double delta,
                                     double bound) {
    std::vector<HaarOperator::Entry> entries;
    auto rects = RectangleCollection::full_grid(m, coarse);
    for (const auto& r : rects)
        for (const auto& c : rects)
            if (r != c && rng.uniform() < 0.15) entries.push_back({r, c, 0.4 * rng.symmetric()});
    HaarOperator t(m, N, std::move(entries), delta + 0.2 * rng.uniform());
    while (operator_norm_l2_exact(t) > bound) {
        std::vector<HaarOperator::Entry> scaled;
        for (const auto& e : t.entries()) scaled.push_back({e.row, e.col, e.value * 0.7});
        t = HaarOperator(m, N, std::move(scaled), t.shift());
    }
    return t;
}

bool criterion_1() {
    Rng rng(1001);
    bool ok = true;
    std::vector<std::pair<double, double>> pqs;
    for (int i = 0; i < 20; ++i) pqs.emplace_back(1.0 + 3.0 * rng.uniform(), 1.0 + 3.0 * rng.uniform());
    for (int t = 0; t < 50; ++t) {
        const int lx = int(rng.below(5)), ly = int(rng.below(5));
        const DyadicRectangle r(ivl(lx, rng.below(1ull << lx)), ivl(ly, rng.below(1ull << ly)));
        const HaarVector h = HaarVector::basis(Role::function, 5, 5, r);
        for (const auto& [p, q] : pqs) {
            const double got = mixed_norm(h, Exponents(p, q));
            const double expect = std::pow(r.x().measure().to_double(), 1.0 / p) *
                                  std::pow(r.y().measure().to_double(), 1.0 / q);
            ok = ok && std::abs(got - expect) <= 1e-12 * expect;
        }
    }
    return ok;
}

bool criterion_2() {
    Rng rng(1002);
    bool ok = true;
    for (int t = 0; t < 100; ++t) {
        HaarVectorBuilder fb(Role::function, 3, 3);
        for (const auto& r : RectangleCollection::full_grid(3, 3))
            if (rng.uniform() < 0.5) fb.add(r, rng.symmetric());
        const HaarVector f = fb.build();
        if (f.is_zero()) continue;
        double expect = 0.0;
        for (const auto& [r, a] : f.coeffs()) expect += a * a * r.measure().to_double();
        const double n = mixed_norm(f, Exponents(2, 2));
        ok = ok && std::abs(n * n - expect) <= 1e-12 * expect;
    }
    return ok;
}

bool criterion_3() {
    Rng rng(1003);
    bool ok = true;
    for (int t = 0; t < 100; ++t) {
        FrequencyContext ctx;
        ctx.e = Exponents(1.0 + 2.0 * rng.uniform(), 1.0 + 2.0 * rng.uniform());
        const int lk = int(rng.below(3)), ll = int(rng.below(3));
        ctx.k0 = ivl(lk, rng.below(1ull << lk));
        ctx.l0 = ivl(ll, rng.below(1ull << ll));
        ctx.tau = 0.05 + 0.45 * rng.uniform();
        ctx.rho = 0.2 + 0.6 * rng.uniform();
        ctx.r = int(rng.below(3));
        ctx.level_cap = 8;
        // Budget-normalized adversaries supported at coarse x-levels.
        const double bx =
            std::pow(ctx.k0.measure().to_double(), ctx.e.p == 1.0 ? 0.0 : 1.0 - 1.0 / ctx.e.p) *
            std::pow(ctx.l0.measure().to_double(), ctx.e.q == 1.0 ? 0.0 : 1.0 - 1.0 / ctx.e.q);
        const double by = std::pow(ctx.k0.measure().to_double(), 1.0 / ctx.e.p) *
                          std::pow(ctx.l0.measure().to_double(), 1.0 / ctx.e.q);
        HaarVectorBuilder xb(Role::functional, 6, 6);
        for (int lvl = ctx.k0.level(); lvl <= std::min(ctx.k0.level() + 3, 5); ++lvl)
            for (std::uint64_t j = 0; j < (1ull << lvl); ++j)
                if (ivl(lvl, j).grid_lo() >= ctx.k0.grid_lo() &&
                    ivl(lvl, j).grid_hi() <= ctx.k0.grid_hi() && rng.uniform() < 0.4)
                    xb.add(DyadicRectangle(ivl(lvl, j), ctx.l0), rng.symmetric());
        HaarVector x = xb.build();
        if (!x.is_zero()) {
            const double up = mixed_norm_pq(x.with_role(Role::function), ctx.e.p_conj(), ctx.e.q_conj());
            if (up > 0) ctx.x_list.push_back(x.scaled(0.9 * bx / up));
        }
        HaarVectorBuilder yb(Role::function, 6, 6);
        for (int lvl = ctx.k0.level(); lvl <= std::min(ctx.k0.level() + 3, 5); ++lvl)
            for (std::uint64_t j = 0; j < (1ull << lvl); ++j)
                if (ivl(lvl, j).grid_lo() >= ctx.k0.grid_lo() &&
                    ivl(lvl, j).grid_hi() <= ctx.k0.grid_hi() && rng.uniform() < 0.4)
                    yb.add(DyadicRectangle(ivl(lvl, j), ctx.l0), rng.symmetric());
        HaarVector y = yb.build();
        if (!y.is_zero()) {
            const double up = mixed_norm(y, ctx.e);
            if (up > 0) ctx.y_list.push_back(y.scaled(0.9 * by / up));
        }

        const LevelSelection sel = select_level_x(ctx);
        const DyadicRational target = (DyadicRational(1) - DyadicRational::from_double(ctx.rho)) *
                                      (ctx.k0.measure() * ctx.l0.measure());
        ok = ok && sel.k >= ctx.r;
        ok = ok && DyadicRational(sel.k) <= sel.bound_a;
        ok = ok && sel.covered_measure >= target;  // exact dyadic comparison
    }
    // Zero-input case: k = r with full measure.
    for (int r = 0; r <= 2; ++r) {
        FrequencyContext ctx;
        ctx.e = Exponents(2, 2);
        ctx.k0 = DyadicInterval::unit();
        ctx.l0 = DyadicInterval::unit();
        ctx.tau = 0.25;
        ctx.rho = 0.5;
        ctx.r = r;
        ctx.level_cap = 8;
        const LevelSelection sel = select_level_x(ctx);
        ok = ok && sel.k == r && sel.covered_measure == DyadicRational(1);
    }
    return ok;
}

bool criterion_4_and_5(bool* measure_recursion_ok) {
    Rng rng(1004);
    bool ok = true;
    *measure_recursion_ok = true;
    const Rational c_y_cap(3, 2);  // 1 + eta with eta = 0.5

    auto check_run = [&](const HaarOperator& t, double delta) {
        EngineParams p;
        p.m = 1;
        p.n = 1;
        p.gamma_bound = 2.0;
        p.eta = 0.5;
        p.delta = delta;
        p.e = Exponents(2, 2);
        p.nmax = 24;
        const EngineResult res = almost_diagonalize(t, p);
        bool run_ok = res.certificate.lpc.satisfied &&
                      res.certificate.lpc.c_x == Rational(1) &&
                      res.certificate.lpc.c_y <= c_y_cap;
        // Pairings recomputed from (T, family) alone: the block vectors are rebuilt from
        // the emitted family, not taken from the engine's internals.
        const BlockVectors rebuilt = build_block_basis(res.family);
        for (const auto& ri : res.certificate.rows) {
            const HaarVector& bi = rebuilt.of(ri.R);
            double off = 0.0, diag = 0.0;
            for (const auto& rj : res.certificate.rows) {
                const double v = pairing(bi, t.apply(rebuilt.of(rj.R)));
                if (rj.R == ri.R)
                    diag = v;
                else
                    off += std::abs(v);
            }
            run_ok = run_ok && std::abs(off - ri.offdiag) <= 1e-10 * std::max(1.0, ri.offdiag);
            run_ok = run_ok && std::abs(diag - ri.diag) <= 1e-10 * std::max(1.0, std::abs(ri.diag));
            run_ok = run_ok && rebuilt.l2sq.at(ri.R) == ri.l2sq;
            run_ok = run_ok && off <= p.eta * ri.l2sq.to_double();
            if (delta > 0.0) run_ok = run_ok && diag >= delta * ri.l2sq.to_double();
        }
        // Criterion 5 on the same output: exact measure recursion, zero tolerance.
        std::string witness;
        if (!verify_measure_recursion(res.family, res.certificate.eta_prime, &witness)) {
            *measure_recursion_ok = false;
            std::printf("    measure recursion witness: %s\n", witness.c_str());
        }
        return run_ok;
    };

    for (int t = 0; t < 20; ++t) ok = check_run(random_sparse_bounded(rng, 1, 24, 2, 2.0), 0.0) && ok;
    for (int t = 0; t < 20; ++t) {
        HaarOperator noise = random_sparse_bounded(rng, 1, 24, 2, 0.8);
        std::vector<HaarOperator::Entry> entries;
        for (const auto& e : noise.entries())
            if (e.row != e.col) entries.push_back(e);
        ok = check_run(HaarOperator(1, 24, std::move(entries), 0.25), 0.25) && ok;
    }
    return ok;
}

bool criterion_6() {
    bool ok = true;
    // T = delta Id: exact 1/delta.
    {
        const double delta = 0.25;
        FactorizationParams p;
        p.m = 1;
        p.n = 1;
        p.gamma_bound = 1.0;
        p.eta = 1.0;
        const FactorizationResult fr =
            local_factorization(HaarOperator::scaled_identity(1, 20, delta), delta, p);
        ok = ok && std::abs(fr.norm_E.upper * fr.norm_P.upper - 1.0 / delta) <= 1e-9 / delta;
    }
    // 10 random large-diagonal operators at m = n = 1.
    Rng rng(1006);
    const double delta = 0.5, eta = 1.0;
    for (int t = 0; t < 10; ++t) {
        const HaarOperator op = random_dominant_bounded(rng, 1, 22, 2, delta, 2.0);
        FactorizationParams p;
        p.m = 1;
        p.n = 1;
        p.gamma_bound = 2.0;
        p.eta = eta;
        p.e = Exponents(2, 2);
        p.nmax = 22;
        const FactorizationResult fr = local_factorization(op, delta, p);
        // Residual on every basis vector, recomputed through the public operators.
        for (const auto& r : RectangleCollection::full_grid(1, 1)) {
            const HaarVector hr = HaarVector::basis(Role::function, op.m(), op.N(), r);
            const HaarVector back = fr.P.apply(op.apply(fr.E.apply(hr)));
            const double res = mixed_norm(back.plus(hr.scaled(-1.0)), Exponents(2, 2));
            ok = ok && res <= 1e-9;
        }
        ok = ok && fr.norm_E.upper * fr.norm_P.upper <= (1.0 + eta) / delta + 0.05;
    }
    return ok;
}

bool criterion_7() {
    Rng rng(1007);
    bool ok = true;
    int checked = 0;
    for (int trial = 0; checked < 20 && trial < 200; ++trial) {
        // Inner: an engine output on a random operator (always (P1)-(P4)); outer: either
        // the identity chains on D^1 or singleton chains rooted at proper subintervals.
        const HaarOperator t = random_sparse_bounded(rng, 1, 20, 2, 2.0);
        EngineParams ep;
        ep.m = 1;
        ep.n = 1;
        ep.gamma_bound = 2.0;
        ep.eta = 0.5;
        ep.nmax = 20;
        const EngineResult er = almost_diagonalize(t, ep);

        OuterTensorFamily outer;
        const bool rooted = rng.uniform() < 0.5;
        const DyadicInterval ex_root = rooted ? ivl(1, rng.below(2)) : DyadicInterval::unit();
        // The engine family only provides indices in D^1 x D^1; a rooted outer uses the
        // depth-0 target so the needed inner indices exist.
        const int n_target = rooted ? 0 : 1;
        outer.index = RectangleCollection::full_grid(n_target, n_target);
        for (const auto& i : IntervalCollection::full_grid(n_target)) {
            outer.ex[i] = IntervalCollection(
                {DyadicInterval(ex_root.level() + i.level(),
                                (ex_root.pos() << i.level()) + i.pos())});
            outer.fy[i] = IntervalCollection({i});
        }

        BlockBasisFamily inner;
        LpcReport inner_rep;
        BlockBasisFamily composed;
        try {
            // Restrict the inner family to the needed indices; the restriction may lose
            // (P4) for sub-rooted outers, in which case the draw is skipped.
            std::vector<DyadicRectangle> needed;
            for (const auto& [i, ecoll] : outer.ex)
                for (const auto& [j, fcoll] : outer.fy)
                    needed.emplace_back(ecoll[0], fcoll[0]);
            inner = restrict_family(er.family, RectangleCollection(std::move(needed)));
            inner_rep = check_local_product(inner);
            if (!inner_rep.satisfied) continue;
            composed = reiterate(outer, inner);
        } catch (const Error&) {
            continue;
        }
        const LpcReport outer_rep = check_local_product(outer.as_family());
        const LpcReport rep = check_local_product(composed);
        ok = ok && rep.satisfied;
        ok = ok && rep.c_x <= outer_rep.c_x * inner_rep.c_x.pow_uint(3);
        ok = ok && rep.c_y <= outer_rep.c_y * inner_rep.c_y.pow_uint(3);
        ++checked;
    }
    ok = ok && checked == 20;
    return ok;
}

bool criterion_8() {
    Rng rng(1008);
    bool ok = true;
    // Constant coloring: ⟦D^2⟧ = 3 exactly.
    {
        const RectColoring all(2, RectangleCollection::full_grid(2, 2));
        const RamseyResult r = ramsey_search(all, Rational(3));
        ok = ok && r.carleson_a == DyadicRational(3) && r.carleson_b == DyadicRational(3) &&
             r.reached_target;
    }
    const auto universe = IntervalCollection::full_grid(2);
    std::vector<DyadicInterval> u(universe.begin(), universe.end());
    const std::size_t s = u.size();
    // Carleson constants of every nonempty subset, precomputed once.
    std::vector<Rational> carleson_of(std::size_t(1) << s, Rational(-1));
    for (std::uint32_t mask = 1; mask < (1u << s); ++mask) {
        std::vector<DyadicInterval> items;
        for (std::size_t i = 0; i < s; ++i)
            if (mask & (1u << i)) items.push_back(u[i]);
        carleson_of[mask] = carleson_constant(IntervalCollection(items)).value.to_rational();
    }
    for (int t = 0; t < 200; ++t) {
        std::vector<DyadicRectangle> members;
        for (const auto& r : RectangleCollection::full_grid(2, 2))
            if (rng.uniform() < 0.5) members.push_back(r);
        const RectColoring col(2, RectangleCollection(std::move(members)));
        const RamseyResult res = ramsey_search(col, Rational(2));
        // Exact monochromatic verifier.
        for (const auto& a : res.a)
            for (const auto& b : res.b)
                ok = ok && col.color(DyadicRectangle(a, b)) == res.color;
        // Independent exhaustive optimum over every pair of subsets: per-pair
        // monochromaticity through row bit masks, Carleson via the table.
        std::uint32_t row1[16], row0[16];
        for (std::size_t bi = 0; bi < s; ++bi) {
            row1[bi] = 0;
            row0[bi] = 0;
            for (std::size_t ai = 0; ai < s; ++ai) {
                if (col.color(DyadicRectangle(u[ai], u[bi])))
                    row1[bi] |= (1u << ai);
                else
                    row0[bi] |= (1u << ai);
            }
        }
        Rational best(-1);
        for (std::uint32_t ma = 1; ma < (1u << s); ++ma)
            for (std::uint32_t mb = 1; mb < (1u << s); ++mb) {
                bool mono1 = true, mono0 = true;
                for (std::size_t bi = 0; bi < s && (mono1 || mono0); ++bi) {
                    if (!(mb & (1u << bi))) continue;
                    if ((row1[bi] & ma) != ma) mono1 = false;
                    if ((row0[bi] & ma) != ma) mono0 = false;
                }
                if (!mono1 && !mono0) continue;
                const Rational v =
                    carleson_of[ma] < carleson_of[mb] ? carleson_of[ma] : carleson_of[mb];
                if (v > best) best = v;
            }
        const Rational achieved = res.carleson_a.to_rational() < res.carleson_b.to_rational()
                                      ? res.carleson_a.to_rational()
                                      : res.carleson_b.to_rational();
        ok = ok && achieved == best;
    }
    return ok;
}

bool criterion_9() {
    Rng rng(1009);
    EngineParams p;
    p.m = 1;
    p.n = 1;
    p.gamma_bound = 1.0;
    p.eta = 0.5;
    p.nmax = 24;
    p.e = Exponents(2, 2);

    bool ok = true;
    for (int sub = 0; sub < 5; ++sub) {
        HaarVectorBuilder fb(Role::function, 1, 3);
        for (const auto& r : RectangleCollection::full_grid(1, 3))
            if (rng.uniform() < 0.5) fb.add(r, rng.symmetric());
        const HaarVector f = fb.build();
        if (f.is_zero()) continue;

        const AnnihilationResult res = annihilating_projection({f}, p);
        ok = ok && res.certificate.lpc.satisfied;
        for (int t = 0; t < 50; ++t) {
            const HaarVector v =
                f.scaled(rng.symmetric() * 4.0 + (rng.uniform() < 0.5 ? 0.25 : -0.25));
            if (v.is_zero()) continue;
            const double nq = mixed_norm(project_onto_block_basis(res.family, v), p.e);
            ok = ok && nq <= p.eta * mixed_norm(v, p.e) + 1e-12;
        }
        for (int t = 0; t < 50; ++t) {
            HaarVectorBuilder pb(Role::function, 1, 6);
            for (const auto& r : RectangleCollection::full_grid(1, 5))
                if (rng.uniform() < 0.3) pb.add(r, rng.symmetric());
            const HaarVector v = pb.build();
            if (v.is_zero()) continue;
            const double nq = mixed_norm(project_onto_block_basis(res.family, v), p.e);
            ok = ok && nq <= (1.0 + p.eta) * mixed_norm(v, p.e) + 1e-9;
        }
    }
    return ok;
}

bool criterion_10() {
    Rng rng(1010);
    bool ok = true;
    const HaarOperator t = random_dominant_bounded(rng, 1, 22, 2, 0.5, 2.0);

    // Engine certificates byte-identical.
    {
        EngineParams p;
        p.m = 1;
        p.n = 1;
        p.gamma_bound = 2.0;
        p.eta = 0.5;
        p.delta = 0.25;
        p.nmax = 22;
        const std::string a = canonical_dump(to_json(almost_diagonalize(t, p).certificate));
        const std::string b = canonical_dump(to_json(almost_diagonalize(t, p).certificate));
        ok = ok && a == b;
    }
    // Factorization certificates byte-identical.
    {
        FactorizationParams p;
        p.m = 1;
        p.n = 1;
        p.gamma_bound = 2.0;
        p.eta = 1.0;
        p.nmax = 22;
        p.seed = 7;
        const std::string a = canonical_dump(to_json(local_factorization(t, 0.5, p)));
        const std::string b = canonical_dump(to_json(local_factorization(t, 0.5, p)));
        ok = ok && a == b;
    }
    // Randomized dual-norm estimation byte-identical under a fixed seed.
    {
        HaarVectorBuilder gb(Role::functional, 1, 2);
        for (const auto& r : RectangleCollection::full_grid(1, 2))
            if (rng.uniform() < 0.6) gb.add(r, rng.symmetric());
        const HaarVector g = gb.build();
        const std::string a =
            canonical_dump(to_json(dual_norm_estimate(g, Exponents(1.5, 2.5), 1e-6, 300, 7), true));
        const std::string b =
            canonical_dump(to_json(dual_norm_estimate(g, Exponents(1.5, 2.5), 1e-6, 300, 7), true));
        ok = ok && a == b;
    }
    return ok;
}

}  // namespace

int main() {
    std::printf("haarfactor acceptance suite\n");
    run(1, "Haar norm identity ||h_{IxJ}|| = |I|^{1/p}|J|^{1/q} (1e-12)", 1.0, criterion_1);
    run(2, "p=q=2 exactness: norm^2 = sum a_Q^2 |Q| (1e-12, res (3,3))", 5.0, criterion_2);
    run(3, "Lemma 4.1 selection: k bound + exact covered measure", 30.0, criterion_3);

    bool measure_ok = true;
    {
        const auto t0 = Clock::now();
        bool c4 = false;
        try {
            c4 = criterion_4_and_5(&measure_ok);
        } catch (const std::exception& ex) {
            std::printf("  criterion 4 threw: %s\n", ex.what());
        }
        const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        report(4, "Thm 4.2 certificates: 20 sparse + 20 dominant at m=n=1", c4, secs, 300.0);
        report(5, "measure recursion exact on every engine output", measure_ok, 0.0, 300.0);
    }

    run(6, "Thm 4.5: delta-Id exact 1/delta; residual + norm bound", 300.0, criterion_6);
    run(7, "Lemma 3.2 reiteration: C <= C_E C_X^3 and C_F C_Y^3 exact", 60.0, criterion_7);
    run(8, "Thm 5.6 at n=2: monochromatic + exhaustive optimum x200", 120.0, criterion_8);
    run(9, "Thm 4.3: ||Qf|| <= eta||f|| on F; (1+eta) on probes", 120.0, criterion_9);
    run(10, "determinism: byte-identical certificates under fixed seeds", 60.0, criterion_10);

    if (g_failures == 0) {
        std::printf("acceptance: ALL CRITERIA PASS\n");
        return 0;
    }
    std::printf("acceptance: %d criteria FAILED\n", g_failures);
    return 1;
}
