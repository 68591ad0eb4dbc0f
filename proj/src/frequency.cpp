#include "haarfactor/frequency.hpp"

#include <cmath>
#include <sstream>

#include "haarfactor/estimate.hpp"

namespace haarfactor {

void FrequencyContext::validate() const {
    if (!(tau > 0.0)) throw DomainError("FrequencyContext: tau must be positive");
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("FrequencyContext: rho must be in (0,1)");
    if (r < 0) throw DomainError("FrequencyContext: r must be nonnegative");
    for (const auto& x : x_list)
        if (x.role() != Role::functional) throw RoleError("FrequencyContext: x_list must be functionals");
    for (const auto& y : y_list)
        if (y.role() != Role::function) throw RoleError("FrequencyContext: y_list must be functions");
}

std::string FrequencyContext::check_budgets(double tol, int budget, std::uint64_t seed) const {
    const double bx = std::pow(k0.measure().to_double(), e.p == 1.0 ? 0.0 : 1.0 - 1.0 / e.p) *
                      std::pow(l0.measure().to_double(), e.q == 1.0 ? 0.0 : 1.0 - 1.0 / e.q);
    const double by = std::pow(k0.measure().to_double(), 1.0 / e.p) *
                      std::pow(l0.measure().to_double(), 1.0 / e.q);
    double lo_x = 0.0, hi_x = 0.0;
    for (std::size_t j = 0; j < x_list.size(); ++j) {
        const NormBracket nb = dual_norm_estimate(x_list[j], e, tol, budget, seed + j);
        lo_x += nb.lower;
        hi_x += nb.upper;
    }
    double lo_y = 0.0;
    for (const auto& y : y_list) lo_y += mixed_norm(y, e);
    const double slack = 1e-12;
    if (lo_x > bx * (1.0 + slack) + slack)
        throw HypothesisError("FrequencyContext: certified Σ||x_j||_* exceeds the budget");
    if (lo_y > by * (1.0 + slack) + slack)
        throw HypothesisError("FrequencyContext: Σ||y_j|| exceeds the budget");
    std::ostringstream warn;
    if (hi_x > bx * (1.0 + slack) + slack)
        warn << "dual-norm bracket upper bound " << hi_x << " straddles the x-budget " << bx;
    return warn.str();
}

double frequency_weight(const FrequencyContext& ctx, const DyadicRectangle& rect) {
    const double meas = rect.measure().to_double();
    double f = 0.0;
    for (const auto& x : ctx.x_list) f += std::abs(x.coeff(rect)) * meas;
    for (const auto& y : ctx.y_list) f += std::abs(y.coeff(rect)) * meas;
    return f;
}

namespace {

// The scan bound A = floor(4/(ρ²τ²)) + r in exact arithmetic, clamped to the cap.
DyadicRational scan_bound(double tau, const DyadicRational& rho, int r, int cap) {
    const Rational t = Rational::from_double(tau);
    const Rational p = rho.to_rational();
    const Rational a = Rational(4) / (p * p * t * t);
    // floor(a) + r, but anything past the level cap behaves identically.
    const Rational capr = Rational(cap + 1);
    if (a >= capr) return DyadicRational(cap + 1 + r);
    // a < cap + 1 fits in a machine word.
    const long long fl = (a.num() / a.den()).convert_to<long long>();
    return DyadicRational(fl + r);
}

LevelSelection scan_levels(const std::function<double(const DyadicRectangle&)>& weight,
                           const DyadicInterval& fixed, const DyadicInterval& base, double tau,
                           const DyadicRational& rho, int r, int level_cap, bool vary_y) {
    if (!(tau > 0.0) || !(rho.sign() > 0 && rho < DyadicRational(1)) || r < 0)
        throw DomainError("select_level: invalid parameters");
    const DyadicRational bound = scan_bound(tau, rho, r, level_cap);
    const DyadicRational full = fixed.measure() * base.measure();
    const DyadicRational target = (DyadicRational(1) - rho) * full;

    std::ostringstream trace;
    for (int k = r;; ++k) {
        if (DyadicRational(k) > bound)
            throw CapError("select_level: scan passed the bound A without success; trace: " +
                           trace.str());
        if (base.level() + k > level_cap)
            throw CapError("select_level: resolution cap " + std::to_string(level_cap) +
                           " reached at offset " + std::to_string(k) + "; trace: " + trace.str());
        std::vector<DyadicRectangle> chosen;
        DyadicRational covered(0);
        for (const auto& piece : base.grid(base.level() + k)) {
            const DyadicRectangle rect =
                vary_y ? DyadicRectangle(fixed, piece) : DyadicRectangle(piece, fixed);
            const double f = weight(rect);
            const double cap_value = tau * rect.measure().to_double();
            if (f <= cap_value) {
                chosen.push_back(rect);
                covered = covered + rect.measure();
            }
        }
        if (covered >= target) {
            LevelSelection out;
            out.k = k;
            out.rects = RectangleCollection(std::move(chosen));
            out.covered_measure = covered;
            out.bound_a = bound;
            return out;
        }
        trace << "k=" << k << " covered=" << covered.to_double() << "; ";
    }
}

}  // namespace

LevelSelection select_level_x(const FrequencyContext& ctx) {
    ctx.validate();
    const std::string warn = ctx.check_budgets(1e-6, 200, 1);
    auto w = [&ctx](const DyadicRectangle& rect) { return frequency_weight(ctx, rect); };
    LevelSelection sel = scan_levels(w, ctx.l0, ctx.k0, ctx.tau,
                                     DyadicRational::from_double(ctx.rho), ctx.r, ctx.level_cap,
                                     false);
    sel.warning = warn;
    return sel;
}

LevelSelection select_level_y(const FrequencyContext& ctx) {
    ctx.validate();
    const std::string warn = ctx.check_budgets(1e-6, 200, 1);
    auto w = [&ctx](const DyadicRectangle& rect) { return frequency_weight(ctx, rect); };
    LevelSelection sel = scan_levels(w, ctx.k0, ctx.l0, ctx.tau,
                                     DyadicRational::from_double(ctx.rho), ctx.r, ctx.level_cap,
                                     true);
    sel.warning = warn;
    return sel;
}

LevelSelection select_level_y_weighted(const std::function<double(const DyadicRectangle&)>& weight,
                                       const DyadicInterval& k0, const DyadicInterval& l0,
                                       double tau, const DyadicRational& rho, int r,
                                       int level_cap) {
    return scan_levels(weight, k0, l0, tau, rho, r, level_cap, true);
}

}  // namespace haarfactor
