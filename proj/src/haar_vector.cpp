#include "haarfactor/haar_vector.hpp"

#include <algorithm>
#include <map>

namespace haarfactor {

namespace {

void check_resolution(const DyadicRectangle& q, int m, int N) {
    if (q.x().level() > m || q.y().level() > N)
        throw ShapeError("HaarVector: support rectangle outside declared resolution");
}

}  // namespace

HaarVector::HaarVector(Role role, int m, int N, std::vector<Entry> coeffs)
    : role_(role), m_(m), N_(N), coeffs_(std::move(coeffs)) {
    normalize();
}

void HaarVector::normalize() {
    std::sort(coeffs_.begin(), coeffs_.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    std::vector<Entry> out;
    out.reserve(coeffs_.size());
    for (const auto& [q, a] : coeffs_) {
        check_resolution(q, m_, N_);
        if (!out.empty() && out.back().first == q)
            out.back().second += a;
        else
            out.emplace_back(q, a);
    }
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const Entry& e) { return e.second == 0.0; }),
              out.end());
    coeffs_ = std::move(out);
}

double HaarVector::coeff(const DyadicRectangle& q) const {
    auto it = std::lower_bound(coeffs_.begin(), coeffs_.end(), q,
                               [](const Entry& e, const DyadicRectangle& r) { return e.first < r; });
    if (it != coeffs_.end() && it->first == q) return it->second;
    return 0.0;
}

HaarVector HaarVector::scaled(double c) const {
    HaarVector v(role_, m_, N_);
    if (c == 0.0) return v;
    v.coeffs_ = coeffs_;
    for (auto& e : v.coeffs_) e.second *= c;
    return v;
}

HaarVector HaarVector::plus(const HaarVector& o) const {
    HaarVector v(role_, std::max(m_, o.m_), std::max(N_, o.N_));
    v.coeffs_.reserve(coeffs_.size() + o.coeffs_.size());
    std::size_t i = 0, j = 0;
    while (i < coeffs_.size() || j < o.coeffs_.size()) {
        if (j == o.coeffs_.size() || (i < coeffs_.size() && coeffs_[i].first < o.coeffs_[j].first)) {
            v.coeffs_.push_back(coeffs_[i++]);
        } else if (i == coeffs_.size() || o.coeffs_[j].first < coeffs_[i].first) {
            v.coeffs_.push_back(o.coeffs_[j++]);
        } else {
            const double s = coeffs_[i].second + o.coeffs_[j].second;
            if (s != 0.0) v.coeffs_.emplace_back(coeffs_[i].first, s);
            ++i;
            ++j;
        }
    }
    return v;
}

double HaarVector::l2sq() const {
    double s = 0.0;
    for (const auto& [q, a] : coeffs_) s += a * a * q.measure().to_double();
    return s;
}

namespace {

double haar_value_1d(const DyadicInterval& i, double t) {
    const double lo = std::ldexp(double(i.pos()), -i.level());
    const double len = std::ldexp(1.0, -i.level());
    if (t < lo || t >= lo + len) return 0.0;
    return t < lo + 0.5 * len ? 1.0 : -1.0;
}

}  // namespace

double HaarVector::evaluate(double x, double y) const {
    double s = 0.0;
    for (const auto& [q, a] : coeffs_)
        s += a * haar_value_1d(q.x(), x) * haar_value_1d(q.y(), y);
    return s;
}

HaarVector HaarVectorBuilder::build() {
    return HaarVector(role_, m_, N_, std::move(entries_));
}

namespace {

// Sorted unique grid breakpoints of the intervals appearing on one axis. The square
// function only involves h^2 = 1 on the interval, so endpoints suffice.
std::vector<std::uint64_t> axis_breaks(const std::vector<std::pair<std::uint64_t, std::uint64_t>>& spans) {
    std::vector<std::uint64_t> b;
    b.reserve(2 * spans.size() + 2);
    b.push_back(0);
    b.push_back(IntervalSet::kGridOne);
    for (const auto& s : spans) {
        b.push_back(s.first);
        b.push_back(s.second);
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

double lp_integrate(const std::vector<std::pair<double, double>>& len_val, double p) {
    // (Σ len * val^p)^{1/p}, or sup val for p = inf. val >= 0.
    if (std::isinf(p)) {
        double s = 0.0;
        for (const auto& [len, val] : len_val)
            if (len > 0.0) s = std::max(s, val);
        return s;
    }
    double s = 0.0;
    for (const auto& [len, val] : len_val) s += len * std::pow(val, p);
    return std::pow(s, 1.0 / p);
}

}  // namespace

double mixed_norm_pq(const HaarVector& f, double p, double q) {
    if (f.is_zero()) return 0.0;

    // Group support by x-interval.
    struct Column {
        std::uint64_t xlo, xhi;
        std::vector<std::pair<std::pair<std::uint64_t, std::uint64_t>, double>> ys;  // (span, a^2)
    };
    std::map<DyadicInterval, Column> cols;
    for (const auto& [r, a] : f.coeffs()) {
        auto& c = cols[r.x()];
        c.xlo = r.x().grid_lo();
        c.xhi = r.x().grid_hi();
        c.ys.push_back({{r.y().grid_lo(), r.y().grid_hi()}, a * a});
    }

    std::vector<std::pair<std::uint64_t, std::uint64_t>> xspans;
    for (const auto& [i, c] : cols) xspans.emplace_back(c.xlo, c.xhi);
    const auto xb = axis_breaks(xspans);

    const double scale = std::ldexp(1.0, -kMaxLevel);
    std::vector<std::pair<double, double>> outer;
    outer.reserve(xb.size());

    for (std::size_t si = 0; si + 1 < xb.size(); ++si) {
        const std::uint64_t xlo = xb[si], xhi = xb[si + 1];
        // Inner square function: Σ over columns covering this x-segment of a^2 1_J(y).
        std::vector<std::pair<std::uint64_t, double>> events;  // (y, delta)
        for (const auto& [i, c] : cols) {
            if (c.xlo <= xlo && xhi <= c.xhi) {
                for (const auto& [span, aa] : c.ys) {
                    events.emplace_back(span.first, aa);
                    events.emplace_back(span.second, -aa);
                }
            }
        }
        double inner = 0.0;
        if (!events.empty()) {
            std::sort(events.begin(), events.end());
            std::vector<std::pair<double, double>> segs;
            double cur = 0.0;
            std::uint64_t prev = 0;
            std::size_t k = 0;
            while (k < events.size()) {
                const std::uint64_t y = events[k].first;
                if (y > prev) segs.emplace_back(double(y - prev) * scale, std::sqrt(std::max(cur, 0.0)));
                while (k < events.size() && events[k].first == y) cur += events[k++].second;
                prev = y;
            }
            if (prev < IntervalSet::kGridOne)
                segs.emplace_back(double(IntervalSet::kGridOne - prev) * scale, 0.0);
            inner = lp_integrate(segs, q);
        }
        outer.emplace_back(double(xhi - xlo) * scale, inner);
    }
    return lp_integrate(outer, p);
}

double mixed_norm(const HaarVector& f, const Exponents& e) {
    if (f.role() != Role::function)
        throw RoleError("mixed_norm: input must have function role");
    return mixed_norm_pq(f, e.p, e.q);
}

double dual_pairing(const HaarVector& g, const HaarVector& f) {
    if (g.role() != Role::functional) throw RoleError("dual_pairing: g must be a functional");
    if (f.role() != Role::function) throw RoleError("dual_pairing: f must be a function");
    double s = 0.0;
    const auto& a = g.coeffs();
    const auto& b = f.coeffs();
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

namespace {

double measure_of_union(const IntervalCollection& c) {
    return IntervalSet::of(c).measure().to_double();
}

double pow_or_sup(double base, double invp) {
    // base^{invp} with invp = 1/p; invp = 0 means p = infinity: contributes 1 only if base > 0.
    if (invp == 0.0) return base > 0.0 ? 1.0 : 0.0;
    return std::pow(base, invp);
}

}  // namespace

double product_block_norm(const IntervalCollection& xs, const IntervalCollection& ys,
                          const Exponents& e) {
    const double mx = measure_of_union(xs);
    const double my = measure_of_union(ys);
    return pow_or_sup(mx, 1.0 / e.p) * pow_or_sup(my, 1.0 / e.q);
}

double product_block_dual_norm(const IntervalCollection& xs, const IntervalCollection& ys,
                               const Exponents& e) {
    const double mx = measure_of_union(xs);
    const double my = measure_of_union(ys);
    const double ip = e.p == 1.0 ? 0.0 : 1.0 - 1.0 / e.p;
    const double iq = e.q == 1.0 ? 0.0 : 1.0 - 1.0 / e.q;
    return pow_or_sup(mx, ip) * pow_or_sup(my, iq);
}

}  // namespace haarfactor
