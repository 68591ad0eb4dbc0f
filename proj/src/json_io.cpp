#include "haarfactor/json_io.hpp"

#include <fstream>
#include <sstream>

namespace haarfactor {

namespace {

[[noreturn]] void parse_fail(const std::string& where, const std::string& what) {
    throw ParseError(where + ": " + what);
}

double number_field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number())
        parse_fail(where, std::string("missing numeric field '") + key + "'");
    return j[key].get<double>();
}

std::int64_t int_field(const Json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number_integer())
        parse_fail(where, std::string("missing integer field '") + key + "'");
    return j[key].get<std::int64_t>();
}

}  // namespace

Json to_json(const DyadicInterval& i) {
    return Json{{"level", i.level()}, {"pos", i.pos()}};
}

Json to_json(const DyadicRectangle& r) {
    return Json{{"x", to_json(r.x())}, {"y", to_json(r.y())}};
}

Json to_json(const IntervalCollection& c) {
    Json out = Json::array();
    for (const auto& i : c) out.push_back(to_json(i));
    return out;
}

Json to_json(const RectangleCollection& c) {
    Json out = Json::array();
    for (const auto& r : c) out.push_back(to_json(r));
    return out;
}

Json to_json(const DyadicRational& d) {
    return Json{{"mantissa", d.mantissa().str()}, {"exponent", d.exponent()}};
}

Json to_json(const Rational& r) { return Json(r.to_string()); }

Json to_json(const HaarVector& v) {
    Json coeffs = Json::array();
    for (const auto& [q, a] : v.coeffs()) coeffs.push_back(Json{{"rect", to_json(q)}, {"v", a}});
    return Json{{"role", v.role() == Role::function ? "function" : "functional"},
                {"m", v.m()},
                {"N", v.N()},
                {"coeffs", std::move(coeffs)}};
}

Json to_json(const HaarOperator& t) {
    Json entries = Json::array();
    for (const auto& e : t.entries())
        entries.push_back(Json{{"row", to_json(e.row)}, {"col", to_json(e.col)}, {"v", e.value}});
    Json out{{"m", t.m()}, {"N", t.N()}, {"entries", std::move(entries)}};
    if (t.shift() != 0.0) out["shift"] = t.shift();
    return out;
}

Json to_json(const BlockBasisFamily& fam) {
    Json blocks = Json::array();
    for (const auto& b : fam.blocks()) {
        Json signs = Json::array();
        for (std::size_t ix = 0; ix < b.X().size(); ++ix)
            for (std::size_t iy = 0; iy < b.Y().size(); ++iy)
                signs.push_back(Json{{"rect", to_json(DyadicRectangle(b.X()[ix], b.Y()[iy]))},
                                     {"s", b.sign_at(ix, iy)}});
        blocks.push_back(Json{{"R", to_json(b.R())},
                              {"X", to_json(b.X())},
                              {"Y", to_json(b.Y())},
                              {"signs", std::move(signs)}});
    }
    return Json{{"A", to_json(fam.index_set())}, {"blocks", std::move(blocks)}};
}

Json to_json(const LpcReport& rep) {
    Json out{{"satisfied", rep.satisfied},
             {"C_X", to_json(rep.c_x)},
             {"C_Y", to_json(rep.c_y)},
             {"checked_triples", rep.checked_triples}};
    if (rep.violation)
        out["violation"] = Json{{"condition", rep.violation->condition},
                                {"detail", rep.violation->detail}};
    return out;
}

Json to_json(const NormBracket& nb, bool with_witness) {
    Json out{{"lower", nb.lower}, {"upper", nb.upper}, {"converged", nb.converged}};
    if (with_witness) out["witness"] = to_json(nb.witness);
    return out;
}

Json to_json(const LevelSelection& sel) {
    Json out{{"k", sel.k},
             {"rects", to_json(sel.rects)},
             {"covered_measure", to_json(sel.covered_measure)},
             {"bound", to_json(sel.bound_a)}};
    if (!sel.warning.empty()) out["warning"] = sel.warning;
    return out;
}

Json to_json(const DiagCertificate& cert) {
    Json rows = Json::array();
    for (const auto& row : cert.rows)
        rows.push_back(Json{{"R", to_json(row.R)},
                            {"offdiag", row.offdiag},
                            {"diag", row.diag},
                            {"l2sq", row.l2sq.to_double()},
                            {"pass", row.pass}});
    Json out{{"N", cert.achieved_N},
             {"rows", std::move(rows)},
             {"lpc", to_json(cert.lpc)},
             {"pass", cert.pass}};
    out["eta_prime"] = to_json(cert.eta_prime);
    out["delta_checked_at_achieved_resolution"] = cert.delta_checked_at_achieved_resolution;
    if (!cert.warnings.empty()) out["warnings"] = cert.warnings;
    return out;
}

Json to_json(const RamseyResult& r) {
    return Json{{"A", to_json(r.a)},
                {"B", to_json(r.b)},
                {"color", r.color},
                {"carleson_A", to_json(r.carleson_a)},
                {"carleson_B", to_json(r.carleson_b)},
                {"reached_target", r.reached_target},
                {"exhaustive", r.exhaustive}};
}

Json to_json(const FactorizationResult& fr) {
    return Json{{"m", fr.m},
                {"n", fr.n},
                {"big_N", fr.big_N},
                {"H", fr.h_choice == HChoice::T ? "T" : "Id-T"},
                {"norm_E", to_json(fr.norm_E)},
                {"norm_P", to_json(fr.norm_P)},
                {"norm_product_upper", fr.norm_E.upper * fr.norm_P.upper},
                {"residual", fr.residual},
                {"condition", fr.condition},
                {"invertibility_offdiag_mass", fr.invertibility_ratio},
                {"diag_certificate", to_json(fr.diag_certificate)}};
}

Json to_json(const ReiteratedBasis& rb) {
    return Json{{"H", rb.h_choice == HChoice::T ? "T" : "Id-T"},
                {"family", to_json(rb.family)},
                {"rescaled_lpc", to_json(rb.rescaled_lpc)},
                {"offdiag_ratio", rb.offdiag_ratio},
                {"min_diag_ratio", rb.min_diag_ratio},
                {"psi_x_root", to_json(rb.psi_x_root)},
                {"psi_y_root", to_json(rb.psi_y_root)}};
}

Json to_json(const GlueResult& g) {
    Json levels = Json::array();
    for (const auto& fr : g.per_level) levels.push_back(to_json(fr));
    return Json{{"H", g.h_choice == HChoice::T ? "T" : "Id-T"},
                {"norm_product", g.norm_product},
                {"bound", g.bound},
                {"pass", g.pass},
                {"offdiag_mass_lower", g.offdiag_mass_lower},
                {"offdiag_mass_upper", g.offdiag_mass_upper},
                {"levels", std::move(levels)}};
}

DyadicInterval interval_from_json(const Json& j) {
    if (!j.is_object()) parse_fail("interval", "expected an object {level, pos}");
    return DyadicInterval(int(int_field(j, "level", "interval")),
                          std::uint64_t(int_field(j, "pos", "interval")));
}

DyadicRectangle rectangle_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("x") || !j.contains("y"))
        parse_fail("rectangle", "expected an object {x, y}");
    return DyadicRectangle(interval_from_json(j["x"]), interval_from_json(j["y"]));
}

IntervalCollection interval_collection_from_json(const Json& j) {
    if (!j.is_array()) parse_fail("interval collection", "expected an array");
    std::vector<DyadicInterval> v;
    for (const auto& e : j) v.push_back(interval_from_json(e));
    return IntervalCollection(std::move(v));
}

RectangleCollection rectangle_collection_from_json(const Json& j) {
    if (!j.is_array()) parse_fail("rectangle collection", "expected an array");
    std::vector<DyadicRectangle> v;
    for (const auto& e : j) v.push_back(rectangle_from_json(e));
    return RectangleCollection(std::move(v));
}

HaarVector haar_vector_from_json(const Json& j) {
    if (!j.is_object()) parse_fail("haar vector", "expected an object");
    const std::string role = j.value("role", "function");
    if (role != "function" && role != "functional")
        parse_fail("haar vector", "role must be 'function' or 'functional'");
    const int m = int(int_field(j, "m", "haar vector"));
    const int N = int(int_field(j, "N", "haar vector"));
    std::vector<HaarVector::Entry> coeffs;
    if (j.contains("coeffs")) {
        if (!j["coeffs"].is_array()) parse_fail("haar vector", "coeffs must be an array");
        for (const auto& e : j["coeffs"])
            coeffs.emplace_back(rectangle_from_json(e.at("rect")),
                                number_field(e, "v", "haar vector coefficient"));
    }
    return HaarVector(role == "function" ? Role::function : Role::functional, m, N,
                      std::move(coeffs));
}

HaarOperator haar_operator_from_json(const Json& j) {
    if (!j.is_object()) parse_fail("haar operator", "expected an object");
    const int m = int(int_field(j, "m", "haar operator"));
    const int N = int(int_field(j, "N", "haar operator"));
    std::vector<HaarOperator::Entry> entries;
    if (j.contains("entries")) {
        if (!j["entries"].is_array()) parse_fail("haar operator", "entries must be an array");
        for (const auto& e : j["entries"])
            entries.push_back({rectangle_from_json(e.at("row")), rectangle_from_json(e.at("col")),
                               number_field(e, "v", "haar operator entry")});
    }
    const double shift = j.contains("shift") ? number_field(j, "shift", "haar operator") : 0.0;
    return HaarOperator(m, N, std::move(entries), shift);
}

BlockBasisFamily block_basis_family_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("blocks"))
        parse_fail("block basis family", "expected an object with 'blocks'");
    std::vector<SignedBlock> blocks;
    for (const auto& b : j["blocks"]) {
        const DyadicRectangle r = rectangle_from_json(b.at("R"));
        IntervalCollection xs = interval_collection_from_json(b.at("X"));
        IntervalCollection ys = interval_collection_from_json(b.at("Y"));
        std::vector<std::int8_t> grid(xs.size() * ys.size(), 1);
        if (b.contains("signs")) {
            for (const auto& s : b["signs"]) {
                const DyadicRectangle q = rectangle_from_json(s.at("rect"));
                const int sv = int(int_field(s, "s", "sign"));
                auto ix = std::lower_bound(xs.begin(), xs.end(), q.x()) - xs.begin();
                auto iy = std::lower_bound(ys.begin(), ys.end(), q.y()) - ys.begin();
                if (std::size_t(ix) >= xs.size() || xs[ix] != q.x() || std::size_t(iy) >= ys.size() ||
                    ys[iy] != q.y())
                    parse_fail("block basis family", "sign rectangle outside the block grid");
                grid[std::size_t(ix) * ys.size() + std::size_t(iy)] = std::int8_t(sv);
            }
        }
        blocks.emplace_back(r, std::move(xs), std::move(ys), std::move(grid));
    }
    return BlockBasisFamily(std::move(blocks));
}

OuterTensorFamily outer_tensor_family_from_json(const Json& j) {
    OuterTensorFamily out;
    if (!j.is_object() || !j.contains("A"))
        parse_fail("outer tensor family", "expected an object with 'A', 'E', 'F'");
    out.index = rectangle_collection_from_json(j["A"]);
    for (const auto& e : j.at("E"))
        out.ex[interval_from_json(e.at("I"))] = interval_collection_from_json(e.at("coll"));
    for (const auto& f : j.at("F"))
        out.fy[interval_from_json(f.at("J"))] = interval_collection_from_json(f.at("coll"));
    return out;
}

FrequencyContext frequency_context_from_json(const Json& j) {
    FrequencyContext ctx;
    ctx.e = Exponents(number_field(j, "p", "frequency context"),
                      number_field(j, "q", "frequency context"));
    ctx.k0 = interval_from_json(j.at("K0"));
    ctx.l0 = interval_from_json(j.at("L0"));
    ctx.tau = number_field(j, "tau", "frequency context");
    ctx.rho = number_field(j, "rho", "frequency context");
    ctx.r = int(int_field(j, "r", "frequency context"));
    if (j.contains("level_cap")) ctx.level_cap = int(int_field(j, "level_cap", "frequency context"));
    if (j.contains("x_list"))
        for (const auto& e : j["x_list"]) ctx.x_list.push_back(haar_vector_from_json(e));
    if (j.contains("y_list"))
        for (const auto& e : j["y_list"]) ctx.y_list.push_back(haar_vector_from_json(e));
    return ctx;
}

GeneralizedBasis generalized_basis_from_json(const Json& j) {
    std::map<DyadicInterval, GeneralizedBasis::AxisBlock> xb, yb;
    auto parse_axis = [](const Json& arr, const char* key,
                         std::map<DyadicInterval, GeneralizedBasis::AxisBlock>* out) {
        for (const auto& e : arr) {
            GeneralizedBasis::AxisBlock blk;
            blk.intervals = interval_collection_from_json(e.at("intervals"));
            if (e.contains("signs")) {
                for (const auto& s : e["signs"]) blk.signs.push_back(std::int8_t(s.get<int>()));
            } else {
                blk.signs.assign(blk.intervals.size(), 1);
            }
            (*out)[interval_from_json(e.at(key))] = std::move(blk);
        }
    };
    parse_axis(j.at("x_blocks"), "I", &xb);
    parse_axis(j.at("y_blocks"), "J", &yb);
    return GeneralizedBasis(std::move(xb), std::move(yb));
}

RectColoring rect_coloring_from_json(const Json& j) {
    const int n = int(int_field(j, "n", "coloring"));
    return RectColoring(n, rectangle_collection_from_json(j.at("members")));
}

SumSpaceOperator sum_space_operator_from_json(const Json& j) {
    SumSpaceOperator out;
    out.truncation = int(int_field(j, "M", "sum operator"));
    if (j.contains("r")) {
        if (j["r"].is_string() && j["r"].get<std::string>() == "inf")
            out.r = std::numeric_limits<double>::infinity();
        else
            out.r = number_field(j, "r", "sum operator");
    }
    out.e = Exponents(j.value("p", 2.0), j.value("q", 2.0));
    for (const auto& b : j.at("blocks")) {
        const int jj = int(int_field(b, "j", "sum block"));
        const int kk = int(int_field(b, "k", "sum block"));
        out.blocks.emplace(std::make_pair(jj, kk), haar_operator_from_json(b.at("op")));
    }
    return out;
}

std::vector<IndexedComponent> indexed_components_from_json(const Json& j) {
    std::vector<IndexedComponent> out;
    for (const auto& e : j.at("components")) {
        IndexedComponent c;
        c.m = int(int_field(e, "m", "component"));
        c.n = int(int_field(e, "n", "component"));
        c.f = haar_vector_from_json(e.at("f"));
        out.push_back(std::move(c));
    }
    return out;
}

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const std::exception& ex) {
        throw ParseError("invalid JSON in " + path + ": " + ex.what());
    }
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write file: " + path);
    out << text;
}

std::string canonical_dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace haarfactor
