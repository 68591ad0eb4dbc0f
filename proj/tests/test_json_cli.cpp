#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "haarfactor/estimate.hpp"
#include "haarfactor/json_io.hpp"

using namespace haarfactor;

namespace {

DyadicInterval ivl(int level, std::uint64_t pos) { return DyadicInterval(level, pos); }

std::string bin_path() {
    const char* p = std::getenv("HAARFACTOR_BIN");
    REQUIRE(p != nullptr);
    return p;
}

std::string tmp_file(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/haarfactor_test_" + name;
    std::ofstream out(path);
    out << content;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = bin_path() + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("schema round trips preserve structure") {
    Rng rng(5);

    // HaarVector
    HaarVectorBuilder fb(Role::functional, 2, 3);
    for (const auto& r : RectangleCollection::full_grid(2, 3))
        if (rng.uniform() < 0.3) fb.add(r, rng.symmetric());
    const HaarVector f = fb.build();
    const HaarVector f2 = haar_vector_from_json(to_json(f));
    CHECK(f2.role() == f.role());
    CHECK(f2.coeffs() == f.coeffs());

    // HaarOperator with identity component
    std::vector<HaarOperator::Entry> entries;
    entries.push_back({DyadicRectangle(ivl(1, 0), ivl(0, 0)),
                       DyadicRectangle(ivl(0, 0), ivl(1, 1)), 0.75});
    const HaarOperator t(1, 1, std::move(entries), 0.5);
    const HaarOperator t2 = haar_operator_from_json(to_json(t));
    CHECK(t2.shift() == t.shift());
    REQUIRE(t2.entries().size() == 1);
    CHECK(t2.entries()[0].value == 0.75);

    // Pure sparse operators carry no shift key (spec schema).
    const HaarOperator sparse(1, 1, {{DyadicRectangle::unit(), DyadicRectangle::unit(), 1.0}}, 0.0);
    CHECK(!to_json(sparse).contains("shift"));

    // BlockBasisFamily with signs
    std::vector<SignedBlock> blocks;
    blocks.emplace_back(DyadicRectangle::unit(), IntervalCollection({ivl(1, 0), ivl(1, 1)}),
                        IntervalCollection({ivl(2, 1)}), std::vector<std::int8_t>{1, -1});
    const BlockBasisFamily fam(std::move(blocks));
    const BlockBasisFamily fam2 = block_basis_family_from_json(to_json(fam));
    CHECK(fam2.index_set() == fam.index_set());
    CHECK(fam2.blocks()[0].sign_at(1, 0) == -1);

    // DyadicRational as mantissa/exponent strings
    const DyadicRational d(BigInt(-7), -5);
    const Json dj = to_json(d);
    CHECK(dj["mantissa"] == "-7");
    CHECK(dj["exponent"] == -5);
}

TEST_CASE("canonical JSON of equal reports is byte-equal") {
    auto make = [] {
        Json j{{"b", 1.5}, {"a", Json::array({1, 2, 3})}};
        return canonical_dump(j);
    };
    CHECK(make() == make());
    // ordered_json preserves insertion order, so logically-equal maps built in a
    // different order are distinct documents; builders must use the canonical order.
    Json j1{{"x", 1}, {"y", 2}};
    Json j2{{"y", 2}, {"x", 1}};
    CHECK(canonical_dump(j1) != canonical_dump(j2));
}

TEST_CASE("cli: norm example 0.25 and exit-code contract") {
    const std::string f = tmp_file(
        "h.json",
        R"({"role":"function","m":1,"N":2,"coeffs":[{"rect":{"x":{"level":1,"pos":0},"y":{"level":2,"pos":0}},"v":1.0}]})");
    const std::string out = "/tmp/haarfactor_test_norm_out.json";
    const int rc = run_cli("norm --p 1 --q 2 --in " + f + " --out " + out);
    CHECK(rc == 0);
    const Json rep = load_json_file(out);
    CHECK(rep["certificate"]["norm"].get<double>() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(rep["pass"] == true);

    // Parse errors exit with 2.
    CHECK(run_cli("norm --p 1 --q 2 --in /tmp/does_not_exist.json") != 0);
}

TEST_CASE("cli: randomized stages demand a seed") {
    const std::string f = tmp_file(
        "g.json",
        R"({"role":"functional","m":1,"N":1,"coeffs":[{"rect":{"x":{"level":0,"pos":0},"y":{"level":0,"pos":0}},"v":1.0}]})");
    CHECK(run_cli("dualnorm --p 2 --q 2 --in " + f) != 0);
    CHECK(run_cli("dualnorm --p 2 --q 2 --in " + f + " --seed 7") == 0);
}

TEST_CASE("cli: byte-identical certificates across reruns with the same seed") {
    const std::string op = tmp_file(
        "op.json",
        R"({"m":1,"N":20,"entries":[{"row":{"x":{"level":1,"pos":0},"y":{"level":1,"pos":0}},"col":{"x":{"level":0,"pos":0},"y":{"level":1,"pos":1}},"v":0.2}],"shift":0.6})");
    const std::string o1 = "/tmp/haarfactor_test_fact1.json";
    const std::string o2 = "/tmp/haarfactor_test_fact2.json";
    CHECK(run_cli("factorize --op " + op + " --delta 0.5 --eta 1.0 --gamma 2 --nmax 20 --seed 7 --out " + o1) == 0);
    CHECK(run_cli("factorize --op " + op + " --delta 0.5 --eta 1.0 --gamma 2 --nmax 20 --seed 7 --out " + o2) == 0);
    CHECK(slurp(o1) == slurp(o2));
    CHECK(!slurp(o1).empty());
}

TEST_CASE("cli: end-to-end identity pipeline passes with H = T") {
    const std::string op = tmp_file("id.json", R"({"m":1,"N":20,"entries":[],"shift":1.0})");
    const std::string out = "/tmp/haarfactor_test_e2e.json";
    const int rc = run_cli("end-to-end --op " + op +
                           " --n 1 --gamma 1.0 --eta 0.5 --nmax 20 --seed 7 --out " + out);
    CHECK(rc == 0);
    const Json rep = load_json_file(out);
    CHECK(rep["pass"] == true);
    CHECK(rep["certificate"]["H"] == "T");

    // Determinism of the full pipeline report.
    const std::string out2 = "/tmp/haarfactor_test_e2e2.json";
    CHECK(run_cli("end-to-end --op " + op +
                  " --n 1 --gamma 1.0 --eta 0.5 --nmax 20 --seed 7 --out " + out2) == 0);
    CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("cli: markdown report renders one row per certified inequality") {
    const std::string op = tmp_file("id2.json", R"({"m":1,"N":20,"entries":[],"shift":1.0})");
    const std::string out = "/tmp/haarfactor_test_md.md";
    CHECK(run_cli("almost-diag --op " + op +
                  " --m 1 --n 1 --gamma 1 --eta 0.5 --delta 1.0 --nmax 20 --report md --out " +
                  out) == 0);
    const std::string md = slurp(out);
    CHECK(md.find("| inequality | measurement | status |") != std::string::npos);
    CHECK(md.find("almost-diag offdiagonal") != std::string::npos);
    CHECK(md.find("large diagonal") != std::string::npos);
    CHECK(md.find("FAIL") == std::string::npos);
}

TEST_CASE("cli: scenario config overrides the flags") {
    const std::string f = tmp_file(
        "h2.json",
        R"({"role":"function","m":1,"N":2,"coeffs":[{"rect":{"x":{"level":1,"pos":0},"y":{"level":2,"pos":0}},"v":1.0}]})");
    const std::string cfg = tmp_file("cfg.json", R"({"stage":"norm","p":1.0,"q":2.0,"in":")" +
                                                     f + R"("})");
    const std::string out = "/tmp/haarfactor_test_cfg.json";
    CHECK(run_cli("norm --p 3 --q 3 --in /tmp/nonexistent --config " + cfg + " --out " + out) == 0);
    const Json rep = load_json_file(out);
    CHECK(rep["certificate"]["norm"].get<double>() == doctest::Approx(0.25));
}

TEST_CASE("cli: select-level, annihilate, glue, reindex stages") {
    // select-level: zero lists give k = r and full covered measure.
    Json ctx{{"p", 2.0},   {"q", 2.0},   {"K0", Json{{"level", 0}, {"pos", 0}}},
             {"L0", Json{{"level", 0}, {"pos", 0}}},
             {"tau", 0.25}, {"rho", 0.5}, {"r", 1}};
    const std::string ctxf = tmp_file("ctx.json", canonical_dump(ctx));
    const std::string selo = "/tmp/haarfactor_test_sel.json";
    CHECK(run_cli("select-level --ctx " + ctxf + " --out " + selo) == 0);
    const Json srep = load_json_file(selo);
    CHECK(srep["certificate"]["k"] == 1);
    CHECK(srep["certificate"]["covered_measure"]["mantissa"] == "1");

    // annihilate: d = 1 subspace.
    Json sub{{"vectors", Json::array({Json{
        {"role", "function"}, {"m", 1}, {"N", 2},
        {"coeffs", Json::array({Json{{"rect", Json{{"x", Json{{"level", 1}, {"pos", 0}}},
                                                   {"y", Json{{"level", 2}, {"pos", 1}}}}},
                                     {"v", 1.0}}})}}})}};
    const std::string subf = tmp_file("sub.json", canonical_dump(sub));
    CHECK(run_cli("annihilate --subspace " + subf + " --m 1 --n 1 --eta 0.5 --nmax 20") == 0);

    // glue: two delta-identity blocks.
    Json sum{{"M", 2}, {"r", 2.0}, {"p", 2.0}, {"q", 2.0},
             {"blocks", Json::array({
                 Json{{"j", 1}, {"k", 1}, {"op", Json{{"m", 1}, {"N", 1}, {"entries", Json::array()}, {"shift", 0.5}}}},
                 Json{{"j", 2}, {"k", 2}, {"op", Json{{"m", 2}, {"N", 2}, {"entries", Json::array()}, {"shift", 0.5}}}}})}};
    const std::string sumf = tmp_file("sum.json", canonical_dump(sum));
    const std::string glueo = "/tmp/haarfactor_test_glue.json";
    CHECK(run_cli("glue --sum " + sumf + " --delta 0.5 --eta 1.1 --r 2 --nmax 20 --seed 3 --out " +
                  glueo) == 0);
    CHECK(load_json_file(glueo)["certificate"]["norm_product"].get<double>() ==
          doctest::Approx(2.0));

    // reindex: one component lands on the diagonal.
    Json comps{{"components", Json::array({Json{
        {"m", 1}, {"n", 2},
        {"f", Json{{"role", "function"}, {"m", 1}, {"N", 2},
                   {"coeffs", Json::array({Json{{"rect", Json{{"x", Json{{"level", 1}, {"pos", 0}}},
                                                              {"y", Json{{"level", 2}, {"pos", 0}}}}},
                                                {"v", 1.0}}})}}}}})}};
    const std::string compf = tmp_file("comps.json", canonical_dump(comps));
    const std::string reo = "/tmp/haarfactor_test_reindex.json";
    CHECK(run_cli("reindex --in " + compf + " --r 2 --out " + reo) == 0);
    CHECK(load_json_file(reo)["certificate"]["components"][0]["slot"] == 2);

    // almost-diag with --family-out writes the family as its own document.
    const std::string op = tmp_file("adid.json", R"({"m":1,"N":20,"entries":[],"shift":1.0})");
    const std::string famo = "/tmp/haarfactor_test_famout.json";
    CHECK(run_cli("almost-diag --op " + op +
                  " --m 1 --n 1 --gamma 1 --eta 0.5 --delta 1.0 --nmax 20 --family-out " + famo) ==
          0);
    const Json fam = load_json_file(famo);
    CHECK(fam.contains("A"));
    CHECK(fam.contains("blocks"));
    // The written family re-parses and re-verifies through the public checker.
    CHECK(check_local_product(block_basis_family_from_json(fam)).satisfied);
}

TEST_CASE("cli: almost-diag with a generalized basis dictionary") {
    Json basis{{"x_blocks", Json::array({
                   Json{{"I", Json{{"level", 0}, {"pos", 0}}},
                        {"intervals", Json::array({Json{{"level", 0}, {"pos", 0}}})}},
                   Json{{"I", Json{{"level", 1}, {"pos", 0}}},
                        {"intervals", Json::array({Json{{"level", 1}, {"pos", 0}}})}},
                   Json{{"I", Json{{"level", 1}, {"pos", 1}}},
                        {"intervals", Json::array({Json{{"level", 1}, {"pos", 1}}})}}})},
               {"y_blocks", Json::array({
                   Json{{"J", Json{{"level", 0}, {"pos", 0}}},
                        {"intervals", Json::array({Json{{"level", 0}, {"pos", 0}}})}}})}};
    const std::string basisf = tmp_file("basis.json", canonical_dump(basis));
    const std::string op = tmp_file("gbid.json", R"({"m":1,"N":20,"entries":[],"shift":1.0})");
    const std::string out = "/tmp/haarfactor_test_gb.json";
    CHECK(run_cli("almost-diag --op " + op +
                  " --m 1 --n 1 --gamma 1 --eta 0.5 --delta 1.0 --nmax 20 --basis " + basisf +
                  " --out " + out) == 0);
    CHECK(load_json_file(out)["certificate"]["certificate"]["pass"] == true);
}

TEST_CASE("cli: check-lpc and ramsey stages") {
    // identity family over D^1 x D^1 as JSON
    Json fam = to_json(BlockBasisFamily::identity(1, 1));
    const std::string famf = tmp_file("fam.json", canonical_dump(fam));
    const std::string out = "/tmp/haarfactor_test_lpc.json";
    CHECK(run_cli("check-lpc --in " + famf + " --out " + out) == 0);
    const Json rep = load_json_file(out);
    CHECK(rep["certificate"]["satisfied"] == true);
    CHECK(rep["certificate"]["C_X"] == "1");

    Json coloring{{"n", 2}, {"members", to_json(RectangleCollection::full_grid(2, 2))}};
    const std::string colf = tmp_file("col.json", canonical_dump(coloring));
    const std::string rout = "/tmp/haarfactor_test_ramsey.json";
    CHECK(run_cli("ramsey --coloring " + colf + " --target 3 --out " + rout) == 0);
    const Json rrep = load_json_file(rout);
    CHECK(rrep["certificate"]["carleson_A"]["mantissa"] == "3");
    CHECK(rrep["certificate"]["monochromatic"] == true);
}
