#include "doctest.h"

#include <numeric>

#include "oracles.hpp"
#include "sqform/board.hpp"

using namespace sqform;

namespace {

ConcreteSquare fig1()
{
    return parse_square_csv(oracle::read_file(oracle::data_path("fig1.csv")));
}

ConcreteSquare fig3()
{
    return parse_square_csv(oracle::read_file(oracle::data_path("fig3.csv")));
}

SquareForm fig2()
{
    return parse_form_csv(oracle::read_file(oracle::data_path("fig2.form")));
}

} // namespace

TEST_CASE("strip order, names and ordinals")
{
    const int n = 5;
    const auto all = strips(n);
    REQUIRE(all.size() == 12);
    CHECK(all[0].name() == "R0");
    CHECK(all[5].name() == "C0");
    CHECK(all[10].name() == "D+");
    CHECK(all[11].name() == "D-");
    for (int i = 0; i < 12; ++i) {
        CHECK(all[static_cast<std::size_t>(i)].ordinal(n) == i);
        CHECK(Strip::from_ordinal(i, n) == all[static_cast<std::size_t>(i)]);
        CHECK(Strip::parse(all[static_cast<std::size_t>(i)].name()) == all[static_cast<std::size_t>(i)]);
    }
    CHECK_THROWS_AS(Strip::parse("X1"), ParseError);
    CHECK_THROWS_AS(Strip::parse("R"), ParseError);
    CHECK_FALSE(Strip::row(5).valid_for(5));
}

TEST_CASE("strip cells match the reference lines")
{
    for (int n : {1, 2, 3, 6}) {
        const auto ref = oracle::lines(n);
        const auto all = strips(n);
        for (std::size_t s = 0; s < all.size(); ++s) {
            std::vector<int> got;
            for (const Cell& c : all[s].cells(n))
                got.push_back(c.row * n + c.col);
            std::sort(got.begin(), got.end());
            auto want = ref[s];
            std::sort(want.begin(), want.end());
            CHECK(got == want);
        }
    }
    CHECK(Strip::anti_diag().contains({1, 1}, 3));
    CHECK_FALSE(Strip::anti_diag().contains({0, 0}, 3));
}

TEST_CASE("symmetries form the dihedral orbit")
{
    const int n = 4;
    std::vector<int> values(16);
    std::iota(values.begin(), values.end(), 0);
    const Grid<int> g(n, values);
    std::set<std::vector<int>> ours;
    for (Symmetry s : kAllSymmetries)
        ours.insert(g.transformed(s).cells());
    const auto ref = oracle::dihedral_images(values, n);
    CHECK(ours == std::set<std::vector<int>>(ref.begin(), ref.end()));
    CHECK(g.transformed(Symmetry::Transpose).at(0, 1) == g.at(1, 0));
    CHECK(g.transformed(Symmetry::Identity) == g);
}

TEST_CASE("grid dimension errors")
{
    CHECK_THROWS_AS(Grid<int>(3, std::vector<int>(8)), std::invalid_argument);
    CHECK_THROWS_AS(ConcreteSquare(1, {BigInt(0)}), std::invalid_argument);
}

TEST_CASE("figure 3 is additive and multiplicative")
{
    const MagicReport r = check_magic(fig3());
    CHECK(r.is_additive);
    CHECK(r.is_multiplicative);
    REQUIRE(r.magic_sum);
    REQUIRE(r.magic_product);
    CHECK(*r.magic_sum == 465);
    CHECK(*r.magic_product == BigInt(150885504000ULL));
    CHECK(r.deviations.empty());
}

TEST_CASE("figure 1 misses on the anti-diagonal only")
{
    const ConcreteSquare sq = fig1();
    const MagicReport r = check_magic(sq);
    CHECK_FALSE(r.is_additive);
    CHECK_FALSE(r.is_multiplicative);
    CHECK(r.modal_sum == 570);
    CHECK(r.modal_product == BigInt(6810804000ULL));

    // Direct computation of the anti-diagonal.
    BigInt sum = 0, product = 1;
    for (int i = 0; i < 5; ++i) {
        sum += sq.at({i, 4 - i});
        product *= sq.at({i, 4 - i});
    }
    REQUIRE(r.deviations.size() == 1);
    const StripDeviation& d = r.deviations.front();
    CHECK(d.strip == Strip::anti_diag());
    CHECK(d.sum_deviates);
    CHECK(d.product_deviates);
    CHECK(d.sum_delta == sum - 570);
    CHECK(d.product_delta == product - BigInt(6810804000ULL));
    CHECK(sum == 367);
    CHECK(product == 760134375);

    const std::string text = render_report(r);
    CHECK(text.find("deviates D-: sum_delta=-203 product_delta=-6050669625") != std::string::npos);
    CHECK(text.find("modal sum: 570") != std::string::npos);
}

TEST_CASE("square CSV errors carry positions")
{
    auto error_at = [](std::string_view text) -> std::pair<std::size_t, std::size_t> {
        try {
            parse_square_csv(text);
        } catch (const ParseError& e) {
            return {e.line(), e.column()};
        }
        return {0, 0};
    };
    CHECK(error_at("") == std::pair<std::size_t, std::size_t>{1, 1});
    CHECK(error_at("1,2\n3,x\n") == std::pair<std::size_t, std::size_t>{2, 3});
    CHECK(error_at("1,2\n3\n").first == 2);
    CHECK(error_at("1,2\n3,0\n") == std::pair<std::size_t, std::size_t>{2, 3});
    CHECK(error_at("1,,\n1,2,3\n4,5,6\n") == std::pair<std::size_t, std::size_t>{1, 3});
    CHECK_NOTHROW(parse_square_csv("1, 2\r\n3,4"));
}

TEST_CASE("CSV round trip")
{
    const ConcreteSquare sq = fig3();
    CHECK(format_square_csv(sq) == oracle::read_file(oracle::data_path("fig3.csv")));
    const SquareForm f = fig2();
    CHECK(format_form_csv(f) == oracle::read_file(oracle::data_path("fig2.form")));
    CHECK(parse_form_csv(format_form_csv(f)) == f);
}

TEST_CASE("figure 2 form validates")
{
    const SquareForm f = fig2();
    CHECK(f.n() == 6);
    CHECK(f.var_count == 6);
    CHECK(f.magic == Monomial::parse("a^8*b^5*c^3*d^2*e*f"));
    CHECK(validate_form(f).ok());
    std::set<Monomial> distinct(f.grid.cells().begin(), f.grid.cells().end());
    CHECK(distinct.size() == 36);
}

TEST_CASE("form diagnoses")
{
    SquareForm f = fig2();
    std::vector<Monomial> cells = f.grid.cells();
    std::swap(cells[0], cells[1]);
    SquareForm swapped{Grid<Monomial>(6, cells), f.var_count, f.magic};
    const FormDiagnosis mismatch = validate_form(swapped);
    CHECK(mismatch.kind == FormDiagnosis::Kind::StripMismatch);
    CHECK(mismatch.strip == Strip::col(0));

    cells = f.grid.cells();
    cells[7] = cells[2];
    const FormDiagnosis dup = validate_form(SquareForm{Grid<Monomial>(6, cells), f.var_count, f.magic});
    CHECK(dup.kind == FormDiagnosis::Kind::DuplicateEntry);
    CHECK(dup.first == Cell{0, 2});
    CHECK(dup.second == Cell{1, 1});
    CHECK(dup.describe(6) == "duplicate entry at (0,2) and (1,1)");
}

TEST_CASE("evaluating a form gives a multiplicative square")
{
    const SquareForm f = fig2();
    const ConcreteSquare sq = evaluate_form(f, PrimeAssignment{2, 3, 5, 7, 11, 13});
    const MagicReport r = check_magic(sq);
    CHECK(r.is_multiplicative);
    CHECK(*r.magic_product == BigInt(54486432000ULL));
    CHECK_FALSE(r.is_additive);
    CHECK_THROWS_AS(evaluate_form(f, PrimeAssignment{2, 3}), std::invalid_argument);
}

TEST_CASE("form symmetries and relabeling stay valid")
{
    const SquareForm f = fig2();
    for (Symmetry s : kAllSymmetries)
        CHECK(validate_form(f.transformed(s)).ok());
    const std::vector<std::size_t> swap_ef{0, 1, 2, 3, 5, 4};
    const SquareForm g = f.relabeled(swap_ef);
    CHECK(validate_form(g).ok());
    CHECK(g.magic == f.magic);
}
