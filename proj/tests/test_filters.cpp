#include "doctest.h"

#include <random>

#include "fixtures.hpp"
#include "sqform/filters.hpp"

using namespace sqform;

namespace {

Monomial m(std::string_view text)
{
    return Monomial::parse(text);
}

std::vector<Monomial> ms(std::initializer_list<const char*> texts)
{
    std::vector<Monomial> out;
    for (const char* t : texts)
        out.push_back(m(t));
    return out;
}

SquareForm fig2()
{
    return fixture::fig2();
}

SquareForm fig3_as_form()
{
    return fixture::fig3_as_form();
}

ZonePair derive(std::string_view a, std::string_view b, int n)
{
    auto d = derive_zone_pair(parse_collection(a, n), parse_collection(b, n), n);
    REQUIRE(std::holds_alternative<ZonePair>(d));
    return std::get<ZonePair>(d);
}

// Distinct primes for variables 0..count-1, drawn from primes <= bound.
PrimeAssignment random_assignment(std::mt19937_64& rng, std::size_t count, std::uint64_t bound)
{
    auto primes = primes_up_to(bound);
    std::shuffle(primes.begin(), primes.end(), rng);
    std::vector<BigInt> chosen(primes.begin(), primes.begin() + static_cast<std::ptrdiff_t>(count));
    return PrimeAssignment(chosen);
}

BigInt sum_of(const std::vector<Monomial>& xs, const PrimeAssignment& pa)
{
    BigInt s = 0;
    for (const auto& x : xs)
        s += evaluate(x, pa);
    return s;
}

// A 3x3 grid whose first t cells form single-cell zones with d distinct
// non-a components; remaining cells are filler.
SquareForm zone_fixture(std::size_t t, std::size_t d)
{
    std::vector<Monomial> cells;
    for (std::size_t i = 0; i < 9; ++i) {
        if (i < t)
            cells.push_back(Monomial::power(VarId(0), static_cast<Exponent>(i + 1))
                            * Monomial::power(VarId(1 + i % d), 1));
        else
            cells.push_back(Monomial::power(VarId(10), static_cast<Exponent>(i)));
    }
    SquareForm f;
    f.grid = Grid<Monomial>(3, cells);
    f.var_count = 11;
    f.magic = m("a");
    return f;
}

std::vector<CellSet> single_cell_zones(std::size_t t)
{
    std::vector<CellSet> zones;
    for (std::size_t i = 0; i < t; ++i)
        zones.push_back({Cell{static_cast<int>(i / 3), static_cast<int>(i % 3)}});
    return zones;
}

std::set<std::uint64_t> allowed_of(const FilterVerdict& v, VarId var)
{
    const auto* c = std::get_if<Constrained>(&v);
    REQUIRE(c != nullptr);
    const auto* allowed = c->constraints.allowed(var);
    REQUIRE(allowed != nullptr);
    return *allowed;
}

} // namespace

// ---------------------------------------------------------------------------

TEST_CASE("bigger zone map on the worked example")
{
    const auto x = ms({"a^3*b^5", "a^3*b^3*c^2", "a^4", "a*b^3*c^4"});
    const auto y = ms({"a^4*b^5", "b^2", "a*c", "a^6*b^4*c^5"});
    const auto map = find_bigger_zone_map(x, y);
    REQUIRE(map);
    CHECK((*map)[0] == 0);
    CHECK((*map)[1] == 3);
    CHECK((*map)[2] == 3);
    CHECK((*map)[3] == 3);
    CHECK(bigger_zone_map_valid(x, y, *map));

    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto pa = random_assignment(rng, 3, 97);
        BigInt image = evaluate(y[0], pa) + evaluate(y[3], pa);
        CHECK(image > sum_of(x, pa));
    }
}

TEST_CASE("bigger zone map edge cases")
{
    CHECK_FALSE(find_bigger_zone_map(ms({"a"}), ms({"b"})));
    const auto x = ms({"a", "a^2"});
    const auto y = ms({"a^3", "b"});
    const auto map = find_bigger_zone_map(x, y);
    REQUIRE(map);
    CHECK(*map == std::vector<std::size_t>{0, 0});
    // Two preimages where one is not below the core of the target.
    CHECK_FALSE(find_bigger_zone_map(ms({"a", "a^3"}), ms({"a^3*b", "c"})));
    CHECK_FALSE(bigger_zone_map_valid(ms({"a", "a^3"}), ms({"a^3*b", "c"}), std::vector<std::size_t>{0, 0}));
    CHECK_FALSE(find_bigger_zone_map({}, ms({"a"})));
}

TEST_CASE("unique minimum order")
{
    auto hit = find_unique_minimum(ms({"a^2", "a^3"}), ms({"a", "a^4"}), 1);
    REQUIRE(hit);
    CHECK(hit->var == VarId(0));
    CHECK(hit->element == 2);
    CHECK(hit->exponent == 1);

    // a's minimum 0 is attained once by b; b's minimum is attained once by a.
    hit = find_unique_minimum(ms({"a*b", "b"}), ms({"a", "a*b^2"}), 2);
    REQUIRE(hit);
    if (hit->var == VarId(0))
        CHECK(hit->element == 1);
    else
        CHECK(hit->element == 2);

    CHECK_FALSE(find_unique_minimum(ms({"a", "b"}), ms({"1", "a*b"}), 2));
}

TEST_CASE("unique minimum forces unequal sums modulo p^(k+1)")
{
    const auto x = ms({"a^2", "a^3"});
    const auto y = ms({"a", "a^4"});
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto pa = random_assignment(rng, 1, 97);
        const BigInt p = pa.at(VarId(0));
        const BigInt mod = p * p;
        const BigInt diff = sum_of(x, pa) - sum_of(y, pa);
        CHECK(((diff % mod) + mod) % mod != 0);
        CHECK(((diff + evaluate(y[0], pa)) % mod) == 0);
    }
}

TEST_CASE("zone-pair filters find nothing on figure 2")
{
    const SquareForm f = fig2();
    enumerate_zone_pairs(6, 2, [&](const ZonePair& zp) {
        CHECK(std::holds_alternative<NoInformation>(min_order_filter(f, zp)));
        CHECK(std::holds_alternative<NoInformation>(bigger_zone_filter(f, zp)));
        return true;
    });
}

TEST_CASE("whole-form filters on figure 2")
{
    const SquareForm f = fig2();
    CHECK(std::holds_alternative<NoInformation>(prime_power_filter(f)));
    CHECK(std::holds_alternative<NoInformation>(four_times_filter(f)));
    CHECK(std::holds_alternative<NoInformation>(signature_filter(f.magic, 6)));
    CHECK(f.magic.divisor_count() == 2592);

    std::size_t f_free = 0;
    for (const auto& e : f.grid.cells())
        f_free += e.exponent(VarId(5)) == 0;
    CHECK(f_free == 30);
}

TEST_CASE("prime power filter")
{
    // Single-variable 3x3 form: every cofactor is a power of a.
    const SquareForm lo = fixture::lo_shu_form();
    REQUIRE(validate_form(lo).ok());
    const FilterVerdict v = prime_power_filter(lo);
    REQUIRE(is_unacceptable(v));
    CHECK(as_unacceptable(v)->witness.dump() == R"({"cell":[0,0],"entry":"a^2","cofactor":"a^13"})");
    CHECK(recheck(lo, *as_unacceptable(v)));
}

TEST_CASE("four times filter")
{
    // e is missing from exactly three of the sixteen cells; b and c each
    // reach their minimum in four.
    std::vector<Monomial> cells;
    for (int i = 0; i < 16; ++i)
        cells.push_back(Monomial{{0, static_cast<Exponent>(i % 4), static_cast<Exponent>(i / 4), 0,
                                  static_cast<Exponent>(i < 3 ? 0 : 1)}});
    SquareForm f;
    f.grid = Grid<Monomial>(4, cells);
    f.var_count = 5;
    f.magic = m("a");
    const FilterVerdict v = four_times_filter(f);
    REQUIRE(is_unacceptable(v));
    CHECK(as_unacceptable(v)->witness.at("var") == "e");
    CHECK(as_unacceptable(v)->witness.at("count") == 3);
    CHECK(recheck(f, *as_unacceptable(v)));

    f.grid = Grid<Monomial>(3, std::vector<Monomial>(cells.begin(), cells.begin() + 9));
    CHECK(std::holds_alternative<NoInformation>(four_times_filter(f)));
}

TEST_CASE("signature patterns for n from 4 to 12")
{
    int unacceptable = 0;
    for (int n = 4; n <= 12; ++n) {
        const auto e = static_cast<Exponent>(n);
        for (const Monomial& magic : {Monomial{{e}}, Monomial{{e, 1}}, Monomial{{e, 2}}, Monomial{{e, 3}},
                                      Monomial{{e, 1, 1}}}) {
            const FilterVerdict v = signature_filter(magic, n);
            unacceptable += is_unacceptable(v);
            if (is_unacceptable(v))
                CHECK(recheck(SquareForm{Grid<Monomial>(n, std::vector<Monomial>(static_cast<std::size_t>(n * n))),
                                         magic.width(), magic},
                              *as_unacceptable(v)));
        }
    }
    CHECK(unacceptable == 45);
    CHECK(is_unacceptable(signature_filter(m("a^9"), 5)));
    CHECK(is_unacceptable(signature_filter(m("a^12*b^3"), 6)));
    CHECK(is_unacceptable(signature_filter(m("a^3*b^12"), 6)));
    CHECK_THROWS_AS(signature_filter(m("1"), 5), std::invalid_argument);
}

TEST_CASE("signature divisor count rule")
{
    // 3 x 3 = 9 divisors: exactly enough for a 3x3 grid.
    CHECK(std::holds_alternative<NoInformation>(signature_filter(m("a^2*b^2"), 3)));
    CHECK(std::holds_alternative<NoInformation>(signature_filter(m("a^2*b^2*c"), 4)));
    const FilterVerdict v = signature_filter(m("a^2*b^2*c"), 5);
    REQUIRE(is_unacceptable(v));
    CHECK(as_unacceptable(v)->witness.at("rule") == "divisor_count");
    CHECK(is_unacceptable(signature_filter(m("a^4*b^4"), 6)));
}

TEST_CASE("prime value limits")
{
    CHECK_FALSE(prime_value_limit(4, 4));
    CHECK(*prime_value_limit(4, 2) == 1);
    CHECK(*prime_value_limit(4, 3) == 3);
    CHECK(*prime_value_limit(6, 4) == 2);
    CHECK(*prime_value_limit(6, 5) == 5);
    CHECK(*prime_value_limit(5, 4) == 4);
    for (std::size_t d = 1; d < 10; ++d)
        for (std::size_t t = d + 1; t < 20; ++t)
            CHECK(*prime_value_limit(t + 1, d) <= *prime_value_limit(t, d));
}

TEST_CASE("prime value bound on explicit zones")
{
    const VarId a(0);
    {
        const FilterVerdict v = prime_value_bound(single_cell_zones(4), zone_fixture(4, 2), a);
        REQUIRE(is_unacceptable(v));
        CHECK(recheck(zone_fixture(4, 2), *as_unacceptable(v)));
    }
    CHECK(allowed_of(prime_value_bound(single_cell_zones(4), zone_fixture(4, 3), a), a)
          == std::set<std::uint64_t>{2, 3});
    CHECK(allowed_of(prime_value_bound(single_cell_zones(6), zone_fixture(6, 4), a), a) == std::set<std::uint64_t>{2});
    CHECK(allowed_of(prime_value_bound(single_cell_zones(6), zone_fixture(6, 5), a), a)
          == std::set<std::uint64_t>{2, 3, 5});
    CHECK(allowed_of(prime_value_bound(single_cell_zones(5), zone_fixture(5, 4), a), a)
          == std::set<std::uint64_t>{2, 3});
    CHECK(std::holds_alternative<NoInformation>(prime_value_bound(single_cell_zones(4), zone_fixture(4, 4), a)));

    std::vector<CellSet> overlapping{{Cell{0, 0}}, {Cell{0, 0}}};
    CHECK_THROWS_AS(prime_value_bound(overlapping, zone_fixture(4, 2), a), std::invalid_argument);
    std::vector<CellSet> empty{{}, {Cell{0, 0}}};
    CHECK_THROWS_AS(prime_value_bound(empty, zone_fixture(4, 2), a), std::invalid_argument);
}

TEST_CASE("zone constructors")
{
    const SquareForm f = fig2();
    CHECK(zones_rows(f).size() == 6);
    const auto corner = zones_through_cell(f, {0, 0});
    REQUIRE(corner.size() == 3);
    for (const auto& z : corner)
        CHECK(z.size() == 5);
    SquareForm five;
    five.grid = Grid<Monomial>(5, std::vector<Monomial>(25));
    CHECK(zones_through_cell(five, {2, 2}).size() == 4);
    CHECK(zones_through_cell(five, {0, 1}).size() == 2);
}

TEST_CASE("center cofactor a^7 b in a 5x5 square")
{
    // Cells through the center hold a^i and a^i*b for i = 0..7; the center is c.
    std::vector<Monomial> cells(25);
    std::vector<Monomial> through;
    for (Exponent i = 0; i < 8; ++i) {
        through.push_back(Monomial::power(VarId(0), i));
        through.push_back(Monomial::power(VarId(0), i) * m("b"));
    }
    std::size_t next = 0;
    Exponent filler = 1;
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) {
            const bool line = r == 2 || c == 2 || r == c || r + c == 4;
            if (r == 2 && c == 2)
                cells[static_cast<std::size_t>(r * 5 + c)] = m("c");
            else if (line)
                cells[static_cast<std::size_t>(r * 5 + c)] = through[next++];
            else
                cells[static_cast<std::size_t>(r * 5 + c)] = Monomial::power(VarId(3), filler++);
        }
    SquareForm f;
    f.grid = Grid<Monomial>(5, cells);
    f.var_count = 4;
    f.magic = m("a^7*b*c");

    const FilterVerdict v = prime_value_bound(zones_through_cell(f, {2, 2}), f, VarId(0));
    REQUIRE(is_unacceptable(v));
    CHECK(as_unacceptable(v)->witness.at("distinct") == 2);
    CHECK(is_unacceptable(derive_prime_constraints(f)));
}

TEST_CASE("whole-product patterns")
{
    CHECK(allowed_of(product_pattern_constraints(m("a^9*b^4"), 6), VarId(0)) == std::set<std::uint64_t>{2});
    CHECK(allowed_of(product_pattern_constraints(m("a^9*b^4"), 5), VarId(0)) == std::set<std::uint64_t>{2, 3});
    CHECK(allowed_of(product_pattern_constraints(m("a^9*b^5"), 6), VarId(0)) == std::set<std::uint64_t>{2, 3, 5});
    CHECK(allowed_of(product_pattern_constraints(m("a^9*b^2*c"), 6), VarId(0))
          == std::set<std::uint64_t>{2, 3, 5});

    const FilterVerdict both = product_pattern_constraints(m("a^4*b^4"), 6);
    REQUIRE(is_unacceptable(both));
    CHECK(as_unacceptable(both)->witness.at("reason") == "distinctness");
    CHECK(std::holds_alternative<NoInformation>(product_pattern_constraints(m("a^8*b^5*c^3*d^2*e*f"), 6)));
}

TEST_CASE("constraint sets only shrink and merge in any order")
{
    std::mt19937_64 rng(21);
    const auto primes = primes_up_to(60);
    auto random_set = [&] {
        PrimeConstraintSet s;
        for (std::size_t v = 0; v < 3; ++v) {
            if (rng() % 3 == 0)
                continue;
            PrimeConstraintSet::Allowed allowed;
            for (auto p : primes)
                if (rng() % 2)
                    allowed.insert(p);
            s.restrict(VarId(v), allowed);
        }
        return s;
    };
    for (int i = 0; i < 100; ++i) {
        const auto x = random_set(), y = random_set(), z = random_set();
        PrimeConstraintSet xy = x;
        xy.merge(y);
        PrimeConstraintSet yx = y;
        yx.merge(x);
        CHECK(xy == yx);
        PrimeConstraintSet left = xy;
        left.merge(z);
        PrimeConstraintSet yz = y;
        yz.merge(z);
        PrimeConstraintSet right = x;
        right.merge(yz);
        CHECK(left == right);
        for (const auto& [v, allowed] : xy.entries()) {
            if (const auto* before = x.allowed(VarId(v)))
                CHECK(std::includes(before->begin(), before->end(), allowed.begin(), allowed.end()));
            for (auto p : allowed)
                CHECK(oracle::is_prime(p));
        }
    }
}

TEST_CASE("joint satisfiability needs distinct primes")
{
    PrimeConstraintSet s;
    s.restrict(VarId(0), {2, 3});
    s.restrict(VarId(1), {2});
    CHECK(s.jointly_satisfiable());
    s.restrict(VarId(2), {3});
    CHECK_FALSE(s.jointly_satisfiable());
    CHECK_FALSE(s.empty_variable());
    s.restrict(VarId(2), {5});
    CHECK(s.empty_variable() == VarId(2));
}

TEST_CASE("report lines")
{
    PrimeConstraintSet s;
    s.restrict(VarId(0), {2, 3});
    CHECK(report_lines(Constrained{s, {}}) == std::vector<std::string>{"CONSTRAIN a IN {2,3}"});
    CHECK(report_lines(NoInformation{}) == std::vector<std::string>{"NOINFO"});
    const auto lines = report_lines(signature_filter(m("a^9"), 5));
    REQUIRE(lines.size() == 1);
    CHECK(lines[0] == R"(UNACCEPTABLE signature_filter {"magic":"a^9","n":5,"rule":"single_variable","divisor_count":"10"})");
    CHECK(parse_lemma("bigger_zone_filter") == Lemma::BiggerZoneFilter);
    CHECK_FALSE(parse_lemma("nope"));
}

// ---------------------------------------------------------------------------

TEST_CASE("congruences from figure 2")
{
    const SquareForm f = fig2();
    const VarId a(0);
    const Congruence rows = extract_congruence(f, derive("R3", "C3", 6), a, 1).simplified();
    CHECK(rows.lhs == ms({"b^2*d"}));
    CHECK(rows.rhs == ms({"b*d"}));
    CHECK(rows.to_string() == "b^2*d = b*d (mod a)");

    const Congruence cols = extract_congruence(f, derive("C3", "C5", 6), a, 1).simplified();
    CHECK(cols.lhs == ms({"b*d", "b^2"}));
    CHECK(cols.rhs == ms({"1"}));

    const Congruence c2 = extract_congruence(f, derive("C3", "C5", 6), a, 2);
    CHECK(c2.to_string().find("(mod a^2)") != std::string::npos);
    CHECK(Congruence::from_json(c2.to_json()) == c2);
    CHECK_THROWS_AS(extract_congruence(f, derive("C3", "C5", 6), a, 0), std::invalid_argument);
}

TEST_CASE("vacuous congruence when every entry carries the variable")
{
    SquareForm f;
    f.grid = Grid<Monomial>(2, ms({"a", "a*b", "a^2", "a*c"}));
    f.var_count = 3;
    f.magic = m("a^2*b");
    const Congruence c = extract_congruence(f, derive("R0", "R1", 2), VarId(0), 1);
    CHECK(c.vacuous());
}

TEST_CASE("extracted congruences hold on figure 3")
{
    const SquareForm f = fig3_as_form();
    REQUIRE(validate_form(f).ok());
    const PrimeAssignment pa{2, 3, 5, 7, 11};
    CHECK(evaluate_form(f, pa) == fixture::fig3());
    for (std::size_t v = 0; v < 5; ++v) {
        for (Exponent k = 1; k <= 2; ++k) {
            enumerate_zone_pairs(7, 2, [&](const ZonePair& zp) {
                const Congruence c = extract_congruence(f, zp, VarId(v), k);
                BigInt mod = 1;
                for (Exponent i = 0; i < k; ++i)
                    mod *= pa.at(VarId(v));
                CHECK((sum_of(c.lhs, pa) - sum_of(c.rhs, pa)) % mod == 0);
                return true;
            });
        }
    }
}

TEST_CASE("figure 3 survives every filter")
{
    const SquareForm f = fig3_as_form();
    PipelineOptions opts;
    opts.csp = true;
    opts.stop_at_unacceptable = false;
    for (const auto& r : run_filters(f, opts))
        CHECK_FALSE(is_unacceptable(r.verdict));
}

TEST_CASE("congruence sweep on figure 2")
{
    const SquareForm f = fig2();
    const FilterVerdict v = congruence_csp(f, VarId(0), {2, 3, 5, 7});
    REQUIRE(is_unacceptable(v));
    const Unacceptable& u = *as_unacceptable(v);
    CHECK_FALSE(u.full_proof());
    CHECK(u.witness.at("candidates") == Witness::parse("[2,3,5,7]"));
    CHECK(recheck(f, u));

    Unacceptable tampered = u;
    tampered.witness["refutations"][0]["congruences"] = Witness::array();
    CHECK_FALSE(recheck(f, tampered));

    {
        CspOptions complete;
        complete.complete = true;
        const FilterVerdict full = congruence_csp(f, VarId(0), {2, 3, 5, 7}, complete);
        REQUIRE(is_unacceptable(full));
        CHECK(as_unacceptable(full)->full_proof());
    }
    CHECK_THROWS_AS(congruence_csp(f, VarId(0), {}), std::invalid_argument);
    CHECK_THROWS_AS(congruence_csp(f, VarId(0), {4}), std::invalid_argument);
}

TEST_CASE("residues modulo 2 reduce to parity")
{
    std::mt19937_64 rng(77);
    const VarId a(0);
    for (int round = 0; round < 300; ++round) {
        std::vector<Congruence> cs;
        bool parity_ok = true;
        const int count = 1 + static_cast<int>(rng() % 3);
        for (int i = 0; i < count; ++i) {
            Congruence c{a, 1, {}, {}};
            const std::size_t l = rng() % 4, r = rng() % 4;
            auto random_term = [&] {
                return Monomial{{0, static_cast<Exponent>(rng() % 3), static_cast<Exponent>(rng() % 3),
                                 static_cast<Exponent>(rng() % 2)}};
            };
            for (std::size_t j = 0; j < l; ++j)
                c.lhs.push_back(random_term());
            for (std::size_t j = 0; j < r; ++j)
                c.rhs.push_back(random_term());
            if (c.vacuous())
                continue;
            parity_ok = parity_ok && (l % 2 == r % 2);
            cs.push_back(c);
        }
        if (cs.empty())
            continue;
        const ResidueResult res = solve_residues(cs, a, 2, 1'000'000);
        CHECK((res.outcome == ResidueOutcome::Satisfiable) == parity_ok);
    }
}

TEST_CASE("residue solver agrees with brute force modulo small primes")
{
    std::mt19937_64 rng(3);
    const VarId a(0);
    for (int round = 0; round < 150; ++round) {
        const std::uint64_t p = std::array<std::uint64_t, 3>{3, 5, 7}[rng() % 3];
        std::vector<Congruence> cs;
        for (int i = 0; i < 2; ++i) {
            Congruence c{a, 1, {}, {}};
            for (std::size_t j = 0, l = 1 + rng() % 3; j < l; ++j)
                c.lhs.push_back(Monomial{{static_cast<Exponent>(rng() % 2 ? 0 : 1),
                                          static_cast<Exponent>(rng() % 3), static_cast<Exponent>(rng() % 3)}});
            for (std::size_t j = 0, r = 1 + rng() % 3; j < r; ++j)
                c.rhs.push_back(Monomial{{0, static_cast<Exponent>(rng() % 3), static_cast<Exponent>(rng() % 3)}});
            cs.push_back(c);
        }
        // Brute force over residues of b and c coprime to p, with a = p.
        bool any = false;
        for (std::uint64_t b = 1; b < p && !any; ++b)
            for (std::uint64_t c = 1; c < p && !any; ++c) {
                bool all = true;
                for (const auto& cong : cs) {
                    auto side = [&](const std::vector<Monomial>& terms) {
                        std::uint64_t s = 0;
                        for (const auto& t : terms) {
                            std::uint64_t v = 1;
                            for (Exponent e = 0; e < t.exponent(0); ++e)
                                v = v * p % p;
                            for (Exponent e = 0; e < t.exponent(1); ++e)
                                v = v * b % p;
                            for (Exponent e = 0; e < t.exponent(2); ++e)
                                v = v * c % p;
                            s = (s + v) % p;
                        }
                        return s;
                    };
                    all = all && side(cong.lhs) == side(cong.rhs);
                }
                any = all;
            }
        const ResidueResult res = solve_residues(cs, a, p, 1'000'000);
        CHECK((res.outcome == ResidueOutcome::Satisfiable) == any);
    }
}

TEST_CASE("witnesses of the full pipeline recheck")
{
    const SquareForm lo = fixture::lo_shu_form();
    PipelineOptions opts;
    opts.stop_at_unacceptable = false;
    opts.signature = false;
    const auto results = run_filters(lo, opts);
    int fired = 0;
    for (const auto& r : results) {
        if (const auto* u = as_unacceptable(r.verdict)) {
            CHECK(recheck(lo, *u));
            ++fired;
        }
    }
    CHECK(fired >= 2);

    // The product patterns start at n = 4 and a^15 has enough divisors.
    CHECK(std::holds_alternative<NoInformation>(signature_filter(lo.magic, 3)));
}

TEST_CASE("tampered witnesses fail recheck")
{
    const SquareForm lo = fixture::lo_shu_form();
    const FilterVerdict v = prime_power_filter(lo);
    REQUIRE(is_unacceptable(v));
    Unacceptable u = *as_unacceptable(v);
    u.witness["cell"] = Witness::array({1, 1});
    CHECK_FALSE(recheck(lo, u));
    CHECK_FALSE(recheck(fig2(), *as_unacceptable(v)));
}
