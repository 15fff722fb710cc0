#include "doctest.h"

#include <map>

#include "oracles.hpp"
#include "sqform/zones.hpp"

using namespace sqform;

namespace {

ConcreteSquare fig3()
{
    return parse_square_csv(oracle::read_file(oracle::data_path("fig3.csv")));
}

ZonePair derive(std::string_view a, std::string_view b, int n)
{
    auto d = derive_zone_pair(parse_collection(a, n), parse_collection(b, n), n);
    REQUIRE(std::holds_alternative<ZonePair>(d));
    return std::get<ZonePair>(d);
}

ZoneRejection reject(std::vector<Strip> a, std::vector<Strip> b, int n)
{
    auto d = derive_zone_pair(make_collection(std::move(a), n), make_collection(std::move(b), n), n);
    REQUIRE(std::holds_alternative<ZoneRejection>(d));
    return std::get<ZoneRejection>(d);
}

// Zone pairs from every pair of disjoint strip subsets of equal size k, with
// X oriented to hold the smallest cell, computed from raw coverage counts.
std::set<std::pair<std::vector<int>, std::vector<int>>> brute_zone_pairs(int n, int max_k)
{
    const auto ls = oracle::lines(n);
    const int total = static_cast<int>(ls.size());
    std::set<std::pair<std::vector<int>, std::vector<int>>> out;
    for (unsigned a = 1; a < (1u << total); ++a) {
        for (unsigned b = a + 1; b < (1u << total); ++b) {
            if ((a & b) || __builtin_popcount(a) != __builtin_popcount(b) || __builtin_popcount(a) > max_k)
                continue;
            std::vector<int> diff(static_cast<std::size_t>(n * n), 0);
            for (int s = 0; s < total; ++s) {
                for (int c : ls[static_cast<std::size_t>(s)]) {
                    if (a >> s & 1)
                        ++diff[static_cast<std::size_t>(c)];
                    if (b >> s & 1)
                        --diff[static_cast<std::size_t>(c)];
                }
            }
            std::vector<int> x, y;
            bool ok = true;
            for (int c = 0; c < n * n; ++c) {
                const int d = diff[static_cast<std::size_t>(c)];
                if (d > 1 || d < -1)
                    ok = false;
                else if (d == 1)
                    x.push_back(c);
                else if (d == -1)
                    y.push_back(c);
            }
            if (!ok || x.empty() || y.empty())
                continue;
            if (y.front() < x.front())
                std::swap(x, y);
            out.emplace(x, y);
        }
    }
    return out;
}

} // namespace

TEST_CASE("figure 3 zones from two rows and two columns")
{
    const ConcreteSquare sq = fig3();
    const ZonePair zp = derive("R0,R1", "C0,C1", 7);
    CHECK(zp.x.size() == 10);
    CHECK(zp.y.size() == 10);
    CHECK(zone_sum(sq, zp.x) == 648);
    CHECK(zone_sum(sq, zp.y) == 648);
    CHECK(zone_product(sq, zp.x) == BigInt(1955476131840000ULL));
    CHECK(zone_product(sq, zp.y) == BigInt(1955476131840000ULL));
    CHECK(render(zp).rfind("X={(0,2),(0,3),", 0) == 0);
    CHECK(render(zp).find("from A=[R0,R1] B=[C0,C1]") != std::string::npos);
}

TEST_CASE("zones of a magic square always balance")
{
    const ConcreteSquare sq = fig3();
    std::size_t count = 0;
    enumerate_zone_pairs(7, 2, [&](const ZonePair& zp) {
        CHECK(zone_sum(sq, zp.x) == zone_sum(sq, zp.y));
        CHECK(zone_product(sq, zp.x) == zone_product(sq, zp.y));
        ++count;
        return true;
    });
    CHECK(count > 100);
}

TEST_CASE("collection parsing ignores order")
{
    CHECK(parse_collection("R1,R0", 4) == parse_collection("R0,R1", 4));
    CHECK(format_collection(parse_collection("D-,C2,D+,R3", 4)) == "R3,C2,D+,D-");
    CHECK_THROWS_AS(parse_collection("R4", 4), ParseError);
    CHECK_THROWS_AS(parse_collection("", 4), ParseError);
}

TEST_CASE("invalid collection pairs are rejected with a reason")
{
    const int n = 4;
    CHECK(reject({Strip::row(0)}, {Strip::row(0)}, n) == ZoneRejection::SharedStrip);
    CHECK(reject({Strip::row(0), Strip::row(0)}, {Strip::col(0), Strip::col(1)}, n) == ZoneRejection::RepeatedStrip);
    CHECK(reject({Strip::row(0)}, {Strip::col(0), Strip::col(1)}, n) == ZoneRejection::SizeMismatch);
    CHECK(reject({Strip::row(4)}, {Strip::row(0)}, n) == ZoneRejection::StripOutOfRange);
    // Row 0 and the main diagonal both cover (0,0).
    CHECK(reject({Strip::row(0), Strip::main_diag()}, {Strip::col(1), Strip::col(2)}, n)
          == ZoneRejection::CountGap);
    CHECK_FALSE(describe(ZoneRejection::EmptyZone).empty());
}

TEST_CASE("empty zones are rejected")
{
    // All rows and all columns cover every cell exactly once each.
    std::vector<Strip> rows, cols;
    for (int i = 0; i < 3; ++i) {
        rows.push_back(Strip::row(i));
        cols.push_back(Strip::col(i));
    }
    CHECK(reject(rows, cols, 3) == ZoneRejection::EmptyZone);
}

TEST_CASE("enumeration matches raw coverage counting")
{
    for (auto [n, k] : {std::pair{3, 3}, std::pair{4, 2}, std::pair{5, 1}}) {
        const auto want = brute_zone_pairs(n, k);
        std::set<std::pair<std::vector<int>, std::vector<int>>> got;
        std::size_t visits = 0;
        enumerate_zone_pairs(n, k, [&](const ZonePair& zp) {
            std::vector<int> x, y;
            for (const Cell& c : zp.x)
                x.push_back(c.row * n + c.col);
            for (const Cell& c : zp.y)
                y.push_back(c.row * n + c.col);
            CHECK(x.front() < y.front());
            got.emplace(x, y);
            ++visits;
            return true;
        });
        CHECK(visits == got.size());
        CHECK(got == want);
    }
}

TEST_CASE("single strips of a 5x5 square give 66 zone pairs")
{
    CHECK(enumerate_zone_pairs(5, 1).size() == 66);
}

TEST_CASE("enumeration is deterministic and can stop early")
{
    CHECK(enumerate_zone_pairs(4, 2) == enumerate_zone_pairs(4, 2));
    std::size_t seen = 0;
    enumerate_zone_pairs(4, 2, [&](const ZonePair&) { return ++seen < 5; });
    CHECK(seen == 5);
    CHECK_THROWS_AS(enumerate_zone_pairs(4, 0), std::invalid_argument);
    CHECK_THROWS_AS(enumerate_zone_pairs(4, 11), std::invalid_argument);
}

TEST_CASE("zone exponents on a form")
{
    const SquareForm f = parse_form_csv(oracle::read_file(oracle::data_path("fig2.form")));
    const ZonePair zp = derive("R3", "C3", 6);
    CHECK(zone_exponents(f, zp.x) == zone_exponents(f, zp.y));
    CHECK(zone_entries(f, zp.x).size() == 5);
}
