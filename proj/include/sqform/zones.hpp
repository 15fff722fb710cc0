#pragma once

// Pairwise zones: two equal-size collections of strips with no strip in
// common, where every cell is covered a number of times differing by at most
// one between the collections. X holds the cells covered once more by the
// first collection, Y those covered once more by the second. In any
// additive (multiplicative) square, X and Y have equal sums (products).

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sqform/board.hpp"

namespace sqform {

// Strips sorted by ordinal, no repeats.
using StripCollection = std::vector<Strip>;
// Cells sorted row-major, no repeats.
using CellSet = std::vector<Cell>;

StripCollection make_collection(std::vector<Strip> strips, int n);
// "R0,R1" -> {R0, R1}; ordering of the input is irrelevant.
StripCollection parse_collection(std::string_view text, int n);
std::string format_collection(const StripCollection& c);

struct ZonePair {
    CellSet x;
    CellSet y;
    StripCollection a; // source of x
    StripCollection b; // source of y

    friend bool operator==(const ZonePair&, const ZonePair&) = default;
};

enum class ZoneRejection {
    StripOutOfRange,
    RepeatedStrip,   // a strip occurs twice inside one collection
    SizeMismatch,
    SharedStrip,
    CountGap,        // some cell is covered 2+ more times by one collection
    EmptyZone,
};

std::string_view describe(ZoneRejection r);

using ZoneDerivation = std::variant<ZonePair, ZoneRejection>;

ZoneDerivation derive_zone_pair(const StripCollection& a, const StripCollection& b, int n);

BigInt zone_sum(const ConcreteSquare& square, const CellSet& zone);
BigInt zone_product(const ConcreteSquare& square, const CellSet& zone);
Monomial zone_exponents(const SquareForm& form, const CellSet& zone);
std::vector<Monomial> zone_entries(const SquareForm& form, const CellSet& zone);

// Every valid zone pair from collections of size 1..max_strips, each
// unordered {X, Y} once. Labels are canonical: X contains the smallest cell
// of X u Y. Order: collection size, then (a, b) in lexicographic strip order.
// The visitor returns false to stop early.
void enumerate_zone_pairs(int n, int max_strips, const std::function<bool(const ZonePair&)>& visit);
std::vector<ZonePair> enumerate_zone_pairs(int n, int max_strips);

// X={(r,c),...} Y={(r,c),...} from A=[...] B=[...]
std::string render(const ZonePair& zp);

} // namespace sqform
