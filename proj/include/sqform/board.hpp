#pragma once

// Square grids, strips and magic verification.
//
// Strip order is fixed everywhere in the library: rows top-down, columns
// left-right, then the main diagonal (upper-left to lower-right, "D+") and
// the anti-diagonal (upper-right to lower-left, "D-"). Reports and cache
// files depend on this order.

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqform/algebra.hpp"

namespace sqform {

struct Cell {
    int row = 0;
    int col = 0;

    friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
    std::string to_string() const;
};

enum class StripKind { Row, Col, MainDiag, AntiDiag };

struct Strip {
    StripKind kind = StripKind::Row;
    int index = 0; // row or column index; unused for diagonals

    static constexpr Strip row(int i) { return {StripKind::Row, i}; }
    static constexpr Strip col(int j) { return {StripKind::Col, j}; }
    static constexpr Strip main_diag() { return {StripKind::MainDiag, 0}; }
    static constexpr Strip anti_diag() { return {StripKind::AntiDiag, 0}; }

    // Position in strips(n).
    int ordinal(int n) const;
    static Strip from_ordinal(int ordinal, int n);

    bool valid_for(int n) const;
    bool contains(Cell cell, int n) const;
    std::vector<Cell> cells(int n) const;

    // R<i>, C<j>, D+ or D-.
    std::string name() const;
    static Strip parse(std::string_view name);

    friend constexpr bool operator==(const Strip&, const Strip&) = default;
};

// All 2n+2 strips of an n x n square in the documented order. For n = 1
// every strip holds the single cell.
std::vector<Strip> strips(int n);

// The eight symmetries of the square.
enum class Symmetry { Identity, Rot90, Rot180, Rot270, Transpose, AntiTranspose, FlipRows, FlipCols };
inline constexpr std::array<Symmetry, 8> kAllSymmetries = {
    Symmetry::Identity,  Symmetry::Rot90,         Symmetry::Rot180,   Symmetry::Rot270,
    Symmetry::Transpose, Symmetry::AntiTranspose, Symmetry::FlipRows, Symmetry::FlipCols};

// Cell of the source grid that lands on `target` after applying `s`.
Cell symmetry_source(Symmetry s, Cell target, int n);

template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int n, std::vector<T> cells) : n_(n), cells_(std::move(cells))
    {
        if (n < 1 || cells_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
            throw std::invalid_argument("grid of side " + std::to_string(n) + " needs "
                                        + std::to_string(n * n) + " cells, got "
                                        + std::to_string(cells_.size()));
    }

    int n() const noexcept { return n_; }
    const T& at(Cell c) const { return cells_.at(index(c)); }
    const T& at(int r, int c) const { return at(Cell{r, c}); }
    T& at(Cell c) { return cells_.at(index(c)); }
    const std::vector<T>& cells() const noexcept { return cells_; }

    std::size_t index(Cell c) const
    {
        return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(c.col);
    }

    Grid transformed(Symmetry s) const
    {
        std::vector<T> out;
        out.reserve(cells_.size());
        for (int r = 0; r < n_; ++r)
            for (int c = 0; c < n_; ++c)
                out.push_back(at(symmetry_source(s, Cell{r, c}, n_)));
        return Grid(n_, std::move(out));
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int n_ = 0;
    std::vector<T> cells_;
};

// n x n grid of positive integers.
class ConcreteSquare {
public:
    ConcreteSquare() = default;
    explicit ConcreteSquare(Grid<BigInt> grid);
    ConcreteSquare(int n, std::vector<BigInt> cells) : ConcreteSquare(Grid<BigInt>(n, std::move(cells))) {}

    int n() const noexcept { return grid_.n(); }
    const BigInt& at(Cell c) const { return grid_.at(c); }
    const Grid<BigInt>& grid() const noexcept { return grid_; }

    friend bool operator==(const ConcreteSquare&, const ConcreteSquare&) = default;

private:
    Grid<BigInt> grid_;
};

// Grid of monomials plus the magic exponent vector its strips should share.
// Construction only checks dimensions; validate_form() checks the rest.
struct SquareForm {
    Grid<Monomial> grid;
    std::size_t var_count = 0;
    Monomial magic;

    int n() const noexcept { return grid.n(); }
    const Monomial& at(Cell c) const { return grid.at(c); }

    // Derives var_count from the widest entry and magic from row 0.
    static SquareForm from_entries(int n, std::vector<Monomial> entries);

    SquareForm transformed(Symmetry s) const;
    SquareForm relabeled(std::span<const std::size_t> new_index_of) const;

    friend bool operator==(const SquareForm&, const SquareForm&) = default;
};

Monomial strip_product(const SquareForm& form, const Strip& strip);

struct StripTotal {
    Strip strip;
    BigInt sum;
    BigInt product;
};

struct StripDeviation {
    Strip strip;
    bool sum_deviates = false;
    bool product_deviates = false;
    BigInt sum_delta;     // strip sum - modal sum
    BigInt product_delta; // strip product - modal product
};

struct MagicReport {
    int n = 0;
    std::vector<StripTotal> totals;
    bool is_additive = false;
    bool is_multiplicative = false;
    // Most frequent value over the strips; ties go to the earliest strip.
    BigInt modal_sum;
    BigInt modal_product;
    std::optional<BigInt> magic_sum;
    std::optional<BigInt> magic_product;
    std::vector<StripDeviation> deviations;
};

MagicReport check_magic(const ConcreteSquare& square);
std::string render_report(const MagicReport& report);

struct FormDiagnosis {
    enum class Kind { Valid, DuplicateEntry, StripMismatch };

    Kind kind = Kind::Valid;
    Cell first{};  // DuplicateEntry: the earlier cell
    Cell second{}; // DuplicateEntry: the later cell
    std::optional<Strip> strip;
    Monomial strip_exponents; // StripMismatch: the strip's exponent sums

    bool ok() const noexcept { return kind == Kind::Valid; }
    std::string describe(int n) const;
};

// Distinct entries, and every strip's exponent sum equal to form.magic.
// Throws std::invalid_argument on inconsistent dimensions.
FormDiagnosis validate_form(const SquareForm& form);

// Throws std::invalid_argument if the assignment does not cover every
// variable of the form.
ConcreteSquare evaluate_form(const SquareForm& form, const PrimeAssignment& assignment);

// Text formats: n lines of n comma-separated cells. Parse errors carry the
// one-based line and column of the offending cell.
ConcreteSquare parse_square_csv(std::string_view text);
SquareForm parse_form_csv(std::string_view text);
std::string format_square_csv(const ConcreteSquare& square);
std::string format_form_csv(const SquareForm& form);

} // namespace sqform
