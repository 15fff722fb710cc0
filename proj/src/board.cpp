#include "sqform/board.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

namespace sqform {

std::string Cell::to_string() const
{
    return "(" + std::to_string(row) + "," + std::to_string(col) + ")";
}

// ---------------------------------------------------------------------------
// Strips

int Strip::ordinal(int n) const
{
    switch (kind) {
    case StripKind::Row: return index;
    case StripKind::Col: return n + index;
    case StripKind::MainDiag: return 2 * n;
    case StripKind::AntiDiag: return 2 * n + 1;
    }
    return -1;
}

Strip Strip::from_ordinal(int ordinal, int n)
{
    if (ordinal < 0 || ordinal > 2 * n + 1)
        throw std::out_of_range("strip ordinal " + std::to_string(ordinal) + " out of range");
    if (ordinal < n)
        return row(ordinal);
    if (ordinal < 2 * n)
        return col(ordinal - n);
    return ordinal == 2 * n ? main_diag() : anti_diag();
}

bool Strip::valid_for(int n) const
{
    if (n < 1)
        return false;
    switch (kind) {
    case StripKind::Row:
    case StripKind::Col: return index >= 0 && index < n;
    case StripKind::MainDiag:
    case StripKind::AntiDiag: return index == 0;
    }
    return false;
}

bool Strip::contains(Cell cell, int n) const
{
    switch (kind) {
    case StripKind::Row: return cell.row == index;
    case StripKind::Col: return cell.col == index;
    case StripKind::MainDiag: return cell.row == cell.col;
    case StripKind::AntiDiag: return cell.row + cell.col == n - 1;
    }
    return false;
}

std::vector<Cell> Strip::cells(int n) const
{
    std::vector<Cell> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        switch (kind) {
        case StripKind::Row: out.push_back({index, k}); break;
        case StripKind::Col: out.push_back({k, index}); break;
        case StripKind::MainDiag: out.push_back({k, k}); break;
        case StripKind::AntiDiag: out.push_back({k, n - 1 - k}); break;
        }
    }
    return out;
}

std::string Strip::name() const
{
    switch (kind) {
    case StripKind::Row: return "R" + std::to_string(index);
    case StripKind::Col: return "C" + std::to_string(index);
    case StripKind::MainDiag: return "D+";
    case StripKind::AntiDiag: return "D-";
    }
    return "?";
}

Strip Strip::parse(std::string_view name)
{
    if (name == "D+")
        return main_diag();
    if (name == "D-")
        return anti_diag();
    if (name.size() >= 2 && (name[0] == 'R' || name[0] == 'C')) {
        int idx = 0;
        for (char c : name.substr(1)) {
            if (c < '0' || c > '9')
                throw ParseError("bad strip name '" + std::string(name) + "'");
            idx = idx * 10 + (c - '0');
            if (idx > 1000000)
                throw ParseError("strip index too large in '" + std::string(name) + "'");
        }
        return name[0] == 'R' ? row(idx) : col(idx);
    }
    throw ParseError("bad strip name '" + std::string(name) + "' (expected R<i>, C<j>, D+ or D-)");
}

std::vector<Strip> strips(int n)
{
    std::vector<Strip> out;
    out.reserve(static_cast<std::size_t>(2 * n + 2));
    for (int ord = 0; ord < 2 * n + 2; ++ord)
        out.push_back(Strip::from_ordinal(ord, n));
    return out;
}

Cell symmetry_source(Symmetry s, Cell t, int n)
{
    const int m = n - 1;
    switch (s) {
    case Symmetry::Identity: return t;
    case Symmetry::Rot90: return {m - t.col, t.row};
    case Symmetry::Rot180: return {m - t.row, m - t.col};
    case Symmetry::Rot270: return {t.col, m - t.row};
    case Symmetry::Transpose: return {t.col, t.row};
    case Symmetry::AntiTranspose: return {m - t.col, m - t.row};
    case Symmetry::FlipRows: return {m - t.row, t.col};
    case Symmetry::FlipCols: return {t.row, m - t.col};
    }
    return t;
}

// ---------------------------------------------------------------------------
// Squares and forms

ConcreteSquare::ConcreteSquare(Grid<BigInt> grid) : grid_(std::move(grid))
{
    for (const auto& v : grid_.cells())
        if (v < 1)
            throw std::invalid_argument("square entries must be positive, got " + to_string(v));
}

SquareForm SquareForm::from_entries(int n, std::vector<Monomial> entries)
{
    SquareForm form;
    form.grid = Grid<Monomial>(n, std::move(entries));
    for (const auto& m : form.grid.cells())
        form.var_count = std::max(form.var_count, m.width());
    form.magic = strip_product(form, Strip::row(0));
    return form;
}

SquareForm SquareForm::transformed(Symmetry s) const
{
    return SquareForm{grid.transformed(s), var_count, magic};
}

SquareForm SquareForm::relabeled(std::span<const std::size_t> new_index_of) const
{
    std::vector<Monomial> cells;
    cells.reserve(grid.cells().size());
    for (const auto& m : grid.cells())
        cells.push_back(m.relabeled(new_index_of));
    return SquareForm{Grid<Monomial>(n(), std::move(cells)), var_count, magic.relabeled(new_index_of)};
}

Monomial strip_product(const SquareForm& form, const Strip& strip)
{
    Monomial total;
    for (const Cell& c : strip.cells(form.n()))
        total *= form.at(c);
    return total;
}

namespace {

template <typename Pick>
BigInt modal_value(const std::vector<StripTotal>& totals, Pick pick)
{
    std::map<BigInt, int> counts;
    for (const auto& t : totals)
        ++counts[pick(t)];
    const BigInt* best = nullptr;
    int best_count = 0;
    for (const auto& t : totals) {
        const int c = counts[pick(t)];
        if (c > best_count) {
            best = &pick(t);
            best_count = c;
        }
    }
    return best ? *best : BigInt(0);
}

} // namespace

MagicReport check_magic(const ConcreteSquare& square)
{
    MagicReport report;
    report.n = square.n();
    for (const Strip& s : strips(square.n())) {
        StripTotal t{s, 0, 1};
        for (const Cell& c : s.cells(square.n())) {
            t.sum += square.at(c);
            t.product *= square.at(c);
        }
        report.totals.push_back(std::move(t));
    }

    report.modal_sum = modal_value(report.totals, [](const StripTotal& t) -> const BigInt& { return t.sum; });
    report.modal_product = modal_value(report.totals, [](const StripTotal& t) -> const BigInt& { return t.product; });

    report.is_additive = true;
    report.is_multiplicative = true;
    for (const auto& t : report.totals) {
        StripDeviation d{t.strip, t.sum != report.modal_sum, t.product != report.modal_product,
                         t.sum - report.modal_sum, t.product - report.modal_product};
        report.is_additive = report.is_additive && !d.sum_deviates;
        report.is_multiplicative = report.is_multiplicative && !d.product_deviates;
        if (d.sum_deviates || d.product_deviates)
            report.deviations.push_back(std::move(d));
    }
    if (report.is_additive)
        report.magic_sum = report.modal_sum;
    if (report.is_multiplicative)
        report.magic_product = report.modal_product;
    return report;
}

std::string render_report(const MagicReport& report)
{
    std::ostringstream out;
    for (const auto& t : report.totals)
        out << t.strip.name() << " sum=" << to_string(t.sum) << " product=" << to_string(t.product) << '\n';
    out << "additive: " << (report.is_additive ? "yes" : "no") << '\n';
    out << "multiplicative: " << (report.is_multiplicative ? "yes" : "no") << '\n';
    if (report.magic_sum)
        out << "magic sum: " << to_string(*report.magic_sum) << '\n';
    else
        out << "modal sum: " << to_string(report.modal_sum) << '\n';
    if (report.magic_product)
        out << "magic product: " << to_string(*report.magic_product) << '\n';
    else
        out << "modal product: " << to_string(report.modal_product) << '\n';
    for (const auto& d : report.deviations) {
        out << "deviates " << d.strip.name() << ':';
        if (d.sum_deviates)
            out << " sum_delta=" << to_string(d.sum_delta);
        if (d.product_deviates)
            out << " product_delta=" << to_string(d.product_delta);
        out << '\n';
    }
    return out.str();
}

std::string FormDiagnosis::describe(int n) const
{
    switch (kind) {
    case Kind::Valid: return "valid";
    case Kind::DuplicateEntry:
        return "duplicate entry at " + first.to_string() + " and " + second.to_string();
    case Kind::StripMismatch:
        return "strip " + strip->name() + " has product " + strip_exponents.to_string()
               + " (exponents " + [&] {
                     std::string s;
                     for (std::size_t i = 0; i < strip_exponents.width(); ++i)
                         s += (i ? "," : "") + std::to_string(strip_exponents.exponent(i));
                     return s.empty() ? std::string("0") : s;
                 }() + ") in a square of side " + std::to_string(n);
    }
    return "?";
}

FormDiagnosis validate_form(const SquareForm& form)
{
    const int n = form.n();
    if (n < 1 || form.grid.cells().size() != static_cast<std::size_t>(n * n))
        throw std::invalid_argument("square form dimensions are inconsistent");
    for (const auto& m : form.grid.cells())
        if (m.width() > form.var_count)
            throw std::invalid_argument("entry " + m.to_string() + " uses more than "
                                        + std::to_string(form.var_count) + " variables");

    FormDiagnosis diag;
    std::unordered_map<Monomial, Cell, MonomialHash> seen;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const auto [it, inserted] = seen.emplace(form.at({r, c}), Cell{r, c});
            if (!inserted) {
                diag.kind = FormDiagnosis::Kind::DuplicateEntry;
                diag.first = it->second;
                diag.second = Cell{r, c};
                return diag;
            }
        }
    }
    for (const Strip& s : strips(n)) {
        Monomial total = strip_product(form, s);
        if (total != form.magic) {
            diag.kind = FormDiagnosis::Kind::StripMismatch;
            diag.strip = s;
            diag.strip_exponents = std::move(total);
            return diag;
        }
    }
    return diag;
}

ConcreteSquare evaluate_form(const SquareForm& form, const PrimeAssignment& assignment)
{
    if (assignment.size() < form.var_count)
        throw std::invalid_argument("assignment covers " + std::to_string(assignment.size()) + " of "
                                    + std::to_string(form.var_count) + " variables");
    std::vector<BigInt> values;
    values.reserve(form.grid.cells().size());
    for (const auto& m : form.grid.cells())
        values.push_back(evaluate(m, assignment));
    return ConcreteSquare(form.n(), std::move(values));
}

// ---------------------------------------------------------------------------
// CSV

namespace {

struct RawCell {
    std::string text;
    std::size_t line;
    std::size_t column;
};

std::vector<std::vector<RawCell>> split_grid(std::string_view text)
{
    if (!text.empty() && text.back() == '\n')
        text.remove_suffix(1);
    if (text.empty())
        throw ParseError("empty input", 1, 1);

    std::vector<std::vector<RawCell>> rows;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(start, end - start);
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);

        std::vector<RawCell> row;
        std::size_t cell_start = 0;
        while (true) {
            std::size_t comma = line.find(',', cell_start);
            const std::size_t cell_end = comma == std::string_view::npos ? line.size() : comma;
            std::string_view raw = line.substr(cell_start, cell_end - cell_start);
            std::size_t lead = 0;
            while (lead < raw.size() && (raw[lead] == ' ' || raw[lead] == '\t'))
                ++lead;
            std::size_t trail = raw.size();
            while (trail > lead && (raw[trail - 1] == ' ' || raw[trail - 1] == '\t'))
                --trail;
            const std::size_t col = cell_start + lead + 1;
            if (trail == lead)
                throw ParseError("empty cell", line_no, col);
            row.push_back({std::string(raw.substr(lead, trail - lead)), line_no, col});
            if (comma == std::string_view::npos)
                break;
            cell_start = comma + 1;
        }
        rows.push_back(std::move(row));
        start = end + 1;
    }

    const std::size_t n = rows.size();
    for (const auto& row : rows)
        if (row.size() != n)
            throw ParseError("expected " + std::to_string(n) + " cells per line, got "
                                 + std::to_string(row.size()),
                             row.front().line, 1);
    return rows;
}

template <typename T, typename Parse>
std::vector<T> parse_cells(const std::vector<std::vector<RawCell>>& rows, Parse parse)
{
    std::vector<T> out;
    for (const auto& row : rows) {
        for (const auto& cell : row) {
            try {
                out.push_back(parse(cell.text));
            } catch (const ParseError& e) {
                throw ParseError(e.what(), cell.line, cell.column);
            } catch (const std::exception& e) {
                throw ParseError(e.what(), cell.line, cell.column);
            }
        }
    }
    return out;
}

} // namespace

ConcreteSquare parse_square_csv(std::string_view text)
{
    const auto rows = split_grid(text);
    auto values = parse_cells<BigInt>(rows, [](const std::string& s) {
        BigInt v = parse_bigint(s);
        if (v < 1)
            throw ParseError("entries must be positive integers");
        return v;
    });
    return ConcreteSquare(static_cast<int>(rows.size()), std::move(values));
}

SquareForm parse_form_csv(std::string_view text)
{
    const auto rows = split_grid(text);
    auto entries = parse_cells<Monomial>(rows, [](const std::string& s) { return Monomial::parse(s); });
    return SquareForm::from_entries(static_cast<int>(rows.size()), std::move(entries));
}

std::string format_square_csv(const ConcreteSquare& square)
{
    std::string out;
    for (int r = 0; r < square.n(); ++r) {
        for (int c = 0; c < square.n(); ++c) {
            if (c)
                out += ',';
            out += to_string(square.at({r, c}));
        }
        out += '\n';
    }
    return out;
}

std::string format_form_csv(const SquareForm& form)
{
    std::string out;
    for (int r = 0; r < form.n(); ++r) {
        for (int c = 0; c < form.n(); ++c) {
            if (c)
                out += ',';
            out += form.at({r, c}).to_string();
        }
        out += '\n';
    }
    return out;
}

} // namespace sqform
