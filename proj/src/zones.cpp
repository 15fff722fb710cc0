#include "sqform/zones.hpp"

#include <algorithm>
#include <set>

namespace sqform {

StripCollection make_collection(std::vector<Strip> strips, int n)
{
    std::sort(strips.begin(), strips.end(),
              [n](const Strip& l, const Strip& r) { return l.ordinal(n) < r.ordinal(n); });
    return strips;
}

StripCollection parse_collection(std::string_view text, int n)
{
    std::vector<Strip> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string_view::npos)
            comma = text.size();
        std::string_view name = text.substr(start, comma - start);
        while (!name.empty() && name.front() == ' ')
            name.remove_prefix(1);
        while (!name.empty() && name.back() == ' ')
            name.remove_suffix(1);
        const Strip s = Strip::parse(name);
        if (!s.valid_for(n))
            throw ParseError("strip " + s.name() + " does not exist in a square of side " + std::to_string(n));
        out.push_back(s);
        start = comma + 1;
    }
    return make_collection(std::move(out), n);
}

std::string format_collection(const StripCollection& c)
{
    std::string out;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (i)
            out += ',';
        out += c[i].name();
    }
    return out;
}

std::string_view describe(ZoneRejection r)
{
    switch (r) {
    case ZoneRejection::StripOutOfRange: return "strip out of range";
    case ZoneRejection::RepeatedStrip: return "strip repeated within a collection";
    case ZoneRejection::SizeMismatch: return "collections differ in size";
    case ZoneRejection::SharedStrip: return "strip appears in both collections";
    case ZoneRejection::CountGap: return "a cell's coverage differs by more than one";
    case ZoneRejection::EmptyZone: return "a derived zone is empty";
    }
    return "?";
}

namespace {

std::vector<int> coverage(const StripCollection& coll, int n)
{
    std::vector<int> counts(static_cast<std::size_t>(n * n), 0);
    for (const Strip& s : coll)
        for (const Cell& c : s.cells(n))
            ++counts[static_cast<std::size_t>(c.row * n + c.col)];
    return counts;
}

bool has_repeat(const StripCollection& coll, int n)
{
    std::set<int> seen;
    for (const Strip& s : coll)
        if (!seen.insert(s.ordinal(n)).second)
            return true;
    return false;
}

} // namespace

ZoneDerivation derive_zone_pair(const StripCollection& a, const StripCollection& b, int n)
{
    for (const auto* coll : {&a, &b})
        for (const Strip& s : *coll)
            if (!s.valid_for(n))
                return ZoneRejection::StripOutOfRange;
    if (has_repeat(a, n) || has_repeat(b, n))
        return ZoneRejection::RepeatedStrip;
    if (a.size() != b.size())
        return ZoneRejection::SizeMismatch;
    for (const Strip& s : a)
        if (std::find(b.begin(), b.end(), s) != b.end())
            return ZoneRejection::SharedStrip;

    const auto ca = coverage(a, n);
    const auto cb = coverage(b, n);
    ZonePair zp;
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const auto i = static_cast<std::size_t>(r * n + c);
            const int diff = ca[i] - cb[i];
            if (diff > 1 || diff < -1)
                return ZoneRejection::CountGap;
            if (diff == 1)
                zp.x.push_back({r, c});
            else if (diff == -1)
                zp.y.push_back({r, c});
        }
    }
    if (zp.x.empty() || zp.y.empty())
        return ZoneRejection::EmptyZone;
    zp.a = make_collection(a, n);
    zp.b = make_collection(b, n);
    return zp;
}

BigInt zone_sum(const ConcreteSquare& square, const CellSet& zone)
{
    BigInt total = 0;
    for (const Cell& c : zone)
        total += square.at(c);
    return total;
}

BigInt zone_product(const ConcreteSquare& square, const CellSet& zone)
{
    BigInt total = 1;
    for (const Cell& c : zone)
        total *= square.at(c);
    return total;
}

Monomial zone_exponents(const SquareForm& form, const CellSet& zone)
{
    Monomial total;
    for (const Cell& c : zone)
        total *= form.at(c);
    return total;
}

std::vector<Monomial> zone_entries(const SquareForm& form, const CellSet& zone)
{
    std::vector<Monomial> out;
    out.reserve(zone.size());
    for (const Cell& c : zone)
        out.push_back(form.at(c));
    return out;
}

namespace {

// Visits every k-subset of {0..m-1} in lexicographic order.
void for_each_combination(int m, int k, const std::function<void(const std::vector<int>&)>& visit)
{
    if (k > m)
        return;
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        idx[static_cast<std::size_t>(i)] = i;
    while (true) {
        visit(idx);
        int i = k - 1;
        while (i >= 0 && idx[static_cast<std::size_t>(i)] == m - k + i)
            --i;
        if (i < 0)
            return;
        ++idx[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < k; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
}

} // namespace

void enumerate_zone_pairs(int n, int max_strips, const std::function<bool(const ZonePair&)>& visit)
{
    const int total = 2 * n + 2;
    if (max_strips < 1 || max_strips > total)
        throw std::invalid_argument("max_strips must lie in [1, " + std::to_string(total) + "]");

    std::set<std::pair<CellSet, CellSet>> emitted;
    bool stop = false;
    for (int k = 1; k <= max_strips && !stop; ++k) {
        std::vector<std::vector<int>> combos;
        for_each_combination(total, k, [&](const std::vector<int>& idx) { combos.push_back(idx); });

        for (std::size_t i = 0; i < combos.size() && !stop; ++i) {
            for (std::size_t j = i + 1; j < combos.size() && !stop; ++j) {
                const auto& ia = combos[i];
                const auto& ib = combos[j];
                bool disjoint = true;
                for (int v : ia)
                    if (std::find(ib.begin(), ib.end(), v) != ib.end())
                        disjoint = false;
                if (!disjoint)
                    continue;

                StripCollection a, b;
                for (int v : ia)
                    a.push_back(Strip::from_ordinal(v, n));
                for (int v : ib)
                    b.push_back(Strip::from_ordinal(v, n));
                auto derived = derive_zone_pair(a, b, n);
                auto* zp = std::get_if<ZonePair>(&derived);
                if (!zp)
                    continue;
                if (zp->y.front() < zp->x.front()) {
                    std::swap(zp->x, zp->y);
                    std::swap(zp->a, zp->b);
                }
                if (!emitted.emplace(zp->x, zp->y).second)
                    continue;
                if (!visit(*zp))
                    stop = true;
            }
        }
    }
}

std::vector<ZonePair> enumerate_zone_pairs(int n, int max_strips)
{
    std::vector<ZonePair> out;
    enumerate_zone_pairs(n, max_strips, [&](const ZonePair& zp) {
        out.push_back(zp);
        return true;
    });
    return out;
}

std::string render(const ZonePair& zp)
{
    auto cells = [](const CellSet& s) {
        std::string out = "{";
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i)
                out += ',';
            out += s[i].to_string();
        }
        return out + "}";
    };
    return "X=" + cells(zp.x) + " Y=" + cells(zp.y) + " from A=[" + format_collection(zp.a) + "] B=["
           + format_collection(zp.b) + "]";
}

} // namespace sqform
