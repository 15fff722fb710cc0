#include "sqform/filters.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <unordered_set>

namespace sqform {

namespace {

Witness cell_json(Cell c)
{
    return Witness::array({c.row, c.col});
}

Cell cell_from_json(const Witness& j)
{
    return Cell{j.at(0).get<int>(), j.at(1).get<int>()};
}

Witness cells_json(std::span<const Cell> cells)
{
    Witness out = Witness::array();
    for (const Cell& c : cells)
        out.push_back(cell_json(c));
    return out;
}

CellSet cells_from_json(const Witness& j)
{
    CellSet out;
    for (const auto& c : j)
        out.push_back(cell_from_json(c));
    return out;
}

Witness primes_json(const PrimeConstraintSet::Allowed& allowed)
{
    Witness out = Witness::array();
    for (auto p : allowed)
        out.push_back(p);
    return out;
}

PrimeConstraintSet::Allowed primes_at_most(std::uint64_t bound)
{
    const auto primes = primes_up_to(bound);
    return {primes.begin(), primes.end()};
}

Unacceptable unacceptable(Lemma lemma, Witness witness)
{
    return Unacceptable{lemma, std::move(witness)};
}

} // namespace

std::string_view lemma_name(Lemma lemma)
{
    switch (lemma) {
    case Lemma::SignatureFilter: return "signature_filter";
    case Lemma::PrimePowerFilter: return "prime_power_filter";
    case Lemma::FourTimesFilter: return "four_times_filter";
    case Lemma::MinOrderFilter: return "min_order_filter";
    case Lemma::BiggerZoneFilter: return "bigger_zone_filter";
    case Lemma::PrimeValueBound: return "prime_value_bound";
    case Lemma::DerivePrimeConstraints: return "derive_prime_constraints";
    case Lemma::CongruenceCsp: return "congruence_csp";
    }
    return "?";
}

std::optional<Lemma> parse_lemma(std::string_view name)
{
    for (auto l : {Lemma::SignatureFilter, Lemma::PrimePowerFilter, Lemma::FourTimesFilter, Lemma::MinOrderFilter,
                   Lemma::BiggerZoneFilter, Lemma::PrimeValueBound, Lemma::DerivePrimeConstraints,
                   Lemma::CongruenceCsp})
        if (lemma_name(l) == name)
            return l;
    return std::nullopt;
}

bool Unacceptable::full_proof() const
{
    if (lemma != Lemma::CongruenceCsp)
        return true;
    return witness.value("complete", false);
}

// ---------------------------------------------------------------------------
// PrimeConstraintSet

void PrimeConstraintSet::restrict(VarId v, const Allowed& allowed)
{
    auto it = sets_.find(v.index());
    if (it == sets_.end()) {
        sets_.emplace(v.index(), allowed);
        return;
    }
    Allowed both;
    std::set_intersection(it->second.begin(), it->second.end(), allowed.begin(), allowed.end(),
                          std::inserter(both, both.end()));
    it->second = std::move(both);
}

void PrimeConstraintSet::merge(const PrimeConstraintSet& other)
{
    for (const auto& [v, allowed] : other.sets_)
        restrict(VarId(v), allowed);
}

const PrimeConstraintSet::Allowed* PrimeConstraintSet::allowed(VarId v) const
{
    auto it = sets_.find(v.index());
    return it == sets_.end() ? nullptr : &it->second;
}

bool PrimeConstraintSet::allows(VarId v, const BigInt& p) const
{
    const Allowed* a = allowed(v);
    if (!a)
        return is_prime(p);
    if (p > std::numeric_limits<std::uint64_t>::max())
        return false;
    return a->count(static_cast<std::uint64_t>(p)) > 0;
}

std::optional<VarId> PrimeConstraintSet::empty_variable() const
{
    for (const auto& [v, allowed] : sets_)
        if (allowed.empty())
            return VarId(v);
    return std::nullopt;
}

bool PrimeConstraintSet::jointly_satisfiable() const
{
    // Bipartite matching of constrained variables onto distinct primes.
    std::vector<const Allowed*> vars;
    for (const auto& [v, allowed] : sets_)
        vars.push_back(&allowed);
    std::map<std::uint64_t, std::size_t> owner;
    std::function<bool(std::size_t, std::set<std::uint64_t>&)> augment = [&](std::size_t i,
                                                                             std::set<std::uint64_t>& seen) {
        for (auto p : *vars[i]) {
            if (!seen.insert(p).second)
                continue;
            auto it = owner.find(p);
            if (it == owner.end() || augment(it->second, seen)) {
                owner[p] = i;
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < vars.size(); ++i) {
        std::set<std::uint64_t> seen;
        if (!augment(i, seen))
            return false;
    }
    return true;
}

Witness PrimeConstraintSet::to_json() const
{
    Witness out = Witness::object();
    for (const auto& [v, allowed] : sets_)
        out[VarId(v).name()] = primes_json(allowed);
    return out;
}

bool is_unacceptable(const FilterVerdict& v)
{
    return std::holds_alternative<Unacceptable>(v);
}

const Unacceptable* as_unacceptable(const FilterVerdict& v)
{
    return std::get_if<Unacceptable>(&v);
}

std::vector<std::string> report_lines(const FilterVerdict& v)
{
    std::vector<std::string> lines;
    if (const auto* u = std::get_if<Unacceptable>(&v)) {
        lines.push_back("UNACCEPTABLE " + std::string(lemma_name(u->lemma)) + " " + u->witness.dump());
    } else if (const auto* c = std::get_if<Constrained>(&v)) {
        for (const auto& [var, allowed] : c->constraints.entries()) {
            std::string line = "CONSTRAIN " + VarId(var).name() + " IN {";
            bool first = true;
            for (auto p : allowed) {
                if (!first)
                    line += ',';
                line += std::to_string(p);
                first = false;
            }
            lines.push_back(line + "}");
        }
    } else {
        lines.emplace_back("NOINFO");
    }
    return lines;
}

// ---------------------------------------------------------------------------
// Bigger zone

std::optional<std::vector<std::size_t>> find_bigger_zone_map(std::span<const Monomial> domain,
                                                             std::span<const Monomial> codomain,
                                                             std::uint64_t node_budget)
{
    if (domain.empty() || codomain.empty())
        return std::nullopt;

    struct Option {
        std::size_t target;
        bool strict;
    };
    std::vector<std::vector<Option>> options(domain.size());
    for (std::size_t i = 0; i < domain.size(); ++i) {
        for (std::size_t j = 0; j < codomain.size(); ++j)
            if (domain[i] != codomain[j] && domain[i].divides(codomain[j]))
                options[i].push_back({j, domain[i].divides_core_of(codomain[j])});
        if (options[i].empty())
            return std::nullopt;
        // Largest targets first.
        std::stable_sort(options[i].begin(), options[i].end(), [&](const Option& l, const Option& r) {
            return codomain[l.target].degree() > codomain[r.target].degree();
        });
    }

    std::vector<std::size_t> order(domain.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return options[l].size() < options[r].size(); });

    enum class Slot : unsigned char { Free, Private, Shared };
    std::vector<Slot> slots(codomain.size(), Slot::Free);
    std::vector<std::size_t> map(domain.size());
    std::uint64_t nodes = 0;
    bool out_of_budget = false;

    std::function<bool(std::size_t)> place = [&](std::size_t pos) -> bool {
        if (pos == order.size())
            return true;
        if (++nodes > node_budget) {
            out_of_budget = true;
            return false;
        }
        const std::size_t i = order[pos];
        for (const Option& opt : options[i]) {
            const Slot before = slots[opt.target];
            if (opt.strict ? before == Slot::Private : before != Slot::Free)
                continue;
            slots[opt.target] = opt.strict ? Slot::Shared : Slot::Private;
            map[i] = opt.target;
            if (place(pos + 1))
                return true;
            slots[opt.target] = before;
            if (out_of_budget)
                return false;
        }
        return false;
    };
    if (place(0))
        return map;
    return std::nullopt;
}

bool bigger_zone_map_valid(std::span<const Monomial> domain, std::span<const Monomial> codomain,
                           std::span<const std::size_t> map)
{
    if (domain.empty() || map.size() != domain.size())
        return false;
    std::vector<std::vector<std::size_t>> preimages(codomain.size());
    for (std::size_t i = 0; i < domain.size(); ++i) {
        if (map[i] >= codomain.size())
            return false;
        const Monomial& y = codomain[map[i]];
        if (domain[i] == y || !domain[i].divides(y))
            return false;
        preimages[map[i]].push_back(i);
    }
    for (std::size_t j = 0; j < codomain.size(); ++j) {
        if (preimages[j].size() < 2)
            continue;
        for (std::size_t i : preimages[j])
            if (!domain[i].divides_core_of(codomain[j]))
                return false;
    }
    return true;
}

FilterVerdict bigger_zone_filter(const SquareForm& form, const ZonePair& zp)
{
    const auto xs = zone_entries(form, zp.x);
    const auto ys = zone_entries(form, zp.y);
    for (const bool forward : {true, false}) {
        const auto& dom = forward ? xs : ys;
        const auto& cod = forward ? ys : xs;
        const auto& dom_cells = forward ? zp.x : zp.y;
        const auto& cod_cells = forward ? zp.y : zp.x;
        auto map = find_bigger_zone_map(dom, cod);
        if (!map)
            continue;
        Witness w;
        w["A"] = format_collection(zp.a);
        w["B"] = format_collection(zp.b);
        w["domain"] = forward ? "X" : "Y";
        Witness pairs = Witness::array();
        for (std::size_t i = 0; i < dom.size(); ++i) {
            Witness p;
            p["from"] = cell_json(dom_cells[i]);
            p["to"] = cell_json(cod_cells[(*map)[i]]);
            p["from_entry"] = dom[i].to_string();
            p["to_entry"] = cod[(*map)[i]].to_string();
            pairs.push_back(std::move(p));
        }
        w["map"] = std::move(pairs);
        return unacceptable(Lemma::BiggerZoneFilter, std::move(w));
    }
    return NoInformation{};
}

// ---------------------------------------------------------------------------
// Minimum order

std::optional<UniqueMinimum> find_unique_minimum(std::span<const Monomial> x, std::span<const Monomial> y,
                                                 std::size_t var_count)
{
    const std::size_t total = x.size() + y.size();
    if (total == 0)
        return std::nullopt;
    auto element = [&](std::size_t i) -> const Monomial& { return i < x.size() ? x[i] : y[i - x.size()]; };
    for (std::size_t v = 0; v < var_count; ++v) {
        Exponent low = std::numeric_limits<Exponent>::max();
        std::size_t count = 0;
        std::size_t where = 0;
        for (std::size_t i = 0; i < total; ++i) {
            const Exponent e = element(i).exponent(v);
            if (e < low) {
                low = e;
                count = 1;
                where = i;
            } else if (e == low) {
                ++count;
            }
        }
        if (count == 1)
            return UniqueMinimum{VarId(v), where, low};
    }
    return std::nullopt;
}

FilterVerdict min_order_filter(const SquareForm& form, const ZonePair& zp)
{
    const auto xs = zone_entries(form, zp.x);
    const auto ys = zone_entries(form, zp.y);
    const auto hit = find_unique_minimum(xs, ys, form.var_count);
    if (!hit)
        return NoInformation{};
    const Cell cell = hit->element < zp.x.size() ? zp.x[hit->element] : zp.y[hit->element - zp.x.size()];
    Witness w;
    w["A"] = format_collection(zp.a);
    w["B"] = format_collection(zp.b);
    w["var"] = hit->var.name();
    w["cell"] = cell_json(cell);
    w["entry"] = form.at(cell).to_string();
    w["exponent"] = hit->exponent;
    return unacceptable(Lemma::MinOrderFilter, std::move(w));
}

// ---------------------------------------------------------------------------
// Whole-form filters

FilterVerdict prime_power_filter(const SquareForm& form)
{
    for (int r = 0; r < form.n(); ++r) {
        for (int c = 0; c < form.n(); ++c) {
            const Monomial& entry = form.at({r, c});
            if (!entry.divides(form.magic))
                continue;
            const Monomial cofactor = form.magic / entry;
            if (cofactor.support_size() <= 1) {
                Witness w;
                w["cell"] = cell_json({r, c});
                w["entry"] = entry.to_string();
                w["cofactor"] = cofactor.to_string();
                return unacceptable(Lemma::PrimePowerFilter, std::move(w));
            }
        }
    }
    return NoInformation{};
}

FilterVerdict four_times_filter(const SquareForm& form)
{
    if (form.n() < 4)
        return NoInformation{};
    for (std::size_t v = 0; v < form.var_count; ++v) {
        Exponent low = std::numeric_limits<Exponent>::max();
        std::vector<Cell> cells;
        for (int r = 0; r < form.n(); ++r) {
            for (int c = 0; c < form.n(); ++c) {
                const Exponent e = form.at({r, c}).exponent(v);
                if (e < low) {
                    low = e;
                    cells.clear();
                }
                if (e == low)
                    cells.push_back({r, c});
            }
        }
        if (cells.size() < 4) {
            Witness w;
            w["var"] = VarId(v).name();
            w["min_exponent"] = low;
            w["count"] = cells.size();
            w["cells"] = cells_json(cells);
            return unacceptable(Lemma::FourTimesFilter, std::move(w));
        }
    }
    return NoInformation{};
}

FilterVerdict signature_filter(const Monomial& magic, int n)
{
    if (magic.is_one())
        throw std::invalid_argument("signature_filter needs a magic product with at least one variable");
    std::vector<Exponent> exps;
    for (auto e : magic.exponents())
        if (e > 0)
            exps.push_back(e);
    std::sort(exps.begin(), exps.end());

    std::string rule;
    if (n >= 4) {
        if (exps.size() == 1)
            rule = "single_variable";
        else if (exps.size() == 2 && exps[0] <= 3)
            rule = "two_variables_small_exponent";
        else if (exps.size() == 3 && exps[0] == 1 && exps[1] == 1)
            rule = "three_variables_two_simple";
    }
    const BigInt divisors = magic.divisor_count();
    if (rule.empty() && divisors < BigInt(n) * n)
        rule = "divisor_count";
    if (rule.empty())
        return NoInformation{};

    Witness w;
    w["magic"] = magic.to_string();
    w["n"] = n;
    w["rule"] = rule;
    w["divisor_count"] = to_string(divisors);
    return unacceptable(Lemma::SignatureFilter, std::move(w));
}

// ---------------------------------------------------------------------------
// Prime values

std::optional<std::uint64_t> prime_value_limit(std::size_t zones, std::size_t distinct)
{
    if (distinct >= zones)
        return std::nullopt;
    const std::uint64_t m = distinct;
    const std::uint64_t rest = zones - distinct;
    return (m + rest - 1) / rest;
}

namespace {

std::size_t distinct_components(std::span<const CellSet> zones, const SquareForm& form, VarId v)
{
    std::unordered_set<Monomial, MonomialHash> seen;
    for (const auto& zone : zones)
        for (const Cell& c : zone)
            seen.insert(form.at(c).without(v));
    return seen.size();
}

void check_zones(std::span<const CellSet> zones, int n)
{
    std::set<Cell> used;
    for (const auto& zone : zones) {
        if (zone.empty())
            throw std::invalid_argument("prime_value_bound: empty zone");
        for (const Cell& c : zone) {
            if (c.row < 0 || c.col < 0 || c.row >= n || c.col >= n)
                throw std::invalid_argument("prime_value_bound: cell out of range");
            if (!used.insert(c).second)
                throw std::invalid_argument("prime_value_bound: zones overlap at " + c.to_string());
        }
    }
}

} // namespace

FilterVerdict prime_value_bound(std::span<const CellSet> zones, const SquareForm& form, VarId v)
{
    check_zones(zones, form.n());
    const std::size_t distinct = distinct_components(zones, form, v);
    const auto limit = prime_value_limit(zones.size(), distinct);
    if (!limit)
        return NoInformation{};

    Witness w;
    w["var"] = v.name();
    w["zones"] = zones.size();
    w["distinct"] = distinct;
    w["bound"] = *limit;
    Witness all = Witness::array();
    for (const auto& zone : zones)
        all.push_back(cells_json(zone));
    w["zone_cells"] = std::move(all);

    const auto allowed = primes_at_most(*limit);
    if (allowed.empty())
        return unacceptable(Lemma::PrimeValueBound, std::move(w));
    PrimeConstraintSet set;
    set.restrict(v, allowed);
    return Constrained{std::move(set), std::move(w)};
}

std::vector<CellSet> zones_rows(const SquareForm& form)
{
    std::vector<CellSet> out;
    for (int r = 0; r < form.n(); ++r)
        out.push_back(Strip::row(r).cells(form.n()));
    return out;
}

std::vector<CellSet> zones_through_cell(const SquareForm& form, Cell cell)
{
    const int n = form.n();
    std::vector<CellSet> out;
    for (const Strip& s : strips(n)) {
        if (!s.contains(cell, n))
            continue;
        CellSet zone;
        for (const Cell& c : s.cells(n))
            if (c != cell)
                zone.push_back(c);
        std::sort(zone.begin(), zone.end());
        out.push_back(std::move(zone));
    }
    return out;
}

namespace {

struct ConstraintAccumulator {
    PrimeConstraintSet set;
    Witness sources = Witness::array();

    void add(const PrimeConstraintSet& more, Witness source)
    {
        set.merge(more);
        sources.push_back(std::move(source));
    }

    FilterVerdict finish()
    {
        if (auto v = set.empty_variable()) {
            Witness w;
            w["reason"] = "empty";
            w["var"] = v->name();
            w["constraints"] = set.to_json();
            w["sources"] = std::move(sources);
            return Unacceptable{Lemma::DerivePrimeConstraints, std::move(w)};
        }
        if (!set.jointly_satisfiable()) {
            Witness w;
            w["reason"] = "distinctness";
            w["constraints"] = set.to_json();
            w["sources"] = std::move(sources);
            return Unacceptable{Lemma::DerivePrimeConstraints, std::move(w)};
        }
        if (set.unconstrained())
            return NoInformation{};
        Witness w;
        w["sources"] = std::move(sources);
        return Constrained{std::move(set), std::move(w)};
    }
};

} // namespace

FilterVerdict product_pattern_constraints(const Monomial& magic, int n)
{
    ConstraintAccumulator acc;
    for (std::size_t i = 0; i < magic.width(); ++i) {
        const VarId a(i);
        if (magic.exponent(a) == 0)
            continue;
        const Monomial rest = magic.without(a);
        if (rest.is_one())
            continue;
        // Divisors of rest other than rest itself: an entry a^k * rest would
        // have the prime-power cofactor a^(e-k).
        const BigInt count = rest.divisor_count() - 1;
        if (count >= n)
            continue;
        const auto distinct = static_cast<std::size_t>(count);
        const auto limit = prime_value_limit(static_cast<std::size_t>(n), distinct);
        PrimeConstraintSet one;
        one.restrict(a, primes_at_most(*limit));
        Witness src;
        src["rule"] = "product_pattern";
        src["var"] = a.name();
        src["rest"] = rest.to_string();
        src["zones"] = n;
        src["distinct"] = distinct;
        src["bound"] = *limit;
        acc.add(one, std::move(src));
    }
    return acc.finish();
}

FilterVerdict derive_prime_constraints(const SquareForm& form)
{
    ConstraintAccumulator acc;
    const int n = form.n();

    auto absorb = [&](const FilterVerdict& v, Witness source) -> std::optional<FilterVerdict> {
        if (is_unacceptable(v))
            return v;
        if (const auto* c = std::get_if<Constrained>(&v)) {
            for (auto& [k, val] : c->witness.items())
                source[k] = val;
            acc.add(c->constraints, std::move(source));
        }
        return std::nullopt;
    };

    // Cells on a long diagonal: 3 zones, or 4 at the center of an odd square.
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const Cell cell{r, c};
            if (r != c && r + c != n - 1)
                continue;
            const auto zones = zones_through_cell(form, cell);
            if (std::any_of(zones.begin(), zones.end(), [](const CellSet& z) { return z.empty(); }))
                continue;
            for (std::size_t v = 0; v < form.var_count; ++v) {
                Witness src;
                src["rule"] = "zones_through_cell";
                src["cell"] = cell_json(cell);
                if (auto done = absorb(prime_value_bound(zones, form, VarId(v)), std::move(src)))
                    return *done;
            }
        }
    }

    // Whole product with the rows as zones.
    const auto rows = zones_rows(form);
    for (std::size_t v = 0; v < form.var_count; ++v) {
        Witness src;
        src["rule"] = "rows";
        if (auto done = absorb(prime_value_bound(rows, form, VarId(v)), std::move(src)))
            return *done;
    }
    if (!form.magic.is_one()) {
        const FilterVerdict pattern = product_pattern_constraints(form.magic, n);
        if (is_unacceptable(pattern))
            return pattern;
        if (const auto* c = std::get_if<Constrained>(&pattern))
            for (const auto& src : c->witness.at("sources")) {
                PrimeConstraintSet one;
                const VarId v = VarId::from_letter(src.at("var").get<std::string>()[0]);
                one.restrict(v, *c->constraints.allowed(v));
                acc.add(one, src);
            }
    }
    return acc.finish();
}

// ---------------------------------------------------------------------------
// Congruences

Congruence Congruence::simplified() const
{
    Congruence out{modulus_var, modulus_power, lhs, rhs};
    std::sort(out.lhs.begin(), out.lhs.end());
    std::sort(out.rhs.begin(), out.rhs.end());
    std::vector<Monomial> l, r;
    std::set_difference(out.lhs.begin(), out.lhs.end(), out.rhs.begin(), out.rhs.end(), std::back_inserter(l));
    std::set_difference(out.rhs.begin(), out.rhs.end(), out.lhs.begin(), out.lhs.end(), std::back_inserter(r));
    out.lhs = std::move(l);
    out.rhs = std::move(r);
    return out;
}

std::string Congruence::to_string() const
{
    auto side = [](const std::vector<Monomial>& terms) {
        if (terms.empty())
            return std::string("0");
        std::string s;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (i)
                s += " + ";
            s += terms[i].to_string();
        }
        return s;
    };
    std::string mod = modulus_var.name();
    if (modulus_power != 1)
        mod += "^" + std::to_string(modulus_power);
    return side(lhs) + " = " + side(rhs) + " (mod " + mod + ")";
}

Witness Congruence::to_json() const
{
    Witness w;
    w["modulus"] = Monomial::power(modulus_var, modulus_power).to_string();
    Witness l = Witness::array();
    for (const auto& m : lhs)
        l.push_back(m.to_string());
    Witness r = Witness::array();
    for (const auto& m : rhs)
        r.push_back(m.to_string());
    w["lhs"] = std::move(l);
    w["rhs"] = std::move(r);
    return w;
}

Congruence Congruence::from_json(const Witness& j)
{
    const Monomial mod = Monomial::parse(j.at("modulus").get<std::string>());
    if (mod.support_size() != 1)
        throw ParseError("congruence modulus must be a single variable power");
    Congruence out;
    for (std::size_t i = 0; i < mod.width(); ++i)
        if (mod.exponent(i) > 0) {
            out.modulus_var = VarId(i);
            out.modulus_power = mod.exponent(i);
        }
    for (const auto& t : j.at("lhs"))
        out.lhs.push_back(Monomial::parse(t.get<std::string>()));
    for (const auto& t : j.at("rhs"))
        out.rhs.push_back(Monomial::parse(t.get<std::string>()));
    return out;
}

Congruence extract_congruence(const SquareForm& form, const ZonePair& zp, VarId v, Exponent k)
{
    if (k < 1)
        throw std::invalid_argument("congruence power must be at least 1");
    Congruence out{v, k, {}, {}};
    for (const Cell& c : zp.x)
        if (form.at(c).exponent(v) < k)
            out.lhs.push_back(form.at(c));
    for (const Cell& c : zp.y)
        if (form.at(c).exponent(v) < k)
            out.rhs.push_back(form.at(c));
    return out;
}

namespace {

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m)
{
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t e, std::uint64_t m)
{
    std::uint64_t result = 1 % m;
    base %= m;
    while (e > 0) {
        if (e & 1)
            result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        e >>= 1;
    }
    return result;
}

struct CompiledTerm {
    Exponent v_power;
    std::vector<std::pair<std::size_t, Exponent>> factors; // (slot, exponent)
};

struct CompiledCongruence {
    std::uint64_t modulus;
    std::vector<CompiledTerm> lhs;
    std::vector<CompiledTerm> rhs;
    std::size_t ready_depth; // all slots < ready_depth are assigned
};

} // namespace

ResidueResult solve_residues(std::span<const Congruence> congruences, VarId v, std::uint64_t p,
                             std::uint64_t node_budget)
{
    ResidueResult result;
    if (congruences.empty())
        return result;

    Exponent top = 1;
    for (const auto& c : congruences) {
        if (c.modulus_var != v)
            throw std::invalid_argument("congruences must share the modulus variable");
        top = std::max(top, c.modulus_power);
    }
    std::uint64_t modulus_top = 1;
    for (Exponent i = 0; i < top; ++i) {
        if (modulus_top > (std::uint64_t{1} << 32) / p)
            throw std::invalid_argument("residue modulus p^k must stay below 2^32");
        modulus_top *= p;
    }

    // Variables other than v, in an order that completes congruences early.
    std::vector<std::set<std::size_t>> vars_of(congruences.size());
    std::set<std::size_t> all_vars;
    for (std::size_t i = 0; i < congruences.size(); ++i) {
        for (const auto* side : {&congruences[i].lhs, &congruences[i].rhs})
            for (const auto& m : *side)
                for (std::size_t w = 0; w < m.width(); ++w)
                    if (w != v.index() && m.exponent(w) > 0)
                        vars_of[i].insert(w);
        all_vars.insert(vars_of[i].begin(), vars_of[i].end());
    }
    std::vector<std::size_t> order;
    std::set<std::size_t> chosen;
    while (chosen.size() < all_vars.size()) {
        std::size_t best = 0;
        long best_done = -1;
        long best_uses = -1;
        for (std::size_t w : all_vars) {
            if (chosen.count(w))
                continue;
            long done = 0, uses = 0;
            for (const auto& vs : vars_of) {
                if (!vs.count(w))
                    continue;
                ++uses;
                if (std::all_of(vs.begin(), vs.end(), [&](std::size_t u) { return u == w || chosen.count(u); }))
                    ++done;
            }
            if (done > best_done || (done == best_done && uses > best_uses)) {
                best = w;
                best_done = done;
                best_uses = uses;
            }
        }
        order.push_back(best);
        chosen.insert(best);
    }
    std::map<std::size_t, std::size_t> slot_of;
    for (std::size_t s = 0; s < order.size(); ++s)
        slot_of[order[s]] = s;

    std::vector<CompiledCongruence> compiled;
    std::vector<std::vector<std::size_t>> ready_at(order.size() + 1);
    for (std::size_t i = 0; i < congruences.size(); ++i) {
        const auto& c = congruences[i];
        CompiledCongruence cc{pow_mod(p, c.modulus_power, std::numeric_limits<std::uint64_t>::max()), {}, {}, 0};
        for (const auto* side : {&c.lhs, &c.rhs}) {
            auto& out = side == &c.lhs ? cc.lhs : cc.rhs;
            for (const auto& m : *side) {
                CompiledTerm t{m.exponent(v), {}};
                for (std::size_t w = 0; w < m.width(); ++w)
                    if (w != v.index() && m.exponent(w) > 0) {
                        t.factors.emplace_back(slot_of.at(w), m.exponent(w));
                        cc.ready_depth = std::max(cc.ready_depth, slot_of.at(w) + 1);
                    }
                out.push_back(std::move(t));
            }
        }
        ready_at[cc.ready_depth].push_back(i);
        compiled.push_back(std::move(cc));
    }

    std::vector<std::uint64_t> values(order.size(), 0);
    std::set<std::size_t> refuting;

    auto holds = [&](const CompiledCongruence& cc) {
        auto total = [&](const std::vector<CompiledTerm>& terms) {
            std::uint64_t sum = 0;
            for (const auto& t : terms) {
                if (t.v_power >= 64)
                    continue;
                std::uint64_t term = pow_mod(p, t.v_power, cc.modulus);
                for (const auto& [slot, e] : t.factors)
                    term = mul_mod(term, pow_mod(values[slot], e, cc.modulus), cc.modulus);
                sum = (sum + term) % cc.modulus;
            }
            return sum;
        };
        return total(cc.lhs) == total(cc.rhs);
    };
    auto consistent_at = [&](std::size_t depth) {
        for (std::size_t i : ready_at[depth]) {
            if (!holds(compiled[i])) {
                refuting.insert(i);
                return false;
            }
        }
        return true;
    };

    bool out_of_budget = false;
    std::function<bool(std::size_t)> assign = [&](std::size_t depth) -> bool {
        if (depth == order.size())
            return true;
        for (std::uint64_t r = 1; r < modulus_top; ++r) {
            if (r % p == 0)
                continue;
            if (++result.nodes > node_budget) {
                out_of_budget = true;
                return false;
            }
            values[depth] = r;
            if (consistent_at(depth + 1) && assign(depth + 1))
                return true;
            if (out_of_budget)
                return false;
        }
        return false;
    };

    if (!consistent_at(0)) {
        result.outcome = ResidueOutcome::Unsatisfiable;
    } else if (assign(0)) {
        result.outcome = ResidueOutcome::Satisfiable;
    } else {
        result.outcome = out_of_budget ? ResidueOutcome::BudgetExhausted : ResidueOutcome::Unsatisfiable;
    }
    if (result.outcome == ResidueOutcome::Unsatisfiable)
        result.refuting.assign(refuting.begin(), refuting.end());
    return result;
}

std::vector<Congruence> collect_congruences(const SquareForm& form, VarId v, int max_strips, Exponent max_power)
{
    std::set<Congruence> found;
    const int strips_cap = std::min(max_strips, 2 * form.n() + 2);
    if (strips_cap < 1)
        return {};
    enumerate_zone_pairs(form.n(), strips_cap, [&](const ZonePair& zp) {
        for (Exponent k = 1; k <= max_power; ++k) {
            Congruence c = extract_congruence(form, zp, v, k).simplified();
            if (!c.vacuous())
                found.insert(std::move(c));
        }
        return true;
    });
    return {found.begin(), found.end()};
}

FilterVerdict congruence_csp(const SquareForm& form, VarId v, const std::set<std::uint64_t>& candidates,
                             const CspOptions& options)
{
    if (candidates.empty())
        throw std::invalid_argument("congruence_csp needs at least one candidate prime");
    for (auto p : candidates)
        if (!is_prime(BigInt(p)))
            throw std::invalid_argument("candidate " + std::to_string(p) + " is not prime");

    const auto congruences = collect_congruences(form, v, options.max_strips, options.max_power);
    if (congruences.empty())
        return NoInformation{};

    PrimeConstraintSet::Allowed survivors;
    Witness refutations = Witness::array();
    for (auto p : candidates) {
        const ResidueResult r = solve_residues(congruences, v, p, options.node_budget);
        if (r.outcome != ResidueOutcome::Unsatisfiable) {
            survivors.insert(p);
            continue;
        }
        Witness entry;
        entry["p"] = p;
        Witness used = Witness::array();
        for (std::size_t i : r.refuting)
            used.push_back(congruences[i].to_json());
        entry["congruences"] = std::move(used);
        refutations.push_back(std::move(entry));
    }

    if (survivors.size() == candidates.size())
        return NoInformation{};
    if (!survivors.empty()) {
        // A partial sweep only narrows v when the candidates were exhaustive.
        if (!options.complete)
            return NoInformation{};
        PrimeConstraintSet set;
        set.restrict(v, survivors);
        Witness w;
        w["var"] = v.name();
        w["refutations"] = std::move(refutations);
        return Constrained{std::move(set), std::move(w)};
    }
    Witness w;
    w["var"] = v.name();
    w["candidates"] = primes_json(candidates);
    w["complete"] = options.complete;
    w["max_strips"] = options.max_strips;
    w["max_power"] = options.max_power;
    w["refutations"] = std::move(refutations);
    return unacceptable(Lemma::CongruenceCsp, std::move(w));
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

FilterVerdict first_over_zone_pairs(const SquareForm& form, int max_strips,
                                    FilterVerdict (*filter)(const SquareForm&, const ZonePair&))
{
    FilterVerdict verdict = NoInformation{};
    const int cap = std::min(max_strips, 2 * form.n() + 2);
    if (cap < 1)
        return verdict;
    enumerate_zone_pairs(form.n(), cap, [&](const ZonePair& zp) {
        verdict = filter(form, zp);
        return !is_unacceptable(verdict);
    });
    return verdict;
}

} // namespace

std::vector<StageResult> run_filters(const SquareForm& form, const PipelineOptions& options)
{
    std::vector<StageResult> results;
    auto record = [&](Lemma stage, FilterVerdict v) {
        const bool stop = options.stop_at_unacceptable && is_unacceptable(v);
        results.push_back({stage, std::move(v)});
        return stop;
    };

    if (options.signature && record(Lemma::SignatureFilter, signature_filter(form.magic, form.n())))
        return results;
    if (options.prime_power && record(Lemma::PrimePowerFilter, prime_power_filter(form)))
        return results;
    if (options.four_times && record(Lemma::FourTimesFilter, four_times_filter(form)))
        return results;
    if (options.min_order
        && record(Lemma::MinOrderFilter, first_over_zone_pairs(form, options.max_strips, &min_order_filter)))
        return results;
    if (options.bigger_zone
        && record(Lemma::BiggerZoneFilter, first_over_zone_pairs(form, options.max_strips, &bigger_zone_filter)))
        return results;
    if (options.prime_constraints && record(Lemma::DerivePrimeConstraints, derive_prime_constraints(form)))
        return results;

    if (options.csp) {
        const PrimeConstraintSet known = collected_constraints(results);
        PrimeConstraintSet narrowed;
        Witness sources = Witness::array();
        for (std::size_t i = 0; i < form.var_count; ++i) {
            const VarId v(i);
            if (form.magic.exponent(v) == 0)
                continue;
            CspOptions opts = options.csp_options;
            std::set<std::uint64_t> candidates;
            if (const auto* allowed = known.allowed(v)) {
                candidates = *allowed;
                opts.complete = true;
            } else {
                candidates = primes_at_most(options.csp_prime_bound);
                opts.complete = false;
            }
            if (candidates.empty())
                continue;
            FilterVerdict v_result = congruence_csp(form, v, candidates, opts);
            if (is_unacceptable(v_result)) {
                record(Lemma::CongruenceCsp, std::move(v_result));
                return results;
            }
            if (const auto* c = std::get_if<Constrained>(&v_result)) {
                narrowed.merge(c->constraints);
                sources.push_back(c->witness);
            }
        }
        if (narrowed.unconstrained()) {
            record(Lemma::CongruenceCsp, NoInformation{});
        } else {
            Witness w;
            w["sources"] = std::move(sources);
            record(Lemma::CongruenceCsp, Constrained{std::move(narrowed), std::move(w)});
        }
    }
    return results;
}

PrimeConstraintSet collected_constraints(std::span<const StageResult> results)
{
    PrimeConstraintSet out;
    for (const auto& r : results)
        if (const auto* c = std::get_if<Constrained>(&r.verdict))
            out.merge(c->constraints);
    return out;
}

// ---------------------------------------------------------------------------
// Witness rechecks

namespace {

std::optional<ZonePair> zone_pair_from_witness(const SquareForm& form, const Witness& w)
{
    const auto a = parse_collection(w.at("A").get<std::string>(), form.n());
    const auto b = parse_collection(w.at("B").get<std::string>(), form.n());
    auto derived = derive_zone_pair(a, b, form.n());
    if (auto* zp = std::get_if<ZonePair>(&derived))
        return *zp;
    return std::nullopt;
}

bool recheck_min_order(const SquareForm& form, const Witness& w)
{
    const auto zp = zone_pair_from_witness(form, w);
    if (!zp)
        return false;
    const VarId v = VarId::from_letter(w.at("var").get<std::string>().at(0));
    const Cell cell = cell_from_json(w.at("cell"));
    const auto k = w.at("exponent").get<Exponent>();
    bool found = false;
    for (const auto* zone : {&zp->x, &zp->y}) {
        for (const Cell& c : *zone) {
            const Exponent e = form.at(c).exponent(v);
            if (c == cell) {
                found = e == k;
            } else if (e <= k) {
                return false;
            }
        }
    }
    return found;
}

bool recheck_bigger_zone(const SquareForm& form, const Witness& w)
{
    const auto zp = zone_pair_from_witness(form, w);
    if (!zp)
        return false;
    const bool from_x = w.at("domain").get<std::string>() == "X";
    const CellSet& dom_cells = from_x ? zp->x : zp->y;
    const CellSet& cod_cells = from_x ? zp->y : zp->x;
    const auto& pairs = w.at("map");
    if (pairs.size() != dom_cells.size())
        return false;
    std::vector<std::size_t> map(dom_cells.size(), cod_cells.size());
    for (const auto& p : pairs) {
        const Cell from = cell_from_json(p.at("from"));
        const Cell to = cell_from_json(p.at("to"));
        const auto fi = std::find(dom_cells.begin(), dom_cells.end(), from);
        const auto ti = std::find(cod_cells.begin(), cod_cells.end(), to);
        if (fi == dom_cells.end() || ti == cod_cells.end())
            return false;
        auto& slot = map[static_cast<std::size_t>(fi - dom_cells.begin())];
        if (slot != cod_cells.size())
            return false;
        slot = static_cast<std::size_t>(ti - cod_cells.begin());
    }
    return bigger_zone_map_valid(zone_entries(form, dom_cells), zone_entries(form, cod_cells), map);
}

bool recheck_csp(const SquareForm& form, const Witness& w)
{
    const VarId v = VarId::from_letter(w.at("var").get<std::string>().at(0));
    const int max_strips = w.at("max_strips").get<int>();
    const auto max_power = w.at("max_power").get<Exponent>();
    const auto implied = collect_congruences(form, v, max_strips, max_power);

    std::set<std::uint64_t> refuted;
    for (const auto& entry : w.at("refutations")) {
        const auto p = entry.at("p").get<std::uint64_t>();
        std::vector<Congruence> used;
        for (const auto& cj : entry.at("congruences")) {
            Congruence c = Congruence::from_json(cj);
            if (std::find(implied.begin(), implied.end(), c) == implied.end())
                return false;
            used.push_back(std::move(c));
        }
        if (solve_residues(used, v, p, std::numeric_limits<std::uint64_t>::max()).outcome
            != ResidueOutcome::Unsatisfiable)
            return false;
        refuted.insert(p);
    }
    std::set<std::uint64_t> candidates;
    for (const auto& p : w.at("candidates"))
        candidates.insert(p.get<std::uint64_t>());
    return refuted == candidates;
}

} // namespace

bool recheck(const SquareForm& form, const Unacceptable& verdict)
{
    const Witness& w = verdict.witness;
    try {
        switch (verdict.lemma) {
        case Lemma::SignatureFilter:
            return w.at("magic").get<std::string>() == form.magic.to_string() && w.at("n").get<int>() == form.n()
                   && is_unacceptable(signature_filter(form.magic, form.n()));
        case Lemma::PrimePowerFilter: {
            const Cell cell = cell_from_json(w.at("cell"));
            const Monomial& entry = form.at(cell);
            return entry.to_string() == w.at("entry").get<std::string>() && entry.divides(form.magic)
                   && (form.magic / entry).support_size() <= 1;
        }
        case Lemma::FourTimesFilter: {
            if (form.n() < 4)
                return false;
            const VarId v = VarId::from_letter(w.at("var").get<std::string>().at(0));
            const auto low = w.at("min_exponent").get<Exponent>();
            std::size_t count = 0;
            for (const auto& m : form.grid.cells()) {
                if (m.exponent(v) < low)
                    return false;
                if (m.exponent(v) == low)
                    ++count;
            }
            return count == w.at("count").get<std::size_t>() && count < 4;
        }
        case Lemma::MinOrderFilter: return recheck_min_order(form, w);
        case Lemma::BiggerZoneFilter: return recheck_bigger_zone(form, w);
        case Lemma::PrimeValueBound: {
            std::vector<CellSet> zones;
            for (const auto& z : w.at("zone_cells"))
                zones.push_back(cells_from_json(z));
            const VarId v = VarId::from_letter(w.at("var").get<std::string>().at(0));
            return is_unacceptable(prime_value_bound(zones, form, v));
        }
        case Lemma::DerivePrimeConstraints: return is_unacceptable(derive_prime_constraints(form));
        case Lemma::CongruenceCsp: return recheck_csp(form, w);
        }
    } catch (const std::exception&) {
        return false;
    }
    return false;
}

} // namespace sqform
