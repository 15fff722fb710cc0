#include "sqform/search.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

namespace sqform {

std::string_view status_name(EnumerationStatus s)
{
    switch (s) {
    case EnumerationStatus::Complete: return "complete";
    case EnumerationStatus::NodeBudget: return "budget exhausted (nodes)";
    case EnumerationStatus::FormBudget: return "budget exhausted (forms)";
    case EnumerationStatus::Stopped: return "stopped";
    }
    return "?";
}

void EnumerationSpec::validate() const
{
    if (n < 1)
        throw std::invalid_argument("side length must be positive");
    if (magic.is_one())
        throw std::invalid_argument("magic exponent vector needs a positive coordinate");
    if (node_budget == 0 || form_budget == 0)
        throw std::invalid_argument("budgets must be positive");
    if (prefix.size() > static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw std::invalid_argument("prefix is longer than the grid");
}

namespace {

constexpr std::uint64_t kMaxCandidates = 5'000'000;

bool candidate_order(const Monomial& l, const Monomial& r)
{
    if (l.degree() != r.degree())
        return l.degree() > r.degree();
    return l > r;
}

bool within_cap(const Monomial& m, const std::optional<Exponent>& cap)
{
    if (!cap)
        return true;
    return std::all_of(m.exponents().begin(), m.exponents().end(), [&](Exponent e) { return e <= *cap; });
}

// Backtracking state for one enumeration run.
class Engine {
public:
    Engine(const EnumerationSpec& spec, std::vector<Monomial> candidates)
        : spec_(spec), n_(spec.n), vars_(spec.magic.width()), cands_(std::move(candidates))
    {
        const std::size_t cells = static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
        strip_count_ = static_cast<std::size_t>(2 * n_ + 2);

        // Mixed-radix keys for exponent vectors below magic.
        stride_.resize(vars_);
        std::uint64_t s = 1;
        for (std::size_t v = 0; v < vars_; ++v) {
            stride_[v] = s;
            s *= spec.magic.exponent(v) + 1u;
        }
        flat_.resize(cands_.size() * vars_);
        cap_.assign(vars_, 0);
        for (std::size_t i = 0; i < cands_.size(); ++i) {
            std::uint64_t key = 0;
            for (std::size_t v = 0; v < vars_; ++v) {
                const Exponent e = cands_[i].exponent(v);
                flat_[i * vars_ + v] = static_cast<int>(e);
                cap_[v] = std::max(cap_[v], static_cast<int>(e));
                key += e * stride_[v];
            }
            index_of_.emplace(key, i);
        }
        if (s <= (std::uint64_t{1} << 22)) {
            dense_.assign(s, kNone);
            for (const auto& [key, i] : index_of_)
                dense_[key] = i;
        }

        strips_of_.resize(cells);
        for (const Strip& st : strips(n_)) {
            const auto id = static_cast<std::size_t>(st.ordinal(n_));
            for (const Cell& c : st.cells(n_))
                strips_of_[static_cast<std::size_t>(c.row * n_ + c.col)].push_back(id);
        }
        room_.assign(strip_count_ * vars_, 0);
        for (std::size_t st = 0; st < strip_count_; ++st)
            for (std::size_t v = 0; v < vars_; ++v)
                room_[st * vars_ + v] = static_cast<int>(spec.magic.exponent(v));
        filled_.assign(strip_count_, 0);
        used_.assign(cands_.size(), 0);
        placed_.assign(cells, 0);
        exact_ = cands_.size() == cells;

        prefix_idx_.reserve(spec.prefix.size());
        for (const Monomial& m : spec.prefix) {
            auto it = std::find(cands_.begin(), cands_.end(), m);
            prefix_idx_.push_back(it == cands_.end() ? kNone : static_cast<std::size_t>(it - cands_.begin()));
        }
    }

    // Runs to full depth (stop_depth = n*n) or collects partial prefixes.
    EnumerationResult run(std::size_t stop_depth, const std::function<bool(std::size_t)>& at_leaf)
    {
        stop_depth_ = stop_depth;
        at_leaf_ = &at_leaf;
        dfs(0);
        EnumerationResult r;
        r.status = status_;
        r.forms = leaves_;
        r.nodes = nodes_;
        return r;
    }

    std::vector<Monomial> partial(std::size_t depth) const
    {
        std::vector<Monomial> out;
        for (std::size_t k = 0; k < depth; ++k)
            out.push_back(cands_[placed_[k]]);
        return out;
    }

    SquareForm form() const
    {
        SquareForm f;
        f.grid = Grid<Monomial>(n_, partial(placed_.size()));
        f.var_count = vars_;
        f.magic = spec_.magic;
        return f;
    }

private:
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    std::size_t lookup(const int* exps) const
    {
        std::uint64_t key = 0;
        for (std::size_t v = 0; v < vars_; ++v) {
            if (exps[v] < 0)
                return kNone;
            if (exps[v] > static_cast<int>(spec_.magic.exponent(v)))
                return kNone;
            key += static_cast<std::uint64_t>(exps[v]) * stride_[v];
        }
        if (!dense_.empty())
            return dense_[key];
        auto it = index_of_.find(key);
        return it == index_of_.end() ? kNone : it->second;
    }

    // Room left in strip st can still be completed by `left` more cells.
    bool feasible(std::size_t st, std::size_t left) const
    {
        const int* room = &room_[st * vars_];
        if (left == 0)
            return std::all_of(room, room + vars_, [](int e) { return e == 0; });
        if (left == 1) {
            const std::size_t i = lookup(room);
            return i != kNone && !used_[i];
        }
        std::uint64_t divisors = 1;
        for (std::size_t v = 0; v < vars_; ++v) {
            if (room[v] > cap_[v] * static_cast<int>(left))
                return false;
            divisors *= static_cast<std::uint64_t>(std::min(room[v], cap_[v]) + 1);
        }
        if (divisors < left)
            return false;
        if (left == 2)
            return splits_in_two(room);
        return bounded(room, left);
    }

    bool fits(std::size_t cand, const int* room) const
    {
        const int* e = &flat_[cand * vars_];
        for (std::size_t v = 0; v < vars_; ++v)
            if (e[v] > room[v])
                return false;
        return true;
    }

    // room = x + y for distinct unused candidates x, y.
    bool splits_in_two(const int* room) const
    {
        std::vector<int>& rest = scratch_rest_;
        rest.resize(vars_);
        for (std::size_t i = 0; i < cands_.size(); ++i) {
            if (used_[i] || !fits(i, room))
                continue;
            for (std::size_t v = 0; v < vars_; ++v)
                rest[v] = room[v] - flat_[i * vars_ + v];
            const std::size_t j = lookup(rest.data());
            if (j != kNone && j != i && !used_[j])
                return true;
        }
        return false;
    }

    // Enough unused candidates divide room, and for every variable the room
    // lies between the sums of the `left` smallest and largest exponents.
    bool bounded(const int* room, std::size_t left) const
    {
        // Exponent histograms per variable; fitting candidates have e <= room.
        auto& offset = scratch_offset_;
        auto& hist = scratch_hist_;
        offset.resize(vars_ + 1);
        offset[0] = 0;
        for (std::size_t v = 0; v < vars_; ++v)
            offset[v + 1] = offset[v] + static_cast<std::size_t>(room[v]) + 1;
        hist.assign(offset[vars_], 0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < cands_.size(); ++i) {
            if (used_[i] || !fits(i, room))
                continue;
            ++count;
            for (std::size_t v = 0; v < vars_; ++v)
                ++hist[offset[v] + static_cast<std::size_t>(flat_[i * vars_ + v])];
        }
        if (count < left)
            return false;
        for (std::size_t v = 0; v < vars_; ++v) {
            const int* h = &hist[offset[v]];
            int low = 0, high = 0;
            std::size_t need = left;
            for (int e = 0; e <= room[v] && need > 0; ++e) {
                const std::size_t take = std::min<std::size_t>(need, static_cast<std::size_t>(h[e]));
                low += e * static_cast<int>(take);
                need -= take;
            }
            if (low > room[v])
                return false;
            need = left;
            for (int e = room[v]; e >= 0 && need > 0; --e) {
                const std::size_t take = std::min<std::size_t>(need, static_cast<std::size_t>(h[e]));
                high += e * static_cast<int>(take);
                need -= take;
            }
            if (high < room[v])
                return false;
        }
        return true;
    }

    bool place(std::size_t cell, std::size_t cand)
    {
        const int* e = &flat_[cand * vars_];
        for (std::size_t st : strips_of_[cell])
            for (std::size_t v = 0; v < vars_; ++v)
                if (e[v] > room_[st * vars_ + v])
                    return false;
        for (std::size_t st : strips_of_[cell]) {
            for (std::size_t v = 0; v < vars_; ++v)
                room_[st * vars_ + v] -= e[v];
            ++filled_[st];
        }
        used_[cand] = 1;
        placed_[cell] = cand;
        for (std::size_t st : strips_of_[cell])
            if (!feasible(st, static_cast<std::size_t>(n_) - filled_[st])) {
                unplace(cell, cand);
                return false;
            }
        if (exact_ && !all_placeable(cell + 1)) {
            unplace(cell, cand);
            return false;
        }
        return true;
    }

    // With exactly n*n candidates every one must be used: each unused
    // candidate needs an open cell whose strips all have room for it.
    bool all_placeable(std::size_t first_open) const
    {
        for (std::size_t i = 0; i < cands_.size(); ++i) {
            if (used_[i])
                continue;
            bool somewhere = false;
            for (std::size_t k = first_open; k < placed_.size() && !somewhere; ++k)
                somewhere = std::all_of(strips_of_[k].begin(), strips_of_[k].end(),
                                        [&](std::size_t st) { return fits(i, &room_[st * vars_]); });
            if (!somewhere)
                return false;
        }
        return true;
    }

    void unplace(std::size_t cell, std::size_t cand)
    {
        const int* e = &flat_[cand * vars_];
        for (std::size_t st : strips_of_[cell]) {
            for (std::size_t v = 0; v < vars_; ++v)
                room_[st * vars_ + v] += e[v];
            --filled_[st];
        }
        used_[cand] = 0;
    }

    // False once the run must stop.
    bool dfs(std::size_t cell)
    {
        if (cell == stop_depth_) {
            ++leaves_;
            if (!(*at_leaf_)(cell)) {
                status_ = EnumerationStatus::Stopped;
                return false;
            }
            if (stop_depth_ == placed_.size() && leaves_ >= spec_.form_budget) {
                status_ = EnumerationStatus::FormBudget;
                return false;
            }
            return true;
        }

        auto attempt = [&](std::size_t cand) {
            if (used_[cand])
                return true;
            if (nodes_ >= spec_.node_budget) {
                status_ = EnumerationStatus::NodeBudget;
                return false;
            }
            if (!place(cell, cand))
                return true;
            ++nodes_;
            const bool go_on = dfs(cell + 1);
            unplace(cell, cand);
            return go_on;
        };

        if (cell < prefix_idx_.size())
            return prefix_idx_[cell] == kNone || attempt(prefix_idx_[cell]);

        // The last open cell of a strip is forced.
        for (std::size_t st : strips_of_[cell]) {
            if (filled_[st] + 1 == static_cast<std::size_t>(n_)) {
                const std::size_t forced = lookup(&room_[st * vars_]);
                return forced == kNone || attempt(forced);
            }
        }
        for (std::size_t cand = 0; cand < cands_.size(); ++cand)
            if (!attempt(cand))
                return false;
        return true;
    }

    const EnumerationSpec& spec_;
    int n_;
    std::size_t vars_;
    std::size_t strip_count_ = 0;
    std::vector<Monomial> cands_;
    std::vector<int> flat_;
    std::vector<int> cap_;
    std::vector<std::uint64_t> stride_;
    std::unordered_map<std::uint64_t, std::size_t> index_of_;
    std::vector<std::size_t> dense_;
    std::vector<std::vector<std::size_t>> strips_of_;
    std::vector<int> room_;
    std::vector<std::size_t> filled_;
    std::vector<char> used_;
    std::vector<std::size_t> placed_;
    std::vector<std::size_t> prefix_idx_;
    bool exact_ = false;
    mutable std::vector<int> scratch_rest_;
    mutable std::vector<std::size_t> scratch_offset_;
    mutable std::vector<int> scratch_hist_;

    std::size_t stop_depth_ = 0;
    const std::function<bool(std::size_t)>* at_leaf_ = nullptr;
    std::uint64_t nodes_ = 0;
    std::uint64_t leaves_ = 0;
    EnumerationStatus status_ = EnumerationStatus::Complete;
};

} // namespace

std::vector<Monomial> enumeration_candidates(const EnumerationSpec& spec)
{
    spec.validate();
    std::vector<Monomial> out;
    if (spec.pool) {
        std::set<Monomial> seen;
        for (const Monomial& m : *spec.pool)
            if (m.divides(spec.magic) && within_cap(m, spec.max_exponent) && seen.insert(m).second)
                out.push_back(m);
    } else {
        if (spec.magic.divisor_count() > kMaxCandidates)
            throw std::invalid_argument("magic exponent vector has too many divisors to enumerate");
        const std::size_t vars = spec.magic.width();
        std::vector<Exponent> e(vars, 0);
        while (true) {
            Monomial m{e};
            if (within_cap(m, spec.max_exponent))
                out.push_back(std::move(m));
            std::size_t v = 0;
            while (v < vars && e[v] == spec.magic.exponent(v))
                e[v++] = 0;
            if (v == vars)
                break;
            ++e[v];
        }
    }
    std::sort(out.begin(), out.end(), candidate_order);
    return out;
}

EnumerationResult enumerate_forms(const EnumerationSpec& spec, const std::function<bool(const SquareForm&)>& visit)
{
    const std::size_t cells = static_cast<std::size_t>(spec.n) * static_cast<std::size_t>(spec.n);
    const auto candidates = enumeration_candidates(spec);
    if (candidates.size() < cells)
        return {};
    Engine engine(spec, candidates);
    const std::function<bool(std::size_t)> leaf = [&](std::size_t) {
        const SquareForm form = engine.form();
        const FormDiagnosis d = validate_form(form);
        if (!d.ok())
            throw std::logic_error("enumerator produced an invalid form: " + d.describe(form.n()));
        return visit(form);
    };
    return engine.run(cells, leaf);
}

EnumeratedForms enumerate_forms(const EnumerationSpec& spec)
{
    EnumeratedForms out;
    out.result = enumerate_forms(spec, [&](const SquareForm& f) {
        out.forms.push_back(f);
        return true;
    });
    return out;
}

std::vector<std::vector<Monomial>> split_prefixes(const EnumerationSpec& spec, std::size_t length)
{
    const std::size_t cells = static_cast<std::size_t>(spec.n) * static_cast<std::size_t>(spec.n);
    length = std::min(std::max(length, spec.prefix.size()), cells);
    const auto candidates = enumeration_candidates(spec);
    if (candidates.size() < cells)
        return {};
    EnumerationSpec unbounded = spec;
    unbounded.form_budget = std::numeric_limits<std::uint64_t>::max();
    Engine engine(unbounded, candidates);
    std::vector<std::vector<Monomial>> out;
    const std::function<bool(std::size_t)> leaf = [&](std::size_t depth) {
        out.push_back(engine.partial(depth));
        return true;
    };
    const auto r = engine.run(length, leaf);
    if (r.status == EnumerationStatus::NodeBudget)
        throw std::runtime_error("node budget exhausted while splitting prefixes");
    return out;
}

EnumeratedForms enumerate_forms_parallel(const EnumerationSpec& spec, std::size_t prefix_length, unsigned jobs)
{
    const auto prefixes = split_prefixes(spec, prefix_length);
    std::vector<EnumeratedForms> parts(prefixes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next++;
            if (i >= prefixes.size())
                return;
            try {
                EnumerationSpec part = spec;
                part.prefix = prefixes[i];
                parts[i] = enumerate_forms(part);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    const unsigned count = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(prefixes.size())));
    for (unsigned t = 0; t < count; ++t)
        threads.emplace_back(worker);
    for (auto& t : threads)
        t.join();
    if (failure)
        std::rethrow_exception(failure);

    EnumeratedForms out;
    for (auto& part : parts) {
        out.result.nodes += part.result.nodes;
        if (part.result.status == EnumerationStatus::NodeBudget)
            out.result.status = EnumerationStatus::NodeBudget;
        for (auto& f : part.forms) {
            if (out.forms.size() >= spec.form_budget) {
                out.result.status = EnumerationStatus::FormBudget;
                break;
            }
            out.forms.push_back(std::move(f));
        }
    }
    out.result.forms = out.forms.size();
    return out;
}

// ---------------------------------------------------------------------------
// Canonical forms

bool form_less(const SquareForm& l, const SquareForm& r)
{
    if (l.n() != r.n())
        return l.n() < r.n();
    const auto& lc = l.grid.cells();
    const auto& rc = r.grid.cells();
    if (lc != rc)
        return std::lexicographical_compare(lc.begin(), lc.end(), rc.begin(), rc.end());
    if (l.var_count != r.var_count)
        return l.var_count < r.var_count;
    return l.magic < r.magic;
}

SquareForm sort_variables(const SquareForm& form)
{
    std::vector<std::size_t> order(form.var_count);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        return form.magic.exponent(l) > form.magic.exponent(r);
    });
    std::vector<std::size_t> new_index_of(form.var_count);
    for (std::size_t pos = 0; pos < order.size(); ++pos)
        new_index_of[order[pos]] = pos;
    return form.relabeled(new_index_of);
}

SquareForm canonicalize(const SquareForm& form)
{
    // Groups of variables sharing a magic exponent.
    std::map<Exponent, std::vector<std::size_t>> groups;
    for (std::size_t v = 0; v < form.var_count; ++v)
        groups[form.magic.exponent(v)].push_back(v);
    std::vector<std::vector<std::size_t>> perms;
    for (auto& [e, members] : groups)
        perms.push_back(members);

    std::vector<std::size_t> new_index_of(form.var_count);
    std::optional<SquareForm> best;
    std::function<void(std::size_t)> walk = [&](std::size_t g) {
        if (g == perms.size()) {
            const SquareForm relabeled = form.relabeled(new_index_of);
            for (Symmetry s : kAllSymmetries) {
                SquareForm t = relabeled.transformed(s);
                if (!best || form_less(t, *best))
                    best = std::move(t);
            }
            return;
        }
        auto& targets = perms[g];
        std::vector<std::size_t> sources = targets;
        std::sort(targets.begin(), targets.end());
        do {
            for (std::size_t i = 0; i < sources.size(); ++i)
                new_index_of[sources[i]] = targets[i];
            walk(g + 1);
        } while (std::next_permutation(targets.begin(), targets.end()));
    };
    walk(0);
    return *best;
}

// ---------------------------------------------------------------------------
// Assignment search

namespace {

bool additive(const ConcreteSquare& square)
{
    const int n = square.n();
    std::optional<BigInt> target;
    for (const Strip& s : strips(n)) {
        BigInt sum = 0;
        for (const Cell& c : s.cells(n))
            sum += square.at(c);
        if (!target)
            target = sum;
        else if (sum != *target)
            return false;
    }
    return true;
}

} // namespace

AssignmentSearch search_assignment_over(const SquareForm& form, const std::vector<std::vector<BigInt>>& candidates,
                                        const AssignmentObserver& observer)
{
    if (candidates.size() < form.var_count)
        throw std::invalid_argument("every variable needs a candidate list");
    AssignmentSearch out;
    std::vector<BigInt> chosen;
    std::function<bool(std::size_t)> walk = [&](std::size_t v) -> bool {
        if (v == form.var_count) {
            ++out.tried;
            PrimeAssignment assignment(chosen);
            if (observer)
                observer(assignment);
            if (additive(evaluate_form(form, assignment))) {
                out.found = std::move(assignment);
                return true;
            }
            return false;
        }
        for (const BigInt& p : candidates[v]) {
            if (std::find(chosen.begin(), chosen.end(), p) != chosen.end())
                continue;
            chosen.push_back(p);
            if (walk(v + 1))
                return true;
            chosen.pop_back();
        }
        return false;
    };
    walk(0);
    return out;
}

AssignmentSearch search_assignment(const SquareForm& form, std::uint64_t prime_bound,
                                   const PrimeConstraintSet& constraints, const AssignmentObserver& observer)
{
    if (prime_bound < 2)
        throw std::invalid_argument("prime bound must be at least 2");
    if (auto v = constraints.empty_variable())
        throw std::invalid_argument("constraint set leaves no prime for " + v->name());
    const auto primes = primes_up_to(prime_bound);
    std::vector<std::vector<BigInt>> candidates(form.var_count);
    for (std::size_t v = 0; v < form.var_count; ++v)
        for (auto p : primes)
            if (constraints.allows(VarId(v), BigInt(p)))
                candidates[v].emplace_back(p);
    return search_assignment_over(form, candidates, observer);
}

// ---------------------------------------------------------------------------
// Cache

std::string format_cache_record(const SquareForm& form)
{
    std::string out = std::to_string(form.n()) + ";magic=";
    for (std::size_t v = 0; v < form.var_count; ++v) {
        if (v)
            out += ',';
        out += std::to_string(form.magic.exponent(v));
    }
    out += ";grid=";
    bool first = true;
    for (const Monomial& m : form.grid.cells()) {
        if (!first)
            out += ',';
        out += m.to_string();
        first = false;
    }
    return out;
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t at = text.find(sep, start);
        out.push_back(text.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
        if (at == std::string_view::npos)
            return out;
        start = at + 1;
    }
}

std::uint64_t parse_count(std::string_view text, std::size_t line)
{
    if (text.empty() || text.size() > 9 || !std::all_of(text.begin(), text.end(), [](char c) {
            return c >= '0' && c <= '9';
        }))
        throw ParseError("bad number '" + std::string(text) + "'", line, 1);
    return std::stoull(std::string(text));
}

} // namespace

SquareForm parse_cache_record(std::string_view line, std::size_t line_number)
{
    const auto fields = split(line, ';');
    if (fields.size() != 3 || fields[1].substr(0, 6) != "magic=" || fields[2].substr(0, 5) != "grid=")
        throw ParseError("expected n;magic=...;grid=...", line_number, 1);
    const auto n = static_cast<int>(parse_count(fields[0], line_number));
    if (n < 1)
        throw ParseError("side length must be positive", line_number, 1);

    std::vector<Exponent> magic;
    for (auto e : split(fields[1].substr(6), ','))
        magic.push_back(static_cast<Exponent>(parse_count(e, line_number)));
    if (magic.size() > kMaxVariables)
        throw ParseError("too many variables", line_number, 1);

    std::vector<Monomial> cells;
    for (auto m : split(fields[2].substr(5), ',')) {
        try {
            cells.push_back(Monomial::parse(m));
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_number, 1);
        }
    }
    if (cells.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw ParseError("grid has " + std::to_string(cells.size()) + " entries", line_number, 1);

    SquareForm form;
    form.grid = Grid<Monomial>(n, std::move(cells));
    form.var_count = magic.size();
    form.magic = Monomial{std::move(magic)};
    for (const Monomial& m : form.grid.cells())
        if (m.width() > form.var_count)
            throw ParseError("entry uses a variable beyond the magic vector", line_number, 1);
    const FormDiagnosis d = validate_form(form);
    if (!d.ok())
        throw ParseError("invalid form: " + d.describe(n), line_number, 1);
    return form;
}

CacheKey cache_key_of(const SquareForm& form)
{
    return CacheKey{form.n(), signature_of_monomial(form.magic)};
}

FormCache::FormCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path FormCache::file_for(const CacheKey& key) const
{
    std::string name = "n" + std::to_string(key.n) + "_sig";
    for (auto e : key.signature.exponents())
        name += "-" + std::to_string(e);
    return dir_ / (name + ".forms");
}

std::vector<SquareForm> FormCache::get(const CacheKey& key) const
{
    std::vector<SquareForm> out;
    std::ifstream in(file_for(key), std::ios::binary);
    if (!in)
        return out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        SquareForm form = parse_cache_record(line, number);
        if (cache_key_of(form) != key)
            throw ParseError("record does not match the file's key", number, 1);
        out.push_back(std::move(form));
    }
    return out;
}

std::size_t FormCache::put(const CacheKey& key, const std::vector<SquareForm>& forms)
{
    static std::mutex writer;
    std::lock_guard lock(writer);

    std::vector<SquareForm> all = get(key);
    for (const SquareForm& f : forms) {
        if (cache_key_of(f) != key)
            throw std::invalid_argument("form does not match the cache key");
        const FormDiagnosis d = validate_form(f);
        if (!d.ok())
            throw std::invalid_argument("invalid form: " + d.describe(f.n()));
        all.push_back(canonicalize(sort_variables(f)));
    }
    std::sort(all.begin(), all.end(), form_less);
    all.erase(std::unique(all.begin(), all.end()), all.end());

    std::filesystem::create_directories(dir_);
    const auto target = file_for(key);
    auto temp = target;
    temp += ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot write " + temp.string());
        for (const SquareForm& f : all)
            out << format_cache_record(f) << '\n';
        if (!out.flush())
            throw std::runtime_error("cannot write " + temp.string());
    }
    std::filesystem::rename(temp, target);
    return all.size();
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineReport pipeline(const BigInt& p, int n, const PipelineBudgets& budgets, FormCache* cache)
{
    if (p < 1)
        throw std::invalid_argument("product must be positive");
    if (n < 1)
        throw std::invalid_argument("side length must be positive");

    PipelineReport report;
    report.product = p;
    report.factors = factorize(p);
    report.signature = signature_of(p);
    const Monomial magic = report.signature.as_monomial();

    if (magic.is_one()) {
        Witness w;
        w["magic"] = "1";
        w["n"] = n;
        w["rule"] = "unit_product";
        report.rejected = Unacceptable{Lemma::SignatureFilter, std::move(w)};
        return report;
    }
    if (auto verdict = signature_filter(magic, n); is_unacceptable(verdict)) {
        report.rejected = *as_unacceptable(verdict);
        return report;
    }

    const CacheKey key{n, report.signature};
    std::vector<SquareForm> forms;
    if (cache)
        forms = cache->get(key);
    if (!forms.empty()) {
        report.from_cache = true;
    } else {
        EnumerationSpec spec;
        spec.n = n;
        spec.magic = magic;
        spec.node_budget = budgets.node_budget;
        spec.form_budget = budgets.form_budget;
        std::set<SquareForm, decltype(&form_less)> canonical(&form_less);
        report.enumeration = enumerate_forms(spec, [&](const SquareForm& f) {
            canonical.insert(canonicalize(f));
            return true;
        });
        forms.assign(canonical.begin(), canonical.end());
        if (cache && report.enumeration->status == EnumerationStatus::Complete)
            cache->put(key, forms);
    }

    for (SquareForm& form : forms) {
        FormOutcome outcome;
        outcome.form = form;
        outcome.stages = run_filters(form, budgets.filters);
        const Unacceptable* proof = nullptr;
        for (const auto& st : outcome.stages)
            if (const auto* u = as_unacceptable(st.verdict); u && u->full_proof())
                proof = u;
        if (proof) {
            outcome.kind = FormOutcome::Kind::Unacceptable;
            report.forms.push_back(std::move(outcome));
            continue;
        }

        const PrimeConstraintSet constraints = collected_constraints(outcome.stages);
        std::vector<std::vector<BigInt>> candidates(form.var_count);
        for (std::size_t v = 0; v < form.var_count; ++v)
            for (const auto& [prime, e] : report.factors)
                if (e == form.magic.exponent(v) && constraints.allows(VarId(v), prime))
                    candidates[v].push_back(prime);
        const AssignmentSearch found = search_assignment_over(form, candidates);
        outcome.tried = found.tried;
        if (found.found) {
            outcome.kind = FormOutcome::Kind::Found;
            outcome.assignment = found.found;
            if (!report.square)
                report.square = evaluate_form(form, *found.found);
        }
        report.forms.push_back(std::move(outcome));
    }
    return report;
}

std::string render_pipeline(const PipelineReport& report)
{
    std::ostringstream out;
    out << "product " << to_string(report.product) << " =";
    if (report.factors.empty())
        out << " 1";
    for (std::size_t i = 0; i < report.factors.size(); ++i) {
        out << (i ? " * " : " ") << to_string(report.factors[i].first);
        if (report.factors[i].second != 1)
            out << '^' << report.factors[i].second;
    }
    out << "\nsignature " << report.signature.to_string() << '\n';
    if (report.rejected) {
        out << "rejected " << lemma_name(report.rejected->lemma) << ' ' << report.rejected->witness.dump() << '\n';
        return out.str();
    }
    if (report.from_cache)
        out << "forms " << report.forms.size() << " (cache)\n";
    else
        out << "forms " << report.forms.size() << " (enumerated, " << status_name(report.enumeration->status)
            << ", nodes " << report.enumeration->nodes << ")\n";
    for (std::size_t i = 0; i < report.forms.size(); ++i) {
        const FormOutcome& f = report.forms[i];
        out << "form " << i << ": ";
        switch (f.kind) {
        case FormOutcome::Kind::Unacceptable:
            for (const auto& st : f.stages)
                if (const auto* u = as_unacceptable(st.verdict); u && u->full_proof()) {
                    out << "unacceptable " << lemma_name(u->lemma);
                    break;
                }
            break;
        case FormOutcome::Kind::Exhausted: out << "exhausted(" << f.tried << ")"; break;
        case FormOutcome::Kind::Found: out << "found " << f.assignment->to_string(); break;
        }
        out << '\n';
    }
    if (report.square)
        out << "square\n" << format_square_csv(*report.square);
    else
        out << "no additive square\n";
    return out.str();
}

} // namespace sqform
