#pragma once

// Unacceptability filters and prime-value constraints for square forms.
//
// A form is unacceptable when no assignment of distinct primes to its
// variables makes it additive. Each filter either proves that (returning an
// Unacceptable verdict with a witness that recheck() can verify), narrows
// the primes some variables may take (Constrained), or says nothing.
//
// Witness JSON, per filter (keys appear in this order):
//   signature_filter        magic, n, rule, divisor_count
//   prime_power_filter      cell, entry, cofactor
//   four_times_filter       var, min_exponent, count, cells
//   min_order_filter        A, B, var, cell, entry, exponent
//   bigger_zone_filter      A, B, domain, map[{from, to, from_entry, to_entry}]
//   prime_value_bound       var, zones, distinct, bound, zone_cells
//   derive_prime_constraints reason, var?, constraints, sources
//   congruence_csp          var, candidates, complete, max_strips, max_power,
//                           refutations[{p, congruences[{modulus, lhs, rhs}]}]
// Cells are [row, col], zero-based; A and B name the strip collections that
// produced the zone pair.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "sqform/board.hpp"
#include "sqform/zones.hpp"

namespace sqform {

using Witness = nlohmann::ordered_json;

enum class Lemma {
    SignatureFilter,
    PrimePowerFilter,
    FourTimesFilter,
    MinOrderFilter,
    BiggerZoneFilter,
    PrimeValueBound,
    DerivePrimeConstraints,
    CongruenceCsp,
};

std::string_view lemma_name(Lemma lemma);
std::optional<Lemma> parse_lemma(std::string_view name);

struct Unacceptable {
    Lemma lemma;
    Witness witness;

    // False only for a congruence sweep over a candidate set that was not
    // known to be exhaustive: the form is then ruled out for those primes only.
    bool full_proof() const;
};

// Per-variable allowed primes. A variable without an entry may be any prime.
class PrimeConstraintSet {
public:
    using Allowed = std::set<std::uint64_t>;

    // Intersects v's allowed set with `allowed`; never enlarges it.
    void restrict(VarId v, const Allowed& allowed);
    void merge(const PrimeConstraintSet& other);

    // nullptr when v is unconstrained.
    const Allowed* allowed(VarId v) const;
    bool allows(VarId v, const BigInt& p) const;
    bool unconstrained() const noexcept { return sets_.empty(); }
    const std::map<std::size_t, Allowed>& entries() const noexcept { return sets_; }

    std::optional<VarId> empty_variable() const;
    // Distinct primes can be picked for all constrained variables at once.
    bool jointly_satisfiable() const;

    Witness to_json() const;

    friend bool operator==(const PrimeConstraintSet&, const PrimeConstraintSet&) = default;

private:
    std::map<std::size_t, Allowed> sets_;
};

struct Constrained {
    PrimeConstraintSet constraints;
    Witness witness;
};

struct NoInformation {};

using FilterVerdict = std::variant<Unacceptable, Constrained, NoInformation>;

bool is_unacceptable(const FilterVerdict& v);
const Unacceptable* as_unacceptable(const FilterVerdict& v);

// Lines in the verdict report format:
//   UNACCEPTABLE <lemma-name> <witness-json>
//   CONSTRAIN <var> IN {p1,p2,...}
//   NOINFO
std::vector<std::string> report_lines(const FilterVerdict& v);

// ---------------------------------------------------------------------------
// Zone-pair lemmas on bare monomial lists

// f: domain -> codomain where each x divides f(x), and any target with two
// or more preimages has every preimage dividing target / rad(target). Such a
// map forces sum(codomain) > sum(domain) under every assignment of distinct
// primes. Returns target indices, or nullopt if none exists within the node
// budget.
std::optional<std::vector<std::size_t>> find_bigger_zone_map(std::span<const Monomial> domain,
                                                             std::span<const Monomial> codomain,
                                                             std::uint64_t node_budget = 2'000'000);
bool bigger_zone_map_valid(std::span<const Monomial> domain, std::span<const Monomial> codomain,
                           std::span<const std::size_t> map);

struct UniqueMinimum {
    VarId var;
    std::size_t element; // index into x followed by y
    Exponent exponent;
};

// First variable (by index) whose minimum exponent over x u y is attained by
// exactly one element.
std::optional<UniqueMinimum> find_unique_minimum(std::span<const Monomial> x, std::span<const Monomial> y,
                                                 std::size_t var_count);

// ---------------------------------------------------------------------------
// Filters

FilterVerdict bigger_zone_filter(const SquareForm& form, const ZonePair& zp);
FilterVerdict min_order_filter(const SquareForm& form, const ZonePair& zp);
FilterVerdict prime_power_filter(const SquareForm& form);
// Applies to n >= 4; smaller squares get NoInformation.
FilterVerdict four_times_filter(const SquareForm& form);
// Magic-product patterns a^k, a^k b^m (m <= 3), a^k b c for n >= 4, and
// fewer divisors than cells for any n. Throws std::invalid_argument when
// magic is 1.
FilterVerdict signature_filter(const Monomial& magic, int n);

// ceil(distinct / (zones - distinct)), or nullopt when distinct >= zones.
std::optional<std::uint64_t> prime_value_limit(std::size_t zones, std::size_t distinct);

// The zones must be disjoint, nonempty, and forced to equal sums by
// additivity (zones_rows and zones_through_cell satisfy this). Throws
// std::invalid_argument on overlapping or empty zones.
FilterVerdict prime_value_bound(std::span<const CellSet> zones, const SquareForm& form, VarId v);
std::vector<CellSet> zones_rows(const SquareForm& form);
// Row, column and each long diagonal through `cell`, each without the cell.
std::vector<CellSet> zones_through_cell(const SquareForm& form, Cell cell);

// Whole-product constraints from the magic vector alone: with the n rows as
// zones, the non-a components of an acceptable form are the divisors of
// magic/a^k other than itself.
FilterVerdict product_pattern_constraints(const Monomial& magic, int n);
FilterVerdict derive_prime_constraints(const SquareForm& form);

// ---------------------------------------------------------------------------
// Congruences

// sum(lhs) == sum(rhs) (mod modulus_var^modulus_power)
struct Congruence {
    VarId modulus_var;
    Exponent modulus_power = 1;
    std::vector<Monomial> lhs;
    std::vector<Monomial> rhs;

    // Removes terms common to both sides and sorts each side.
    Congruence simplified() const;
    bool vacuous() const { return lhs.empty() && rhs.empty(); }
    std::string to_string() const;
    Witness to_json() const;
    static Congruence from_json(const Witness& j);

    friend bool operator==(const Congruence&, const Congruence&) = default;
    friend std::strong_ordering operator<=>(const Congruence& l, const Congruence& r)
    {
        if (auto c = l.modulus_var <=> r.modulus_var; c != 0)
            return c;
        if (auto c = l.modulus_power <=> r.modulus_power; c != 0)
            return c;
        if (auto c = l.lhs <=> r.lhs; c != 0)
            return c;
        return l.rhs <=> r.rhs;
    }
};

// Entries of X (lhs) and Y (rhs) whose exponent of v is below k. Additivity
// forces the congruence because every other entry is a multiple of v^k.
Congruence extract_congruence(const SquareForm& form, const ZonePair& zp, VarId v, Exponent k);

enum class ResidueOutcome { Satisfiable, Unsatisfiable, BudgetExhausted };

struct ResidueResult {
    ResidueOutcome outcome = ResidueOutcome::Satisfiable;
    std::vector<std::size_t> refuting; // indices of congruences that closed branches
    std::uint64_t nodes = 0;
};

// Decides whether the other variables can take residues coprime to p that
// satisfy every congruence, with v set to p. Congruences must share v.
ResidueResult solve_residues(std::span<const Congruence> congruences, VarId v, std::uint64_t p,
                             std::uint64_t node_budget);

struct CspOptions {
    int max_strips = 1;
    Exponent max_power = 1;
    std::uint64_t node_budget = 20'000'000; // per candidate
    // The candidate set is known to contain every admissible value of v, so
    // pruning all of them is a full proof.
    bool complete = false;
};

std::vector<Congruence> collect_congruences(const SquareForm& form, VarId v, int max_strips, Exponent max_power);

// Throws std::invalid_argument for an empty or non-prime candidate set.
FilterVerdict congruence_csp(const SquareForm& form, VarId v, const std::set<std::uint64_t>& candidates,
                             const CspOptions& options = {});

// ---------------------------------------------------------------------------
// Pipeline

struct PipelineOptions {
    bool signature = true;
    bool prime_power = true;
    bool four_times = true;
    bool min_order = true;
    bool bigger_zone = true;
    bool prime_constraints = true;
    bool csp = false;
    int max_strips = 2;
    // Candidates for variables without a finite constraint.
    std::uint64_t csp_prime_bound = 101;
    CspOptions csp_options{};
    bool stop_at_unacceptable = true;
};

struct StageResult {
    Lemma stage;
    FilterVerdict verdict;
};

// Order: signature, prime power, four times, min order, bigger zone, prime
// constraints, congruence CSP.
std::vector<StageResult> run_filters(const SquareForm& form, const PipelineOptions& options = {});
PrimeConstraintSet collected_constraints(std::span<const StageResult> results);

// Re-derives the condition named by the witness on `form`.
bool recheck(const SquareForm& form, const Unacceptable& verdict);

} // namespace sqform
