#pragma once

// Form enumeration, canonical representatives, prime-assignment search, the
// end-to-end pipeline for a given magic product, and the on-disk form cache.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sqform/board.hpp"
#include "sqform/filters.hpp"

namespace sqform {

struct EnumerationSpec {
    int n = 0;
    Monomial magic;
    std::uint64_t node_budget = 100'000'000;
    std::uint64_t form_budget = std::numeric_limits<std::uint64_t>::max();
    // Fixed leading entries in row-major order.
    std::vector<Monomial> prefix;
    // Upper bound on every exponent of every entry.
    std::optional<Exponent> max_exponent;
    // Entries must come from this list when set.
    std::optional<std::vector<Monomial>> pool;

    // Throws std::invalid_argument for n < 1, magic 1, zero budgets, or a
    // prefix longer than the grid.
    void validate() const;
};

enum class EnumerationStatus {
    Complete,        // the search space was exhausted
    NodeBudget,      // stopped by the node budget
    FormBudget,      // stopped after form_budget forms
    Stopped,         // the visitor asked to stop
};

std::string_view status_name(EnumerationStatus s);

struct EnumerationResult {
    EnumerationStatus status = EnumerationStatus::Complete;
    std::uint64_t forms = 0;
    std::uint64_t nodes = 0;
};

// Candidate entries in fill order: divisors of magic (restricted by the
// spec's cap and pool), by total degree descending, then descending order.
std::vector<Monomial> enumeration_candidates(const EnumerationSpec& spec);

// Row-major backtracking fill. Each emitted form has passed validate_form.
// The visitor returns false to stop.
EnumerationResult enumerate_forms(const EnumerationSpec& spec, const std::function<bool(const SquareForm&)>& visit);

struct EnumeratedForms {
    std::vector<SquareForm> forms;
    EnumerationResult result;
};

EnumeratedForms enumerate_forms(const EnumerationSpec& spec);

// Every consistent extension of spec.prefix to `length` cells, in the order
// the enumerator would visit them.
std::vector<std::vector<Monomial>> split_prefixes(const EnumerationSpec& spec, std::size_t length);

// Splits on prefixes of `prefix_length` cells and runs them on `jobs` threads;
// results are merged in prefix order. The node budget applies to each prefix
// separately and the form budget to the merged stream.
EnumeratedForms enumerate_forms_parallel(const EnumerationSpec& spec, std::size_t prefix_length, unsigned jobs);

// ---------------------------------------------------------------------------

// Least form over the 8 grid symmetries and all permutations of variables
// sharing a magic exponent. Forms compare by their row-major entries.
SquareForm canonicalize(const SquareForm& form);

// Relabels variables so the magic exponents are non-increasing, keeping the
// relative order of equal exponents.
SquareForm sort_variables(const SquareForm& form);

bool form_less(const SquareForm& l, const SquareForm& r);

// ---------------------------------------------------------------------------

struct AssignmentSearch {
    std::optional<PrimeAssignment> found;
    std::uint64_t tried = 0;
};

using AssignmentObserver = std::function<void(const PrimeAssignment&)>;

// Injective assignments of primes <= prime_bound, variables in index order,
// primes ascending. Throws std::invalid_argument for prime_bound < 2 or a
// constraint set with an empty allowed set.
AssignmentSearch search_assignment(const SquareForm& form, std::uint64_t prime_bound,
                                   const PrimeConstraintSet& constraints = {},
                                   const AssignmentObserver& observer = {});

// Same search over explicit per-variable candidate lists.
AssignmentSearch search_assignment_over(const SquareForm& form, const std::vector<std::vector<BigInt>>& candidates,
                                        const AssignmentObserver& observer = {});

// ---------------------------------------------------------------------------

struct CacheKey {
    int n = 0;
    PrimeSignature signature;

    friend auto operator<=>(const CacheKey&, const CacheKey&) = default;
};

// One file per key under a directory. Records:
//   n;magic=e1,...,ek;grid=m00,m01,...
class FormCache {
public:
    explicit FormCache(std::filesystem::path dir);

    const std::filesystem::path& dir() const noexcept { return dir_; }
    std::filesystem::path file_for(const CacheKey& key) const;

    // Canonicalizes, merges with what is stored, deduplicates, sorts and
    // rewrites the file atomically. Returns the number of stored forms.
    std::size_t put(const CacheKey& key, const std::vector<SquareForm>& forms);
    // Empty for a missing key. Throws ParseError naming the line on a
    // corrupt record.
    std::vector<SquareForm> get(const CacheKey& key) const;

private:
    std::filesystem::path dir_;
};

std::string format_cache_record(const SquareForm& form);
SquareForm parse_cache_record(std::string_view line, std::size_t line_number = 1);
CacheKey cache_key_of(const SquareForm& form);

// ---------------------------------------------------------------------------

struct PipelineBudgets {
    std::uint64_t node_budget = 100'000'000;
    std::uint64_t form_budget = 100'000;
    PipelineOptions filters{};
};

struct FormOutcome {
    enum class Kind { Unacceptable, Exhausted, Found };

    SquareForm form;
    Kind kind = Kind::Exhausted;
    std::vector<StageResult> stages;
    std::optional<PrimeAssignment> assignment;
    std::uint64_t tried = 0;
};

struct PipelineReport {
    BigInt product;
    std::vector<std::pair<BigInt, Exponent>> factors;
    PrimeSignature signature;
    std::optional<Unacceptable> rejected; // signature-level rejection
    bool from_cache = false;
    std::optional<EnumerationResult> enumeration;
    std::vector<FormOutcome> forms;
    std::optional<ConcreteSquare> square;
};

// Factorizes p, rejects hopeless signatures, loads forms from the cache (or
// enumerates and stores them when the enumeration completes), filters each
// form and searches P's own primes for the survivors. A variable may only
// take primes whose exponent in p equals its magic exponent.
PipelineReport pipeline(const BigInt& p, int n, const PipelineBudgets& budgets, FormCache* cache);

std::string render_pipeline(const PipelineReport& report);

} // namespace sqform
