#include "sqform/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "sqform/board.hpp"
#include "sqform/filters.hpp"
#include "sqform/search.hpp"
#include "sqform/zones.hpp"

namespace sqform {

namespace {

// Input problems detected after argument parsing.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw InputError("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SquareForm load_form(const std::string& path)
{
    SquareForm form = parse_form_csv(read_file(path));
    const FormDiagnosis d = validate_form(form);
    if (!d.ok())
        throw InputError("invalid form: " + d.describe(form.n()));
    return form;
}

std::vector<std::string> split_list(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, sep))
        out.push_back(item);
    return out;
}

Monomial parse_magic(const std::string& text)
{
    std::vector<Exponent> exps;
    for (const auto& item : split_list(text, ',')) {
        if (item.empty() || !std::all_of(item.begin(), item.end(), [](char c) { return c >= '0' && c <= '9'; })
            || item.size() > 6)
            throw InputError("bad magic exponent '" + item + "'");
        exps.push_back(static_cast<Exponent>(std::stoul(item)));
    }
    if (exps.empty() || exps.size() > kMaxVariables)
        throw InputError("magic needs 1 to 26 exponents");
    return Monomial{std::move(exps)};
}

std::string cache_dir_from(const std::string& flag)
{
    if (!flag.empty())
        return flag;
    if (const char* env = std::getenv("SQFORM_CACHE_DIR"); env && *env)
        return env;
    return "sqform-cache";
}

// ---------------------------------------------------------------------------

int cmd_verify(const std::string& path, std::ostream& out)
{
    const ConcreteSquare square = parse_square_csv(read_file(path));
    const MagicReport report = check_magic(square);
    out << render_report(report);
    return report.is_additive && report.is_multiplicative ? kExitSuccess : kExitNegative;
}

struct FilterArgs {
    std::string form;
    std::vector<std::string> only;
    bool csp = false;
    int max_strips = 2;
    int csp_max_strips = 1;
    unsigned csp_max_power = 1;
    std::uint64_t csp_bound = 101;
    std::uint64_t csp_budget = 20'000'000;
    bool all_stages = false;
};

int cmd_filter(const FilterArgs& a, std::ostream& out)
{
    const SquareForm form = load_form(a.form);
    PipelineOptions opts;
    opts.max_strips = a.max_strips;
    opts.csp = a.csp;
    opts.csp_prime_bound = a.csp_bound;
    opts.csp_options.max_strips = a.csp_max_strips;
    opts.csp_options.max_power = a.csp_max_power;
    opts.csp_options.node_budget = a.csp_budget;
    opts.stop_at_unacceptable = !a.all_stages;
    if (!a.only.empty()) {
        opts.signature = opts.prime_power = opts.four_times = opts.min_order = opts.bigger_zone =
            opts.prime_constraints = opts.csp = false;
        for (const auto& name : a.only) {
            const auto lemma = parse_lemma(name);
            if (!lemma || *lemma == Lemma::PrimeValueBound)
                throw InputError("unknown filter '" + name + "'");
            switch (*lemma) {
            case Lemma::SignatureFilter: opts.signature = true; break;
            case Lemma::PrimePowerFilter: opts.prime_power = true; break;
            case Lemma::FourTimesFilter: opts.four_times = true; break;
            case Lemma::MinOrderFilter: opts.min_order = true; break;
            case Lemma::BiggerZoneFilter: opts.bigger_zone = true; break;
            case Lemma::DerivePrimeConstraints: opts.prime_constraints = true; break;
            case Lemma::CongruenceCsp: opts.csp = true; break;
            case Lemma::PrimeValueBound: break;
            }
        }
    }
    if (opts.max_strips < 1 || opts.max_strips > 2 * form.n() + 2)
        throw InputError("--max-strips must lie in [1, " + std::to_string(2 * form.n() + 2) + "]");

    const auto results = run_filters(form, opts);
    bool proven = false;
    bool within_bound = false;
    for (const auto& r : results) {
        for (const auto& line : report_lines(r.verdict))
            out << line << '\n';
        if (const auto* u = as_unacceptable(r.verdict))
            (u->full_proof() ? proven : within_bound) = true;
    }
    if (proven)
        return kExitSuccess;
    return within_bound ? kExitBudget : kExitNegative;
}

struct ZonesArgs {
    int n = 0;
    std::string collections;
    std::string square;
    std::string form;
    int max_strips = 0;
};

int cmd_zones(const ZonesArgs& a, std::ostream& out)
{
    std::optional<ConcreteSquare> square;
    std::optional<SquareForm> form;
    int n = a.n;
    if (!a.square.empty()) {
        square = parse_square_csv(read_file(a.square));
        n = n ? n : square->n();
    }
    if (!a.form.empty()) {
        form = load_form(a.form);
        n = n ? n : form->n();
    }
    if (n < 1)
        throw InputError("side length unknown: pass --n or a file");
    if ((square && square->n() != n) || (form && form->n() != n))
        throw InputError("file side length differs from --n");

    auto print = [&](const ZonePair& zp) {
        out << render(zp) << '\n';
        if (square) {
            out << "  sum X=" << to_string(zone_sum(*square, zp.x)) << " Y=" << to_string(zone_sum(*square, zp.y))
                << '\n';
            out << "  product X=" << to_string(zone_product(*square, zp.x))
                << " Y=" << to_string(zone_product(*square, zp.y)) << '\n';
        }
        if (form)
            out << "  exponents X=" << zone_exponents(*form, zp.x).to_string()
                << " Y=" << zone_exponents(*form, zp.y).to_string() << '\n';
    };

    if (a.max_strips > 0) {
        if (a.max_strips > 2 * n + 2)
            throw InputError("--max-strips must lie in [1, " + std::to_string(2 * n + 2) + "]");
        std::size_t count = 0;
        enumerate_zone_pairs(n, a.max_strips, [&](const ZonePair& zp) {
            print(zp);
            ++count;
            return true;
        });
        out << "pairs " << count << '\n';
        return kExitSuccess;
    }

    const auto sides = split_list(a.collections, '|');
    if (sides.size() != 2)
        throw InputError("--collections expects A|B, e.g. \"R0,R1|C0,C1\"");
    // Build the collections without sorting away repeats so they can be reported.
    auto collection = [&](const std::string& text) {
        std::vector<Strip> strips_in;
        for (const auto& name : split_list(text, ','))
            strips_in.push_back(Strip::parse(name));
        return make_collection(std::move(strips_in), n);
    };
    const auto derived = derive_zone_pair(collection(sides[0]), collection(sides[1]), n);
    if (const auto* rejection = std::get_if<ZoneRejection>(&derived)) {
        out << "rejected: " << describe(*rejection) << '\n';
        return kExitNegative;
    }
    print(std::get<ZonePair>(derived));
    return kExitSuccess;
}

struct ConstrainArgs {
    std::string form;
    std::string magic;
    int n = 0;
};

int cmd_constrain(const ConstrainArgs& a, std::ostream& out)
{
    FilterVerdict verdict = NoInformation{};
    if (!a.form.empty()) {
        verdict = derive_prime_constraints(load_form(a.form));
    } else {
        if (a.magic.empty() || a.n < 1)
            throw InputError("pass a form file, or --magic with --n");
        const Monomial magic = parse_magic(a.magic);
        if (magic.is_one())
            throw InputError("magic needs a positive exponent");
        verdict = product_pattern_constraints(magic, a.n);
    }
    for (const auto& line : report_lines(verdict))
        out << line << '\n';
    return std::holds_alternative<NoInformation>(verdict) ? kExitNegative : kExitSuccess;
}

struct EnumerateArgs {
    int n = 0;
    std::string magic;
    std::optional<std::size_t> vars;
    std::optional<unsigned> max_exp;
    std::string prefix;
    std::string pool_form;
    std::uint64_t node_budget = 100'000'000;
    std::uint64_t form_budget = std::numeric_limits<std::uint64_t>::max();
    unsigned jobs = 1;
    std::size_t split = 0;
    std::string cache_dir;
    bool store_partial = false;
};

int cmd_enumerate(const EnumerateArgs& a, std::ostream& out)
{
    EnumerationSpec spec;
    spec.n = a.n;
    spec.magic = parse_magic(a.magic);
    if (a.vars && *a.vars != split_list(a.magic, ',').size())
        throw InputError("--vars does not match the number of magic exponents");
    spec.node_budget = a.node_budget;
    spec.form_budget = a.form_budget;
    if (a.max_exp)
        spec.max_exponent = *a.max_exp;
    if (!a.prefix.empty())
        for (const auto& m : split_list(a.prefix, ','))
            spec.prefix.push_back(Monomial::parse(m));
    if (!a.pool_form.empty()) {
        const SquareForm pool = parse_form_csv(read_file(a.pool_form));
        spec.pool = pool.grid.cells();
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    EnumeratedForms found;
    if (a.jobs > 1 || a.split > 0) {
        const std::size_t split = a.split ? a.split : static_cast<std::size_t>(a.n);
        found = enumerate_forms_parallel(spec, split, std::max(1u, a.jobs));
    } else {
        found = enumerate_forms(spec);
    }

    std::set<SquareForm, decltype(&form_less)> canonical(&form_less);
    for (const SquareForm& f : found.forms)
        canonical.insert(canonicalize(sort_variables(f)));

    out << "raw forms " << found.forms.size() << '\n';
    out << "canonical forms " << canonical.size() << '\n';
    out << "nodes " << found.result.nodes << '\n';
    out << "status " << status_name(found.result.status) << '\n';

    // A cache file stands for every form of its key, so restricted searches
    // count as partial.
    const bool complete = found.result.status == EnumerationStatus::Complete;
    const bool restricted = spec.max_exponent || !spec.prefix.empty() || spec.pool;
    if (!canonical.empty() && ((complete && !restricted) || a.store_partial)) {
        FormCache cache(cache_dir_from(a.cache_dir));
        const SquareForm& first = *canonical.begin();
        const CacheKey key = cache_key_of(first);
        const std::size_t stored = cache.put(key, {canonical.begin(), canonical.end()});
        out << "stored " << stored << " in " << cache.file_for(key).generic_string() << '\n';
    } else if (complete && restricted && !canonical.empty()) {
        out << "stored 0 (restricted search, use --store-partial)\n";
    } else {
        out << "stored 0\n";
    }
    return complete ? kExitSuccess : kExitBudget;
}

struct SearchArgs {
    std::string form;
    std::uint64_t prime_bound = 13;
    bool constrain = false;
    std::string product;
    int n = 0;
    std::uint64_t node_budget = 100'000'000;
    std::uint64_t form_budget = 100'000;
    std::string cache_dir;
    bool csp = false;
};

int cmd_search(const SearchArgs& a, std::ostream& out)
{
    if (!a.product.empty()) {
        if (!a.form.empty())
            throw InputError("--form and --product are exclusive");
        if (a.n < 1)
            throw InputError("--product needs --n");
        const BigInt p = parse_bigint(a.product);
        PipelineBudgets budgets;
        budgets.node_budget = a.node_budget;
        budgets.form_budget = a.form_budget;
        budgets.filters.csp = a.csp;
        FormCache cache(cache_dir_from(a.cache_dir));
        const PipelineReport report = pipeline(p, a.n, budgets, &cache);
        out << render_pipeline(report);
        if (report.square)
            return kExitSuccess;
        if (report.enumeration && report.enumeration->status != EnumerationStatus::Complete)
            return kExitBudget;
        return kExitNegative;
    }

    if (a.form.empty())
        throw InputError("pass --form or --product");
    const SquareForm form = load_form(a.form);
    PrimeConstraintSet constraints;
    if (a.constrain) {
        const FilterVerdict v = derive_prime_constraints(form);
        if (const auto* c = std::get_if<Constrained>(&v))
            constraints = c->constraints;
        else if (is_unacceptable(v)) {
            out << "exhausted(0)\n";
            return kExitNegative;
        }
    }
    const AssignmentSearch result = search_assignment(form, a.prime_bound, constraints);
    if (result.found) {
        out << "found " << result.found->to_string() << '\n';
        out << format_square_csv(evaluate_form(form, *result.found));
        return kExitSuccess;
    }
    out << "exhausted(" << result.tried << ")\n";
    return kExitNegative;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Additive-multiplicative magic square toolkit", "sqform"};
    app.require_subcommand(1);

    std::string verify_file;
    auto* verify = app.add_subcommand("verify", "Check a square CSV for common strip sums and products");
    verify->add_option("square", verify_file, "Square CSV file")->required();

    FilterArgs fa;
    auto* filter = app.add_subcommand("filter", "Run unacceptability filters on a form CSV");
    filter->add_option("form", fa.form, "Form CSV file")->required();
    filter->add_option("--only", fa.only, "Filters to run, by name")->delimiter(',');
    filter->add_flag("--csp", fa.csp, "Enable the congruence CSP stage");
    filter->add_option("--max-strips", fa.max_strips, "Largest strip collection for zone filters");
    filter->add_option("--csp-max-strips", fa.csp_max_strips, "Largest strip collection for congruences");
    filter->add_option("--csp-max-power", fa.csp_max_power, "Largest modulus power for congruences");
    filter->add_option("--csp-bound", fa.csp_bound, "Candidate primes for unconstrained variables");
    filter->add_option("--csp-budget", fa.csp_budget, "Residue search nodes per candidate");
    filter->add_flag("--all-stages", fa.all_stages, "Keep going after an unacceptable verdict");

    ZonesArgs za;
    auto* zones = app.add_subcommand("zones", "Derive pairwise zones from two strip collections");
    zones->add_option("--n", za.n, "Side length");
    zones->add_option("--collections", za.collections, "Collections as A|B, e.g. R0,R1|C0,C1");
    zones->add_option("--square", za.square, "Square CSV for zone sums and products");
    zones->add_option("--form", za.form, "Form CSV for zone exponent sums");
    zones->add_option("--all", za.max_strips, "List every zone pair up to this collection size");

    ConstrainArgs ca;
    auto* constrain = app.add_subcommand("constrain", "Derive prime-value constraints");
    constrain->add_option("form", ca.form, "Form CSV file");
    constrain->add_option("--magic", ca.magic, "Magic exponents, e.g. 4,4");
    constrain->add_option("--n", ca.n, "Side length");

    EnumerateArgs ea;
    auto* enumerate = app.add_subcommand("enumerate", "Enumerate square forms and store them in the cache");
    enumerate->add_option("--n", ea.n, "Side length")->required();
    enumerate->add_option("--magic", ea.magic, "Magic exponents, e.g. 8,5,3,2,1,1")->required();
    enumerate->add_option("--vars", ea.vars, "Number of variables (must match --magic)");
    enumerate->add_option("--max-exp", ea.max_exp, "Largest exponent allowed in any entry");
    enumerate->add_option("--prefix", ea.prefix, "Fixed leading entries, row-major, comma separated");
    enumerate->add_option("--pool-form", ea.pool_form, "Restrict entries to those of this form CSV");
    enumerate->add_option("--node-budget", ea.node_budget, "Search node budget");
    enumerate->add_option("--form-budget", ea.form_budget, "Stop after this many forms");
    enumerate->add_option("--jobs", ea.jobs, "Worker threads");
    enumerate->add_option("--split", ea.split, "Prefix length for work splitting");
    enumerate->add_option("--cache-dir", ea.cache_dir, "Cache directory (default $SQFORM_CACHE_DIR)");
    enumerate->add_flag("--store-partial", ea.store_partial, "Store forms even when a budget ran out");

    SearchArgs sa;
    auto* search = app.add_subcommand("search", "Search prime assignments for a form or a magic product");
    search->add_option("--form", sa.form, "Form CSV file");
    search->add_option("--prime-bound", sa.prime_bound, "Largest prime to assign");
    search->add_flag("--constrain", sa.constrain, "Apply derived prime constraints");
    search->add_option("--product", sa.product, "Magic product to run the full pipeline on");
    search->add_option("--n", sa.n, "Side length for --product");
    search->add_option("--node-budget", sa.node_budget, "Enumeration node budget");
    search->add_option("--form-budget", sa.form_budget, "Enumeration form budget");
    search->add_option("--cache-dir", sa.cache_dir, "Cache directory (default $SQFORM_CACHE_DIR)");
    search->add_flag("--csp", sa.csp, "Enable the congruence CSP stage");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitSuccess : kExitInputError;
    }

    try {
        if (verify->parsed())
            return cmd_verify(verify_file, out);
        if (filter->parsed())
            return cmd_filter(fa, out);
        if (zones->parsed())
            return cmd_zones(za, out);
        if (constrain->parsed())
            return cmd_constrain(ca, out);
        if (enumerate->parsed())
            return cmd_enumerate(ea, out);
        if (search->parsed())
            return cmd_search(sa, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInputError;
    }
    return kExitInputError;
}

} // namespace sqform
