#include "sqform/algebra.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <limits>
#include <set>

namespace sqform {

std::string to_string(const BigInt& value)
{
    return value.str();
}

BigInt parse_bigint(std::string_view text)
{
    if (text.empty())
        throw ParseError("empty integer");
    for (char c : text)
        if (c < '0' || c > '9')
            throw ParseError("not a decimal integer: '" + std::string(text) + "'");
    return BigInt(std::string(text));
}

ParseError::ParseError(const std::string& what, std::size_t line, std::size_t column)
    : std::runtime_error(line == 0 ? what
                                   : "line " + std::to_string(line) + ", column "
                                         + std::to_string(column) + ": " + what),
      line_(line), column_(column)
{
}

VarId VarId::from_letter(char c)
{
    if (c < 'a' || c > 'z')
        throw ParseError(std::string("variable must be a lowercase letter, got '") + c + "'");
    return VarId(static_cast<std::size_t>(c - 'a'));
}

// ---------------------------------------------------------------------------
// Monomial

Monomial::Monomial(std::vector<Exponent> exponents) : exps_(std::move(exponents))
{
    if (exps_.size() > kMaxVariables) {
        for (std::size_t i = kMaxVariables; i < exps_.size(); ++i)
            if (exps_[i] != 0)
                throw std::out_of_range("monomial uses more than 26 variables");
    }
    normalize();
}

Monomial Monomial::power(VarId v, Exponent e)
{
    std::vector<Exponent> exps(v.index() + 1, 0);
    exps[v.index()] = e;
    return Monomial{std::move(exps)};
}

void Monomial::normalize()
{
    while (!exps_.empty() && exps_.back() == 0)
        exps_.pop_back();
}

std::vector<Exponent> Monomial::exponents(std::size_t width) const
{
    std::vector<Exponent> out(std::max(width, exps_.size()), 0);
    std::copy(exps_.begin(), exps_.end(), out.begin());
    return out;
}

std::uint64_t Monomial::degree() const noexcept
{
    std::uint64_t d = 0;
    for (auto e : exps_)
        d += e;
    return d;
}

std::size_t Monomial::support_size() const noexcept
{
    return static_cast<std::size_t>(std::count_if(exps_.begin(), exps_.end(), [](Exponent e) { return e > 0; }));
}

bool Monomial::divides(const Monomial& other) const noexcept
{
    if (exps_.size() > other.exps_.size())
        return false;
    for (std::size_t i = 0; i < exps_.size(); ++i)
        if (exps_[i] > other.exps_[i])
            return false;
    return true;
}

bool Monomial::divides_core_of(const Monomial& other) const noexcept
{
    if (exps_.size() > other.exps_.size())
        return false;
    for (std::size_t i = 0; i < other.exps_.size(); ++i) {
        const Exponent mine = exponent(i);
        const Exponent theirs = other.exps_[i];
        if (theirs == 0 ? mine != 0 : mine >= theirs)
            return false;
    }
    return true;
}

Monomial Monomial::operator*(const Monomial& other) const
{
    Monomial out = *this;
    out *= other;
    return out;
}

Monomial& Monomial::operator*=(const Monomial& other)
{
    if (other.exps_.size() > exps_.size())
        exps_.resize(other.exps_.size(), 0);
    for (std::size_t i = 0; i < other.exps_.size(); ++i)
        exps_[i] += other.exps_[i];
    normalize();
    return *this;
}

Monomial Monomial::operator/(const Monomial& divisor) const
{
    if (!divisor.divides(*this))
        throw std::domain_error(divisor.to_string() + " does not divide " + to_string());
    std::vector<Exponent> out = exps_;
    for (std::size_t i = 0; i < divisor.exps_.size(); ++i)
        out[i] -= divisor.exps_[i];
    return Monomial{std::move(out)};
}

Monomial Monomial::with_exponent(VarId v, Exponent e) const
{
    std::vector<Exponent> out = exponents(v.index() + 1);
    out[v.index()] = e;
    return Monomial{std::move(out)};
}

Monomial Monomial::radical() const
{
    std::vector<Exponent> out(exps_.size());
    for (std::size_t i = 0; i < exps_.size(); ++i)
        out[i] = exps_[i] > 0 ? 1 : 0;
    return Monomial{std::move(out)};
}

Monomial Monomial::relabeled(std::span<const std::size_t> new_index_of) const
{
    std::vector<Exponent> out(kMaxVariables, 0);
    for (std::size_t i = 0; i < exps_.size(); ++i) {
        if (exps_[i] == 0)
            continue;
        if (i >= new_index_of.size())
            throw std::out_of_range("relabeling does not cover variable " + VarId(i).name());
        out.at(new_index_of[i]) = exps_[i];
    }
    return Monomial{std::move(out)};
}

BigInt Monomial::divisor_count() const
{
    BigInt count = 1;
    for (auto e : exps_)
        count *= BigInt(e) + 1;
    return count;
}

std::string Monomial::to_string() const
{
    if (exps_.empty())
        return "1";
    std::string out;
    for (std::size_t i = 0; i < exps_.size(); ++i) {
        if (exps_[i] == 0)
            continue;
        if (!out.empty())
            out += '*';
        out += VarId(i).letter();
        if (exps_[i] != 1) {
            out += '^';
            out += std::to_string(exps_[i]);
        }
    }
    return out;
}

Monomial Monomial::parse(std::string_view text)
{
    if (text == "1")
        return Monomial{};
    if (text.empty())
        throw ParseError("empty monomial");

    std::vector<Exponent> exps;
    std::vector<bool> seen;
    std::size_t pos = 0;
    while (true) {
        if (pos >= text.size())
            throw ParseError("monomial '" + std::string(text) + "' ends with '*'");
        const VarId v = VarId::from_letter(text[pos]);
        ++pos;
        Exponent e = 1;
        if (pos < text.size() && text[pos] == '^') {
            ++pos;
            const char* first = text.data() + pos;
            const char* last = text.data() + text.size();
            const auto [ptr, ec] = std::from_chars(first, last, e);
            if (ec != std::errc{} || ptr == first)
                throw ParseError("bad exponent in monomial '" + std::string(text) + "'");
            if (e == 0)
                throw ParseError("zero exponent in monomial '" + std::string(text) + "'");
            pos += static_cast<std::size_t>(ptr - first);
        }
        if (exps.size() <= v.index()) {
            exps.resize(v.index() + 1, 0);
            seen.resize(v.index() + 1, false);
        }
        if (seen[v.index()])
            throw ParseError("repeated variable '" + v.name() + "' in monomial '" + std::string(text) + "'");
        seen[v.index()] = true;
        exps[v.index()] = e;

        if (pos == text.size())
            break;
        if (text[pos] != '*')
            throw ParseError("unexpected '" + std::string(1, text[pos]) + "' in monomial '" + std::string(text) + "'");
        ++pos;
    }
    return Monomial{std::move(exps)};
}

std::size_t MonomialHash::operator()(const Monomial& m) const noexcept
{
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (auto e : m.exponents())
        h = (h ^ e) * 0x100000001b3ULL;
    return h;
}

// ---------------------------------------------------------------------------
// Signatures

PrimeSignature::PrimeSignature(std::vector<Exponent> exponents) : exps_(std::move(exponents))
{
    std::erase(exps_, Exponent{0});
    std::sort(exps_.begin(), exps_.end(), std::greater<>{});
}

std::string PrimeSignature::to_string() const
{
    std::string out = "{";
    for (std::size_t i = 0; i < exps_.size(); ++i) {
        if (i)
            out += ',';
        out += std::to_string(exps_[i]);
    }
    return out + "}";
}

PrimeSignature signature_of_monomial(const Monomial& m)
{
    return PrimeSignature{m.exponents()};
}

// ---------------------------------------------------------------------------
// Primes

namespace {

constexpr std::uint32_t kWitnessBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};

bool strong_probable_prime(const BigInt& n, const BigInt& base)
{
    BigInt d = n - 1;
    unsigned s = 0;
    while (!boost::multiprecision::bit_test(d, 0)) {
        d >>= 1;
        ++s;
    }
    BigInt x = boost::multiprecision::powm(base, d, n);
    if (x == 1 || x == n - 1)
        return true;
    for (unsigned r = 1; r < s; ++r) {
        x = (x * x) % n;
        if (x == n - 1)
            return true;
    }
    return false;
}

} // namespace

bool is_prime(const BigInt& n)
{
    if (n < 2)
        return false;
    for (auto p : kWitnessBases) {
        if (n == p)
            return true;
        if (n % p == 0)
            return false;
    }
    if (n < 73 * 73)
        return true;
    for (auto p : kWitnessBases)
        if (!strong_probable_prime(n, BigInt(p)))
            return false;
    return true;
}

std::vector<std::uint64_t> primes_up_to(std::uint64_t bound)
{
    std::vector<std::uint64_t> primes;
    if (bound < 2)
        return primes;
    std::vector<bool> composite(bound + 1, false);
    for (std::uint64_t i = 2; i <= bound; ++i) {
        if (composite[i])
            continue;
        primes.push_back(i);
        for (std::uint64_t j = i * i; j <= bound; j += i)
            composite[j] = true;
    }
    return primes;
}

PrimeAssignment::PrimeAssignment(std::vector<BigInt> primes) : primes_(std::move(primes))
{
    std::set<BigInt> seen;
    for (std::size_t i = 0; i < primes_.size(); ++i) {
        if (!is_prime(primes_[i]))
            throw std::invalid_argument("value " + sqform::to_string(primes_[i]) + " assigned to "
                                        + VarId(i).name() + " is not prime");
        if (!seen.insert(primes_[i]).second)
            throw std::invalid_argument("prime " + sqform::to_string(primes_[i])
                                        + " assigned to more than one variable");
    }
}

PrimeAssignment::PrimeAssignment(std::initializer_list<std::uint64_t> primes)
    : PrimeAssignment(std::vector<BigInt>(primes.begin(), primes.end()))
{
}

const BigInt& PrimeAssignment::at(VarId v) const
{
    if (v.index() >= primes_.size())
        throw std::out_of_range("no prime assigned to variable " + v.name());
    return primes_[v.index()];
}

std::string PrimeAssignment::to_string() const
{
    std::string out;
    for (std::size_t i = 0; i < primes_.size(); ++i) {
        if (i)
            out += ' ';
        out += VarId(i).name() + "=" + sqform::to_string(primes_[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Factorization

namespace {

unsigned __int128 to_u128(const BigInt& n)
{
    const BigInt mask = (BigInt(1) << 64) - 1;
    const auto lo = static_cast<std::uint64_t>(n & mask);
    const auto hi = static_cast<std::uint64_t>(n >> 64);
    return (static_cast<unsigned __int128>(hi) << 64) | lo;
}

BigInt from_u128(unsigned __int128 v)
{
    return (BigInt(static_cast<std::uint64_t>(v >> 64)) << 64) | BigInt(static_cast<std::uint64_t>(v));
}

BigInt pollard_brent(const BigInt& n)
{
    if (!boost::multiprecision::bit_test(n, 0))
        return 2;
    for (BigInt c = 1;; ++c) {
        BigInt y = 2, x, ys, q = 1, g = 1;
        std::uint64_t r = 1;
        constexpr std::uint64_t m = 128;
        auto step = [&](const BigInt& v) { return (v * v + c) % n; };
        do {
            x = y;
            for (std::uint64_t i = 0; i < r; ++i)
                y = step(y);
            std::uint64_t k = 0;
            do {
                ys = y;
                for (std::uint64_t i = 0; i < std::min(m, r - k); ++i) {
                    y = step(y);
                    q = (q * (x > y ? x - y : y - x)) % n;
                }
                g = boost::multiprecision::gcd(q, n);
                k += m;
            } while (k < r && g == 1);
            r *= 2;
        } while (g == 1);
        if (g == n) {
            do {
                ys = step(ys);
                g = boost::multiprecision::gcd(x > ys ? x - ys : ys - x, n);
            } while (g == 1);
        }
        if (g != n)
            return g;
    }
}

void split_large(const BigInt& n, std::vector<BigInt>& out)
{
    if (n == 1)
        return;
    if (is_prime(n)) {
        out.push_back(n);
        return;
    }
    const BigInt d = pollard_brent(n);
    split_large(d, out);
    split_large(n / d, out);
}

} // namespace

std::vector<std::pair<BigInt, Exponent>> factorize(const BigInt& n)
{
    if (n < 1)
        throw std::invalid_argument("factorize requires a positive integer, got " + to_string(n));
    if (n > (BigInt(1) << kFactorizeMaxBits))
        throw std::domain_error("factorize input exceeds 2^96: " + to_string(n));

    std::vector<std::pair<BigInt, Exponent>> factors;
    unsigned __int128 rest = to_u128(n);
    auto strip = [&](std::uint64_t d) {
        Exponent e = 0;
        while (rest % d == 0) {
            rest /= d;
            ++e;
        }
        if (e > 0)
            factors.emplace_back(BigInt(d), e);
    };
    constexpr std::uint64_t kTrialLimit = 1u << 20;
    strip(2);
    std::uint64_t d = 3;
    for (; d <= kTrialLimit && static_cast<unsigned __int128>(d) * d <= rest; d += 2)
        strip(d);
    if (rest == 1)
        return factors;
    if (static_cast<unsigned __int128>(d) * d > rest) {
        factors.emplace_back(from_u128(rest), 1);
        return factors;
    }

    std::vector<BigInt> large;
    split_large(from_u128(rest), large);
    std::sort(large.begin(), large.end());
    for (const auto& p : large) {
        if (!factors.empty() && factors.back().first == p)
            ++factors.back().second;
        else
            factors.emplace_back(p, 1);
    }
    return factors;
}

PrimeSignature signature_of(const BigInt& n)
{
    std::vector<Exponent> exps;
    for (const auto& [p, e] : factorize(n))
        exps.push_back(e);
    return PrimeSignature{std::move(exps)};
}

// ---------------------------------------------------------------------------
// Evaluation

BigInt evaluate(const Monomial& m, const PrimeAssignment& assignment)
{
    BigInt value = 1;
    for (std::size_t i = 0; i < m.width(); ++i) {
        const Exponent e = m.exponent(i);
        if (e > 0)
            value *= boost::multiprecision::pow(assignment.at(VarId(i)), e);
    }
    return value;
}

BigInt sigma(const Monomial& m, const PrimeAssignment& assignment)
{
    BigInt value = 1;
    for (std::size_t i = 0; i < m.width(); ++i) {
        const Exponent e = m.exponent(i);
        if (e == 0)
            continue;
        const BigInt& p = assignment.at(VarId(i));
        value *= (boost::multiprecision::pow(p, e + 1) - 1) / (p - 1);
    }
    return value;
}

std::pair<BigInt, BigInt> sigma_lemma_gap(const Monomial& m, const PrimeAssignment& assignment)
{
    std::vector<Exponent> lowered = m.exponents();
    for (auto& e : lowered)
        if (e > 0)
            --e;
    return {sigma(Monomial{std::move(lowered)}, assignment), evaluate(m, assignment)};
}

} // namespace sqform
