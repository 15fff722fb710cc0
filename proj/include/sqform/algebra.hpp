#pragma once

// Exact arithmetic over monomials in prime-placeholder variables.
//
// A Monomial is a dense exponent vector: position i holds the exponent of
// variable i, displayed as the i-th lowercase letter. Entries of a square
// form and its magic product are both monomials. Everything that turns a
// monomial back into a number goes through a PrimeAssignment and uses
// arbitrary-precision integers.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace sqform {

using BigInt = boost::multiprecision::cpp_int;

std::string to_string(const BigInt& value);
BigInt parse_bigint(std::string_view text);

// Raised for malformed text input. Line and column are one-based; zero means
// "not applicable".
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0);
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

inline constexpr std::size_t kMaxVariables = 26;

class VarId {
public:
    constexpr VarId() = default;
    constexpr explicit VarId(std::size_t index) : index_(index)
    {
        if (index >= kMaxVariables)
            throw std::out_of_range("variable index exceeds the a..z display alphabet");
    }

    constexpr std::size_t index() const noexcept { return index_; }
    char letter() const noexcept { return static_cast<char>('a' + index_); }
    std::string name() const { return std::string(1, letter()); }

    static VarId from_letter(char c);

    friend constexpr auto operator<=>(VarId, VarId) = default;

private:
    std::size_t index_ = 0;
};

using Exponent = std::uint32_t;

class Monomial {
public:
    Monomial() = default;
    explicit Monomial(std::vector<Exponent> exponents);

    static Monomial one() { return Monomial{}; }
    static Monomial power(VarId v, Exponent e);

    // Exponent of variable i; zero beyond the stored width.
    Exponent exponent(std::size_t i) const noexcept
    {
        return i < exps_.size() ? exps_[i] : 0;
    }
    Exponent exponent(VarId v) const noexcept { return exponent(v.index()); }

    // Number of stored coordinates; trailing zeros are never stored.
    std::size_t width() const noexcept { return exps_.size(); }
    const std::vector<Exponent>& exponents() const noexcept { return exps_; }
    std::vector<Exponent> exponents(std::size_t width) const;

    bool is_one() const noexcept { return exps_.empty(); }
    std::uint64_t degree() const noexcept;
    std::size_t support_size() const noexcept;

    // this | other, componentwise.
    bool divides(const Monomial& other) const noexcept;
    // this | other / rad(other): every variable of `other` appears in this
    // with a strictly smaller exponent.
    bool divides_core_of(const Monomial& other) const noexcept;

    Monomial operator*(const Monomial& other) const;
    Monomial& operator*=(const Monomial& other);
    // Exact quotient; throws std::domain_error unless divisor | *this.
    Monomial operator/(const Monomial& divisor) const;

    Monomial with_exponent(VarId v, Exponent e) const;
    Monomial without(VarId v) const { return with_exponent(v, 0); }
    Monomial radical() const;
    Monomial relabeled(std::span<const std::size_t> new_index_of) const;

    // Number of monomials dividing this one: prod (e_i + 1).
    BigInt divisor_count() const;

    std::string to_string() const;
    static Monomial parse(std::string_view text);

    friend bool operator==(const Monomial&, const Monomial&) = default;
    friend std::strong_ordering operator<=>(const Monomial& lhs, const Monomial& rhs)
    {
        return lhs.exps_ <=> rhs.exps_;
    }

private:
    void normalize();
    std::vector<Exponent> exps_;
};

struct MonomialHash {
    std::size_t operator()(const Monomial& m) const noexcept;
};

// Multiset of exponents of an integer's factorization, sorted descending.
class PrimeSignature {
public:
    PrimeSignature() = default;
    explicit PrimeSignature(std::vector<Exponent> exponents);

    const std::vector<Exponent>& exponents() const noexcept { return exps_; }
    bool empty() const noexcept { return exps_.empty(); }
    std::size_t size() const noexcept { return exps_.size(); }

    // Magic exponent vector a^e1 b^e2 ... in descending order.
    Monomial as_monomial() const { return Monomial{exps_}; }
    std::string to_string() const;

    friend auto operator<=>(const PrimeSignature&, const PrimeSignature&) = default;

private:
    std::vector<Exponent> exps_;
};

PrimeSignature signature_of_monomial(const Monomial& m);

// Deterministic primality: trial division by small primes, then strong
// probable-prime tests to the bases 2..71. Exact for n < 3.3e24, which covers
// every value this library produces on its own.
bool is_prime(const BigInt& n);
std::vector<std::uint64_t> primes_up_to(std::uint64_t bound);

// Values assigned to variables 0..size()-1. Every value is prime and all are
// pairwise distinct; the constructor throws std::invalid_argument otherwise.
class PrimeAssignment {
public:
    PrimeAssignment() = default;
    explicit PrimeAssignment(std::vector<BigInt> primes);
    PrimeAssignment(std::initializer_list<std::uint64_t> primes);

    std::size_t size() const noexcept { return primes_.size(); }
    bool covers(const Monomial& m) const noexcept { return m.width() <= primes_.size(); }
    // Throws std::out_of_range for an unassigned variable.
    const BigInt& at(VarId v) const;
    const std::vector<BigInt>& values() const noexcept { return primes_; }

    std::string to_string() const;

private:
    std::vector<BigInt> primes_;
};

// Inputs above 2^96 are rejected; see factorize().
inline constexpr unsigned kFactorizeMaxBits = 96;

// Prime factorization with strictly increasing primes. Throws
// std::invalid_argument for n < 1 and std::domain_error for n > 2^96.
std::vector<std::pair<BigInt, Exponent>> factorize(const BigInt& n);
PrimeSignature signature_of(const BigInt& n);

BigInt evaluate(const Monomial& m, const PrimeAssignment& assignment);

// Closed-form divisor sum: prod (p^(e+1) - 1) / (p - 1).
BigInt sigma(const Monomial& m, const PrimeAssignment& assignment);

// (sigma of m with every positive exponent lowered by one, value of m).
// The first component is strictly smaller whenever m is not 1.
std::pair<BigInt, BigInt> sigma_lemma_gap(const Monomial& m, const PrimeAssignment& assignment);

} // namespace sqform
