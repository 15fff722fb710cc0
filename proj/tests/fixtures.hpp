#pragma once

// Figures loaded through the library, shared by the test suites.

#include "oracles.hpp"
#include "sqform/board.hpp"

namespace fixture {

inline sqform::SquareForm fig2()
{
    return sqform::parse_form_csv(oracle::read_file(oracle::data_path("fig2.form")));
}

inline sqform::ConcreteSquare fig3()
{
    return sqform::parse_square_csv(oracle::read_file(oracle::data_path("fig3.csv")));
}

// Figure 3 rewritten over its own primes 2, 3, 5, 7, 11 as variables a..e.
inline sqform::SquareForm fig3_as_form()
{
    using namespace sqform;
    const std::vector<std::uint64_t> primes{2, 3, 5, 7, 11};
    const ConcreteSquare square = fig3();
    std::vector<Monomial> cells;
    for (const BigInt& v : square.grid().cells()) {
        std::vector<Exponent> e(primes.size(), 0);
        for (const auto& [p, k] : oracle::factor(static_cast<std::uint64_t>(v))) {
            const auto at = std::find(primes.begin(), primes.end(), p);
            if (at == primes.end())
                throw std::logic_error("unexpected prime in figure 3");
            e[static_cast<std::size_t>(at - primes.begin())] = k;
        }
        cells.emplace_back(e);
    }
    SquareForm f = SquareForm::from_entries(7, std::move(cells));
    f.var_count = primes.size();
    return f;
}

inline sqform::SquareForm lo_shu_form()
{
    std::vector<sqform::Monomial> cells;
    for (const char* t : {"a^2", "a^7", "a^6", "a^9", "a^5", "a", "a^4", "a^3", "a^8"})
        cells.push_back(sqform::Monomial::parse(t));
    return sqform::SquareForm::from_entries(3, std::move(cells));
}

} // namespace fixture
