#include <doctest.h>

#include <random>
#include <set>

#include "llprobe/primes.hpp"

using namespace llprobe;

namespace {

// Plain Eratosthenes sieve, kept separate from the library's.
std::vector<bool> composite_table(std::size_t limit) {
    std::vector<bool> composite(limit + 1, false);
    composite[0] = true;
    composite[1] = true;
    for (std::size_t i = 2; i * i <= limit; ++i) {
        if (composite[i]) continue;
        for (std::size_t j = i * i; j <= limit; j += i) composite[j] = true;
    }
    return composite;
}

bool trial_division(std::uint64_t n) {
    if (n < 2) return false;
    for (std::uint64_t d = 2; d * d <= n; ++d) {
        if (n % d == 0) return false;
    }
    return true;
}

std::vector<std::uint64_t> as_vector(std::span<const std::uint64_t> values) { return {values.begin(), values.end()}; }

}  // namespace

TEST_CASE("primality agrees with a sieve") {
    const auto composite = composite_table(200000);
    for (std::uint64_t n = 0; n <= 200000; ++n) CHECK(is_prime(n) == !composite[n]);
}

TEST_CASE("primality on large inputs") {
    CHECK(is_prime(2305843009213693951ULL));  // 2^61 - 1
    CHECK_FALSE(is_prime(2305843009213693953ULL));
    CHECK(is_prime(18446744073709551557ULL));  // largest 64-bit prime
    CHECK_FALSE(is_prime(3215031751ULL));      // strong pseudoprime to bases 2, 3, 5, 7
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const std::uint64_t n = rng() % 1000000000000ULL;
        CHECK(is_prime(n) == trial_division(n));
    }
    CHECK(next_prime(13) == 17);
    CHECK(next_prime(1) == 2);
    CHECK(first_primes(5) == std::vector<std::uint64_t>{2, 3, 5, 7, 11});
}

TEST_CASE("twin prime tables") {
    CHECK(as_vector(twin_primes(1).primes()) == std::vector<std::uint64_t>{5});
    CHECK(as_vector(twin_primes(3).primes()) == std::vector<std::uint64_t>{5, 11, 17});
    CHECK(as_vector(twin_primes(10).primes()) == std::vector<std::uint64_t>{5, 11, 17, 29, 41, 59, 71, 101, 107, 137});
    CHECK_THROWS_AS(twin_primes(0), std::invalid_argument);
}

TEST_CASE("twin primes match an independent sieve up to 1000 entries") {
    const auto table = twin_primes(1000);
    const auto composite = composite_table(table.primes().back() + 2);
    std::vector<std::uint64_t> expected;
    for (std::uint64_t p = 5; expected.size() < 1000; ++p) {
        if (!composite[p] && !composite[p + 2]) expected.push_back(p);
    }
    CHECK(as_vector(table.primes()) == expected);
    for (auto p : table.primes()) {
        CHECK(trial_division(p));
        CHECK(trial_division(p + 2));
    }
    // No lower member is also some upper member.
    std::set<std::uint64_t> upper;
    for (auto p : table.primes()) upper.insert(p + 2);
    for (auto p : table.primes()) CHECK(upper.count(p) == 0);
}

TEST_CASE("twin index is 1-based") {
    const auto table = twin_primes(10);
    CHECK(twin_index(5, table) == 1);
    CHECK(twin_index(17, table) == 3);
    CHECK(twin_index(137, table) == 10);
    CHECK_THROWS_AS(twin_index(7, table), std::out_of_range);
    CHECK_THROWS_AS(twin_index(139, table), std::out_of_range);
    CHECK(table.at(1) == 5);
    CHECK_THROWS_AS(table.at(0), std::out_of_range);
    CHECK_THROWS_AS(table.at(11), std::out_of_range);
}

TEST_CASE("factor_over") {
    const std::vector<std::uint64_t> base{2, 5, 11, 17};
    auto f = factor_over(BigInt(170), base);
    CHECK(f.exponents == std::map<std::uint64_t, unsigned long>{{2, 1}, {5, 1}, {17, 1}});
    CHECK(f.leftover == 1);

    f = factor_over(BigInt(1), base);
    CHECK(f.exponents.empty());
    CHECK(f.leftover == 1);

    const std::vector<std::uint64_t> two{2};
    f = factor_over(BigInt(32), two);
    CHECK(f.exponent_of(2) == 5);
    CHECK(f.leftover == 1);

    CHECK_THROWS_AS(factor_over(BigInt(0), base), std::invalid_argument);
}

TEST_CASE("factorizations reconstruct their input") {
    std::mt19937_64 rng(9);
    const auto base = first_primes(10);
    for (int trial = 0; trial < 500; ++trial) {
        BigInt q = BigInt(static_cast<unsigned long>(rng() % 1000000 + 1));
        q *= BigInt(static_cast<unsigned long>(rng() % 1000 + 1));
        const auto f = factor_over(q, base);
        BigInt rebuilt = f.leftover;
        for (const auto& [p, e] : f.exponents) {
            BigInt power;
            mpz_ui_pow_ui(power.get_mpz_t(), p, e);
            rebuilt *= power;
        }
        CHECK(rebuilt == q);
        for (auto p : base) CHECK(mpz_divisible_ui_p(f.leftover.get_mpz_t(), p) == 0);
    }
}
