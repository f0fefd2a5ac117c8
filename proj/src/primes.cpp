#include "llprobe/primes.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace llprobe {

namespace {

using u128 = unsigned __int128;

std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
    return static_cast<std::uint64_t>(static_cast<u128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
    std::uint64_t result = 1;
    base %= m;
    while (exp > 0) {
        if (exp & 1) result = mul_mod(result, base, m);
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    return result;
}

}  // namespace

bool is_prime(std::uint64_t n) {
    if (n < 2) return false;
    // These witnesses are sufficient for all n < 3.3 * 10^24.
    constexpr std::uint64_t witnesses[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (auto p : witnesses) {
        if (n % p == 0) return n == p;
    }
    std::uint64_t d = n - 1;
    int s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    for (auto a : witnesses) {
        std::uint64_t x = pow_mod(a, d, n);
        if (x == 1 || x == n - 1) continue;
        bool composite = true;
        for (int r = 1; r < s; ++r) {
            x = mul_mod(x, x, n);
            if (x == n - 1) {
                composite = false;
                break;
            }
        }
        if (composite) return false;
    }
    return true;
}

std::uint64_t next_prime(std::uint64_t n) {
    std::uint64_t candidate = n + 1;
    while (!is_prime(candidate)) ++candidate;
    return candidate;
}

std::vector<std::uint64_t> primes_up_to(std::uint64_t limit) {
    std::vector<std::uint64_t> out;
    if (limit < 2) return out;
    std::vector<bool> composite(limit + 1, false);
    for (std::uint64_t i = 2; i <= limit; ++i) {
        if (composite[i]) continue;
        out.push_back(i);
        for (std::uint64_t j = i * i; j <= limit; j += i) composite[j] = true;
    }
    return out;
}

std::vector<std::uint64_t> first_primes(std::size_t count) {
    if (count == 0) return {};
    // p_k < k (ln k + ln ln k) for k >= 6.
    const double k = static_cast<double>(std::max<std::size_t>(count, 6));
    auto limit = static_cast<std::uint64_t>(k * (std::log(k) + std::log(std::log(k)))) + 1;
    auto primes = primes_up_to(limit);
    primes.resize(count);
    return primes;
}

TwinPrimeTable::TwinPrimeTable(std::vector<std::uint64_t> lower_members) : primes_(std::move(lower_members)) {
    for (std::size_t i = 0; i < primes_.size(); ++i) {
        if (primes_[i] < 5 || (i > 0 && primes_[i] <= primes_[i - 1])) {
            throw std::invalid_argument("twin prime table must ascend from 5");
        }
    }
}

std::uint64_t TwinPrimeTable::at(std::size_t position) const {
    if (position == 0 || position > primes_.size()) throw std::out_of_range("twin prime position out of range");
    return primes_[position - 1];
}

std::size_t TwinPrimeTable::position(std::uint64_t p) const {
    const auto it = std::lower_bound(primes_.begin(), primes_.end(), p);
    if (it == primes_.end() || *it != p) {
        throw std::out_of_range(std::to_string(p) + " is not a lower twin prime in the table");
    }
    return static_cast<std::size_t>(it - primes_.begin()) + 1;
}

TwinPrimeTable twin_primes(std::size_t count) {
    if (count == 0) throw std::invalid_argument("twin prime count must be at least 1");
    std::uint64_t limit = 1024;
    for (;;) {
        const auto primes = primes_up_to(limit + 2);
        std::vector<std::uint64_t> lower;
        for (std::size_t i = 0; i + 1 < primes.size() && lower.size() < count; ++i) {
            if (primes[i] >= 5 && primes[i + 1] == primes[i] + 2) lower.push_back(primes[i]);
        }
        if (lower.size() == count) return TwinPrimeTable(std::move(lower));
        limit *= 2;
    }
}

std::size_t twin_index(std::uint64_t p, const TwinPrimeTable& table) { return table.position(p); }

unsigned long Factorization::exponent_of(std::uint64_t p) const {
    const auto it = exponents.find(p);
    return it == exponents.end() ? 0 : it->second;
}

Factorization factor_over(const BigInt& q, std::span<const std::uint64_t> primes) {
    if (sgn(q) <= 0) throw std::invalid_argument("can only factor positive integers");
    Factorization out;
    out.leftover = q;
    for (auto p : primes) {
        if (p < 2) throw std::invalid_argument("factor base entries must be primes");
        if (mpz_cmp_ui(out.leftover.get_mpz_t(), 1) == 0) break;
        const BigInt divisor(static_cast<unsigned long>(p));
        const auto count = mpz_remove(out.leftover.get_mpz_t(), out.leftover.get_mpz_t(), divisor.get_mpz_t());
        if (count > 0) out.exponents[p] += count;
    }
    return out;
}

}  // namespace llprobe
