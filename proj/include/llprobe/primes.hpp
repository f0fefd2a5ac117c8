#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "llprobe/rational.hpp"

namespace llprobe {

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime(std::uint64_t n);

/// Smallest prime strictly greater than n.
std::uint64_t next_prime(std::uint64_t n);

/// All primes <= limit (sieve of Eratosthenes).
std::vector<std::uint64_t> primes_up_to(std::uint64_t limit);

/// The first `count` primes 2, 3, 5, ...
std::vector<std::uint64_t> first_primes(std::size_t count);

/// The smallest primes p >= 5 with p + 2 also prime, ascending. Positions are
/// 1-based: position 1 is 5, position 3 is 17.
class TwinPrimeTable {
public:
    explicit TwinPrimeTable(std::vector<std::uint64_t> lower_members);

    std::size_t size() const { return primes_.size(); }
    std::span<const std::uint64_t> primes() const { return primes_; }
    /// Lower member at 1-based position i.
    std::uint64_t at(std::size_t position) const;
    /// 1-based position of p; throws std::out_of_range when p is not listed.
    std::size_t position(std::uint64_t p) const;

private:
    std::vector<std::uint64_t> primes_;
};

TwinPrimeTable twin_primes(std::size_t count);

/// 1-based position of p in the table.
std::size_t twin_index(std::uint64_t p, const TwinPrimeTable& table);

struct Factorization {
    std::map<std::uint64_t, unsigned long> exponents;  // only primes that divide
    BigInt leftover;

    unsigned long exponent_of(std::uint64_t p) const;
};

/// Trial division of q >= 1 over a known candidate set.
Factorization factor_over(const BigInt& q, std::span<const std::uint64_t> primes);

}  // namespace llprobe
