#include "llprobe/exact.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <mpfr.h>

#include "mpfr_value.hpp"

#include "llprobe/primes.hpp"

namespace llprobe {

namespace {

// 2^62 is the largest dyadic exponent the binary decoder can hold in N.
constexpr std::size_t kBinaryHardLimit = 62;

void require_size(std::size_t n) {
    if (n == 0) throw std::invalid_argument("dataset size must be at least 1");
}

void check_reported_size(const ExactScore& score, std::size_t decoded) {
    if (score.n != 0 && score.n != decoded) {
        throw DecodeError("score reports " + std::to_string(score.n) + " points but encodes " +
                          std::to_string(decoded));
    }
}

using Mpfr = detail::MpfrValue;

// Exact comparison of the odd numerator against 2^(2^n) - 1. Up to 2^20 bits
// the product is formed outright; beyond that it is compared modulo three
// 61-bit primes, since the full numerator would need up to 2^62 bits.
constexpr std::size_t kExactNumeratorLimit = 20;
constexpr std::array<unsigned long, 3> kModuli = {2305843009213693951UL, 2305843009213693921UL,
                                                  2305843009213693907UL};
using Residues = std::array<unsigned long, 3>;

Residues residues_of(const BigInt& value) {
    Residues out{};
    for (std::size_t i = 0; i < kModuli.size(); ++i) out[i] = mpz_fdiv_ui(value.get_mpz_t(), kModuli[i]);
    return out;
}

// Builder factors are shared handles reused by every score, so their residues
// are remembered for as long as the handle is alive.
Residues cached_residues(const BigIntHandle& handle) {
    constexpr std::size_t kCacheFromBits = 1U << 16;
    if (mpz_sizeinbase(handle->get_mpz_t(), 2) < kCacheFromBits) return residues_of(*handle);
    static std::mutex mutex;
    static std::vector<std::pair<std::weak_ptr<const BigInt>, Residues>> cache;
    {
        std::lock_guard lock(mutex);
        for (const auto& [weak, residues] : cache) {
            if (weak.lock() == handle) return residues;
        }
    }
    const auto residues = residues_of(*handle);
    std::lock_guard lock(mutex);
    std::erase_if(cache, [](const auto& entry) { return entry.first.expired(); });
    cache.emplace_back(handle, residues);
    return residues;
}

bool numerator_is_mersenne_power(const FactoredRational& value, std::size_t n) {
    if (n <= kExactNumeratorLimit) {
        BigInt expected;
        mpz_setbit(expected.get_mpz_t(), static_cast<mp_bitcnt_t>(std::uint64_t{1} << n));
        expected -= 1;
        return value.numerator() == expected;
    }
    Residues product;
    product.fill(1);
    for (const auto& f : value.numerator_factors()) {
        const auto r = cached_residues(f);
        for (std::size_t i = 0; i < kModuli.size(); ++i) {
            product[i] = static_cast<unsigned long>(static_cast<unsigned __int128>(product[i]) * r[i] % kModuli[i]);
        }
    }
    BigInt exponent, expected;
    mpz_setbit(exponent.get_mpz_t(), static_cast<mp_bitcnt_t>(n));
    const BigInt two(2);
    for (std::size_t i = 0; i < kModuli.size(); ++i) {
        const BigInt modulus(kModuli[i]);
        mpz_powm(expected.get_mpz_t(), two.get_mpz_t(), exponent.get_mpz_t(), modulus.get_mpz_t());
        if ((expected.get_ui() + kModuli[i] - 1) % kModuli[i] != product[i]) return false;
    }
    return true;
}

}  // namespace

PredictionVector build_twin_prime_vector(std::size_t n, const SizeGuards& guards) {
    require_size(n);
    if (n > guards.twin_prime) {
        throw SizeGuardError("twin prime vector of size " + std::to_string(n) + " exceeds the limit " +
                             std::to_string(guards.twin_prime));
    }
    const auto table = twin_primes(n);
    std::vector<Rational> entries;
    entries.reserve(n);
    for (auto p : table.primes()) {
        entries.emplace_back(BigInt(static_cast<unsigned long>(p)), BigInt(static_cast<unsigned long>(p + 2)));
    }
    return PredictionVector(std::move(entries));
}

Labeling decode_twin_prime(const ExactScore& score, std::optional<std::size_t> expected_size,
                           const SizeGuards& guards) {
    BigInt numerator = score.value.numerator();
    const BigInt denominator = score.value.denominator();

    // Every upper member is at least 7 > 2^2, so the factor count is below bits / 2.
    const std::size_t bound = std::min(mpz_sizeinbase(numerator.get_mpz_t(), 2) / 2 + 1, guards.twin_prime);
    const auto table = twin_primes(bound);
    std::size_t n = 0;
    for (auto p : table.primes()) {
        if (mpz_cmp_ui(numerator.get_mpz_t(), 1) == 0) break;
        if (!mpz_divisible_ui_p(numerator.get_mpz_t(), static_cast<unsigned long>(p + 2))) break;
        mpz_divexact_ui(numerator.get_mpz_t(), numerator.get_mpz_t(), static_cast<unsigned long>(p + 2));
        ++n;
    }
    if (mpz_cmp_ui(numerator.get_mpz_t(), 1) != 0) {
        throw DecodeError("numerator is not a product of consecutive upper twin primes 7, 13, 19, ...");
    }
    if (n == 0) throw DecodeError("numerator carries no twin prime factors");
    if (expected_size && *expected_size != n) {
        throw DecodeError("score encodes " + std::to_string(n) + " points, expected " + std::to_string(*expected_size));
    }
    check_reported_size(score, n);

    std::vector<std::uint64_t> base{2};
    base.insert(base.end(), table.primes().begin(), table.primes().begin() + static_cast<std::ptrdiff_t>(n));
    const auto factors = factor_over(denominator, base);
    if (mpz_cmp_ui(factors.leftover.get_mpz_t(), 1) != 0) {
        throw DecodeError("denominator has factors outside 2 and the twin prime table");
    }
    std::vector<std::uint8_t> bits(n, 0);
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto e = factors.exponent_of(table.primes()[i]);
        if (e > 1) throw DecodeError("twin prime " + std::to_string(table.primes()[i]) + " repeats in the denominator");
        bits[i] = static_cast<std::uint8_t>(e);
        ones += e;
    }
    if (factors.exponent_of(2) + ones != n) {
        throw DecodeError("power of two in the denominator does not match the number of zero labels");
    }
    return Labeling(std::move(bits));
}

BinaryRepVector build_binary_vector(std::size_t n, const SizeGuards& guards) {
    require_size(n);
    const auto limit = std::min(guards.binary, kBinaryHardLimit);
    if (n > limit) {
        throw SizeGuardError("binary representation vector of size " + std::to_string(n) + " exceeds the limit " +
                             std::to_string(limit));
    }
    std::vector<Rational> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int64_t exponent = std::int64_t{1} << i;
        BigInt denominator;
        mpz_setbit(denominator.get_mpz_t(), static_cast<mp_bitcnt_t>(exponent));
        denominator += 1;
        entries.push_back(Rational::from_dyadic(1, exponent, one_handle(), make_handle(std::move(denominator))));
    }
    return BinaryRepVector{n, PredictionVector(std::move(entries))};
}

Labeling decode_binary(const ExactScore& score, std::optional<std::size_t> size) {
    const auto& value = score.value;
    if (!value.denominator_factors().empty()) throw DecodeError("denominator is not a power of two");
    if (value.two_exponent() > 0) throw DecodeError("numerator is even");
    const auto exponent = static_cast<std::uint64_t>(-value.two_exponent());

    // numerator = prod_{i<=n} (1 + 2^(2^(i-1))) = 2^(2^n) - 1
    const double numerator_bits = value.log2_odd_numerator();
    std::size_t n = 0;
    if (size) {
        n = *size;
    } else {
        if (numerator_bits < 1.0) throw DecodeError("numerator does not encode a dataset size");
        n = static_cast<std::size_t>(std::llround(std::log2(numerator_bits)));
    }
    require_size(n);
    if (n > kBinaryHardLimit) throw DecodeError("binary score size exceeds " + std::to_string(kBinaryHardLimit));
    if (std::fabs(numerator_bits - std::ldexp(1.0, static_cast<int>(n))) >= 0.5) {
        throw DecodeError("numerator is not 2^(2^n) - 1 for n = " + std::to_string(n));
    }
    if (!numerator_is_mersenne_power(value, n)) {
        throw DecodeError("numerator is not 2^(2^n) - 1 for n = " + std::to_string(n));
    }
    check_reported_size(score, n);
    if (exponent >= (std::uint64_t{1} << n)) {
        throw DecodeError("denominator exponent " + std::to_string(exponent) + " does not fit " + std::to_string(n) +
                          " labels");
    }
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((exponent >> i) & 1U);
    return Labeling(std::move(bits));
}

int required_precision_binary(std::size_t n) {
    require_size(n);
    // Rounding to phi digits moves LL by at most 10^(1-phi) LL / 2, and
    // n LL log2(e) < 2^n, so N moves by less than 2^(n-1) 10^(1-phi). Keep that
    // below 1/4: 10^(phi-1) > 2^(n+1).
    BigInt bound;
    mpz_setbit(bound.get_mpz_t(), static_cast<mp_bitcnt_t>(n + 1));
    BigInt power(1);
    int phi = 1;
    while (power <= bound) {
        power *= 10;
        ++phi;
    }
    return phi;
}

Labeling decode_binary_from_decimal(const DecimalScore& logloss, std::size_t n, Normalization normalization) {
    require_size(n);
    if (logloss.kind() != ScoreKind::logloss) throw std::invalid_argument("expected a Log-Loss score");
    if (n > kBinaryHardLimit) throw std::invalid_argument("binary size exceeds " + std::to_string(kBinaryHardLimit));
    const auto reported = logloss.value();
    const mpq_class ll = reported->to_mpq();

    const auto precision = static_cast<mpfr_prec_t>(n + 4 * static_cast<std::size_t>(logloss.digits()) + 64);
    Mpfr total(precision), term(precision), ln2(precision), scaled(precision);
    mpfr_const_log2(ln2.get(), MPFR_RNDN);
    // C = sum_j ln(1 + 2^k) with k = 2^(j-1), written as k ln 2 + log1p(2^-k).
    mpfr_set_zero(total.get(), 1);
    for (std::size_t j = 0; j < n; ++j) {
        const auto k = static_cast<long>(std::uint64_t{1} << j);
        mpfr_mul_si(term.get(), ln2.get(), k, MPFR_RNDN);
        mpfr_add(total.get(), total.get(), term.get(), MPFR_RNDN);
        if (k <= static_cast<long>(precision) + 16) {
            mpfr_set_ui_2exp(term.get(), 1, -k, MPFR_RNDN);
            mpfr_log1p(term.get(), term.get(), MPFR_RNDN);
            mpfr_add(total.get(), total.get(), term.get(), MPFR_RNDN);
        }
    }
    mpfr_set_q(scaled.get(), ll.get_mpq_t(), MPFR_RNDN);
    if (normalization == Normalization::per_point) mpfr_mul_ui(scaled.get(), scaled.get(), n, MPFR_RNDN);
    mpfr_sub(total.get(), total.get(), scaled.get(), MPFR_RNDN);
    mpfr_div(total.get(), total.get(), ln2.get(), MPFR_RNDN);

    mpfr_round(term.get(), total.get());
    mpfr_sub(scaled.get(), total.get(), term.get(), MPFR_RNDN);
    if (mpfr_cmp_d(scaled.get(), 0.25) > 0 || mpfr_cmp_d(scaled.get(), -0.25) < 0) {
        throw DecodeError("Log-Loss precision is insufficient: exponent estimate is not near an integer");
    }
    if (mpfr_sgn(term.get()) < 0 || mpfr_cmp_ui_2exp(term.get(), 1, static_cast<mpfr_exp_t>(n)) >= 0) {
        throw DecodeError("decoded exponent is outside [0, 2^n)");
    }
    const std::uint64_t exponent = mpfr_get_uj(term.get(), MPFR_RNDN);
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((exponent >> i) & 1U);
    return Labeling(std::move(bits));
}

namespace {

void check_multiclass_size(std::size_t n, unsigned class_count, const SizeGuards& guards) {
    require_size(n);
    if (class_count < 2) throw std::invalid_argument("class count must be at least 2");
    if (n * class_count > guards.multiclass_cells) {
        throw SizeGuardError("multi-class matrix of " + std::to_string(n) + " x " + std::to_string(class_count) +
                             " exceeds the limit of " + std::to_string(guards.multiclass_cells) + " cells");
    }
}

std::vector<BigInt> row_sums(std::span<const std::uint64_t> primes, unsigned class_count) {
    std::vector<BigInt> sums;
    sums.reserve(primes.size());
    for (auto p : primes) {
        BigInt sum(0), power(1);
        for (unsigned j = 0; j < class_count; ++j) {
            sum += power;
            power *= static_cast<unsigned long>(p);
        }
        sums.push_back(sum);
    }
    return sums;
}

}  // namespace

PredictionMatrix build_multiclass_matrix(std::size_t n, unsigned class_count, const SizeGuards& guards) {
    check_multiclass_size(n, class_count, guards);
    const auto primes = first_primes(n);
    const auto sums = row_sums(primes, class_count);
    std::vector<std::vector<Rational>> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Rational> row;
        BigInt power(1);
        for (unsigned j = 0; j < class_count; ++j) {
            row.emplace_back(power, sums[i]);
            power *= static_cast<unsigned long>(primes[i]);
        }
        rows.push_back(std::move(row));
    }
    return PredictionMatrix(std::move(rows));
}

ClassLabeling decode_multiclass(const ExactScore& score, std::size_t n, unsigned class_count,
                                const SizeGuards& guards) {
    check_multiclass_size(n, class_count, guards);
    check_reported_size(score, n);
    const auto primes = first_primes(n);
    BigInt sum_product(1);
    for (const auto& s : row_sums(primes, class_count)) sum_product *= s;
    // score = prod(s_i) / M, so M = prod(s_i) / score must be an integer.
    const Rational m = Rational(sum_product, BigInt(1)) / score.rational();
    if (m.sign() <= 0 || m.denominator() != 1) throw DecodeError("score does not divide the row-sum product");
    const auto factors = factor_over(m.numerator(), primes);
    if (mpz_cmp_ui(factors.leftover.get_mpz_t(), 1) != 0) {
        throw DecodeError("label product has factors outside the first " + std::to_string(n) + " primes");
    }
    std::vector<unsigned> classes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto e = factors.exponent_of(primes[i]);
        if (e >= class_count) {
            throw DecodeError("exponent of " + std::to_string(primes[i]) + " exceeds K - 1");
        }
        classes[i] = static_cast<unsigned>(e) + 1;
    }
    return ClassLabeling(std::move(classes), class_count);
}

}  // namespace llprobe
