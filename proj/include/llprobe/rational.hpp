#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace llprobe {

using BigInt = mpz_class;

// Immutable, shareable big integer. Constructions such as the binary
// representation vector hold integers with billions of bits, so values are
// passed around by handle and never copied.
using BigIntHandle = std::shared_ptr<const BigInt>;

BigIntHandle make_handle(BigInt value);
const BigIntHandle& one_handle();

/// Exact rational number kept in canonical form
///
///     sign * 2^twos * odd_numerator / odd_denominator
///
/// with both odd parts positive and coprime. Splitting off the power of two
/// keeps numbers like 2^(2^31) as a single exponent instead of 256 MiB of
/// limbs. Zero has sign 0, twos 0 and odd parts 1.
class Rational {
public:
    Rational();
    Rational(long value);  // NOLINT(google-explicit-constructor)
    Rational(const BigInt& numerator, const BigInt& denominator);

    /// Builds sign * 2^twos * odd_numerator / odd_denominator. Both odd parts
    /// must be positive and odd; they are reduced by their gcd.
    static Rational from_dyadic(int sign, std::int64_t twos, BigIntHandle odd_numerator,
                                BigIntHandle odd_denominator);
    static Rational power_of_two(std::int64_t exponent);

    /// Parses "p/q" or "p" (decimal integers, optional leading '-' on p).
    /// Non-reduced input is accepted and reduced.
    static Rational parse(std::string_view text);
    /// Parses a finite decimal such as "0.002", "3.2e-1" or "7" exactly.
    static Rational parse_decimal(std::string_view text);

    int sign() const { return sign_; }
    bool is_zero() const { return sign_ == 0; }
    std::int64_t two_exponent() const { return twos_; }
    const BigInt& odd_numerator() const { return *num_; }
    const BigInt& odd_denominator() const { return *den_; }
    const BigIntHandle& odd_numerator_handle() const { return num_; }
    const BigIntHandle& odd_denominator_handle() const { return den_; }

    /// Materialized reduced numerator (signed) and denominator (positive).
    BigInt numerator() const;
    BigInt denominator() const;
    mpq_class to_mpq() const;
    static Rational from_mpq(const mpq_class& value);

    /// "p/q" with q >= 1, always including the denominator.
    std::string to_string() const;

    Rational reciprocal() const;
    /// 1 - x without a gcd: for x = a/b reduced, 1 - x = (b - a)/b is reduced.
    Rational one_minus() const;

    friend Rational operator*(const Rational& lhs, const Rational& rhs);
    friend Rational operator/(const Rational& lhs, const Rational& rhs);
    friend Rational operator+(const Rational& lhs, const Rational& rhs);
    friend Rational operator-(const Rational& lhs, const Rational& rhs);
    Rational operator-() const;

    friend bool operator==(const Rational& lhs, const Rational& rhs);
    friend std::strong_ordering operator<=>(const Rational& lhs, const Rational& rhs);

private:
    struct Reduced {};
    Rational(Reduced, int sign, std::int64_t twos, BigIntHandle num, BigIntHandle den);

    int sign_ = 0;
    std::int64_t twos_ = 0;
    BigIntHandle num_;
    BigIntHandle den_;
};

/// Compares a * 2^shift with b for non-negative a and b without materializing
/// the shifted value.
std::strong_ordering compare_shifted(const BigInt& a, std::int64_t shift, const BigInt& b);

/// Positive rational held as 2^twos * prod(numerator factors) / prod(denominator
/// factors). Factors are odd integers > 1 and every numerator factor is coprime
/// to every denominator factor, so the represented fraction is reduced. The
/// product is only formed on request, which keeps scores over huge prediction
/// entries cheap to build and to inspect.
class FactoredRational {
public:
    FactoredRational();  // 1
    FactoredRational(std::int64_t twos, std::vector<BigIntHandle> numerator_factors,
                     std::vector<BigIntHandle> denominator_factors);
    static FactoredRational from_rational(const Rational& value);

    std::int64_t two_exponent() const { return twos_; }
    std::span<const BigIntHandle> numerator_factors() const { return num_; }
    std::span<const BigIntHandle> denominator_factors() const { return den_; }

    BigInt numerator() const;
    BigInt denominator() const;
    Rational to_rational() const;

    /// Approximate log2 of the numerator's odd part (sum over factors).
    double log2_odd_numerator() const;

    FactoredRational times_power_of_two(std::int64_t exponent) const;

    friend bool operator==(const FactoredRational& lhs, const FactoredRational& rhs);

private:
    std::int64_t twos_ = 0;
    std::vector<BigIntHandle> num_;
    std::vector<BigIntHandle> den_;
};

}  // namespace llprobe
