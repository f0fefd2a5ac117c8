#include "llprobe/rational.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace llprobe {

namespace {

bool is_one(const BigInt& value) { return mpz_cmp_ui(value.get_mpz_t(), 1) == 0; }

std::size_t bit_length(const BigInt& value) {
    return mpz_sgn(value.get_mpz_t()) == 0 ? 0 : mpz_sizeinbase(value.get_mpz_t(), 2);
}

// Removes and returns the power of two from a non-zero value.
std::int64_t strip_twos(BigInt& value) {
    const auto valuation = mpz_scan1(value.get_mpz_t(), 0);
    if (valuation > 0) {
        mpz_tdiv_q_2exp(value.get_mpz_t(), value.get_mpz_t(), valuation);
    }
    return static_cast<std::int64_t>(valuation);
}

BigInt shifted(const BigInt& value, std::int64_t shift) {
    BigInt out;
    mpz_mul_2exp(out.get_mpz_t(), value.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
    return out;
}

BigIntHandle multiply(const BigIntHandle& a, const BigIntHandle& b) {
    if (is_one(*a)) return b;
    if (is_one(*b)) return a;
    return make_handle(*a * *b);
}

bool all_digits(std::string_view text) {
    return !text.empty() &&
           std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; });
}

BigInt parse_integer(std::string_view text, bool allow_sign) {
    std::string_view body = text;
    if (allow_sign && !body.empty() && body.front() == '-') body.remove_prefix(1);
    if (!all_digits(body)) {
        throw std::invalid_argument("not a decimal integer: '" + std::string(text) + "'");
    }
    return BigInt(std::string(text), 10);
}

BigInt power_of_ten(unsigned long exponent) {
    BigInt out;
    mpz_ui_pow_ui(out.get_mpz_t(), 10, exponent);
    return out;
}

}  // namespace

BigIntHandle make_handle(BigInt value) { return std::make_shared<const BigInt>(std::move(value)); }

const BigIntHandle& one_handle() {
    static const BigIntHandle one = make_handle(BigInt(1));
    return one;
}

Rational::Rational() : num_(one_handle()), den_(one_handle()) {}

Rational::Rational(long value) : Rational(BigInt(value), BigInt(1)) {}

Rational::Rational(Reduced, int sign, std::int64_t twos, BigIntHandle num, BigIntHandle den)
    : sign_(sign), twos_(twos), num_(std::move(num)), den_(std::move(den)) {}

Rational::Rational(const BigInt& numerator, const BigInt& denominator) : Rational() {
    if (sgn(denominator) == 0) throw std::domain_error("rational with zero denominator");
    if (sgn(numerator) == 0) return;
    sign_ = sgn(numerator) * sgn(denominator);
    BigInt num = abs(numerator);
    BigInt den = abs(denominator);
    twos_ = strip_twos(num) - strip_twos(den);
    BigInt g;
    mpz_gcd(g.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (!is_one(g)) {
        mpz_divexact(num.get_mpz_t(), num.get_mpz_t(), g.get_mpz_t());
        mpz_divexact(den.get_mpz_t(), den.get_mpz_t(), g.get_mpz_t());
    }
    num_ = is_one(num) ? one_handle() : make_handle(std::move(num));
    den_ = is_one(den) ? one_handle() : make_handle(std::move(den));
}

Rational Rational::from_dyadic(int sign, std::int64_t twos, BigIntHandle odd_numerator,
                               BigIntHandle odd_denominator) {
    if (sign == 0) return Rational();
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be -1, 0 or 1");
    for (const auto* part : {&odd_numerator, &odd_denominator}) {
        if (!*part || sgn(**part) <= 0 || mpz_even_p((*part)->get_mpz_t())) {
            throw std::invalid_argument("dyadic parts must be positive odd integers");
        }
    }
    if (!is_one(*odd_numerator) && !is_one(*odd_denominator)) {
        BigInt g;
        mpz_gcd(g.get_mpz_t(), odd_numerator->get_mpz_t(), odd_denominator->get_mpz_t());
        if (!is_one(g)) {
            BigInt num, den;
            mpz_divexact(num.get_mpz_t(), odd_numerator->get_mpz_t(), g.get_mpz_t());
            mpz_divexact(den.get_mpz_t(), odd_denominator->get_mpz_t(), g.get_mpz_t());
            odd_numerator = make_handle(std::move(num));
            odd_denominator = make_handle(std::move(den));
        }
    }
    return Rational(Reduced{}, sign, twos, std::move(odd_numerator), std::move(odd_denominator));
}

Rational Rational::power_of_two(std::int64_t exponent) {
    return Rational(Reduced{}, 1, exponent, one_handle(), one_handle());
}

Rational Rational::parse(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return Rational(parse_integer(text, true), BigInt(1));
    const BigInt num = parse_integer(text.substr(0, slash), true);
    const BigInt den = parse_integer(text.substr(slash + 1), false);
    if (sgn(den) == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
    return Rational(num, den);
}

Rational Rational::parse_decimal(std::string_view text) {
    const std::string original(text);
    bool negative = false;
    if (!text.empty() && (text.front() == '-' || text.front() == '+')) {
        negative = text.front() == '-';
        text.remove_prefix(1);
    }
    long exponent = 0;
    if (const auto e = text.find_first_of("eE"); e != std::string_view::npos) {
        std::string_view exp_text = text.substr(e + 1);
        bool exp_negative = false;
        if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
            exp_negative = exp_text.front() == '-';
            exp_text.remove_prefix(1);
        }
        if (!all_digits(exp_text) || exp_text.size() > 9) {
            throw std::invalid_argument("bad decimal exponent in '" + original + "'");
        }
        exponent = std::stol(std::string(exp_text));
        if (exp_negative) exponent = -exponent;
        text = text.substr(0, e);
    }
    std::string mantissa;
    if (const auto dot = text.find('.'); dot != std::string_view::npos) {
        const auto whole = text.substr(0, dot);
        const auto frac = text.substr(dot + 1);
        if ((whole.empty() && frac.empty()) || (!whole.empty() && !all_digits(whole)) ||
            (!frac.empty() && !all_digits(frac))) {
            throw std::invalid_argument("not a decimal number: '" + original + "'");
        }
        mantissa = std::string(whole) + std::string(frac);
        exponent -= static_cast<long>(frac.size());
    } else {
        if (!all_digits(text)) throw std::invalid_argument("not a decimal number: '" + original + "'");
        mantissa = std::string(text);
    }
    BigInt num(mantissa, 10);
    if (negative) num = -num;
    if (exponent >= 0) return Rational(num * power_of_ten(static_cast<unsigned long>(exponent)), BigInt(1));
    return Rational(num, power_of_ten(static_cast<unsigned long>(-exponent)));
}

BigInt Rational::numerator() const {
    if (sign_ == 0) return BigInt(0);
    BigInt out = twos_ > 0 ? shifted(*num_, twos_) : *num_;
    if (sign_ < 0) out = -out;
    return out;
}

BigInt Rational::denominator() const {
    if (sign_ == 0) return BigInt(1);
    return twos_ < 0 ? shifted(*den_, -twos_) : *den_;
}

mpq_class Rational::to_mpq() const {
    mpq_class out;
    out.get_num() = numerator();
    out.get_den() = denominator();
    return out;
}

Rational Rational::from_mpq(const mpq_class& value) { return Rational(value.get_num(), value.get_den()); }

std::string Rational::to_string() const { return numerator().get_str() + "/" + denominator().get_str(); }

Rational Rational::reciprocal() const {
    if (sign_ == 0) throw std::domain_error("reciprocal of zero");
    return Rational(Reduced{}, sign_, -twos_, den_, num_);
}

Rational Rational::one_minus() const {
    if (sign_ == 0) return Rational(1);
    // x = s 2^t a / b. Write x = A / D with D = b 2^max(0,-t), A = s a 2^max(0,t);
    // then 1 - x = (D - A) / D and gcd(D - A, D) = gcd(A, D) = 1.
    const BigInt denom = twos_ < 0 ? shifted(*den_, -twos_) : *den_;
    BigInt top = twos_ > 0 ? shifted(*num_, twos_) : *num_;
    if (sign_ < 0) top = -top;
    BigInt diff = denom - top;
    const int sign = sgn(diff);
    if (sign == 0) return Rational();
    diff = abs(diff);
    std::int64_t twos = 0;
    if (twos_ == 0) {
        twos = strip_twos(diff);
    } else if (twos_ < 0) {
        twos = twos_;
    }
    auto num = is_one(diff) ? one_handle() : make_handle(std::move(diff));
    return Rational(Reduced{}, sign, twos, std::move(num), den_);
}

Rational operator*(const Rational& lhs, const Rational& rhs) {
    if (lhs.sign_ == 0 || rhs.sign_ == 0) return Rational();
    const int sign = lhs.sign_ * rhs.sign_;
    const std::int64_t twos = lhs.twos_ + rhs.twos_;
    // Cross-cancel: gcd(a1, b2) and gcd(a2, b1).
    auto cancel = [](const BigIntHandle& a, const BigIntHandle& b) -> std::pair<BigIntHandle, BigIntHandle> {
        if (is_one(*a) || is_one(*b)) return {a, b};
        BigInt g;
        mpz_gcd(g.get_mpz_t(), a->get_mpz_t(), b->get_mpz_t());
        if (is_one(g)) return {a, b};
        BigInt qa, qb;
        mpz_divexact(qa.get_mpz_t(), a->get_mpz_t(), g.get_mpz_t());
        mpz_divexact(qb.get_mpz_t(), b->get_mpz_t(), g.get_mpz_t());
        return {make_handle(std::move(qa)), make_handle(std::move(qb))};
    };
    auto [a1, b2] = cancel(lhs.num_, rhs.den_);
    auto [a2, b1] = cancel(rhs.num_, lhs.den_);
    return Rational(Rational::Reduced{}, sign, twos, multiply(a1, a2), multiply(b1, b2));
}

Rational operator/(const Rational& lhs, const Rational& rhs) { return lhs * rhs.reciprocal(); }

Rational operator+(const Rational& lhs, const Rational& rhs) {
    return Rational::from_mpq(lhs.to_mpq() + rhs.to_mpq());
}

Rational operator-(const Rational& lhs, const Rational& rhs) {
    return Rational::from_mpq(lhs.to_mpq() - rhs.to_mpq());
}

Rational Rational::operator-() const { return Rational(Reduced{}, -sign_, twos_, num_, den_); }

bool operator==(const Rational& lhs, const Rational& rhs) {
    if (lhs.sign_ != rhs.sign_ || lhs.twos_ != rhs.twos_) return false;
    const bool same_num = lhs.num_ == rhs.num_ || *lhs.num_ == *rhs.num_;
    const bool same_den = lhs.den_ == rhs.den_ || *lhs.den_ == *rhs.den_;
    return same_num && same_den;
}

std::strong_ordering operator<=>(const Rational& lhs, const Rational& rhs) {
    if (lhs.sign_ != rhs.sign_) return lhs.sign_ <=> rhs.sign_;
    if (lhs.sign_ == 0) return std::strong_ordering::equal;
    // Compare |lhs| = 2^t1 a1/b1 with |rhs| = 2^t2 a2/b2 via a1 b2 2^(t1-t2) vs a2 b1.
    auto product = [](const BigInt& a, const BigInt& b, BigInt& storage) -> const BigInt& {
        if (is_one(a)) return b;
        if (is_one(b)) return a;
        storage = a * b;
        return storage;
    };
    BigInt left_storage, right_storage;
    const BigInt& left = product(*lhs.num_, *rhs.den_, left_storage);
    const BigInt& right = product(*rhs.num_, *lhs.den_, right_storage);
    const std::int64_t shift = lhs.twos_ - rhs.twos_;
    std::strong_ordering magnitude = shift >= 0 ? compare_shifted(left, shift, right)
                                                : 0 <=> compare_shifted(right, -shift, left);
    return lhs.sign_ > 0 ? magnitude : 0 <=> magnitude;
}

std::strong_ordering compare_shifted(const BigInt& a, std::int64_t shift, const BigInt& b) {
    if (sgn(a) == 0) return sgn(b) == 0 ? std::strong_ordering::equal : std::strong_ordering::less;
    if (sgn(b) == 0) return std::strong_ordering::greater;
    if (shift < 0) return 0 <=> compare_shifted(b, -shift, a);
    const auto la = static_cast<std::int64_t>(bit_length(a)) + shift;
    const auto lb = static_cast<std::int64_t>(bit_length(b));
    if (la != lb) return la <=> lb;
    BigInt top;
    mpz_tdiv_q_2exp(top.get_mpz_t(), b.get_mpz_t(), static_cast<mp_bitcnt_t>(shift));
    const int c = cmp(a, top);
    if (c != 0) return c <=> 0;
    // a == floor(b / 2^shift); equal iff the low bits of b vanish.
    const bool low_zero = static_cast<std::int64_t>(mpz_scan1(b.get_mpz_t(), 0)) >= shift;
    return low_zero ? std::strong_ordering::equal : std::strong_ordering::less;
}

FactoredRational::FactoredRational() = default;

FactoredRational::FactoredRational(std::int64_t twos, std::vector<BigIntHandle> numerator_factors,
                                   std::vector<BigIntHandle> denominator_factors)
    : twos_(twos) {
    auto keep = [](std::vector<BigIntHandle>& factors, std::vector<BigIntHandle>& out) {
        for (auto& f : factors) {
            if (!f || sgn(*f) <= 0 || mpz_even_p(f->get_mpz_t())) {
                throw std::invalid_argument("factors must be positive odd integers");
            }
            if (!is_one(*f)) out.push_back(std::move(f));
        }
    };
    keep(numerator_factors, num_);
    keep(denominator_factors, den_);
    // Dividing only removes common factors, so one pass leaves every pair coprime.
    for (auto& n : num_) {
        for (auto& d : den_) {
            if (is_one(*n)) break;
            if (is_one(*d)) continue;
            BigInt g;
            mpz_gcd(g.get_mpz_t(), n->get_mpz_t(), d->get_mpz_t());
            if (is_one(g)) continue;
            BigInt qn, qd;
            mpz_divexact(qn.get_mpz_t(), n->get_mpz_t(), g.get_mpz_t());
            mpz_divexact(qd.get_mpz_t(), d->get_mpz_t(), g.get_mpz_t());
            n = make_handle(std::move(qn));
            d = make_handle(std::move(qd));
        }
    }
    std::erase_if(num_, [](const BigIntHandle& f) { return is_one(*f); });
    std::erase_if(den_, [](const BigIntHandle& f) { return is_one(*f); });
}

FactoredRational FactoredRational::from_rational(const Rational& value) {
    if (value.sign() <= 0) throw std::domain_error("factored rationals are positive");
    return FactoredRational(value.two_exponent(), {value.odd_numerator_handle()},
                            {value.odd_denominator_handle()});
}

namespace {
BigInt product_of(std::span<const BigIntHandle> factors) {
    std::vector<const BigInt*> sorted;
    sorted.reserve(factors.size());
    for (const auto& f : factors) sorted.push_back(f.get());
    std::sort(sorted.begin(), sorted.end(), [](const BigInt* a, const BigInt* b) {
        return bit_length(*a) < bit_length(*b);
    });
    BigInt out(1);
    for (const auto* f : sorted) out *= *f;
    return out;
}
}  // namespace

BigInt FactoredRational::numerator() const {
    BigInt out = product_of(num_);
    return twos_ > 0 ? shifted(out, twos_) : out;
}

BigInt FactoredRational::denominator() const {
    BigInt out = product_of(den_);
    return twos_ < 0 ? shifted(out, -twos_) : out;
}

Rational FactoredRational::to_rational() const { return Rational(numerator(), denominator()); }

double FactoredRational::log2_odd_numerator() const {
    double total = 0.0;
    for (const auto& f : num_) {
        long exponent = 0;
        const double mantissa = mpz_get_d_2exp(&exponent, f->get_mpz_t());
        total += static_cast<double>(exponent) + std::log2(mantissa);
    }
    return total;
}

FactoredRational FactoredRational::times_power_of_two(std::int64_t exponent) const {
    FactoredRational out = *this;
    out.twos_ += exponent;
    return out;
}

bool operator==(const FactoredRational& lhs, const FactoredRational& rhs) {
    if (lhs.twos_ != rhs.twos_) return false;
    return product_of(lhs.num_) == product_of(rhs.num_) && product_of(lhs.den_) == product_of(rhs.den_);
}

}  // namespace llprobe
