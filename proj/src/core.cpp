#include "llprobe/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <mpfr.h>

#include "mpfr_value.hpp"

namespace llprobe {

namespace {

constexpr mpfr_prec_t kMaxWorkingPrecision = mpfr_prec_t{1} << 26;

using Mpfr = detail::MpfrValue;

std::size_t bit_length(const BigInt& value) { return mpz_sizeinbase(value.get_mpz_t(), 2); }

// Adds sign * ln(z) into [lo, hi]. z = m 2^k with m in [1/2, 1), so the
// conversion never leaves MPFR's exponent range however large z is.
void add_log_bounds(mpfr_ptr lo, mpfr_ptr hi, const BigInt& z, int sign, mpfr_ptr ln2_lo, mpfr_ptr ln2_hi) {
    const mpfr_prec_t precision = mpfr_get_prec(lo);
    const auto k = static_cast<long>(bit_length(z));
    Mpfr term_lo(precision), term_hi(precision), scaled(precision);
    mpfr_set_z_2exp(scaled.get(), z.get_mpz_t(), -k, MPFR_RNDD);
    mpfr_log(term_lo.get(), scaled.get(), MPFR_RNDD);
    mpfr_set_z_2exp(scaled.get(), z.get_mpz_t(), -k, MPFR_RNDU);
    mpfr_log(term_hi.get(), scaled.get(), MPFR_RNDU);
    mpfr_mul_si(scaled.get(), ln2_lo, k, MPFR_RNDD);
    mpfr_add(term_lo.get(), term_lo.get(), scaled.get(), MPFR_RNDD);
    mpfr_mul_si(scaled.get(), ln2_hi, k, MPFR_RNDU);
    mpfr_add(term_hi.get(), term_hi.get(), scaled.get(), MPFR_RNDU);
    if (sign > 0) {
        mpfr_add(lo, lo, term_lo.get(), MPFR_RNDD);
        mpfr_add(hi, hi, term_hi.get(), MPFR_RNDU);
    } else {
        mpfr_sub(lo, lo, term_hi.get(), MPFR_RNDD);
        mpfr_sub(hi, hi, term_lo.get(), MPFR_RNDU);
    }
}

}  // namespace

std::string scientific_text(std::string_view digits, long decimal_exponent) {
    std::string out(1, digits.front());
    if (digits.size() > 1) {
        out += '.';
        out.append(digits.substr(1));
    }
    out += 'e';
    out += std::to_string(decimal_exponent);
    return out;
}

namespace {

std::string zero_text(int digits) { return scientific_text(std::string(static_cast<std::size_t>(digits), '0'), 0); }

// phi-digit rounding of an MPFR value, as (digits, exponent) for 0.ddd * 10^exponent.
std::pair<std::string, mpfr_exp_t> decimal_digits(mpfr_ptr value, int digits) {
    mpfr_exp_t exponent = 0;
    char* text = mpfr_get_str(nullptr, &exponent, 10, static_cast<std::size_t>(digits), value, MPFR_RNDN);
    std::pair<std::string, mpfr_exp_t> out{text, exponent};
    mpfr_free_str(text);
    return out;
}

void require_digits(int digits) {
    if (digits < 1) throw std::invalid_argument("significant digits must be at least 1");
}

}  // namespace

Labeling::Labeling(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    if (bits_.empty()) throw std::invalid_argument("labeling must have at least one point");
    for (auto b : bits_) {
        if (b > 1) throw std::invalid_argument("labels must be 0 or 1");
    }
}

Labeling Labeling::parse(std::string_view bits) {
    std::vector<std::uint8_t> out;
    out.reserve(bits.size());
    for (char c : bits) {
        if (c != '0' && c != '1') {
            throw std::invalid_argument("labeling may only contain '0' and '1': '" + std::string(bits) + "'");
        }
        out.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return Labeling(std::move(out));
}

std::size_t Labeling::ones() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string Labeling::to_string() const {
    std::string out;
    out.reserve(bits_.size());
    for (auto b : bits_) out += static_cast<char>('0' + b);
    return out;
}

ClassLabeling::ClassLabeling(std::vector<unsigned> classes, unsigned class_count)
    : classes_(std::move(classes)), class_count_(class_count) {
    if (class_count_ < 2) throw std::invalid_argument("class count must be at least 2");
    if (classes_.empty()) throw std::invalid_argument("class labeling must have at least one point");
    for (auto c : classes_) {
        if (c < 1 || c > class_count_) throw std::invalid_argument("class label out of range 1..K");
    }
}

std::string ClassLabeling::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(classes_[i]);
    }
    return out;
}

namespace {
bool in_open_unit_interval(const Rational& x) { return x.sign() > 0 && x < Rational(1); }
}  // namespace

PredictionVector::PredictionVector(std::vector<Rational> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw std::invalid_argument("prediction vector must not be empty");
    complements_.reserve(entries_.size());
    for (const auto& x : entries_) {
        if (!in_open_unit_interval(x)) {
            throw std::invalid_argument("prediction " + x.to_string() + " is outside (0, 1)");
        }
        complements_.push_back(x.one_minus());
    }
}

PredictionMatrix::PredictionMatrix(std::vector<std::vector<Rational>> rows) : rows_(std::move(rows)) {
    if (rows_.empty()) throw std::invalid_argument("prediction matrix must not be empty");
    const auto k = rows_.front().size();
    if (k < 2) throw std::invalid_argument("prediction matrix needs at least two classes");
    for (const auto& row : rows_) {
        if (row.size() != k) throw std::invalid_argument("prediction matrix rows differ in length");
        mpq_class sum = 0;
        for (const auto& x : row) {
            if (!in_open_unit_interval(x)) {
                throw std::invalid_argument("prediction " + x.to_string() + " is outside (0, 1)");
            }
            sum += x.to_mpq();
        }
        if (sum != 1) throw std::invalid_argument("prediction matrix row does not sum to 1");
    }
}

ExactScore::ExactScore(const Rational& value, std::size_t n) : value(FactoredRational::from_rational(value)), n(n) {}

DecimalScore::DecimalScore(std::string text, int digits, ScoreKind kind)
    : text_(std::move(text)), digits_(digits), kind_(kind) {}

DecimalScore DecimalScore::not_defined(int digits) {
    require_digits(digits);
    return DecimalScore("", digits, ScoreKind::auc_not_defined);
}

DecimalScore DecimalScore::parse(std::string_view text, ScoreKind kind) {
    if (kind == ScoreKind::auc_not_defined) throw std::invalid_argument("use not_defined for undefined AUC");
    const std::string original(text);
    auto fail = [&]() -> DecimalScore {
        throw std::invalid_argument("not a normalized scientific decimal: '" + original + "'");
    };
    const auto e = text.find('e');
    if (e == std::string_view::npos || e == 0) return fail();
    std::string_view mantissa = text.substr(0, e);
    std::string_view exponent = text.substr(e + 1);
    std::string digits(1, mantissa.front());
    if (mantissa.size() > 1) {
        if (mantissa.size() < 3 || mantissa[1] != '.') return fail();
        digits.append(mantissa.substr(2));
    }
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) return fail();
    const bool negative_exponent = !exponent.empty() && exponent.front() == '-';
    if (negative_exponent) exponent.remove_prefix(1);
    if (exponent.empty() || exponent.size() > 9 ||
        !std::all_of(exponent.begin(), exponent.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
        (exponent.size() > 1 && exponent.front() == '0') || (negative_exponent && exponent == "0")) {
        return fail();
    }
    const bool all_zero = std::all_of(digits.begin(), digits.end(), [](char c) { return c == '0'; });
    if (digits.front() == '0' && !(all_zero && exponent == "0")) return fail();
    return DecimalScore(original, static_cast<int>(digits.size()), kind);
}

DecimalScore DecimalScore::parse_wire(std::string_view text, ScoreKind kind, int digits) {
    if (text == "ND") {
        if (kind == ScoreKind::logloss) throw std::invalid_argument("Log-Loss cannot be undefined");
        return not_defined(digits);
    }
    auto out = parse(text, kind == ScoreKind::auc_not_defined ? ScoreKind::auc : kind);
    if (out.digits() != digits) {
        throw std::invalid_argument("'" + std::string(text) + "' does not carry " + std::to_string(digits) +
                                    " significant digits");
    }
    return out;
}

std::optional<Rational> DecimalScore::value() const {
    if (!defined()) return std::nullopt;
    return Rational::parse_decimal(text_);
}

std::string round_significant(const Rational& value, int digits) {
    require_digits(digits);
    if (value.sign() < 0) throw std::domain_error("cannot round a negative value");
    if (value.is_zero()) return zero_text(digits);
    const mpq_class v = value.to_mpq();
    auto pow10 = [](long e) {
        BigInt p;
        mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(e)));
        return e >= 0 ? mpq_class(p) : mpq_class(BigInt(1), p);
    };
    const double bits = static_cast<double>(bit_length(v.get_num())) - static_cast<double>(bit_length(v.get_den()));
    long exponent = static_cast<long>(std::floor(bits * std::log10(2.0)));
    while (v < pow10(exponent)) --exponent;
    while (v >= pow10(exponent + 1)) ++exponent;
    const mpq_class scaled = v * pow10(digits - 1 - exponent);
    BigInt whole;
    mpz_fdiv_q(whole.get_mpz_t(), scaled.get_num_mpz_t(), scaled.get_den_mpz_t());
    const mpq_class remainder = scaled - mpq_class(whole);
    const int half = cmp(remainder, mpq_class(1, 2));
    if (half > 0 || (half == 0 && mpz_odd_p(whole.get_mpz_t()))) whole += 1;
    BigInt limit;
    mpz_ui_pow_ui(limit.get_mpz_t(), 10, static_cast<unsigned long>(digits));
    if (whole == limit) {
        whole /= 10;
        ++exponent;
    }
    return scientific_text(whole.get_str(), exponent);
}

ExactScore exact_score(const PredictionVector& x, const Labeling& labels) {
    if (x.size() != labels.size()) {
        throw std::invalid_argument("prediction vector has " + std::to_string(x.size()) + " entries but labeling has " +
                                    std::to_string(labels.size()));
    }
    // 1 / prod(chosen) with chosen = 2^t c / b gives 2^(-sum t) prod(b) / prod(c).
    std::int64_t twos = 0;
    std::vector<BigIntHandle> numerator, denominator;
    numerator.reserve(x.size());
    denominator.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Rational& chosen = labels[i] == 1 ? x[i] : x.complement(i);
        twos -= chosen.two_exponent();
        numerator.push_back(chosen.odd_denominator_handle());
        denominator.push_back(chosen.odd_numerator_handle());
    }
    return ExactScore(FactoredRational(twos, std::move(numerator), std::move(denominator)), x.size());
}

DecimalScore logloss_decimal(const ExactScore& score, int digits, Normalization normalization) {
    require_digits(digits);
    if (score.n == 0) throw std::invalid_argument("score carries no dataset size");
    const auto& value = score.value;
    if (value.two_exponent() == 0 && value.numerator_factors().empty() && value.denominator_factors().empty()) {
        return DecimalScore::parse(zero_text(digits), ScoreKind::logloss);
    }

    mpfr_prec_t precision = std::max<mpfr_prec_t>(64, static_cast<mpfr_prec_t>(8 * digits + 32));
    while (precision <= kMaxWorkingPrecision) {
        Mpfr lo(precision), hi(precision), ln2_lo(precision), ln2_hi(precision), term(precision);
        mpfr_const_log2(ln2_lo.get(), MPFR_RNDD);
        mpfr_const_log2(ln2_hi.get(), MPFR_RNDU);
        const auto twos = static_cast<long>(value.two_exponent());
        if (twos >= 0) {
            mpfr_mul_si(lo.get(), ln2_lo.get(), twos, MPFR_RNDD);
            mpfr_mul_si(hi.get(), ln2_hi.get(), twos, MPFR_RNDU);
        } else {
            mpfr_mul_si(lo.get(), ln2_hi.get(), twos, MPFR_RNDD);
            mpfr_mul_si(hi.get(), ln2_lo.get(), twos, MPFR_RNDU);
        }
        for (const auto& f : value.numerator_factors()) {
            add_log_bounds(lo.get(), hi.get(), *f, +1, ln2_lo.get(), ln2_hi.get());
        }
        for (const auto& f : value.denominator_factors()) {
            add_log_bounds(lo.get(), hi.get(), *f, -1, ln2_lo.get(), ln2_hi.get());
        }
        if (normalization == Normalization::per_point) {
            mpfr_div_ui(lo.get(), lo.get(), static_cast<unsigned long>(score.n), MPFR_RNDD);
            mpfr_div_ui(hi.get(), hi.get(), static_cast<unsigned long>(score.n), MPFR_RNDU);
        }
        if (mpfr_sgn(hi.get()) < 0) throw std::domain_error("score below 1 corresponds to a negative Log-Loss");
        if (mpfr_sgn(lo.get()) > 0) {
            auto low = decimal_digits(lo.get(), digits);
            auto high = decimal_digits(hi.get(), digits);
            if (low == high) {
                return DecimalScore::parse(scientific_text(low.first, static_cast<long>(low.second) - 1),
                                           ScoreKind::logloss);
            }
        }
        precision *= 2;
    }
    throw std::runtime_error("Log-Loss rounding did not settle within the working precision limit");
}

DecimalScore logloss_decimal(const PredictionVector& x, const Labeling& labels, int digits,
                             Normalization normalization) {
    return logloss_decimal(exact_score(x, labels), digits, normalization);
}

ExactScore exact_score_multiclass(const PredictionMatrix& v, const ClassLabeling& labels) {
    if (v.size() != labels.size()) {
        throw std::invalid_argument("prediction matrix has " + std::to_string(v.size()) + " rows but labeling has " +
                                    std::to_string(labels.size()));
    }
    if (v.class_count() != labels.class_count()) {
        throw std::invalid_argument("prediction matrix and labeling disagree on the class count");
    }
    std::int64_t twos = 0;
    std::vector<BigIntHandle> numerator, denominator;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Rational& chosen = v.row(i)[labels[i] - 1];
        twos -= chosen.two_exponent();
        numerator.push_back(chosen.odd_denominator_handle());
        denominator.push_back(chosen.odd_numerator_handle());
    }
    return ExactScore(FactoredRational(twos, std::move(numerator), std::move(denominator)), v.size());
}

std::pair<std::uint64_t, std::uint64_t> auc_counts(std::span<const TieGroup> ascending) {
    std::uint64_t twice_concordant_plus_ties = 0;
    std::uint64_t negatives_below = 0;
    std::uint64_t positives = 0;
    for (const auto& group : ascending) {
        twice_concordant_plus_ties += group.positives * (2 * negatives_below + group.negatives);
        negatives_below += group.negatives;
        positives += group.positives;
    }
    return {twice_concordant_plus_ties, 2 * positives * negatives_below};
}

std::optional<Rational> auc_exact(const PredictionVector& x, const Labeling& labels) {
    if (x.size() != labels.size()) {
        throw std::invalid_argument("prediction vector has " + std::to_string(x.size()) + " entries but labeling has " +
                                    std::to_string(labels.size()));
    }
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<TieGroup> groups;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (k == 0 || x[order[k]] != x[order[k - 1]]) groups.emplace_back();
        (labels[order[k]] == 1 ? groups.back().positives : groups.back().negatives) += 1;
    }
    const auto [num, den] = auc_counts(groups);
    if (den == 0) return std::nullopt;
    return Rational(BigInt(static_cast<unsigned long>(num)), BigInt(static_cast<unsigned long>(den)));
}

DecimalScore auc(const PredictionVector& x, const Labeling& labels, int digits) {
    require_digits(digits);
    const auto value = auc_exact(x, labels);
    if (!value) return DecimalScore::not_defined(digits);
    return DecimalScore::parse(round_significant(*value, digits), ScoreKind::auc);
}

}  // namespace llprobe
