#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "llprobe/rational.hpp"

namespace llprobe {

/// Ground-truth binary labels. Position i (0-based here) is datapoint d_{i+1}.
class Labeling {
public:
    explicit Labeling(std::vector<std::uint8_t> bits);
    /// Parses a bitstring such as "101"; index 1 is the leftmost character.
    static Labeling parse(std::string_view bits);

    std::size_t size() const { return bits_.size(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    std::span<const std::uint8_t> bits() const { return bits_; }
    std::size_t ones() const;
    std::size_t zeros() const { return size() - ones(); }
    std::string to_string() const;

    friend bool operator==(const Labeling&, const Labeling&) = default;
    friend auto operator<=>(const Labeling&, const Labeling&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// Multi-class labels in 1..K.
class ClassLabeling {
public:
    ClassLabeling(std::vector<unsigned> classes, unsigned class_count);

    std::size_t size() const { return classes_.size(); }
    unsigned class_count() const { return class_count_; }
    unsigned operator[](std::size_t i) const { return classes_[i]; }
    std::span<const unsigned> classes() const { return classes_; }
    /// Comma-separated form, e.g. "2,3".
    std::string to_string() const;

    friend bool operator==(const ClassLabeling&, const ClassLabeling&) = default;

private:
    std::vector<unsigned> classes_;
    unsigned class_count_;
};

/// Per-point predictions, each strictly inside (0, 1). The complements 1 - x_i
/// are computed once on construction; they share the denominator of x_i.
class PredictionVector {
public:
    explicit PredictionVector(std::vector<Rational> entries);

    std::size_t size() const { return entries_.size(); }
    const Rational& operator[](std::size_t i) const { return entries_[i]; }
    std::span<const Rational> entries() const { return entries_; }
    const Rational& complement(std::size_t i) const { return complements_[i]; }

private:
    std::vector<Rational> entries_;
    std::vector<Rational> complements_;
};

/// Per-point class distributions: n rows of K entries in (0, 1), each row
/// summing exactly to 1.
class PredictionMatrix {
public:
    explicit PredictionMatrix(std::vector<std::vector<Rational>> rows);

    std::size_t size() const { return rows_.size(); }
    unsigned class_count() const { return static_cast<unsigned>(rows_.front().size()); }
    std::span<const Rational> row(std::size_t i) const { return rows_[i]; }

private:
    std::vector<std::vector<Rational>> rows_;
};

/// e^(n * LL) as an exact reduced rational, together with the dataset size.
/// Scores are strictly positive; the normalization by n is folded away.
struct ExactScore {
    FactoredRational value;
    std::size_t n = 0;

    ExactScore() = default;
    ExactScore(FactoredRational value, std::size_t n) : value(std::move(value)), n(n) {}
    ExactScore(const Rational& value, std::size_t n);

    Rational rational() const { return value.to_rational(); }
    friend bool operator==(const ExactScore&, const ExactScore&) = default;
};

enum class ScoreKind { logloss, auc, auc_not_defined };

/// Whether a reported Log-Loss is divided by the dataset size.
enum class Normalization { per_point, total };

/// A score rounded to a fixed number of significant decimal digits, written
/// in normalized scientific notation ("3.2e-1", "6.93e-1", "1.0e0").
class DecimalScore {
public:
    static DecimalScore not_defined(int digits);
    /// Validates the text form; the digit count is taken from the text.
    static DecimalScore parse(std::string_view text, ScoreKind kind);
    /// Wire form: the digit string, or "ND" for an undefined AUC.
    static DecimalScore parse_wire(std::string_view text, ScoreKind kind, int digits);

    const std::string& text() const { return text_; }
    int digits() const { return digits_; }
    ScoreKind kind() const { return kind_; }
    bool defined() const { return kind_ != ScoreKind::auc_not_defined; }
    std::string wire() const { return defined() ? text_ : "ND"; }
    /// Exact value of the digit string; empty when undefined.
    std::optional<Rational> value() const;

    friend bool operator==(const DecimalScore&, const DecimalScore&) = default;

private:
    DecimalScore(std::string text, int digits, ScoreKind kind);

    std::string text_;
    int digits_ = 0;
    ScoreKind kind_ = ScoreKind::logloss;
};

/// Rounds a non-negative rational to `digits` significant digits,
/// round-half-even, in normalized scientific notation.
std::string round_significant(const Rational& value, int digits);

/// Joins a digit string and a decimal exponent: ("32", -1) -> "3.2e-1".
std::string scientific_text(std::string_view digits, long decimal_exponent);

/// e^(n LL(x, l)): the reciprocal of prod_i [x_i if l_i = 1 else 1 - x_i].
ExactScore exact_score(const PredictionVector& x, const Labeling& labels);

/// Log-Loss rounded to `digits` significant digits. The logarithm is evaluated
/// with interval bounds at increasing precision until both bounds round to
/// the same digits, so the result is the correctly rounded value.
DecimalScore logloss_decimal(const ExactScore& score, int digits,
                             Normalization normalization = Normalization::per_point);
DecimalScore logloss_decimal(const PredictionVector& x, const Labeling& labels, int digits,
                             Normalization normalization = Normalization::per_point);

/// Reciprocal of prod_i v[i][l_i].
ExactScore exact_score_multiclass(const PredictionMatrix& v, const ClassLabeling& labels);

/// Mann-Whitney AUC with half credit for ties; empty when either class is
/// absent.
std::optional<Rational> auc_exact(const PredictionVector& x, const Labeling& labels);
DecimalScore auc(const PredictionVector& x, const Labeling& labels, int digits);

/// Points sharing one prediction value, with their label counts.
struct TieGroup {
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
};

/// AUC numerator and denominator (2C + T, 2 P N) from tie groups listed in
/// increasing prediction order. Denominator 0 means not defined.
std::pair<std::uint64_t, std::uint64_t> auc_counts(std::span<const TieGroup> ascending);

}  // namespace llprobe
