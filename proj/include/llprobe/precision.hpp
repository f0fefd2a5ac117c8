#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "llprobe/core.hpp"

namespace llprobe {

/// ceil(log10(1 / delta)) for 0 < delta <= 1, computed exactly.
int min_digits_for_separation(const Rational& delta);

/// floor(log2(10^phi (10^phi + 1))): the most labels a rounded (AUC, LL) pair
/// can tell apart by counting alone.
std::size_t max_unique_batch(int phi);

/// ceil(n / (6 phi)).
std::size_t query_bound(std::size_t n, int phi);

/// Batch size used by default: min(6 phi, max_unique_batch(phi)).
std::size_t default_batch_size(int phi);

/// Largest batch whose 2^b labelings are enumerated when checking a lookup.
constexpr std::size_t max_enumerable_batch = 16;

/// What an oracle sees around a batch: the full query holds exactly 1/2 at
/// every position outside the batch. Those points add ln 2 to the loss
/// whatever their label, but their labels still move the AUC. Already decoded
/// points have known labels; the rest are unknown.
struct BatchContext {
    std::size_t total_size = 0;
    std::size_t known_ones = 0;
    std::size_t known_zeros = 0;
    std::size_t unknown = 0;
    Normalization normalization = Normalization::per_point;

    static BatchContext isolated(std::size_t batch_size, Normalization normalization = Normalization::per_point);
    std::size_t outside() const { return known_ones + known_zeros + unknown; }
};

/// A rounded (AUC, Log-Loss) pair compared by its strings.
struct TupleKey {
    std::string auc;
    std::string logloss;

    friend auto operator<=>(const TupleKey&, const TupleKey&) = default;
};

/// An oracle response for a fixed-precision query.
struct DecimalAnswer {
    DecimalScore logloss;
    DecimalScore auc;

    TupleKey key() const { return {auc.wire(), logloss.wire()}; }
};

/// Batch predictions together with the inverse map from oracle responses back
/// to the batch labeling. Labelings are filed under their rounded Log-Loss;
/// labelings sharing a Log-Loss never share a possible AUC value, so the AUC
/// picks among them.
struct TupleLookup {
    std::size_t batch_size = 0;
    int phi = 0;
    BatchContext context;
    PredictionVector vector;
    std::map<std::string, std::vector<Labeling>> table;

    /// The rounded AUC values a batch labeling can produce over all labels of
    /// the unknown outside points ("ND" when a class is absent).
    std::vector<std::string> possible_aucs(const Labeling& batch_labels) const;
    /// The labeling whose possible responses include the answer.
    std::optional<Labeling> find(const DecimalAnswer& answer) const;
    /// Labelings filed in the table; 2^b for a complete lookup.
    std::size_t labeling_count() const;
};

/// Checks a candidate by enumerating every batch labeling; empty when two
/// different labelings can produce the same rounded pair.
std::optional<TupleLookup> verify_tuple_lookup(const PredictionVector& candidate, int phi,
                                               const BatchContext& context);

class LookupSearchExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tries evenly spaced and low-denominator batches first, then a seeded local
/// search that moves one entry at a time to reduce colliding labelings. The
/// budget counts candidate batches evaluated.
/// Throws std::invalid_argument when 2^b exceeds the number of distinct pairs,
/// and LookupSearchExhausted when no candidate within the budget works.
TupleLookup build_tuple_lookup(std::size_t batch_size, int phi, std::size_t budget,
                               const BatchContext& context);
TupleLookup build_tuple_lookup(std::size_t batch_size, int phi, std::size_t budget = 2000);

/// Answers (AUC, Log-Loss) on full-length prediction vectors, rounded to a
/// fixed number of significant digits.
class DecimalOracle {
public:
    virtual ~DecimalOracle() = default;
    virtual DecimalAnswer answer(const PredictionVector& predictions) = 0;
    virtual int digits() const = 0;
    virtual Normalization normalization() const { return Normalization::per_point; }
};

struct BatchRange {
    std::size_t first = 0;  // 1-based
    std::size_t size = 0;

    friend bool operator==(const BatchRange&, const BatchRange&) = default;
};

/// Batching schedule. Plans built by batched_inference also carry the lookup
/// used for each batch.
struct AttackPlan {
    std::size_t n = 0;
    int phi = 0;
    std::vector<BatchRange> batches;
    std::vector<TupleLookup> lookups;

    std::size_t query_count() const { return batches.size(); }
};

/// Static schedule with equal batches of default_batch_size(phi).
AttackPlan plan_batches(std::size_t n, int phi);

class LookupMiss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BatchedInferenceOptions {
    std::size_t search_budget = 300;
    std::optional<std::size_t> max_batch;  // defaults to default_batch_size(phi)
};

struct BatchedInferenceResult {
    Labeling labels;
    AttackPlan plan;
    std::size_t queries = 0;
};

/// Recovers n labels batch by batch. Each batch starts at the previous batch
/// size and grows while a lookup exists in its context, up to the target
/// (capped at max_enumerable_batch).
BatchedInferenceResult batched_inference(std::size_t n, int phi, DecimalOracle& oracle,
                                         const BatchedInferenceOptions& options = {});

}  // namespace llprobe
