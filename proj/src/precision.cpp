#include "llprobe/precision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>

#include "llprobe/exact.hpp"
#include "mpfr_value.hpp"

namespace llprobe {

namespace {

void require_phi(int phi) {
    if (phi < 1) throw std::invalid_argument("significant digits must be at least 1");
}

BigInt power_of_ten(int exponent) {
    BigInt out;
    mpz_ui_pow_ui(out.get_mpz_t(), 10, static_cast<unsigned long>(exponent));
    return out;
}

Labeling labeling_from_mask(std::uint64_t mask, std::size_t size) {
    std::vector<std::uint8_t> bits(size);
    for (std::size_t i = 0; i < size; ++i) bits[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
    return Labeling(std::move(bits));
}

// Batch entries grouped by value in ascending order, with the group holding
// the outside points (value 1/2) marked. The group exists even when no batch
// entry equals 1/2.
struct SlotLayout {
    std::vector<std::vector<std::size_t>> members;
    std::size_t half_slot = 0;
};

SlotLayout layout_slots(const PredictionVector& batch) {
    const Rational half(BigInt(1), BigInt(2));
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return batch[a] < batch[b]; });

    SlotLayout layout;
    std::vector<Rational> values;
    bool half_placed = false;
    const auto open_group = [&](const Rational& value) {
        values.push_back(value);
        layout.members.emplace_back();
    };
    for (auto i : order) {
        const Rational& value = batch[i];
        if (!half_placed && half <= value) {
            layout.half_slot = values.size();
            open_group(half);
            half_placed = true;
        }
        if (values.empty() || values.back() != value) open_group(value);
        layout.members.back().push_back(i);
    }
    if (!half_placed) {
        layout.half_slot = values.size();
        open_group(half);
    }
    return layout;
}

Rational half_rational() { return Rational(BigInt(1), BigInt(2)); }

long double negative_log(const Rational& x) {
    detail::MpfrValue value(128);
    mpfr_set_q(value.get(), x.to_mpq().get_mpq_t(), MPFR_RNDN);
    mpfr_log(value.get(), value.get(), MPFR_RNDN);
    return -mpfr_get_ld(value.get(), MPFR_RNDN);
}

// Digits of v > 0 from a long double whose relative error is below margin.
// Empty when v is too close to a rounding boundary to decide.
std::optional<std::string> round_fast(long double v, int phi, long double margin) {
    if (phi > 17 || !(v > 0) || !std::isfinite(v)) return std::nullopt;
    const long double low = std::pow(10.0L, phi - 1);
    const long double high = low * 10;
    long exponent = std::lround(std::floor(std::log10(v)));
    long double scaled = v * std::pow(10.0L, static_cast<long double>(phi - 1 - exponent));
    if (scaled < low) {
        --exponent;
        scaled *= 10;
    } else if (scaled >= high) {
        ++exponent;
        scaled /= 10;
    }
    const long double slack = 2 * margin * scaled;
    if (scaled - low <= slack || high - scaled <= slack) return std::nullopt;
    const long double whole = std::floor(scaled);
    const long double fraction = scaled - whole;
    if (std::fabs(fraction - 0.5L) <= slack) return std::nullopt;
    auto digits = static_cast<std::uint64_t>(whole) + (fraction > 0.5L ? 1 : 0);
    if (static_cast<long double>(digits) >= high) {
        digits /= 10;
        ++exponent;
    }
    return scientific_text(std::to_string(digits), exponent);
}

// AUC (numerator, denominator) counts of a batch labeling for every number of
// unknown outside ones.
void auc_counts_over_unknowns(const SlotLayout& layout, std::uint64_t mask, const BatchContext& context,
                              std::vector<TieGroup>& groups,
                              std::vector<std::pair<std::uint64_t, std::uint64_t>>& out) {
    out.clear();
    groups.assign(layout.members.size(), TieGroup{});
    for (std::size_t s = 0; s < layout.members.size(); ++s) {
        for (auto i : layout.members[s]) ((mask >> i) & 1U ? groups[s].positives : groups[s].negatives) += 1;
    }
    auto& half = groups[layout.half_slot];
    half.positives += context.known_ones;
    half.negatives += context.known_zeros + context.unknown;
    for (std::size_t unknown_ones = 0;; ++unknown_ones) {
        out.push_back(auc_counts(groups));
        if (unknown_ones == context.unknown) break;
        half.positives += 1;
        half.negatives -= 1;
    }
}

std::string rounded_auc(std::uint64_t num, std::uint64_t den, int phi) {
    if (den == 0) return "ND";
    return round_significant(Rational(BigInt(static_cast<unsigned long>(num)), BigInt(static_cast<unsigned long>(den))),
                             phi);
}

std::uint64_t mask_of(const Labeling& labels) {
    std::uint64_t mask = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) mask |= std::uint64_t{labels[i]} << i;
    return mask;
}

// Rounded responses for every labeling of one batch in its context. Texts are
// interned so responses compare as integer ids.
class BatchEvaluator {
public:
    BatchEvaluator(const PredictionVector& batch, int phi, const BatchContext& context)
        : batch_(batch), phi_(phi), context_(context), layout_(layout_slots(batch)) {
        const std::size_t b = batch.size();
        one_terms_.reserve(b);
        zero_terms_.reserve(b);
        for (std::size_t i = 0; i < b; ++i) {
            one_terms_.push_back(negative_log(batch[i]));
            zero_terms_.push_back(negative_log(batch.complement(i)));
        }
        outside_term_ = static_cast<long double>(context.outside()) * std::log(2.0L);
        divisor_ = context.normalization == Normalization::per_point ? static_cast<long double>(context.total_size)
                                                                      : 1.0L;
        margin_ = static_cast<long double>(b + 8) * std::ldexp(1.0L, -63);
        const auto total = static_cast<std::uint64_t>(context.total_size);
        auc_key_base_ = 2 * total * total + 1;
    }

    std::size_t batch_size() const { return batch_.size(); }
    std::uint64_t labelings() const { return std::uint64_t{1} << batch_.size(); }

    std::uint32_t logloss_id(std::uint64_t mask) {
        long double sum = outside_term_;
        for (std::size_t i = 0; i < batch_.size(); ++i) sum += (mask >> i) & 1U ? one_terms_[i] : zero_terms_[i];
        if (auto text = round_fast(sum / divisor_, phi_, margin_)) return intern(logloss_ids_, logloss_texts_, *text);
        return intern(logloss_ids_, logloss_texts_, exact_logloss(mask));
    }

    // Distinct AUC ids over every count of unknown outside ones.
    void auc_ids(std::uint64_t mask, std::vector<std::uint32_t>& out) {
        auc_counts_over_unknowns(layout_, mask, context_, groups_, counts_);
        out.clear();
        for (const auto& [num, den] : counts_) {
            const auto id = auc_id(num, den);
            if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
        }
    }

    const std::string& logloss_text(std::uint32_t id) const { return logloss_texts_[id]; }
    const std::string& auc_text(std::uint32_t id) const { return auc_texts_[id]; }

private:
    static std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& ids, std::vector<std::string>& texts,
                                const std::string& text) {
        const auto [it, inserted] = ids.try_emplace(text, static_cast<std::uint32_t>(texts.size()));
        if (inserted) texts.push_back(text);
        return it->second;
    }

    std::string exact_logloss(std::uint64_t mask) const {
        const Labeling labels = labeling_from_mask(mask, batch_.size());
        const auto outside = static_cast<std::int64_t>(context_.outside());
        const ExactScore full(exact_score(batch_, labels).value.times_power_of_two(outside), context_.total_size);
        return logloss_decimal(full, phi_, context_.normalization).text();
    }

    std::uint32_t auc_id(std::uint64_t num, std::uint64_t den) {
        const std::uint64_t key = num * auc_key_base_ + den;
        const auto it = auc_by_counts_.find(key);
        if (it != auc_by_counts_.end()) return it->second;
        const auto id = intern(auc_ids_, auc_texts_, rounded_auc(num, den, phi_));
        auc_by_counts_.emplace(key, id);
        return id;
    }

    const PredictionVector& batch_;
    int phi_;
    BatchContext context_;
    SlotLayout layout_;
    std::vector<long double> one_terms_;
    std::vector<long double> zero_terms_;
    long double outside_term_ = 0;
    long double divisor_ = 1;
    long double margin_ = 0;
    std::vector<TieGroup> groups_;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> counts_;
    std::uint64_t auc_key_base_ = 1;
    std::unordered_map<std::string, std::uint32_t> logloss_ids_;
    std::vector<std::string> logloss_texts_;
    std::unordered_map<std::string, std::uint32_t> auc_ids_;
    std::vector<std::string> auc_texts_;
    std::unordered_map<std::uint64_t, std::uint32_t> auc_by_counts_;
};

void check_batch(std::size_t b, int phi, const BatchContext& context) {
    require_phi(phi);
    if (b == 0) throw std::invalid_argument("batch size must be at least 1");
    if (b > max_unique_batch(phi)) {
        throw std::invalid_argument("2^" + std::to_string(b) + " labelings exceed the distinct rounded pairs at " +
                                    std::to_string(phi) + " digits");
    }
    if (b > max_enumerable_batch) throw std::invalid_argument("batch too large to enumerate");
    if (context.total_size != b + context.outside()) throw std::invalid_argument("batch context size does not add up");
}

// Labelings that share a response with another labeling. The AUC only needs
// checking among labelings with the same rounded Log-Loss. Counting stops once
// it exceeds limit. The Log-Loss id of every labeling is left in logloss.
std::size_t count_conflicts(BatchEvaluator& evaluator, std::size_t limit, std::vector<std::uint32_t>& logloss) {
    const auto count = evaluator.labelings();
    logloss.resize(count);
    for (std::uint64_t mask = 0; mask < count; ++mask) logloss[mask] = evaluator.logloss_id(mask);
    std::vector<std::uint32_t> order(count);
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return logloss[a] < logloss[b]; });

    std::size_t conflicts = 0;
    std::unordered_map<std::uint32_t, std::uint32_t> owner;
    std::vector<std::uint32_t> aucs;
    for (std::size_t first = 0; first < count;) {
        std::size_t last = first + 1;
        while (last < count && logloss[order[last]] == logloss[order[first]]) ++last;
        if (last - first > 1) {
            owner.clear();
            for (std::size_t k = first; k < last; ++k) {
                evaluator.auc_ids(order[k], aucs);
                bool clash = false;
                for (auto id : aucs) {
                    const auto [it, inserted] = owner.try_emplace(id, order[k]);
                    clash = clash || !inserted;
                }
                if (clash && ++conflicts > limit) return conflicts;
            }
        }
        first = last;
    }
    return conflicts;
}

}  // namespace

int min_digits_for_separation(const Rational& delta) {
    if (delta.sign() <= 0 || delta > Rational(1)) throw std::invalid_argument("separation must lie in (0, 1]");
    const mpq_class d = delta.to_mpq();
    int digits = 0;
    mpq_class scaled = d;
    while (scaled < 1) {
        scaled *= 10;
        ++digits;
    }
    return digits;
}

std::size_t max_unique_batch(int phi) {
    require_phi(phi);
    const BigInt p = power_of_ten(phi);
    const BigInt tuples = p * (p + 1);
    return mpz_sizeinbase(tuples.get_mpz_t(), 2) - 1;
}

std::size_t query_bound(std::size_t n, int phi) {
    require_phi(phi);
    if (n == 0) throw std::invalid_argument("dataset size must be at least 1");
    const auto per_query = 6 * static_cast<std::size_t>(phi);
    return (n + per_query - 1) / per_query;
}

std::size_t default_batch_size(int phi) { return std::min(6 * static_cast<std::size_t>(phi), max_unique_batch(phi)); }

BatchContext BatchContext::isolated(std::size_t batch_size, Normalization normalization) {
    BatchContext context;
    context.total_size = batch_size;
    context.normalization = normalization;
    return context;
}

std::vector<std::string> TupleLookup::possible_aucs(const Labeling& batch_labels) const {
    if (batch_labels.size() != batch_size) throw std::invalid_argument("labeling does not match the batch");
    std::vector<TieGroup> groups;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> counts;
    auc_counts_over_unknowns(layout_slots(vector), mask_of(batch_labels), context, groups, counts);
    std::vector<std::string> out;
    for (const auto& [num, den] : counts) {
        auto text = rounded_auc(num, den, phi);
        if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(std::move(text));
    }
    return out;
}

std::optional<Labeling> TupleLookup::find(const DecimalAnswer& answer) const {
    const auto it = table.find(answer.logloss.wire());
    if (it == table.end()) return std::nullopt;
    const auto auc_wire = answer.auc.wire();
    for (const auto& labels : it->second) {
        const auto aucs = possible_aucs(labels);
        if (std::find(aucs.begin(), aucs.end(), auc_wire) != aucs.end()) return labels;
    }
    return std::nullopt;
}

std::size_t TupleLookup::labeling_count() const {
    std::size_t count = 0;
    for (const auto& [logloss, labelings] : table) count += labelings.size();
    return count;
}

std::optional<TupleLookup> verify_tuple_lookup(const PredictionVector& candidate, int phi,
                                               const BatchContext& context) {
    check_batch(candidate.size(), phi, context);
    BatchEvaluator evaluator(candidate, phi, context);
    std::vector<std::uint32_t> logloss;
    if (count_conflicts(evaluator, 0, logloss) > 0) return std::nullopt;
    std::map<std::string, std::vector<Labeling>> table;
    for (std::uint64_t mask = 0; mask < evaluator.labelings(); ++mask) {
        table[evaluator.logloss_text(logloss[mask])].push_back(labeling_from_mask(mask, candidate.size()));
    }
    return TupleLookup{candidate.size(), phi, context, candidate, std::move(table)};
}

namespace {

// The twin-prime batch, then evenly spaced and low-denominator batches,
// skipping any that contain 1/2.
std::vector<std::vector<Rational>> structured_candidates(std::size_t b) {
    std::vector<std::vector<Rational>> out;
    // Exact scores of this batch already differ for every labeling.
    const auto twin = build_twin_prime_vector(b);
    out.emplace_back(twin.entries().begin(), twin.entries().end());
    const auto add_grid = [&](unsigned long d, unsigned long step, unsigned long offset) {
        if (offset + step * (b - 1) >= d) return;
        std::vector<Rational> entries;
        for (std::size_t i = 0; i < b; ++i) entries.emplace_back(BigInt(offset + step * i), BigInt(d));
        if (std::none_of(entries.begin(), entries.end(), [](const Rational& x) { return x == half_rational(); })) {
            out.push_back(std::move(entries));
        }
    };
    add_grid(b + 1, 1, 1);
    add_grid(2 * b, 2, 1);
    for (unsigned long d : {10UL, 20UL, 50UL, 100UL, 1000UL}) {
        for (unsigned long step = 1; step * b < d && step <= 3; ++step) add_grid(d, step, step);
    }
    return out;
}

constexpr int kLogitBits = 60;

// The probability 1 / (1 + e^-z) as m / 2^60, never exactly 0, 1 or 1/2.
Rational from_logit(double z) {
    const auto scale = std::uint64_t{1} << kLogitBits;
    const double tail = 1.0 / (1.0 + std::exp(-std::fabs(z)));
    auto m = static_cast<std::uint64_t>(std::llround(std::ldexp(1.0 - tail, kLogitBits)));
    m = std::clamp<std::uint64_t>(m, 1, scale / 2 - 1);
    if (z > 0) m = scale - m;
    return Rational(BigInt(static_cast<unsigned long>(m)), BigInt(static_cast<unsigned long>(scale)));
}

PredictionVector from_logits(const std::vector<double>& logits) {
    std::vector<Rational> entries;
    entries.reserve(logits.size());
    for (double z : logits) entries.push_back(from_logit(z));
    return PredictionVector(std::move(entries));
}

std::uint64_t search_seed(std::size_t b, int phi, const BatchContext& context) {
    std::uint64_t seed = 0x5eed;
    for (std::uint64_t part : {std::uint64_t{b}, static_cast<std::uint64_t>(phi), std::uint64_t{context.total_size},
                               std::uint64_t{context.known_ones}, std::uint64_t{context.known_zeros},
                               static_cast<std::uint64_t>(context.normalization)}) {
        seed = seed * 0x9e3779b97f4a7c15ULL + part;
    }
    return seed;
}

}  // namespace

TupleLookup build_tuple_lookup(std::size_t batch_size, int phi, std::size_t budget, const BatchContext& context) {
    check_batch(batch_size, phi, context);
    std::size_t evaluations = 0;
    for (const auto& entries : structured_candidates(batch_size)) {
        if (evaluations == budget) break;
        ++evaluations;
        if (auto lookup = verify_tuple_lookup(PredictionVector(entries), phi, context)) return std::move(*lookup);
    }

    // Local search over logits: move one entry at a time and keep moves that
    // do not add conflicts; restart from a fresh random batch periodically.
    constexpr std::size_t kRestartEvery = 150;
    std::mt19937_64 rng(search_seed(batch_size, phi, context));
    std::uniform_real_distribution<double> initial(-8.0, 8.0);
    std::uniform_int_distribution<std::size_t> pick(0, batch_size - 1);
    std::normal_distribution<double> step(0.0, 1.0);
    const double scales[] = {0.05, 0.4, 2.0};
    while (evaluations < budget) {
        std::vector<double> logits(batch_size);
        for (auto& z : logits) z = initial(rng);
        auto candidate = from_logits(logits);
        ++evaluations;
        std::vector<std::uint32_t> logloss;
        std::size_t best = [&] {
            BatchEvaluator evaluator(candidate, phi, context);
            return count_conflicts(evaluator, std::numeric_limits<std::size_t>::max(), logloss);
        }();
        for (std::size_t moves = 0; best > 0 && moves < kRestartEvery && evaluations < budget; ++moves) {
            auto trial = logits;
            const auto i = pick(rng);
            trial[i] = std::clamp(trial[i] + scales[rng() % 3] * step(rng), -40.0, 40.0);
            auto trial_candidate = from_logits(trial);
            ++evaluations;
            BatchEvaluator evaluator(trial_candidate, phi, context);
            const auto conflicts = count_conflicts(evaluator, best, logloss);
            if (conflicts <= best) {
                best = conflicts;
                logits = std::move(trial);
                candidate = std::move(trial_candidate);
            }
        }
        if (best == 0) {
            if (auto lookup = verify_tuple_lookup(candidate, phi, context)) return std::move(*lookup);
        }
    }
    throw LookupSearchExhausted("no injective batch vector of size " + std::to_string(batch_size) + " at " +
                                std::to_string(phi) + " digits within " + std::to_string(budget) + " candidates");
}

TupleLookup build_tuple_lookup(std::size_t batch_size, int phi, std::size_t budget) {
    return build_tuple_lookup(batch_size, phi, budget, BatchContext::isolated(batch_size));
}

AttackPlan plan_batches(std::size_t n, int phi) {
    require_phi(phi);
    if (n == 0) throw std::invalid_argument("dataset size must be at least 1");
    AttackPlan plan;
    plan.n = n;
    plan.phi = phi;
    const auto size = default_batch_size(phi);
    for (std::size_t first = 1; first <= n; first += size) {
        plan.batches.push_back({first, std::min(size, n - first + 1)});
    }
    return plan;
}

BatchedInferenceResult batched_inference(std::size_t n, int phi, DecimalOracle& oracle,
                                         const BatchedInferenceOptions& options) {
    require_phi(phi);
    if (n == 0) throw std::invalid_argument("dataset size must be at least 1");
    if (oracle.digits() != phi) {
        throw std::invalid_argument("oracle reports " + std::to_string(oracle.digits()) + " digits, expected " +
                                    std::to_string(phi));
    }
    const std::size_t target = std::clamp<std::size_t>(options.max_batch.value_or(default_batch_size(phi)), 1,
                                                      max_enumerable_batch);
    const Rational half(BigInt(1), BigInt(2));

    AttackPlan plan;
    plan.n = n;
    plan.phi = phi;
    std::vector<std::uint8_t> decoded;
    decoded.reserve(n);
    std::size_t known_ones = 0;
    std::size_t previous = 1;

    while (decoded.size() < n) {
        const std::size_t start = decoded.size();
        const std::size_t remaining = n - start;
        const auto search = [&](std::size_t b) -> std::optional<TupleLookup> {
            BatchContext context;
            context.total_size = n;
            context.known_ones = known_ones;
            context.known_zeros = start - known_ones;
            context.unknown = remaining - b;
            context.normalization = oracle.normalization();
            try {
                return build_tuple_lookup(b, phi, options.search_budget, context);
            } catch (const LookupSearchExhausted&) {
                return std::nullopt;
            }
        };
        // Start at the previous batch size, then grow while lookups exist, or
        // shrink until one does.
        const std::size_t limit = std::min(target, remaining);
        std::size_t b = std::min(previous, limit);
        auto lookup = search(b);
        if (lookup) {
            while (b < limit) {
                auto larger = search(b + 1);
                if (!larger) break;
                lookup = std::move(larger);
                ++b;
            }
        } else {
            while (!lookup && b > 1) lookup = search(--b);
        }
        if (!lookup) throw LookupSearchExhausted("no batch lookup found, not even for a single point");
        previous = b;

        std::vector<Rational> query(n, half);
        for (std::size_t i = 0; i < b; ++i) query[start + i] = lookup->vector[i];
        const DecimalAnswer response = oracle.answer(PredictionVector(std::move(query)));
        const auto labels = lookup->find(response);
        if (!labels) {
            throw LookupMiss("oracle response (AUC " + response.auc.wire() + ", LL " + response.logloss.wire() +
                             ") matches no labeling of batch " + std::to_string(plan.batches.size() + 1));
        }
        for (auto bit : labels->bits()) {
            decoded.push_back(bit);
            known_ones += bit;
        }
        plan.batches.push_back({start + 1, b});
        plan.lookups.push_back(std::move(*lookup));
    }
    const std::size_t queries = plan.batches.size();
    return BatchedInferenceResult{Labeling(std::move(decoded)), std::move(plan), queries};
}

}  // namespace llprobe
