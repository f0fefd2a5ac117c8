#include "llprobe/mia.hpp"

#include <set>
#include <stdexcept>

namespace llprobe {

CandidateSet::CandidateSet(std::vector<std::string> ids) : ids_(std::move(ids)) {
    if (ids_.empty()) throw std::invalid_argument("candidate set is empty");
    if (std::set<std::string>(ids_.begin(), ids_.end()).size() != ids_.size()) {
        throw std::invalid_argument("candidate ids must be unique");
    }
}

CandidateSet CandidateSet::numbered(std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) ids.push_back("d" + std::to_string(i));
    return CandidateSet(std::move(ids));
}

std::string to_string(AttackMode mode) {
    switch (mode) {
        case AttackMode::exact_twin:
            return "exact-twin";
        case AttackMode::exact_binary:
            return "exact-binary";
        case AttackMode::fixed_precision:
            return "fixed-precision";
    }
    return "unknown";
}

CuratorOracle::CuratorOracle(MembershipVector hidden, int digits, Normalization normalization)
    : hidden_(std::move(hidden)), digits_(digits), normalization_(normalization) {
    if (hidden_.size() == 0) throw std::invalid_argument("hidden membership is empty");
    if (digits_ < 0) throw std::invalid_argument("digit count must not be negative");
}

void CuratorOracle::check_length(const PredictionVector& predictions) const {
    if (predictions.size() != hidden_.size()) {
        throw std::invalid_argument("prediction vector has " + std::to_string(predictions.size()) +
                                    " entries, the candidate set has " + std::to_string(hidden_.size()));
    }
}

ExactScore CuratorOracle::score(const PredictionVector& predictions) {
    check_length(predictions);
    ++queries_;
    return exact_score(predictions, hidden_);
}

DecimalAnswer CuratorOracle::answer(const PredictionVector& predictions) {
    if (digits_ == 0) throw std::logic_error("curator has no digit count for rounded answers");
    check_length(predictions);
    ++queries_;
    return {logloss_decimal(predictions, hidden_, digits_, normalization_), auc(predictions, hidden_, digits_)};
}

double CuratorOracle::evaluate(const AttackReport& report) const {
    if (report.recovered.size() != hidden_.size()) {
        throw std::invalid_argument("recovered vector length differs from the candidate set");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < hidden_.size(); ++i) correct += report.recovered[i] == hidden_[i];
    return static_cast<double>(correct) / static_cast<double>(hidden_.size());
}

AttackReport one_query_attack(const CandidateSet& candidates, ExactOracle& oracle, AttackMode mode) {
    const std::size_t n = candidates.size();
    switch (mode) {
        case AttackMode::exact_twin:
            return {mode, 1, decode_twin_prime(oracle.score(build_twin_prime_vector(n)), n), std::nullopt};
        case AttackMode::exact_binary:
            return {mode, 1, decode_binary(oracle.score(build_binary_vector(n).entries), n), std::nullopt};
        case AttackMode::fixed_precision:
            break;
    }
    throw std::invalid_argument("fixed-precision mode needs a rounding oracle");
}

AttackReport fixed_precision_attack(const CandidateSet& candidates, DecimalOracle& oracle, int digits,
                                    const BatchedInferenceOptions& options) {
    auto result = batched_inference(candidates.size(), digits, oracle, options);
    return {AttackMode::fixed_precision, result.queries, std::move(result.labels), std::nullopt};
}

}  // namespace llprobe
