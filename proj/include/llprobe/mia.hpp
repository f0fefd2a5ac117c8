#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "llprobe/core.hpp"
#include "llprobe/exact.hpp"
#include "llprobe/precision.hpp"

namespace llprobe {

/// The attacked datapoints, in the order predictions are submitted.
class CandidateSet {
public:
    explicit CandidateSet(std::vector<std::string> ids);
    /// Ids "d1", "d2", ..., "dn".
    static CandidateSet numbered(std::size_t n);

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }

private:
    std::vector<std::string> ids_;
};

/// Membership bits over the candidate order (1 = in the training set).
using MembershipVector = Labeling;

enum class AttackMode { exact_twin, exact_binary, fixed_precision };

std::string to_string(AttackMode mode);

struct AttackReport {
    AttackMode mode;
    std::size_t queries_used;
    MembershipVector recovered;
    /// Filled in by the curator side only.
    std::optional<double> accuracy;
};

/// Answers exact scores e^(n LL) for submitted prediction vectors.
class ExactOracle {
public:
    virtual ~ExactOracle() = default;
    virtual ExactScore score(const PredictionVector& predictions) = 0;
};

/// The auditing curator: holds the hidden membership and answers truthfully
/// on the whole candidate set. Exact and rounded answers are both available;
/// the rounded ones need a digit count.
class CuratorOracle final : public ExactOracle, public DecimalOracle {
public:
    explicit CuratorOracle(MembershipVector hidden, int digits = 0,
                           Normalization normalization = Normalization::per_point);

    ExactScore score(const PredictionVector& predictions) override;
    DecimalAnswer answer(const PredictionVector& predictions) override;
    int digits() const override { return digits_; }
    Normalization normalization() const override { return normalization_; }

    std::size_t queries() const { return queries_; }
    /// Fraction of candidates whose membership the report got right.
    double evaluate(const AttackReport& report) const;

private:
    void check_length(const PredictionVector& predictions) const;

    MembershipVector hidden_;
    int digits_;
    Normalization normalization_;
    std::size_t queries_ = 0;
};

/// Builds the mode's vector, issues one query and decodes it. Decoder errors
/// propagate.
AttackReport one_query_attack(const CandidateSet& candidates, ExactOracle& oracle, AttackMode mode);

/// Batched inference from rounded (AUC, LL) answers.
AttackReport fixed_precision_attack(const CandidateSet& candidates, DecimalOracle& oracle, int digits,
                                    const BatchedInferenceOptions& options = {});

}  // namespace llprobe
