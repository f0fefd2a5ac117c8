#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "llprobe/core.hpp"
#include "llprobe/mia.hpp"
#include "llprobe/precision.hpp"

namespace llprobe::wire {

using Json = nlohmann::ordered_json;

/// Input that does not follow the document or line formats.
class FormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// "p/q" with q >= 1, reduced, no signs other than a leading '-' on p and no
/// leading zeros.
Rational parse_rational(std::string_view text);
std::string format_rational(const Rational& value);

/// Binary bitstring ("10110") or comma-separated classes ("2,3").
Labeling parse_labeling(std::string_view text);
ClassLabeling parse_class_labeling(std::string_view text, unsigned class_count);

/// {kind, n, K?, entries}. Matrix entries are nested rows.
struct VectorDocument {
    std::string kind;
    std::size_t n = 0;
    std::optional<unsigned> class_count;
    std::vector<std::vector<Rational>> rows;  // one row per point for matrices
    std::vector<Rational> entries;            // per-point values for vectors

    bool is_matrix() const { return class_count.has_value(); }
    PredictionVector vector() const;
    PredictionMatrix matrix() const;
};

Json to_json(const VectorDocument& doc);
VectorDocument parse_vector_document(const Json& doc);
VectorDocument vector_document(std::string kind, const PredictionVector& x);
VectorDocument matrix_document(std::string kind, const PredictionMatrix& v);

/// Exact form {escore, n} or rounded form {ll, auc, phi}.
struct ExactScoreDocument {
    Rational escore;
    std::size_t n = 0;
};
struct DecimalScoreDocument {
    DecimalScore ll;
    DecimalScore auc;
    int phi = 0;
};
using ScoreDocument = std::variant<ExactScoreDocument, DecimalScoreDocument>;

Json to_json(const ScoreDocument& doc);
ScoreDocument parse_score_document(const Json& doc);

Json to_json(const AttackReport& report, std::size_t n);
Json plan_json(const AttackPlan& plan);

/// Parses a whole document; throws FormatError on malformed JSON.
Json parse_json(std::string_view text);
/// Compact single-line form used on the wire and in files.
std::string dump(const Json& doc);

enum class OracleMode { exact, decimal };

/// The curator side of the line protocol:
///   SCORE <vector-doc>  ->  ESCORE p/q  |  LL <d> AUC <d|ND>  |  ERR <reason>
///   QUIT                ->  (no reply, stop)
class OracleServer {
public:
    OracleServer(MembershipVector hidden, OracleMode mode, int digits = 0,
                 Normalization normalization = Normalization::per_point);

    /// The reply line without its newline; empty on QUIT.
    std::optional<std::string> handle(std::string_view line);
    /// Serves requests until QUIT or end of input.
    void serve(std::istream& in, std::ostream& out);

private:
    CuratorOracle curator_;
    OracleMode mode_;
};

/// Adversary side of the line protocol over a pair of streams.
class RemoteOracle final : public ExactOracle, public DecimalOracle {
public:
    RemoteOracle(std::istream& from_server, std::ostream& to_server, int digits = 0,
                 Normalization normalization = Normalization::per_point);

    ExactScore score(const PredictionVector& predictions) override;
    DecimalAnswer answer(const PredictionVector& predictions) override;
    int digits() const override { return digits_; }
    Normalization normalization() const override { return normalization_; }
    void quit();

private:
    std::string round_trip(const PredictionVector& predictions);

    std::istream& in_;
    std::ostream& out_;
    int digits_;
    Normalization normalization_;
};

}  // namespace llprobe::wire
