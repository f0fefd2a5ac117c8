#include "llprobe/wire.hpp"

#include <istream>
#include <ostream>

namespace llprobe::wire {

namespace {

bool is_digits(std::string_view s) {
    return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
}

bool canonical_integer(std::string_view s, bool allow_sign) {
    if (allow_sign && !s.empty() && s.front() == '-') s.remove_prefix(1);
    if (!is_digits(s)) return false;
    return s.size() == 1 || s.front() != '0';
}

const Json& field(const Json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) throw FormatError(std::string("document lacks \"") + key + "\"");
    return doc.at(key);
}

std::string string_field(const Json& doc, const char* key) {
    const Json& value = field(doc, key);
    if (!value.is_string()) throw FormatError(std::string("\"") + key + "\" must be a string");
    return value.get<std::string>();
}

std::size_t count_field(const Json& doc, const char* key) {
    const Json& value = field(doc, key);
    if (!value.is_number_unsigned()) throw FormatError(std::string("\"") + key + "\" must be a non-negative integer");
    return value.get<std::size_t>();
}

std::vector<Rational> rational_list(const Json& list) {
    if (!list.is_array()) throw FormatError("entries must be an array");
    std::vector<Rational> out;
    out.reserve(list.size());
    for (const auto& item : list) {
        if (!item.is_string()) throw FormatError("entries must be \"p/q\" strings");
        out.push_back(parse_rational(item.get<std::string>()));
    }
    return out;
}

Json rational_array(std::span<const Rational> values) {
    Json out = Json::array();
    for (const auto& v : values) out.push_back(format_rational(v));
    return out;
}

}  // namespace

Rational parse_rational(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) throw FormatError("rational must have the form p/q");
    const auto p = text.substr(0, slash);
    const auto q = text.substr(slash + 1);
    if (!canonical_integer(p, true) || !canonical_integer(q, false) || p == "-0") {
        throw FormatError("rational must have the form p/q with canonical integers");
    }
    const BigInt num(std::string(p), 10);
    const BigInt den(std::string(q), 10);
    if (den == 0) throw FormatError("rational denominator must be at least 1");
    BigInt g;
    mpz_gcd(g.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
    if (g != 1) throw FormatError("rational must be reduced");
    return Rational(num, den);
}

std::string format_rational(const Rational& value) { return value.to_string(); }

Labeling parse_labeling(std::string_view text) {
    try {
        return Labeling::parse(text);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
}

ClassLabeling parse_class_labeling(std::string_view text, unsigned class_count) {
    std::vector<unsigned> classes;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = std::min(text.find(',', start), text.size());
        const auto item = text.substr(start, comma - start);
        if (!canonical_integer(item, false) || item.size() > 9) throw FormatError("class labels must be integers");
        classes.push_back(static_cast<unsigned>(std::stoul(std::string(item))));
        start = comma + 1;
    }
    try {
        return ClassLabeling(std::move(classes), class_count);
    } catch (const std::invalid_argument& e) {
        throw FormatError(e.what());
    }
}

PredictionVector VectorDocument::vector() const {
    if (is_matrix()) throw FormatError("document holds a matrix, not a vector");
    return PredictionVector(entries);
}

PredictionMatrix VectorDocument::matrix() const {
    if (!is_matrix()) throw FormatError("document holds a vector, not a matrix");
    return PredictionMatrix(rows);
}

Json to_json(const VectorDocument& doc) {
    Json out;
    out["kind"] = doc.kind;
    out["n"] = doc.n;
    if (doc.class_count) {
        out["K"] = *doc.class_count;
        Json rows = Json::array();
        for (const auto& row : doc.rows) rows.push_back(rational_array(row));
        out["entries"] = std::move(rows);
    } else {
        out["entries"] = rational_array(doc.entries);
    }
    return out;
}

VectorDocument parse_vector_document(const Json& doc) {
    VectorDocument out;
    out.kind = string_field(doc, "kind");
    out.n = count_field(doc, "n");
    const Json& entries = field(doc, "entries");
    if (!entries.is_array()) throw FormatError("entries must be an array");
    if (doc.contains("K")) {
        out.class_count = static_cast<unsigned>(count_field(doc, "K"));
        for (const auto& row : entries) {
            out.rows.push_back(rational_list(row));
            if (out.rows.back().size() != *out.class_count) throw FormatError("matrix row length differs from K");
        }
        if (out.rows.size() != out.n) throw FormatError("length");
        PredictionMatrix check(out.rows);
    } else {
        out.entries = rational_list(entries);
        if (out.entries.size() != out.n) throw FormatError("length");
        PredictionVector check(out.entries);
    }
    return out;
}

VectorDocument vector_document(std::string kind, const PredictionVector& x) {
    VectorDocument doc;
    doc.kind = std::move(kind);
    doc.n = x.size();
    doc.entries.assign(x.entries().begin(), x.entries().end());
    return doc;
}

VectorDocument matrix_document(std::string kind, const PredictionMatrix& v) {
    VectorDocument doc;
    doc.kind = std::move(kind);
    doc.n = v.size();
    doc.class_count = v.class_count();
    for (std::size_t i = 0; i < v.size(); ++i) doc.rows.emplace_back(v.row(i).begin(), v.row(i).end());
    return doc;
}

Json to_json(const ScoreDocument& doc) {
    Json out;
    if (const auto* exact = std::get_if<ExactScoreDocument>(&doc)) {
        out["escore"] = format_rational(exact->escore);
        out["n"] = exact->n;
    } else {
        const auto& decimal = std::get<DecimalScoreDocument>(doc);
        out["ll"] = decimal.ll.wire();
        out["auc"] = decimal.auc.wire();
        out["phi"] = decimal.phi;
    }
    return out;
}

ScoreDocument parse_score_document(const Json& doc) {
    if (doc.is_object() && doc.contains("escore")) {
        return ExactScoreDocument{parse_rational(string_field(doc, "escore")), count_field(doc, "n")};
    }
    if (doc.is_object() && doc.contains("ll")) {
        const auto phi = static_cast<int>(count_field(doc, "phi"));
        try {
            auto ll = DecimalScore::parse_wire(string_field(doc, "ll"), ScoreKind::logloss, phi);
            auto auc_score = DecimalScore::parse_wire(string_field(doc, "auc"), ScoreKind::auc, phi);
            return DecimalScoreDocument{std::move(ll), std::move(auc_score), phi};
        } catch (const FormatError&) {
            throw;
        } catch (const std::invalid_argument& e) {
            throw FormatError(e.what());
        }
    }
    throw FormatError("score document needs \"escore\" or \"ll\"");
}

Json to_json(const AttackReport& report, std::size_t n) {
    Json out;
    out["mode"] = to_string(report.mode);
    out["n"] = n;
    out["queries_used"] = report.queries_used;
    out["recovered"] = report.recovered.to_string();
    if (report.accuracy) {
        out["accuracy"] = *report.accuracy;
    } else {
        out["accuracy"] = nullptr;
    }
    return out;
}

Json plan_json(const AttackPlan& plan) {
    Json out;
    out["n"] = plan.n;
    out["phi"] = plan.phi;
    out["max_unique_batch"] = max_unique_batch(plan.phi);
    out["query_bound"] = query_bound(plan.n, plan.phi);
    out["queries"] = plan.query_count();
    Json batches = Json::array();
    for (const auto& batch : plan.batches) batches.push_back({{"first", batch.first}, {"size", batch.size}});
    out["batches"] = std::move(batches);
    return out;
}

Json parse_json(std::string_view text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw FormatError(std::string("malformed document: ") + e.what());
    }
}

std::string dump(const Json& doc) { return doc.dump(); }

OracleServer::OracleServer(MembershipVector hidden, OracleMode mode, int digits, Normalization normalization)
    : curator_(std::move(hidden), digits, normalization), mode_(mode) {
    if (mode_ == OracleMode::decimal && digits < 1) throw std::invalid_argument("decimal mode needs digits >= 1");
}

std::optional<std::string> OracleServer::handle(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line == "QUIT") return std::nullopt;
    constexpr std::string_view verb = "SCORE ";
    if (!line.starts_with(verb)) return "ERR command";
    VectorDocument doc;
    try {
        doc = parse_vector_document(parse_json(line.substr(verb.size())));
    } catch (const std::exception& e) {
        const std::string reason = e.what();
        if (reason == "length") return "ERR length";
        return "ERR document";
    }
    if (doc.is_matrix()) return "ERR document";
    const PredictionVector x = doc.vector();
    try {
        if (mode_ == OracleMode::exact) return "ESCORE " + format_rational(curator_.score(x).rational());
        const auto reply = curator_.answer(x);
        return "LL " + reply.logloss.wire() + " AUC " + reply.auc.wire();
    } catch (const std::invalid_argument&) {
        return "ERR length";
    }
}

void OracleServer::serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        const auto reply = handle(line);
        if (!reply) break;
        out << *reply << '\n' << std::flush;
    }
}

RemoteOracle::RemoteOracle(std::istream& from_server, std::ostream& to_server, int digits,
                           Normalization normalization)
    : in_(from_server), out_(to_server), digits_(digits), normalization_(normalization) {}

std::string RemoteOracle::round_trip(const PredictionVector& predictions) {
    out_ << "SCORE " << dump(to_json(vector_document("query", predictions))) << '\n' << std::flush;
    std::string reply;
    if (!std::getline(in_, reply)) throw std::runtime_error("oracle closed the connection");
    if (reply.starts_with("ERR ")) throw std::runtime_error("oracle error: " + reply.substr(4));
    return reply;
}

ExactScore RemoteOracle::score(const PredictionVector& predictions) {
    const auto reply = round_trip(predictions);
    constexpr std::string_view tag = "ESCORE ";
    if (!reply.starts_with(tag)) throw std::runtime_error("unexpected oracle reply: " + reply);
    return ExactScore(parse_rational(std::string_view(reply).substr(tag.size())), predictions.size());
}

DecimalAnswer RemoteOracle::answer(const PredictionVector& predictions) {
    const auto reply = round_trip(predictions);
    const auto auc_at = reply.find(" AUC ");
    if (!reply.starts_with("LL ") || auc_at == std::string::npos) {
        throw std::runtime_error("unexpected oracle reply: " + reply);
    }
    const auto ll = std::string_view(reply).substr(3, auc_at - 3);
    const auto auc_text = std::string_view(reply).substr(auc_at + 5);
    return {DecimalScore::parse_wire(ll, ScoreKind::logloss, digits_),
            DecimalScore::parse_wire(auc_text, ScoreKind::auc, digits_)};
}

void RemoteOracle::quit() { out_ << "QUIT\n" << std::flush; }

}  // namespace llprobe::wire
