#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "llprobe/exact.hpp"
#include "llprobe/mia.hpp"
#include "llprobe/precision.hpp"
#include "llprobe/primes.hpp"
#include "llprobe/wire.hpp"

using namespace llprobe;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Labeling random_labeling(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng() & 1U);
    return Labeling(std::move(bits));
}

Labeling from_mask(std::uint64_t mask, std::size_t n) {
    std::vector<std::uint8_t> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = static_cast<std::uint8_t>((mask >> i) & 1U);
    return Labeling(std::move(bits));
}

std::string run_cli(const std::string& args, int& status) {
    const std::string command = std::string(LLPROBE_CLI) + " " + args + " 2>/dev/null";
    std::string out;
    FILE* pipe = popen(command.c_str(), "r");
    if (pipe == nullptr) {
        status = -1;
        return out;
    }
    char buffer[4096];
    std::size_t got = 0;
    while ((got = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) out.append(buffer, got);
    const int raw = pclose(pipe);
    status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return out;
}

Outcome score_table() {
    const auto x = build_twin_prime_vector(2);
    const std::vector<std::pair<const char*, const char*>> expected{
        {"00", "91/4"}, {"01", "91/22"}, {"10", "91/10"}, {"11", "91/55"}};
    std::string got;
    bool ok = true;
    for (const auto& [labels, score] : expected) {
        const auto text = exact_score(x, Labeling::parse(labels)).rational().to_string();
        ok = ok && text == score;
        got += std::string(labels) + "->" + text + " ";
    }
    return {ok, got};
}

Outcome decoding_example() {
    const auto labels = decode_twin_prime(ExactScore(Rational::parse("1729/170"), 0));
    return {labels.to_string() == "101" && labels.size() == 3,
            "decoded " + labels.to_string() + ", n = " + std::to_string(labels.size())};
}

Outcome binary_examples() {
    const auto s13 = exact_score(build_binary_vector(4).entries, Labeling::parse("1011"));
    const auto exponent = -s13.value.two_exponent();
    BigInt numerator;
    mpz_setbit(numerator.get_mpz_t(), 32);
    numerator -= 1;
    const ExactScore s18(Rational(numerator, BigInt(1) << 18), 5);
    const auto labels = decode_binary(s18, 5);
    return {exponent == 13 && s13.rational().denominator() == 8192 && labels.to_string() == "01001",
            "1011 -> exponent " + std::to_string(exponent) + "; exponent 18 -> " + labels.to_string()};
}

Outcome precision_formulas() {
    const int a = min_digits_for_separation(Rational::parse_decimal("0.2"));
    const int b = min_digits_for_separation(Rational::parse_decimal("0.002"));
    const auto q = query_bound(100, 15);
    return {a == 1 && b == 3 && q == 2,
            "phi(0.2) = " + std::to_string(a) + ", phi(0.002) = " + std::to_string(b) +
                ", query_bound(100, 15) = " + std::to_string(q)};
}

Outcome tuple_example() {
    const PredictionVector x({Rational::parse_decimal("0.2"), Rational::parse_decimal("0.4"),
                              Rational::parse_decimal("0.6")});
    std::set<std::pair<std::string, std::string>> tuples;
    for (std::uint64_t mask = 0; mask < 8; ++mask) {
        const auto labels = from_mask(mask, 3);
        tuples.insert({auc(x, labels, 2).wire(), logloss_decimal(x, labels, 2).text()});
    }
    return {tuples.size() == 8, std::to_string(tuples.size()) + " distinct tuples"};
}

Outcome injectivity() {
    std::size_t collisions = 0;
    for (std::size_t n = 1; n <= 12; ++n) {
        const auto twin = build_twin_prime_vector(n);
        const auto binary = build_binary_vector(n);
        std::set<std::string> twin_scores, binary_scores;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            const auto labels = from_mask(mask, n);
            twin_scores.insert(exact_score(twin, labels).rational().to_string());
            binary_scores.insert(exact_score(binary.entries, labels).rational().to_string());
        }
        collisions += 2 * (std::size_t{1} << n) - twin_scores.size() - binary_scores.size();
    }
    return {collisions == 0, std::to_string(collisions) + " collisions over n = 1..12"};
}

Outcome round_trips() {
    std::mt19937_64 rng(2024);
    std::size_t mismatches = 0;
    const auto twin = build_twin_prime_vector(64);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto labels = random_labeling(rng, 64);
        if (!(decode_twin_prime(exact_score(twin, labels), 64) == labels)) ++mismatches;
    }
    const auto binary = build_binary_vector(32);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto labels = random_labeling(rng, 32);
        if (!(decode_binary(exact_score(binary.entries, labels), 32) == labels)) ++mismatches;
    }
    std::size_t multiclass = 0;
    for (unsigned k = 2; k <= 5; ++k) {
        for (std::size_t n = 1; n <= 6; ++n) {
            const auto m = build_multiclass_matrix(n, k);
            std::size_t total = 1;
            for (std::size_t i = 0; i < n; ++i) total *= k;
            for (std::size_t code = 0; code < total; ++code) {
                std::vector<unsigned> classes(n);
                auto c = code;
                for (auto& v : classes) {
                    v = static_cast<unsigned>(c % k) + 1;
                    c /= k;
                }
                const ClassLabeling labels(classes, k);
                ++multiclass;
                if (!(decode_multiclass(exact_score_multiclass(m, labels), n, k) == labels)) ++mismatches;
            }
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches over 1000 twin, 1000 binary and " +
                                 std::to_string(multiclass) + " multi-class labelings"};
}

class Curator : public DecimalOracle {
public:
    Curator(Labeling hidden, int phi) : hidden_(std::move(hidden)), phi_(phi) {}
    DecimalAnswer answer(const PredictionVector& x) override {
        return {logloss_decimal(x, hidden_, phi_), auc(x, hidden_, phi_)};
    }
    int digits() const override { return phi_; }

private:
    Labeling hidden_;
    int phi_;
};

Outcome fixed_precision() {
    std::mt19937_64 rng(2024);
    const std::size_t n = 60;
    const auto hidden = random_labeling(rng, n);
    Curator oracle(hidden, 2);
    const auto result = batched_inference(n, 2, oracle);
    std::size_t largest = 0;
    std::string sizes;
    for (const auto& batch : result.plan.batches) {
        largest = std::max(largest, batch.size);
        sizes += (sizes.empty() ? "" : ",") + std::to_string(batch.size);
    }
    const bool exact = result.labels == hidden;
    const auto bound = (n + largest - 1) / largest;
    return {exact && largest >= 12 && result.queries == bound,
            std::string(exact ? "exact" : "WRONG") + " recovery in " + std::to_string(result.queries) +
                " queries, batch sizes [" + sizes + "], largest b = " + std::to_string(largest) +
                " (needs b* >= 12)"};
}

Outcome mia_demo() {
    int first_status = 0, second_status = 0;
    const auto first = run_cli("attack-demo --n 50 --mode twin", first_status);
    const auto second = run_cli("attack-demo --n 50 --mode twin", second_status);
    const bool ok = first_status == 0 && second_status == 0 && first == second &&
                    first.find("\"queries_used\":1") != std::string::npos &&
                    first.find("\"accuracy\":1.0") != std::string::npos;
    return {ok, std::string("accuracy 1.0 and 1 query: ") +
                    (first.find("\"accuracy\":1.0") != std::string::npos ? "yes" : "no") +
                    ", identical reruns: " + (first == second ? "yes" : "no")};
}

// Replaces one prime factor occurrence of a served ESCORE with the next prime.
Outcome tamper_detection() {
    std::mt19937_64 rng(2024);
    const std::size_t n = 64;
    const auto table = twin_primes(n);
    std::vector<std::uint64_t> base{2};
    for (auto p : table.primes()) {
        base.push_back(p);
        base.push_back(p + 2);
    }
    const auto document = wire::vector_document("twin", build_twin_prime_vector(n));
    const auto request = "SCORE " + wire::dump(wire::to_json(document));
    std::size_t detected = 0, silent = 0;
    for (int trial = 0; trial < 100; ++trial) {
        wire::OracleServer server(random_labeling(rng, n), wire::OracleMode::exact);
        const auto reply = server.handle(request).value();
        const auto served = wire::parse_rational(reply.substr(reply.find(' ') + 1));
        BigInt num = served.numerator(), den = served.denominator();
        std::vector<std::pair<std::uint64_t, bool>> occurrences;
        for (bool in_denominator : {false, true}) {
            const auto f = factor_over(in_denominator ? den : num, base);
            for (const auto& [p, e] : f.exponents) {
                for (unsigned long k = 0; k < e; ++k) occurrences.emplace_back(p, in_denominator);
            }
        }
        const auto [p, in_denominator] = occurrences[rng() % occurrences.size()];
        BigInt& side = in_denominator ? den : num;
        mpz_divexact_ui(side.get_mpz_t(), side.get_mpz_t(), static_cast<unsigned long>(p));
        side *= static_cast<unsigned long>(next_prime(p));
        const auto tampered = "ESCORE " + wire::format_rational(Rational(num, den));
        try {
            decode_twin_prime(ExactScore(wire::parse_rational(tampered.substr(7)), 0), n);
            ++silent;
        } catch (const DecodeError&) {
            ++detected;
        } catch (const wire::FormatError&) {
            ++detected;
        }
    }
    return {silent == 0 && detected == 100,
            std::to_string(detected) + "/100 detected, " + std::to_string(silent) + " silent decodes"};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
        double limit_ms;  // 0 when no runtime bound applies
    };
    const std::vector<Criterion> criteria{
        {1, "score table for [5/7, 11/13]", score_table, 1.0},
        {2, "decode 1729/170", decoding_example, 1.0},
        {3, "binary exponent examples", binary_examples, 0},
        {4, "precision formulas", precision_formulas, 0},
        {5, "tuple example [0.2, 0.4, 0.6] at 2 digits", tuple_example, 10.0},
        {6, "injectivity for n <= 12", injectivity, 30000.0},
        {7, "round trips", round_trips, 60000.0},
        {8, "fixed precision n = 60, 2 digits", fixed_precision, 60000.0},
        {9, "attack-demo --n 50 --mode twin", mia_demo, 0},
        {10, "tamper detection", tamper_detection, 0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = Clock::now();
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("threw: ") + e.what()};
        }
        const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        const bool in_time = c.limit_ms == 0 || ms < c.limit_ms;
        const bool pass = outcome.pass && in_time;
        if (!pass) ++failures;
        std::ostringstream line;
        line.setf(std::ios::fixed);
        line.precision(3);
        line << (pass ? "PASS" : "FAIL") << " criterion " << c.id << ": " << c.name << " | " << outcome.detail
             << " | " << ms << " ms";
        if (c.limit_ms != 0) line << " (limit " << c.limit_ms << " ms" << (in_time ? "" : ", exceeded") << ")";
        std::cout << line.str() << std::endl;
    }
    std::cout << (10 - failures) << "/10 criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
