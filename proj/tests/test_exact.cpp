#include <doctest.h>

#include <random>
#include <set>

#include "llprobe/exact.hpp"
#include "llprobe/primes.hpp"

using namespace llprobe;

namespace {

ExactScore escore(const char* text, std::size_t n = 0) { return ExactScore(Rational::parse(text), n); }

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

// Product of 1/x_i or 1/(1 - x_i) directly over GMP rationals.
mpq_class naive_score(const PredictionVector& x, const Labeling& labels) {
    mpq_class product(1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const mpq_class xi = x[i].to_mpq();
        product *= labels[i] ? xi : mpq_class(1 - xi);
    }
    product.canonicalize();
    return 1 / product;
}

}  // namespace

TEST_CASE("twin prime vector entries") {
    const auto x = build_twin_prime_vector(3);
    REQUIRE(x.size() == 3);
    CHECK(x[0].to_string() == "5/7");
    CHECK(x[1].to_string() == "11/13");
    CHECK(x[2].to_string() == "17/19");
    CHECK(build_twin_prime_vector(1)[0].to_string() == "5/7");
    CHECK_THROWS_AS(build_twin_prime_vector(0), std::invalid_argument);
    CHECK_THROWS_AS(build_twin_prime_vector(5, SizeGuards{.twin_prime = 4}), SizeGuardError);
}

TEST_CASE("twin prime decoding examples") {
    CHECK(decode_twin_prime(escore("1729/170")).to_string() == "101");
    CHECK(decode_twin_prime(escore("1729/8")).to_string() == "000");
    CHECK(decode_twin_prime(escore("91/4")).to_string() == "00");
    CHECK(decode_twin_prime(escore("91/55")).to_string() == "11");
    CHECK(decode_twin_prime(escore("1729/170"), 3).to_string() == "101");
    CHECK_THROWS_AS(decode_twin_prime(escore("1729/170"), 4), DecodeError);
    CHECK_THROWS_AS(decode_twin_prime(escore("1729/170", 2)), DecodeError);
}

TEST_CASE("twin prime decoder rejects malformed scores") {
    CHECK_THROWS_AS(decode_twin_prime(escore("1/1")), DecodeError);
    CHECK_THROWS_AS(decode_twin_prime(escore("1729/230")), DecodeError);    // 23 is not a lower twin
    CHECK_THROWS_AS(decode_twin_prime(escore("2717/170")), DecodeError);    // 11 * 13 * 19
    CHECK_THROWS_AS(decode_twin_prime(escore("1729/340")), DecodeError);    // extra factor of two
    CHECK_THROWS_AS(decode_twin_prime(escore("1729/850")), DecodeError);    // 5 twice
    CHECK_THROWS_AS(decode_twin_prime(escore("1729/510")), DecodeError);    // stray 3
    CHECK_THROWS_AS(decode_twin_prime(escore("1729/4")), DecodeError);      // too few zeros
}

TEST_CASE("binary vector entries") {
    const auto v = build_binary_vector(3);
    CHECK(v.n == 3);
    CHECK(v.entries[0].to_string() == "2/3");
    CHECK(v.entries[1].to_string() == "4/5");
    CHECK(v.entries[2].to_string() == "16/17");
    CHECK_THROWS_AS(build_binary_vector(0), std::invalid_argument);
    CHECK_THROWS_AS(build_binary_vector(33), SizeGuardError);
    CHECK_THROWS_AS(build_binary_vector(8, SizeGuards{.binary = 7}), SizeGuardError);
}

TEST_CASE("binary exponent examples") {
    const auto v4 = build_binary_vector(4);
    const auto s13 = exact_score(v4.entries, Labeling::parse("1011"));
    CHECK(s13.value.two_exponent() == -13);
    CHECK(s13.rational().denominator() == 8192);
    CHECK(decode_binary(s13).to_string() == "1011");

    const auto v5 = build_binary_vector(5);
    const auto s18 = exact_score(v5.entries, Labeling::parse("01001"));
    CHECK(s18.value.two_exponent() == -18);
    CHECK(decode_binary(s18, 5).to_string() == "01001");

    CHECK(decode_binary(escore("255/1"), 3).to_string() == "000");
    CHECK(decode_binary(escore("255/1")).to_string() == "000");
    CHECK(decode_binary(escore("255/32")).to_string() == "101");
}

TEST_CASE("binary decoder rejects malformed scores") {
    CHECK_THROWS_AS(decode_binary(escore("255/96")), DecodeError);   // factor 3 in the denominator
    CHECK_THROWS_AS(decode_binary(escore("254/1")), DecodeError);    // even numerator
    CHECK_THROWS_AS(decode_binary(escore("253/1")), DecodeError);    // not 2^8 - 1
    CHECK_THROWS_AS(decode_binary(escore("255/256")), DecodeError);  // exponent 8 needs 4 labels
    CHECK_THROWS_AS(decode_binary(escore("255/1"), 4), DecodeError);
    CHECK_THROWS_AS(decode_binary(escore("255/1", 4)), DecodeError);
}

TEST_CASE("binary decoding from rounded Log-Loss") {
    const auto v3 = build_binary_vector(3);
    const auto ll = logloss_decimal(v3.entries, Labeling::parse("101"), 20);
    CHECK(decode_binary_from_decimal(ll, 3).to_string() == "101");

    const auto v1 = build_binary_vector(1);
    const auto ll1 = logloss_decimal(v1.entries, Labeling::parse("1"), required_precision_binary(1));
    CHECK(decode_binary_from_decimal(ll1, 1).to_string() == "1");

    const auto v5 = build_binary_vector(5);
    const auto ll5 = logloss_decimal(v5.entries, Labeling::parse("01001"), 40);
    CHECK(decode_binary_from_decimal(ll5, 5).to_string() == "01001");

    const auto total = logloss_decimal(v5.entries, Labeling::parse("01001"), 40, Normalization::total);
    CHECK(decode_binary_from_decimal(total, 5, Normalization::total).to_string() == "01001");

    // Two digits cannot resolve 32 exponents.
    const auto coarse = logloss_decimal(v5.entries, Labeling::parse("01001"), 2);
    CHECK_THROWS_AS(decode_binary_from_decimal(coarse, 5), DecodeError);
}

TEST_CASE("required precision is monotone and sufficient") {
    CHECK(required_precision_binary(1) <= 5);
    int previous = 0;
    for (std::size_t n = 1; n <= 64; ++n) {
        const int phi = required_precision_binary(n);
        CHECK(phi >= previous);
        previous = phi;
    }
    CHECK(required_precision_binary(64) >= 20);
    CHECK_THROWS_AS(required_precision_binary(0), std::invalid_argument);

    std::mt19937_64 rng(17);
    for (std::size_t n = 1; n <= 12; ++n) {
        const auto v = build_binary_vector(n);
        const int phi = required_precision_binary(n);
        for (int trial = 0; trial < 20; ++trial) {
            const auto labels = random_labeling(rng, n);
            CHECK(decode_binary_from_decimal(logloss_decimal(v.entries, labels, phi), n) == labels);
        }
    }
}

TEST_CASE("both constructions are injective for n up to 10") {
    for (std::size_t n = 1; n <= 10; ++n) {
        const auto twin = build_twin_prime_vector(n);
        const auto binary = build_binary_vector(n);
        std::set<mpq_class> twin_scores, binary_scores;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
            const auto labels = from_mask(mask, n);
            twin_scores.insert(exact_score(twin, labels).rational().to_mpq());
            binary_scores.insert(exact_score(binary.entries, labels).rational().to_mpq());
        }
        CHECK(twin_scores.size() == (std::size_t{1} << n));
        CHECK(binary_scores.size() == (std::size_t{1} << n));
    }
}

TEST_CASE("exact scores agree with a naive product") {
    std::mt19937_64 rng(29);
    for (std::size_t n : {1, 2, 5, 9, 14}) {
        const auto twin = build_twin_prime_vector(n);
        const auto binary = build_binary_vector(n);
        for (int trial = 0; trial < 10; ++trial) {
            const auto labels = random_labeling(rng, n);
            CHECK(exact_score(twin, labels).rational().to_mpq() == naive_score(twin, labels));
            CHECK(exact_score(binary.entries, labels).rational().to_mpq() == naive_score(binary.entries, labels));
        }
    }
}

TEST_CASE("round trips at n = 64 twin and n = 32 binary") {
    std::mt19937_64 rng(31);
    const auto twin = build_twin_prime_vector(64);
    const auto binary = build_binary_vector(32);
    for (int trial = 0; trial < 50; ++trial) {
        const auto a = random_labeling(rng, 64);
        CHECK(decode_twin_prime(exact_score(twin, a)) == a);
        const auto b = random_labeling(rng, 32);
        CHECK(decode_binary(exact_score(binary.entries, b)) == b);
    }
}

TEST_CASE("denominator structure") {
    std::mt19937_64 rng(37);
    const std::size_t n = 20;
    const auto twin = build_twin_prime_vector(n);
    const auto table = twin_primes(n);
    std::vector<std::uint64_t> base{2};
    base.insert(base.end(), table.primes().begin(), table.primes().end());
    const auto binary = build_binary_vector(n);
    for (int trial = 0; trial < 30; ++trial) {
        const auto labels = random_labeling(rng, n);
        const auto f = factor_over(exact_score(twin, labels).rational().denominator(), base);
        CHECK(f.leftover == 1);
        CHECK(f.exponent_of(2) == labels.zeros());
        for (std::size_t i = 0; i < n; ++i) CHECK(f.exponent_of(table.primes()[i]) == labels[i]);

        const auto r = exact_score(binary.entries, labels).rational();
        std::uint64_t expected = 0;
        for (std::size_t i = 0; i < n; ++i) expected |= std::uint64_t{labels[i]} << i;
        BigInt power;
        mpz_setbit(power.get_mpz_t(), expected);
        CHECK(r.denominator() == power);
    }
}

TEST_CASE("multi-class matrix entries") {
    const auto m = build_multiclass_matrix(2, 3);
    REQUIRE(m.size() == 2);
    CHECK(m.row(0)[0].to_string() == "1/7");
    CHECK(m.row(0)[1].to_string() == "2/7");
    CHECK(m.row(0)[2].to_string() == "4/7");
    CHECK(m.row(1)[0].to_string() == "1/13");
    CHECK(m.row(1)[1].to_string() == "3/13");
    CHECK(m.row(1)[2].to_string() == "9/13");
    const auto one = build_multiclass_matrix(1, 2);
    CHECK(one.row(0)[0].to_string() == "1/3");
    CHECK(one.row(0)[1].to_string() == "2/3");
    const auto three = build_multiclass_matrix(3, 2);
    CHECK(three.row(1)[0].to_string() == "1/4");
    CHECK(three.row(2)[1].to_string() == "5/6");
    for (std::size_t i = 0; i < three.size(); ++i) {
        Rational sum(0);
        for (const auto& e : three.row(i)) sum = sum + e;
        CHECK(sum == Rational(1));
    }
    CHECK_THROWS_AS(build_multiclass_matrix(2, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_multiclass_matrix(200, 100), SizeGuardError);
}

TEST_CASE("multi-class decoding examples") {
    CHECK(decode_multiclass(escore("91/18"), 2, 3).to_string() == "2,3");
    CHECK(decode_multiclass(escore("91/1"), 2, 3).to_string() == "1,1");
    CHECK_THROWS_AS(decode_multiclass(escore("91/5"), 2, 3), DecodeError);   // 5 is not among the first two primes
    CHECK_THROWS_AS(decode_multiclass(escore("91/8"), 2, 3), DecodeError);   // exponent 3 exceeds K - 1
    CHECK_THROWS_AS(decode_multiclass(escore("91/2"), 2, 2), DecodeError);   // not a product of row sums
}

TEST_CASE("multi-class round trips exhaustively for n <= 6, K <= 5") {
    for (unsigned k = 2; k <= 5; ++k) {
        for (std::size_t n = 1; n <= 6; ++n) {
            const auto m = build_multiclass_matrix(n, k);
            std::size_t total = 1;
            for (std::size_t i = 0; i < n; ++i) total *= k;
            std::set<mpq_class> seen;
            std::size_t mismatches = 0;
            for (std::size_t code = 0; code < total; ++code) {
                std::vector<unsigned> classes(n);
                auto c = code;
                for (auto& v : classes) {
                    v = static_cast<unsigned>(c % k) + 1;
                    c /= k;
                }
                const ClassLabeling labels(classes, k);
                const auto score = exact_score_multiclass(m, labels);
                seen.insert(score.rational().to_mpq());
                if (!(decode_multiclass(score, n, k) == labels)) ++mismatches;
            }
            CHECK(mismatches == 0);
            CHECK(seen.size() == total);
        }
    }
}
