#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>

#include "llprobe/core.hpp"

namespace llprobe {

/// The score does not have the structure the construction produces: it was
/// not computed on our vector, or it was altered in transit.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A requested construction exceeds its configured size limit.
class SizeGuardError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Upper size limits. The binary representation vector holds integers of
/// 2^(n-1) bits, so its limit is small.
struct SizeGuards {
    std::size_t twin_prime = 100000;
    std::size_t binary = 32;
    std::size_t multiclass_cells = 10000;  // n * K
};

/// x_i = p_i / (p_i + 2) over the first n lower twin primes (5, 11, 17, ...).
PredictionVector build_twin_prime_vector(std::size_t n, const SizeGuards& guards = {});

/// Recovers the labeling from a twin-prime score. The size is inferred from the
/// numerator, which must be (p_1 + 2)(p_2 + 2)...(p_n + 2). When expected_size
/// is given, a score of any other size is rejected.
Labeling decode_twin_prime(const ExactScore& score, std::optional<std::size_t> expected_size = std::nullopt,
                           const SizeGuards& guards = {});

/// Binary representation vector: x_i = a_i / (1 + a_i) with a_i = 2^(2^(i-1)).
struct BinaryRepVector {
    std::size_t n = 0;
    PredictionVector entries;
};

BinaryRepVector build_binary_vector(std::size_t n, const SizeGuards& guards = {});

/// The score denominator is 2^N with N = sum over one-positions i of 2^(i-1);
/// the labeling is the n-bit little-endian expansion of N. Without a size the
/// decoder infers n from the numerator prod(1 + a_i) = 2^(2^n) - 1.
Labeling decode_binary(const ExactScore& score, std::optional<std::size_t> size = std::nullopt);

/// Decodes a rounded Log-Loss for the binary vector: N = (C - n LL) log2(e)
/// with C = sum_j ln(1 + a_j). Rejects when N is more than 1/4 from an integer.
Labeling decode_binary_from_decimal(const DecimalScore& logloss, std::size_t n,
                                    Normalization normalization = Normalization::per_point);

/// Significant digits that keep decode_binary_from_decimal's rounding residual
/// below 1/4 for every labeling of size n.
int required_precision_binary(std::size_t n);

/// Row i is [1, p_i, ..., p_i^(K-1)] / s_i over the plain primes 2, 3, 5, ...
/// where s_i is the row sum.
PredictionMatrix build_multiclass_matrix(std::size_t n, unsigned class_count, const SizeGuards& guards = {});

/// Recovers classes from score = prod(s_i) / prod(p_i^(l_i - 1)).
ClassLabeling decode_multiclass(const ExactScore& score, std::size_t n, unsigned class_count,
                                const SizeGuards& guards = {});

}  // namespace llprobe
