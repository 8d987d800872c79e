#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "predilect/matrix.hpp"

namespace predilect {

using Rng = std::mt19937_64;

// Independent stream for a (seed, tags...) tuple. Every random draw in the
// library goes through here so runs are reproducible from explicit seeds.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {});

// Child seed for a (seed, tags...) tuple, for handing to APIs that take a seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags);

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev, Rng& rng);
Matrix uniform_matrix(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);

}  // namespace predilect
