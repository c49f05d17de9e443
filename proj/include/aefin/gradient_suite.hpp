#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aefin::gradcheck {

struct SuiteSize {
    std::size_t batch = 2;
    std::size_t channels = 2;
    std::size_t input_length = 8;
    std::size_t horizon = 8;
    std::size_t k = 2;
};

/// "tiny" or "small"; throws ConfigError otherwise.
SuiteSize suite_size(std::string_view name);

struct SuiteResult {
    std::string name;
    std::size_t coordinates = 0;
    double max_rel_error = 0.0;
};

inline constexpr double kSuiteTolerance = 1e-4;

/// Finite-difference check of every differentiable operation: GELU, FAN head,
/// trend MLP, cross-attention, linear backbone, each loss term, and the full
/// model with and without learned attention projections.
std::vector<SuiteResult> run_suite(const SuiteSize& size, std::uint64_t seed = 0);

} // namespace aefin::gradcheck
