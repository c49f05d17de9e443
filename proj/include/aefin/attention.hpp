#pragma once

#include "aefin/tensor.hpp"

namespace aefin::attention {

/// Scores q_i . k_j / sqrt(D) and their row-softmax weights.
struct AttentionMatrices {
    Matrix scores;
    Matrix weights;
};

/// scores(i, j) = dot(q_i, k_j) / sqrt(D) for L x D query and key rows.
Matrix attention_scores(const Matrix& queries, const Matrix& keys);

/// Row-wise softmax with max subtraction. Throws InvalidInput on non-finite scores.
Matrix softmax_rows(const Matrix& scores);

/// Scaled dot-product attention with independent query, key and value rows.
/// The optional `matrices` out-parameter receives the intermediate scores/weights.
Matrix attend(const Matrix& queries, const Matrix& keys, const Matrix& values,
              AttentionMatrices* matrices = nullptr);

struct AttendGradients {
    Matrix queries;
    Matrix keys;
    Matrix values;
};

AttendGradients attend_backward(const Matrix& queries, const Matrix& keys, const Matrix& values,
                                const Matrix& grad_output);

/// Queries from the unstable rows, keys and values from the stable rows.
Matrix cross_attention(const Matrix& non_stable, const Matrix& stable);

struct CrossAttentionGradients {
    Matrix non_stable;
    Matrix stable;
};

CrossAttentionGradients cross_attention_backward(const Matrix& non_stable, const Matrix& stable,
                                                 const Matrix& grad_output);

/// Time-major L x C view of batch element b (row = time step, column = channel).
Matrix time_major(const SeriesWindow& w, std::size_t b);
void store_time_major(const Matrix& m, SeriesWindow& w, std::size_t b);

/// Independent L x C attention problem per batch element, channels as the feature axis.
SeriesWindow cross_attention_batched(const SeriesWindow& non_stable, const SeriesWindow& stable);

struct BatchedCrossAttentionGradients {
    SeriesWindow non_stable;
    SeriesWindow stable;
};

BatchedCrossAttentionGradients cross_attention_batched_backward(const SeriesWindow& non_stable,
                                                                const SeriesWindow& stable,
                                                                const SeriesWindow& grad_output);

} // namespace aefin::attention
