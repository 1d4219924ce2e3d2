#pragma once

#include <span>
#include <vector>

#include "vihoi/nn/tape.hpp"

namespace vihoi::nn {

template <typename T> Var matmul(Tape<T>& t, Var a, Var b);
// a · bᵀ
template <typename T> Var matmul_nt(Tape<T>& t, Var a, Var b);
template <typename T> Var transpose(Tape<T>& t, Var a);

template <typename T> Var add(Tape<T>& t, Var a, Var b);
template <typename T> Var sub(Tape<T>& t, Var a, Var b);
template <typename T> Var mul(Tape<T>& t, Var a, Var b);
// Broadcasts a 1×n row over the rows of a.
template <typename T> Var add_row(Tape<T>& t, Var a, Var row);
template <typename T> Var mul_row(Tape<T>& t, Var a, Var row);
// Broadcasts an n×1 column over the columns of a.
template <typename T> Var mul_col(Tape<T>& t, Var a, Var col);
// scale·a + offset
template <typename T> Var affine(Tape<T>& t, Var a, T scale, T offset = T(0));

template <typename T> Var relu(Tape<T>& t, Var a);
template <typename T> Var gelu(Tape<T>& t, Var a);
template <typename T> Var silu(Tape<T>& t, Var a);
template <typename T> Var tanh(Tape<T>& t, Var a);
template <typename T> Var sigmoid(Tape<T>& t, Var a);
template <typename T> Var square(Tape<T>& t, Var a);

template <typename T> Var softmax_rows(Tape<T>& t, Var a);
template <typename T> Var log_softmax_rows(Tape<T>& t, Var a);
// Per-row normalization over columns followed by elementwise gain and bias.
template <typename T> Var layer_norm(Tape<T>& t, Var x, Var gain, Var bias, T eps = T(1e-5));
template <typename T> Var l2_normalize_rows(Tape<T>& t, Var a, T eps = T(1e-12));

template <typename T> Var concat_rows(Tape<T>& t, std::span<const Var> parts);
template <typename T> Var concat_cols(Tape<T>& t, std::span<const Var> parts);
template <typename T> Var slice_rows(Tape<T>& t, Var a, int start, int count);
template <typename T> Var slice_cols(Tape<T>& t, Var a, int start, int count);
template <typename T> Var gather_rows(Tape<T>& t, Var table, std::span<const int> rows);

template <typename T> Var sum(Tape<T>& t, Var a);
template <typename T> Var mean(Tape<T>& t, Var a);
// Column means: n×d → 1×d.
template <typename T> Var mean_rows(Tape<T>& t, Var a);
// Sum of squared entries divided by the row count: mean over rows of ‖row‖².
template <typename T> Var mean_row_sq_norm(Tape<T>& t, Var a);

}  // namespace vihoi::nn
