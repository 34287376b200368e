#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dstts/autodiff.hpp"

namespace dstts {

// Sinusoidal positional encoding rows [0, length).
Tensor positional_encoding(int length, int dim);

struct Linear {
  Parameter* w = nullptr;  // (in, out)
  Parameter* b = nullptr;  // (1, out)

  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, int in, int out,
         uint64_t seed);
  Var forward(Tape& t, Var x) const;
};

struct Conv1d {
  Parameter* w = nullptr;  // (k, in, out)
  Parameter* b = nullptr;  // (1, out)

  Conv1d() = default;
  Conv1d(ParameterStore& store, const std::string& prefix, int kernel, int in,
         int out, uint64_t seed);
  Var forward(Tape& t, Var x) const;
};

// Per-time-step standardization with learnable gain/bias.
struct LayerNorm {
  Parameter* gain = nullptr;  // (1, C), ones
  Parameter* bias = nullptr;  // (1, C), zeros

  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& prefix, int dim);
  Var forward(Tape& t, Var x) const;
};

struct AttentionCapture {
  std::vector<Tensor> head_weights;  // per head, (T, T) rows summing to 1
};

struct MultiHeadAttention {
  Linear wq, wk, wv, wo;
  int heads = 0;
  int dim = 0;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& prefix, int dim,
                     int heads, uint64_t seed);
  // keep: optional per-position mask; masked keys get -1e9 logits and masked
  // rows are zeroed in the output.
  Var forward(Tape& t, Var x, const std::vector<uint8_t>* keep = nullptr,
              AttentionCapture* capture = nullptr) const;
};

// One direction of an LSTM; gate order [input, forget, cell, output].
// Forget-gate bias starts at 1, other biases at 0.
struct LstmDirection {
  Parameter* w_ih = nullptr;  // (in, 4H)
  Parameter* w_hh = nullptr;  // (H, 4H)
  Parameter* b = nullptr;     // (1, 4H)
  int hidden = 0;
  bool reverse = false;

  LstmDirection() = default;
  LstmDirection(ParameterStore& store, const std::string& prefix, int in,
                int hidden, bool reverse, uint64_t seed);
  Var forward(Tape& t, Var x) const;  // (T, in) -> (T, H)
};

// Zeroes rows where keep[i] == 0.
Var apply_row_mask(Tape& t, Var x, const std::vector<uint8_t>& keep);

}  // namespace dstts
