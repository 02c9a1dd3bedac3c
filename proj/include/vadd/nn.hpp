#pragma once

#include <string>
#include <utility>

#include "vadd/param_store.hpp"
#include "vadd/tensor.hpp"

namespace vadd::nn {

using ad::ParamStore;
using ad::Shape;
using ad::Tape;
using ad::Tensor;

// Gate order is fixed as (input, forget, candidate, output); checkpoints
// depend on it.
struct LSTMCellParams {
    Tensor w_ih; // [4H × I]
    Tensor w_hh; // [4H × H]
    Tensor b;    // [4H]

    int input_dim() const { return w_ih.dim(1); }
    int hidden_dim() const { return w_hh.dim(1); }
};

struct HiddenCell {
    Tensor h;
    Tensor c;
};

// Single step of a standard LSTM cell:
//   i,f,o = sigmoid gates, g = tanh candidate,
//   c = f*c_prev + i*g, h = o*tanh(c).
// Accepts [I]/[H] vectors or [n×I]/[n×H] row batches (n independent cells
// sharing parameters).
HiddenCell lstm_cell(Tape& t, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                     const LSTMCellParams& p);

// Probability-weighted mixture of embedding rows: p_dist [D] against
// table [D×E]. p_dist must be entrywise >= 0 and sum to 1 within 1e-6.
Tensor embed_soft(Tape& t, const Tensor& p_dist, const Tensor& table);

// ---- initialization ---------------------------------------------------------
//
// Weights are uniform(-s, s) with s = 1/sqrt(fan_in); biases zero. Draws are
// seeded per (seed, parameter name) so every entry has its own stream and
// corpora/models rebuild bit-identically.

std::vector<double> uniform_init(int64_t count, int fan_in, uint64_t seed, const std::string& name);

Tensor& init_weight(ParamStore& store, const std::string& name, Shape shape, int fan_in, uint64_t seed);
Tensor& init_zeros(ParamStore& store, const std::string& name, Shape shape);

// Creates <prefix>.w_ih, <prefix>.w_hh, <prefix>.b
void init_lstm(ParamStore& store, const std::string& prefix, int input_dim, int hidden_dim, uint64_t seed);
LSTMCellParams bind_lstm(ParamStore& store, const std::string& prefix);

} // namespace vadd::nn
