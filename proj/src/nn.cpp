#include "vadd/nn.hpp"

#include <cmath>

namespace vadd::nn {

HiddenCell lstm_cell(Tape& t, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev,
                     const LSTMCellParams& p) {
    const int hidden = p.hidden_dim();
    if (x.rank() != h_prev.rank() || h_prev.shape() != c_prev.shape())
        fail("lstm_cell: inconsistent state shapes ", ad::shape_str(h_prev.shape()),
             " vs ", ad::shape_str(c_prev.shape()));

    Tensor pre;
    if (x.rank() == 1) {
        if (x.dim(0) != p.input_dim())
            fail("lstm_cell: input shape ", ad::shape_str(x.shape()), " vs weights ",
                 ad::shape_str(p.w_ih.shape()));
        pre = ad::add(t, ad::add(t, ad::matmul(t, p.w_ih, x), ad::matmul(t, p.w_hh, h_prev)), p.b);
    } else {
        if (x.dim(1) != p.input_dim())
            fail("lstm_cell: input shape ", ad::shape_str(x.shape()), " vs weights ",
                 ad::shape_str(p.w_ih.shape()));
        pre = ad::add_rows(t, ad::add(t, ad::matmul_nt(t, x, p.w_ih), ad::matmul_nt(t, h_prev, p.w_hh)), p.b);
    }

    Tensor gi = ad::sigmoid(t, ad::slice(t, pre, 0, hidden));
    Tensor gf = ad::sigmoid(t, ad::slice(t, pre, hidden, hidden));
    Tensor gg = ad::tanh(t, ad::slice(t, pre, 2 * hidden, hidden));
    Tensor go = ad::sigmoid(t, ad::slice(t, pre, 3 * hidden, hidden));

    Tensor c = ad::add(t, ad::mul(t, gf, c_prev), ad::mul(t, gi, gg));
    Tensor h = ad::mul(t, go, ad::tanh(t, c));
    return {h, c};
}

Tensor embed_soft(Tape& t, const Tensor& p_dist, const Tensor& table) {
    if (p_dist.rank() != 1 || p_dist.dim(0) != table.dim(0))
        fail("embed_soft: distribution ", ad::shape_str(p_dist.shape()), " vs table ",
             ad::shape_str(table.shape()));
    double total = 0.0;
    for (double v : p_dist.data()) {
        if (v < 0.0) fail("embed_soft: negative probability ", v);
        total += v;
    }
    if (std::fabs(total - 1.0) > 1e-6)
        fail("embed_soft: distribution sums to ", total, ", expected 1");
    return ad::matmul(t, p_dist, table);
}

std::vector<double> uniform_init(int64_t count, int fan_in, uint64_t seed, const std::string& name) {
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    rng::SplitMix64 gen(rng::mix(seed, rng::fnv1a64(name)));
    std::vector<double> out(static_cast<size_t>(count));
    for (double& x : out) x = gen.next_double(-s, s);
    return out;
}

Tensor& init_weight(ParamStore& store, const std::string& name, Shape shape, int fan_in, uint64_t seed) {
    auto values = uniform_init(ad::shape_numel(shape), fan_in, seed, name);
    return store.create(name, std::move(shape), std::move(values));
}

Tensor& init_zeros(ParamStore& store, const std::string& name, Shape shape) {
    const int64_t n = ad::shape_numel(shape);
    return store.create(name, std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0));
}

void init_lstm(ParamStore& store, const std::string& prefix, int input_dim, int hidden_dim, uint64_t seed) {
    init_weight(store, prefix + ".w_ih", {4 * hidden_dim, input_dim}, input_dim, seed);
    init_weight(store, prefix + ".w_hh", {4 * hidden_dim, hidden_dim}, hidden_dim, seed);
    init_zeros(store, prefix + ".b", {4 * hidden_dim});
}

LSTMCellParams bind_lstm(ParamStore& store, const std::string& prefix) {
    return LSTMCellParams{store.at(prefix + ".w_ih"), store.at(prefix + ".w_hh"),
                          store.at(prefix + ".b")};
}

} // namespace vadd::nn
