#pragma once

#include <string>
#include <vector>

#include "mopr/param_store.hpp"
#include "mopr/tensor.hpp"
#include "mopr/util.hpp"

namespace mopr::nn {

struct LinearParams {
    NodePtr W;  // in x out
    NodePtr b;  // 1 x out
};

struct LayerNormParams {
    NodePtr gamma;  // 1 x d
    NodePtr beta;   // 1 x d
};

struct MhaParams {
    LinearParams q, k, v, o;
    int n_heads = 1;
};

struct FeedForwardParams {
    LinearParams fc1, fc2;
};

// post-LN transformer blocks
struct EncoderLayerParams {
    MhaParams attn;
    FeedForwardParams ff;
    LayerNormParams ln1, ln2;
};

struct DecoderLayerParams {
    MhaParams self_attn, cross_attn;
    FeedForwardParams ff;
    LayerNormParams ln1, ln2, ln3;
};

struct LstmLayerParams {
    NodePtr W_ih;  // in x 4H
    NodePtr W_hh;  // H x 4H
    NodePtr b;     // 1 x 4H, gate order [i, f, g, o]
};

struct LstmStackParams {
    std::vector<LstmLayerParams> layers;
    int hidden = 0;
};

Var linear(const Var& x, const LinearParams& p);
Var layer_norm(const Var& x, const LayerNormParams& p);
Var feed_forward(const Var& x, const FeedForwardParams& p);
Var multi_head_attention(const Var& query, const Var& memory, const MhaParams& p);
Var encoder_layer(const Var& x, const EncoderLayerParams& p);
Var decoder_layer(const Var& y, const Var& memory, const DecoderLayerParams& p);

// sinusoidal table, rows = positions
Eigen::MatrixXd positional_encoding(int T, int d);

struct LstmResult {
    Var outputs;      // S x H
    Var last_hidden;  // 1 x H
};
LstmResult lstm_stack(const Var& x_seq, const LstmStackParams& p);

// build_* create and initialize parameters under `prefix`; bind_* fetch the
// same layout from an existing (e.g. loaded) store.
LinearParams build_linear(ParamStore& s, const std::string& prefix, int in, int out, Rng& rng);
LinearParams bind_linear(const ParamStore& s, const std::string& prefix);
LayerNormParams build_layer_norm(ParamStore& s, const std::string& prefix, int d);
LayerNormParams bind_layer_norm(const ParamStore& s, const std::string& prefix);
MhaParams build_mha(ParamStore& s, const std::string& prefix, int d, int n_heads, Rng& rng);
MhaParams bind_mha(const ParamStore& s, const std::string& prefix, int n_heads);
FeedForwardParams build_feed_forward(ParamStore& s, const std::string& prefix, int d, int d_ff,
                                     Rng& rng);
FeedForwardParams bind_feed_forward(const ParamStore& s, const std::string& prefix);
EncoderLayerParams build_encoder_layer(ParamStore& s, const std::string& prefix, int d,
                                       int n_heads, int d_ff, Rng& rng);
EncoderLayerParams bind_encoder_layer(const ParamStore& s, const std::string& prefix,
                                      int n_heads);
DecoderLayerParams build_decoder_layer(ParamStore& s, const std::string& prefix, int d,
                                       int n_heads, int d_ff, Rng& rng);
DecoderLayerParams bind_decoder_layer(const ParamStore& s, const std::string& prefix,
                                      int n_heads);
LstmStackParams build_lstm_stack(ParamStore& s, const std::string& prefix, int input,
                                 int hidden, int n_layers, Rng& rng);
LstmStackParams bind_lstm_stack(const ParamStore& s, const std::string& prefix, int hidden,
                                int n_layers);

}  // namespace mopr::nn
