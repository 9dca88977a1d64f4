#include "mopr/layers.hpp"

#include <cmath>

#include <Eigen/QR>

#include "mopr/errors.hpp"

namespace mopr::nn {

Var linear(const Var& x, const LinearParams& p) {
    return add(matmul(x, Var(p.W)), Var(p.b));
}

Var layer_norm(const Var& x, const LayerNormParams& p) {
    return add(mul(layer_norm_rows(x), Var(p.gamma)), Var(p.beta));
}

Var feed_forward(const Var& x, const FeedForwardParams& p) {
    return linear(relu(linear(x, p.fc1)), p.fc2);
}

Var multi_head_attention(const Var& query, const Var& memory, const MhaParams& p) {
    const int d = static_cast<int>(p.q.W->value.cols());
    if (p.n_heads < 1 || d % p.n_heads != 0)
        throw ShapeError("mha: model dim " + std::to_string(d) + " not divisible by " +
                         std::to_string(p.n_heads) + " heads");
    const int dh = d / p.n_heads;
    Var q = linear(query, p.q);
    Var k = linear(memory, p.k);
    Var v = linear(memory, p.v);
    std::vector<Var> heads;
    heads.reserve(p.n_heads);
    for (int h = 0; h < p.n_heads; ++h) {
        Var qh = slice_cols(q, h * dh, (h + 1) * dh);
        Var kh = slice_cols(k, h * dh, (h + 1) * dh);
        Var vh = slice_cols(v, h * dh, (h + 1) * dh);
        Var att = softmax_rows(scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(dh)));
        heads.push_back(matmul(att, vh));
    }
    return linear(concat_cols(heads), p.o);
}

Var encoder_layer(const Var& x, const EncoderLayerParams& p) {
    Var a = layer_norm(add(x, multi_head_attention(x, x, p.attn)), p.ln1);
    return layer_norm(add(a, feed_forward(a, p.ff)), p.ln2);
}

Var decoder_layer(const Var& y, const Var& memory, const DecoderLayerParams& p) {
    Var a = layer_norm(add(y, multi_head_attention(y, y, p.self_attn)), p.ln1);
    Var b = layer_norm(add(a, multi_head_attention(a, memory, p.cross_attn)), p.ln2);
    return layer_norm(add(b, feed_forward(b, p.ff)), p.ln3);
}

Eigen::MatrixXd positional_encoding(int T, int d) {
    Eigen::MatrixXd pe(T, d);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < d; ++i) {
            const double rate = std::pow(10000.0, -2.0 * (i / 2) / d);
            pe(t, i) = (i % 2 == 0) ? std::sin(t * rate) : std::cos(t * rate);
        }
    return pe;
}

LstmResult lstm_stack(const Var& x_seq, const LstmStackParams& p) {
    if (p.layers.empty()) throw ShapeError("lstm_stack: no layers");
    const int H = p.hidden;
    const int S = x_seq.rows();
    Var layer_in = x_seq;
    Var last_hidden;
    for (const auto& lp : p.layers) {
        if (layer_in.cols() != lp.W_ih->value.rows())
            throw ShapeError("lstm_stack: input dim " + std::to_string(layer_in.cols()) +
                             " != " + std::to_string(lp.W_ih->value.rows()));
        Var h = constant(Eigen::MatrixXd::Zero(1, H));
        Var c = constant(Eigen::MatrixXd::Zero(1, H));
        std::vector<Var> outputs;
        outputs.reserve(S);
        for (int t = 0; t < S; ++t) {
            Var xt = slice_rows(layer_in, t, t + 1);
            Var gates = add(add(matmul(xt, Var(lp.W_ih)), matmul(h, Var(lp.W_hh))), Var(lp.b));
            Var i = sigmoid(slice_cols(gates, 0, H));
            Var f = sigmoid(slice_cols(gates, H, 2 * H));
            Var g = tanh(slice_cols(gates, 2 * H, 3 * H));
            Var o = sigmoid(slice_cols(gates, 3 * H, 4 * H));
            c = add(mul(f, c), mul(i, g));
            h = mul(o, tanh(c));
            outputs.push_back(h);
        }
        layer_in = concat_rows(outputs);
        last_hidden = h;
    }
    return {layer_in, last_hidden};
}

LinearParams build_linear(ParamStore& s, const std::string& prefix, int in, int out, Rng& rng) {
    const double k = 1.0 / std::sqrt(static_cast<double>(in));
    LinearParams p;
    p.W = s.create(prefix + ".W", rng.uniform_matrix(in, out, -k, k));
    p.b = s.create(prefix + ".b", Eigen::MatrixXd::Zero(1, out));
    return p;
}

LinearParams bind_linear(const ParamStore& s, const std::string& prefix) {
    return {s.at(prefix + ".W"), s.at(prefix + ".b")};
}

LayerNormParams build_layer_norm(ParamStore& s, const std::string& prefix, int d) {
    LayerNormParams p;
    p.gamma = s.create(prefix + ".gamma", Eigen::MatrixXd::Ones(1, d));
    p.beta = s.create(prefix + ".beta", Eigen::MatrixXd::Zero(1, d));
    return p;
}

LayerNormParams bind_layer_norm(const ParamStore& s, const std::string& prefix) {
    return {s.at(prefix + ".gamma"), s.at(prefix + ".beta")};
}

MhaParams build_mha(ParamStore& s, const std::string& prefix, int d, int n_heads, Rng& rng) {
    MhaParams p;
    p.q = build_linear(s, prefix + ".q", d, d, rng);
    p.k = build_linear(s, prefix + ".k", d, d, rng);
    p.v = build_linear(s, prefix + ".v", d, d, rng);
    p.o = build_linear(s, prefix + ".o", d, d, rng);
    p.n_heads = n_heads;
    return p;
}

MhaParams bind_mha(const ParamStore& s, const std::string& prefix, int n_heads) {
    MhaParams p;
    p.q = bind_linear(s, prefix + ".q");
    p.k = bind_linear(s, prefix + ".k");
    p.v = bind_linear(s, prefix + ".v");
    p.o = bind_linear(s, prefix + ".o");
    p.n_heads = n_heads;
    return p;
}

FeedForwardParams build_feed_forward(ParamStore& s, const std::string& prefix, int d, int d_ff,
                                     Rng& rng) {
    FeedForwardParams p;
    p.fc1 = build_linear(s, prefix + ".fc1", d, d_ff, rng);
    p.fc2 = build_linear(s, prefix + ".fc2", d_ff, d, rng);
    return p;
}

FeedForwardParams bind_feed_forward(const ParamStore& s, const std::string& prefix) {
    return {bind_linear(s, prefix + ".fc1"), bind_linear(s, prefix + ".fc2")};
}

EncoderLayerParams build_encoder_layer(ParamStore& s, const std::string& prefix, int d,
                                       int n_heads, int d_ff, Rng& rng) {
    EncoderLayerParams p;
    p.attn = build_mha(s, prefix + ".attn", d, n_heads, rng);
    p.ff = build_feed_forward(s, prefix + ".ff", d, d_ff, rng);
    p.ln1 = build_layer_norm(s, prefix + ".ln1", d);
    p.ln2 = build_layer_norm(s, prefix + ".ln2", d);
    return p;
}

EncoderLayerParams bind_encoder_layer(const ParamStore& s, const std::string& prefix,
                                      int n_heads) {
    EncoderLayerParams p;
    p.attn = bind_mha(s, prefix + ".attn", n_heads);
    p.ff = bind_feed_forward(s, prefix + ".ff");
    p.ln1 = bind_layer_norm(s, prefix + ".ln1");
    p.ln2 = bind_layer_norm(s, prefix + ".ln2");
    return p;
}

DecoderLayerParams build_decoder_layer(ParamStore& s, const std::string& prefix, int d,
                                       int n_heads, int d_ff, Rng& rng) {
    DecoderLayerParams p;
    p.self_attn = build_mha(s, prefix + ".self", d, n_heads, rng);
    p.cross_attn = build_mha(s, prefix + ".cross", d, n_heads, rng);
    p.ff = build_feed_forward(s, prefix + ".ff", d, d_ff, rng);
    p.ln1 = build_layer_norm(s, prefix + ".ln1", d);
    p.ln2 = build_layer_norm(s, prefix + ".ln2", d);
    p.ln3 = build_layer_norm(s, prefix + ".ln3", d);
    return p;
}

DecoderLayerParams bind_decoder_layer(const ParamStore& s, const std::string& prefix,
                                      int n_heads) {
    DecoderLayerParams p;
    p.self_attn = bind_mha(s, prefix + ".self", n_heads);
    p.cross_attn = bind_mha(s, prefix + ".cross", n_heads);
    p.ff = bind_feed_forward(s, prefix + ".ff");
    p.ln1 = bind_layer_norm(s, prefix + ".ln1");
    p.ln2 = bind_layer_norm(s, prefix + ".ln2");
    p.ln3 = bind_layer_norm(s, prefix + ".ln3");
    return p;
}

namespace {

// orthogonal blocks per gate, signs fixed so the factorization is unique
Eigen::MatrixXd orthogonal_recurrent(int H, Rng& rng) {
    Eigen::MatrixXd W(H, 4 * H);
    for (int g = 0; g < 4; ++g) {
        Eigen::MatrixXd a = rng.gaussian_matrix(H, H);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
        Eigen::MatrixXd q = qr.householderQ();
        Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < H; ++i)
            if (r(i, i) < 0) q.col(i) = -q.col(i);
        W.middleCols(g * H, H) = q;
    }
    return W;
}

}  // namespace

LstmStackParams build_lstm_stack(ParamStore& s, const std::string& prefix, int input,
                                 int hidden, int n_layers, Rng& rng) {
    LstmStackParams p;
    p.hidden = hidden;
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (int l = 0; l < n_layers; ++l) {
        const int in = l == 0 ? input : hidden;
        const std::string lp = prefix + ".l" + std::to_string(l);
        LstmLayerParams layer;
        layer.W_ih = s.create(lp + ".W_ih", rng.uniform_matrix(in, 4 * hidden, -k, k));
        layer.W_hh = s.create(lp + ".W_hh", orthogonal_recurrent(hidden, rng));
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(1, 4 * hidden);
        b.middleCols(hidden, hidden).setOnes();  // forget gate bias
        layer.b = s.create(lp + ".b", std::move(b));
        p.layers.push_back(std::move(layer));
    }
    return p;
}

LstmStackParams bind_lstm_stack(const ParamStore& s, const std::string& prefix, int hidden,
                                int n_layers) {
    LstmStackParams p;
    p.hidden = hidden;
    for (int l = 0; l < n_layers; ++l) {
        const std::string lp = prefix + ".l" + std::to_string(l);
        p.layers.push_back({s.at(lp + ".W_ih"), s.at(lp + ".W_hh"), s.at(lp + ".b")});
    }
    return p;
}

}  // namespace mopr::nn
