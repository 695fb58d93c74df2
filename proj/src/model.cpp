#include "radsum/model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "radsum/rng.hpp"

namespace radsum::model {

namespace {

using tensor::Shape;

// Large negative score used to knock masked positions out of a softmax row.
constexpr double kMaskValue = -1e9;

Tensor normal_param(Rng& rng, const Shape& shape, double std_dev) {
    std::vector<double> data(static_cast<std::size_t>(tensor::shape_numel(shape)));
    for (double& x : data) x = rng.normal() * std_dev;
    return Tensor(shape, std::move(data), true);
}

void add_norm(ParameterStore& store, const std::string& prefix, Index d) {
    store.add(prefix + ".gain", Tensor::full({d}, 1.0, true));
    store.add(prefix + ".bias", Tensor::zeros({d}, true));
}

void add_attention(ParameterStore& store, Rng& rng, const std::string& prefix, Index d) {
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(d));
    for (const char* w : {".wq", ".wk", ".wv", ".wo"}) {
        store.add(prefix + w, normal_param(rng, {d, d}, std_dev));
    }
}

void add_feed_forward(ParameterStore& store, Rng& rng, const std::string& prefix,
                      Index d, Index f) {
    store.add(prefix + ".w1", normal_param(rng, {d, f}, 1.0 / std::sqrt(static_cast<double>(d))));
    store.add(prefix + ".b1", Tensor::zeros({f}, true));
    store.add(prefix + ".w2", normal_param(rng, {f, d}, 1.0 / std::sqrt(static_cast<double>(f))));
    store.add(prefix + ".b2", Tensor::zeros({d}, true));
}

Tensor norm_of(Tape& tape, const ParameterStore& params, const std::string& prefix,
               const Tensor& x) {
    return tensor::layer_norm(tape, x, params.at(prefix + ".gain"), params.at(prefix + ".bias"));
}

Tensor feed_forward(Tape& tape, const ParameterStore& params, const std::string& prefix,
                    const Tensor& x) {
    Tensor h = tensor::matmul(tape, x, params.at(prefix + ".w1"));
    h = tensor::add(tape, h, params.at(prefix + ".b1"));
    h = tensor::gelu(tape, h);
    h = tensor::matmul(tape, h, params.at(prefix + ".w2"));
    return tensor::add(tape, h, params.at(prefix + ".b2"));
}

// Multi-head attention. x_q is [B,Sq,D], x_kv is [B,Sk,D]; key_mask (empty or
// [B*H*Sq*Sk]) marks key positions to exclude from each query's softmax row.
Tensor attention(Tape& tape, const ParameterStore& params, const std::string& prefix,
                 const Tensor& x_q, const Tensor& x_kv, int heads,
                 const std::vector<std::uint8_t>& key_mask) {
    const Index b = x_q.dim(0);
    const Index sq = x_q.dim(1);
    const Index d = x_q.dim(2);
    const Index sk = x_kv.dim(1);
    const Index h = heads;
    const Index dh = d / h;

    // [B,S,D] -> [B*H,S,dh] so batched matmul treats heads as batch entries.
    auto split_heads = [&](const Tensor& x, Index s, const char* w) {
        Tensor p = tensor::matmul(tape, x, params.at(prefix + w));
        p = tensor::reshape(tape, p, {b, s, h, dh});
        p = tensor::transpose(tape, p, 1, 2);
        return tensor::reshape(tape, p, {b * h, s, dh});
    };
    Tensor q = split_heads(x_q, sq, ".wq");
    Tensor k = split_heads(x_kv, sk, ".wk");
    Tensor v = split_heads(x_kv, sk, ".wv");

    Tensor scores = tensor::matmul(tape, q, tensor::transpose(tape, k, 1, 2));
    scores = tensor::scale(tape, scores, 1.0 / std::sqrt(static_cast<double>(dh)));
    if (!key_mask.empty()) {
        scores = tensor::masked_fill(tape, scores, key_mask, kMaskValue);
    }
    Tensor weights = tensor::softmax(tape, scores, 2);

    Tensor ctx = tensor::matmul(tape, weights, v);           // [B*H,Sq,dh]
    ctx = tensor::reshape(tape, ctx, {b, h, sq, dh});
    ctx = tensor::transpose(tape, ctx, 1, 2);                // [B,Sq,H,dh]
    ctx = tensor::reshape(tape, ctx, {b, sq, d});
    return tensor::matmul(tape, ctx, params.at(prefix + ".wo"));
}

// Key mask hiding padded positions of `keys` from every query row.
std::vector<std::uint8_t> pad_key_mask(const std::vector<Index>& keys, Index b, Index sk,
                                       Index sq, Index heads, Index pad_id) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(b * heads * sq * sk), 0);
    for (Index bi = 0; bi < b; ++bi) {
        for (Index j = 0; j < sk; ++j) {
            if (keys[static_cast<std::size_t>(bi * sk + j)] != pad_id) continue;
            for (Index hi = 0; hi < heads; ++hi) {
                for (Index i = 0; i < sq; ++i) {
                    mask[static_cast<std::size_t>((((bi * heads) + hi) * sq + i) * sk + j)] = 1;
                }
            }
        }
    }
    return mask;
}

// Strictly-upper-triangular mask: query i may only see keys j <= i. Padded
// decoder positions always sit after the real ones, so causality alone also
// keeps real queries from attending to padding.
std::vector<std::uint8_t> causal_mask(Index b, Index heads, Index t) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(b * heads * t * t), 0);
    for (Index bh = 0; bh < b * heads; ++bh) {
        for (Index i = 0; i < t; ++i) {
            for (Index j = i + 1; j < t; ++j) {
                mask[static_cast<std::size_t>((bh * t + i) * t + j)] = 1;
            }
        }
    }
    return mask;
}

Tensor embed_sequence(Tape& tape, const ParameterStore& params, const std::vector<Index>& ids,
                      Index b, Index s, const std::string& pos_table) {
    Tensor x = tensor::embedding_gather(tape, params.at("embed.token"), ids, {b, s});
    std::vector<Index> positions(static_cast<std::size_t>(s));
    std::iota(positions.begin(), positions.end(), Index{0});
    Tensor pos = tensor::embedding_gather(tape, params.at(pos_table), positions, {s});
    return tensor::add(tape, x, pos);  // [S,D] broadcasts over the batch dim
}

// [D, vocab] weight used for the final projection.
Tensor output_weight(Tape& tape, const ParameterStore& params, const ModelConfig& config) {
    if (config.tie_output) {
        return tensor::transpose(tape, params.at("embed.token"), 0, 1);
    }
    return params.at("out.proj");
}

}  // namespace

void validate_config(const ModelConfig& config) {
    auto fail = [](const std::string& what) { throw std::invalid_argument("model config: " + what); };
    if (config.layers < 0) fail("layers must be >= 0");
    if (config.d_model < 1) fail("d_model must be >= 1");
    if (config.heads < 1) fail("heads must be >= 1");
    if (config.d_model % config.heads != 0) fail("d_model must be divisible by heads");
    if (config.d_ff < 1) fail("d_ff must be >= 1");
    if (config.vocab_size < 2) fail("vocab_size must be >= 2");
    if (config.max_src < 1) fail("max_src must be >= 1");
    if (config.max_tgt < 1) fail("max_tgt must be >= 1");
}

Tensor& ParameterStore::add(const std::string& name, Tensor t) {
    if (index_.count(name) != 0) {
        throw std::invalid_argument("duplicate parameter name: " + name);
    }
    index_.emplace(name, items_.size());
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
}

Tensor& ParameterStore::at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return items_[it->second].second;
}

const Tensor& ParameterStore::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return items_[it->second].second;
}

std::int64_t ParameterStore::total_values() const {
    std::int64_t total = 0;
    for (const auto& [name, t] : items_) total += t.numel();
    return total;
}

void ParameterStore::zero_grads() const {
    for (const auto& [name, t] : items_) t.zero_grad();
}

std::vector<double> ParameterStore::flatten_values() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total_values()));
    for (const auto& [name, t] : items_) {
        const auto& v = t.value();
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

std::vector<double> ParameterStore::flatten_grads() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total_values()));
    for (const auto& [name, t] : items_) {
        const auto& g = t.grad();
        out.insert(out.end(), g.begin(), g.end());
    }
    return out;
}

ParameterStore init_model(const ModelConfig& config) {
    validate_config(config);
    // Creation order is the store's iteration order, which downstream code
    // (optimizer state, flattened curvature vectors, checkpoints) relies on:
    // embeddings, encoder layers, encoder final norm, decoder layers, decoder
    // final norm, untied output projection last.
    Rng rng(config.seed);
    ParameterStore store;
    const Index d = config.d_model;
    const Index f = config.d_ff;

    store.add("embed.token", normal_param(rng, {config.vocab_size, d}, 0.02));
    store.add("embed.pos_src", normal_param(rng, {config.max_src, d}, 0.02));
    store.add("embed.pos_tgt", normal_param(rng, {config.max_tgt, d}, 0.02));

    for (int layer = 0; layer < config.layers; ++layer) {
        const std::string p = "enc." + std::to_string(layer);
        add_norm(store, p + ".attn_norm", d);
        add_attention(store, rng, p + ".attn", d);
        add_norm(store, p + ".ff_norm", d);
        add_feed_forward(store, rng, p + ".ff", d, f);
    }
    add_norm(store, "enc.final_norm", d);

    for (int layer = 0; layer < config.layers; ++layer) {
        const std::string p = "dec." + std::to_string(layer);
        add_norm(store, p + ".self_norm", d);
        add_attention(store, rng, p + ".self_attn", d);
        add_norm(store, p + ".cross_norm", d);
        add_attention(store, rng, p + ".cross_attn", d);
        add_norm(store, p + ".ff_norm", d);
        add_feed_forward(store, rng, p + ".ff", d, f);
    }
    add_norm(store, "dec.final_norm", d);

    if (!config.tie_output) {
        store.add("out.proj",
                  normal_param(rng, {d, config.vocab_size}, 1.0 / std::sqrt(static_cast<double>(d))));
    }
    return store;
}

ParameterStore clone_store(const ParameterStore& store) {
    ParameterStore out;
    for (const auto& [name, t] : store.items()) {
        out.add(name, Tensor(t.shape(), t.value(), t.requires_grad()));
    }
    return out;
}

void copy_values(ParameterStore& dst, const ParameterStore& src) {
    if (dst.size() != src.size()) {
        throw std::invalid_argument("parameter stores differ in size");
    }
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const auto& [dname, dt] = dst.items()[i];
        const auto& [sname, st] = src.items()[i];
        if (dname != sname || dt.shape() != st.shape()) {
            throw std::invalid_argument("parameter mismatch at " + dname + " vs " + sname);
        }
        dt.value() = st.value();
    }
}

Batch make_batch(const std::vector<std::vector<Index>>& src_seqs,
                 const std::vector<std::vector<Index>>& tgt_seqs, Index pad_id) {
    if (src_seqs.empty()) throw std::invalid_argument("make_batch: empty batch");
    if (src_seqs.size() != tgt_seqs.size()) {
        throw std::invalid_argument("make_batch: source and target counts differ");
    }
    Batch batch;
    batch.batch = static_cast<Index>(src_seqs.size());
    batch.pad_id = pad_id;
    for (std::size_t i = 0; i < src_seqs.size(); ++i) {
        if (src_seqs[i].empty() || tgt_seqs[i].empty()) {
            throw std::invalid_argument("make_batch: empty sequence at row " + std::to_string(i));
        }
        batch.src_len = std::max(batch.src_len, static_cast<Index>(src_seqs[i].size()));
        batch.tgt_len = std::max(batch.tgt_len, static_cast<Index>(tgt_seqs[i].size()));
    }
    batch.src.assign(static_cast<std::size_t>(batch.batch * batch.src_len), pad_id);
    batch.tgt.assign(static_cast<std::size_t>(batch.batch * batch.tgt_len), pad_id);
    for (std::size_t i = 0; i < src_seqs.size(); ++i) {
        std::copy(src_seqs[i].begin(), src_seqs[i].end(),
                  batch.src.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(batch.src_len)));
        std::copy(tgt_seqs[i].begin(), tgt_seqs[i].end(),
                  batch.tgt.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(batch.tgt_len)));
    }
    return batch;
}

Tensor encode(Tape& tape, const ParameterStore& params, const ModelConfig& config,
              const Batch& batch) {
    if (batch.batch < 1 || batch.src_len < 1) {
        throw std::invalid_argument("encode: batch must hold at least one token");
    }
    if (batch.src_len > config.max_src) {
        throw std::invalid_argument("encode: source length exceeds max_src");
    }
    const Index b = batch.batch;
    const Index s = batch.src_len;

    Tensor x = embed_sequence(tape, params, batch.src, b, s, "embed.pos_src");
    const auto mask = pad_key_mask(batch.src, b, s, s, config.heads, batch.pad_id);

    for (int layer = 0; layer < config.layers; ++layer) {
        const std::string p = "enc." + std::to_string(layer);
        Tensor h = norm_of(tape, params, p + ".attn_norm", x);
        x = tensor::add(tape, x, attention(tape, params, p + ".attn", h, h, config.heads, mask));
        h = norm_of(tape, params, p + ".ff_norm", x);
        x = tensor::add(tape, x, feed_forward(tape, params, p + ".ff", h));
    }
    return norm_of(tape, params, "enc.final_norm", x);
}

Tensor decode(Tape& tape, const ParameterStore& params, const ModelConfig& config,
              const Batch& batch, const Tensor& encoded) {
    if (batch.tgt_len < 1) {
        throw std::invalid_argument("decode: target must hold at least one token");
    }
    if (batch.tgt_len > config.max_tgt) {
        throw std::invalid_argument("decode: target length exceeds max_tgt");
    }
    const Index b = batch.batch;
    const Index t = batch.tgt_len;

    Tensor x = embed_sequence(tape, params, batch.tgt, b, t, "embed.pos_tgt");
    const auto self_mask = causal_mask(b, config.heads, t);
    const auto cross_mask = pad_key_mask(batch.src, b, batch.src_len, t, config.heads, batch.pad_id);

    for (int layer = 0; layer < config.layers; ++layer) {
        const std::string p = "dec." + std::to_string(layer);
        Tensor h = norm_of(tape, params, p + ".self_norm", x);
        x = tensor::add(tape, x,
                        attention(tape, params, p + ".self_attn", h, h, config.heads, self_mask));
        h = norm_of(tape, params, p + ".cross_norm", x);
        x = tensor::add(tape, x, attention(tape, params, p + ".cross_attn", h, encoded,
                                           config.heads, cross_mask));
        h = norm_of(tape, params, p + ".ff_norm", x);
        x = tensor::add(tape, x, feed_forward(tape, params, p + ".ff", h));
    }
    return norm_of(tape, params, "dec.final_norm", x);
}

Tensor forward(Tape& tape, const ParameterStore& params, const ModelConfig& config,
               const Batch& batch) {
    Tensor encoded = encode(tape, params, config, batch);
    Tensor decoded = decode(tape, params, config, batch, encoded);
    return tensor::matmul(tape, decoded, output_weight(tape, params, config));
}

std::vector<Index> greedy_decode(const ParameterStore& params, const ModelConfig& config,
                                 const std::vector<Index>& src, Index max_len,
                                 Index pad_id, Index eos_id) {
    if (src.empty()) throw std::invalid_argument("greedy_decode: empty source");
    if (max_len < 0) throw std::invalid_argument("greedy_decode: negative max_len");

    Tape tape(false);  // inference only; nothing is recorded
    Batch batch;
    batch.batch = 1;
    batch.src_len = static_cast<Index>(src.size());
    batch.src = src;
    batch.pad_id = pad_id;

    const Tensor encoded = encode(tape, params, config, batch);
    const Tensor out_w = output_weight(tape, params, config);
    const Index d = config.d_model;
    const Index v = config.vocab_size;
    // The decoder input always starts with the pad token, so it can hold at
    // most max_tgt - 1 generated ids.
    const Index step_cap = std::min<Index>(max_len, config.max_tgt - 1);

    std::vector<Index> generated;
    for (Index step = 0; step < step_cap; ++step) {
        batch.tgt.assign(1, pad_id);
        batch.tgt.insert(batch.tgt.end(), generated.begin(), generated.end());
        batch.tgt_len = static_cast<Index>(batch.tgt.size());

        const Tensor decoded = decode(tape, params, config, batch, encoded);
        const auto& dv = decoded.value();
        std::vector<double> last_row(dv.end() - d, dv.end());
        const Tensor logits = tensor::matmul(tape, Tensor({1, d}, std::move(last_row)), out_w);

        const auto& row = logits.value();
        Index best = 0;
        for (Index j = 1; j < v; ++j) {
            if (row[static_cast<std::size_t>(j)] > row[static_cast<std::size_t>(best)]) best = j;
        }
        if (best == eos_id) break;
        generated.push_back(best);
    }
    return generated;
}

ComputeEstimate count_params_and_flops(const ModelConfig& config) {
    validate_config(config);
    const std::int64_t v = config.vocab_size;
    const std::int64_t d = config.d_model;
    const std::int64_t f = config.d_ff;
    const std::int64_t layers = config.layers;
    const std::int64_t s = config.max_src;
    const std::int64_t t = config.max_tgt;

    const std::int64_t norm = 2 * d;
    const std::int64_t attn = 4 * d * d;
    const std::int64_t ff = d * f + f + f * d + d;
    const std::int64_t enc_layer = norm + attn + norm + ff;
    const std::int64_t dec_layer = norm + attn + norm + attn + norm + ff;

    ComputeEstimate est;
    est.params = v * d + s * d + t * d            // token + positional tables
                 + layers * enc_layer + norm      // encoder stack + final norm
                 + layers * dec_layer + norm      // decoder stack + final norm
                 + (config.tie_output ? 0 : d * v);
    // Per token at maximum context: q/k/v/o projections cost 4*d^2 MACs, the
    // score and value products 2*keys*d, and the feed-forward 2*d*f. Decoder
    // tokens pay self-attention (keys <= max_tgt) plus cross-attention (keys
    // <= max_src). The output projection adds d*vocab.
    est.macs_per_token = layers * (4 * d * d + 2 * s * d + 2 * d * f)
                         + layers * (8 * d * d + 2 * t * d + 2 * s * d + 2 * d * f)
                         + d * v;
    est.flops_per_token = 2 * est.macs_per_token;
    return est;
}

}  // namespace radsum::model
