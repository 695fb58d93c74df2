#pragma once

// Compact encoder-decoder transformer: pre-layer-norm blocks, learned
// absolute positional embeddings, GELU feed-forward, bidirectional encoder
// self-attention, causal decoder self-attention plus cross-attention, and an
// output projection optionally tied to the token embedding.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "radsum/tensor.hpp"

namespace radsum::model {

using tensor::Index;
using tensor::Tape;
using tensor::Tensor;

struct ModelConfig {
    int layers = 6;       // encoder layers == decoder layers
    int d_model = 512;
    int heads = 8;
    int d_ff = 2048;
    int vocab_size = 32128;
    int max_src = 512;
    int max_tgt = 256;
    std::uint64_t seed = 0;
    bool tie_output = true;  // logits through the transposed token embedding
};

// Throws std::invalid_argument with the offending field named.
void validate_config(const ModelConfig& config);

// Ordered name -> Tensor map. Iteration order is creation order and defines
// the layout of every flattened view (optimizer state, Fisher diagonals).
class ParameterStore {
public:
    Tensor& add(const std::string& name, Tensor t);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }

    std::int64_t total_values() const;
    void zero_grads() const;

    // Concatenation of all parameter values (or grads) in iteration order.
    std::vector<double> flatten_values() const;
    std::vector<double> flatten_grads() const;

private:
    std::vector<std::pair<std::string, Tensor>> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Deterministic initialization from config.seed: projection weights are
// normal with std fan_in^(-1/2), embeddings std 0.02, norm gains 1, biases 0.
ParameterStore init_model(const ModelConfig& config);

// Deep copy: fresh buffers, same names, shapes, and values.
ParameterStore clone_store(const ParameterStore& store);

// Copies values (not gradients) from src into dst by position. Throws when
// names, order, or shapes disagree.
void copy_values(ParameterStore& dst, const ParameterStore& src);

struct Batch {
    std::vector<Index> src;  // [batch * src_len], right-padded
    std::vector<Index> tgt;  // [batch * tgt_len] decoder inputs, right-padded
    Index batch = 0;
    Index src_len = 0;
    Index tgt_len = 0;
    Index pad_id = 0;
};

// Right-pads ragged sequences to rectangular id buffers. Throws when the
// lists are empty, differ in length, or contain an empty sequence.
Batch make_batch(const std::vector<std::vector<Index>>& src_seqs,
                 const std::vector<std::vector<Index>>& tgt_seqs, Index pad_id = 0);

// Encoder stack: [batch, src_len, d_model]; padded key positions are masked
// out of every attention row.
Tensor encode(Tape& tape, const ParameterStore& params, const ModelConfig& config,
              const Batch& batch);

// Decoder stack over the encoder output: [batch, tgt_len, d_model]. Causal
// masking guarantees position t sees decoder inputs <= t only.
Tensor decode(Tape& tape, const ParameterStore& params, const ModelConfig& config,
              const Batch& batch, const Tensor& encoded);

// encode + decode + output projection: logits [batch, tgt_len, vocab].
Tensor forward(Tape& tape, const ParameterStore& params, const ModelConfig& config,
               const Batch& batch);

// Argmax decoding (ties -> lowest id), starting from the pad token per the
// decoder-input convention, stopping at eos or max_len. Returns generated
// ids without the start or eos tokens.
std::vector<Index> greedy_decode(const ParameterStore& params, const ModelConfig& config,
                                 const std::vector<Index>& src, Index max_len,
                                 Index pad_id = 0, Index eos_id = 1);

struct ComputeEstimate {
    std::int64_t params = 0;
    // Multiply-accumulates for one generated/processed token at the configured
    // maximum context: projection and feed-forward weights plus attention
    // score/value products; biases, norms, and activations excluded.
    std::int64_t macs_per_token = 0;
    std::int64_t flops_per_token = 0;  // 2 x macs
};

ComputeEstimate count_params_and_flops(const ModelConfig& config);

}  // namespace radsum::model
