#include "radsum/distillation.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "radsum/hash.hpp"
#include "radsum/io.hpp"

namespace radsum::distillation {

namespace fs = std::filesystem;
using training::LabeledBatch;

namespace {

struct KdParts {
    Tensor combined;
    double ce = 0.0;
    double kl = 0.0;  // scaled by T^2
};

// Shared by kd_loss and the distillation loop so the logged components are
// exactly the values the optimizer saw.
KdParts kd_parts(Tape& tape, const Tensor& student_logits, const Tensor& teacher_logits,
                 const std::vector<Index>& targets, const std::vector<std::uint8_t>& pad_mask,
                 const KDConfig& config) {
    validate_kd_config(config);
    if (!student_logits.defined() || !teacher_logits.defined() ||
        student_logits.shape() != teacher_logits.shape()) {
        throw std::invalid_argument("kd loss: student and teacher logits differ in shape");
    }

    KdParts parts;
    Tensor ce = training::cross_entropy(tape, student_logits, targets, pad_mask);
    parts.ce = ce.item();
    if (config.alpha == 0.0) {
        parts.combined = ce;
        return parts;
    }

    const double temp = config.temperature;
    const Index v = student_logits.dim(student_logits.rank() - 1);
    const Index n = student_logits.numel() / v;

    // Per-position weights: 1/kept on scored positions, 0 on filler.
    std::int64_t kept = 0;
    for (auto m : pad_mask) kept += (m == 0);
    const double w = 1.0 / static_cast<double>(kept);

    // Teacher side: constants, but computed with the same softmax/log-softmax
    // primitives as the student side so that identical logits cancel exactly.
    Tape off(false);
    Tensor t_flat = tensor::reshape(off, teacher_logits, {n, v});
    Tensor t_scaled = tensor::scale(off, t_flat, 1.0 / temp);
    Tensor p_t = tensor::softmax(off, t_scaled, 1);
    Tensor lnp_t = tensor::log_softmax(off, t_scaled, 1);

    Tensor s_flat = tensor::reshape(tape, student_logits, {n, v});
    Tensor lnp_s = tensor::log_softmax(tape, tensor::scale(tape, s_flat, 1.0 / temp), 1);

    Tensor kl;
    if (!config.reverse_kl) {
        // KL(teacher || student) = sum_r w_r sum_v p_t (ln p_t - ln p_s).
        // Gradient flows only through ln p_s; the entropy half is a constant
        // evaluated with the same fold so it cancels bitwise when S == T.
        std::vector<double> weighted_pt(static_cast<std::size_t>(n * v));
        const auto& ptv = p_t.value();
        for (Index r = 0; r < n; ++r) {
            const double wr = pad_mask[static_cast<std::size_t>(r)] ? 0.0 : w;
            for (Index j = 0; j < v; ++j) {
                weighted_pt[static_cast<std::size_t>(r * v + j)] =
                    wr * ptv[static_cast<std::size_t>(r * v + j)];
            }
        }
        Tensor weights({n, v}, weighted_pt);
        const double entropy = tensor::reduce_sum(off, tensor::mul(off, lnp_t, weights)).item();
        Tensor cross = tensor::reduce_sum(tape, tensor::mul(tape, lnp_s, weights));
        kl = tensor::add(tape, tensor::scale(tape, cross, -1.0), Tensor::scalar(entropy));
    } else {
        // KL(student || teacher) = sum_r w_r sum_v p_s (ln p_s - ln p_t).
        Tensor p_s = tensor::softmax(tape, tensor::scale(tape, s_flat, 1.0 / temp), 1);
        std::vector<double> neg_lnpt(static_cast<std::size_t>(n * v));
        std::vector<double> row_w(static_cast<std::size_t>(n * v));
        const auto& ltv = lnp_t.value();
        for (Index r = 0; r < n; ++r) {
            const double wr = pad_mask[static_cast<std::size_t>(r)] ? 0.0 : w;
            for (Index j = 0; j < v; ++j) {
                neg_lnpt[static_cast<std::size_t>(r * v + j)] =
                    -ltv[static_cast<std::size_t>(r * v + j)];
                row_w[static_cast<std::size_t>(r * v + j)] = wr;
            }
        }
        Tensor diff = tensor::add(tape, lnp_s, Tensor({n, v}, std::move(neg_lnpt)));
        Tensor prod = tensor::mul(tape, p_s, diff);
        kl = tensor::reduce_sum(tape, tensor::mul(tape, prod, Tensor({n, v}, std::move(row_w))));
    }

    parts.kl = kl.item() * temp * temp;  // unblended soft term, for logging
    Tensor soft_term = tensor::scale(tape, kl, config.alpha * temp * temp);
    parts.combined =
        tensor::add(tape, tensor::scale(tape, ce, 1.0 - config.alpha), soft_term);
    return parts;
}

}  // namespace

void validate_kd_config(const KDConfig& config) {
    if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) {
        throw std::invalid_argument("kd config: alpha must be in [0, 1]");
    }
    if (!(config.temperature > 0.0) || !std::isfinite(config.temperature)) {
        throw std::invalid_argument("kd config: temperature must be positive");
    }
}

Tensor soften(Tape& tape, const Tensor& logits, double temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature)) {
        throw std::invalid_argument("soften: temperature must be positive");
    }
    if (!logits.defined() || logits.rank() < 1) {
        throw std::invalid_argument("soften: logits must have at least one axis");
    }
    return tensor::softmax(tape, tensor::scale(tape, logits, 1.0 / temperature),
                           logits.rank() - 1);
}

Tensor kd_loss(Tape& tape, const Tensor& student_logits, const Tensor& teacher_logits,
               const std::vector<Index>& targets, const std::vector<std::uint8_t>& pad_mask,
               const KDConfig& config) {
    return kd_parts(tape, student_logits, teacher_logits, targets, pad_mask, config).combined;
}

ModelConfig student_preset(const ModelConfig& teacher, int factor) {
    ModelConfig s = teacher;
    switch (factor) {
        case 8:
            s.layers = 3;
            s.d_model = 128;
            s.heads = 4;
            s.d_ff = 512;
            break;
        case 16:
            s.layers = 2;
            s.d_model = 96;
            s.heads = 4;
            s.d_ff = 384;
            break;
        case 32:
            s.layers = 2;
            s.d_model = 64;
            s.heads = 2;
            s.d_ff = 256;
            break;
        default:
            throw std::invalid_argument("student preset: unsupported reduction factor " +
                                        std::to_string(factor));
    }
    model::validate_config(s);
    return s;
}

std::string store_hash(const ParameterStore& params) {
    hash::Fnv1a64 h;
    for (const auto& [name, t] : params.items()) {
        h.update(name);
        h.update("\0", 1);
        for (Index d : t.shape()) {
            const auto u = static_cast<std::uint64_t>(d);
            h.update(&u, sizeof(u));
        }
        const auto& vals = t.value();
        h.update(vals.data(), vals.size() * sizeof(double));
    }
    return hash::to_hex(h.digest());
}

DistillResult distill(const ParameterStore& teacher, const ModelConfig& teacher_config,
                      const ModelConfig& student_config,
                      const std::vector<training::SeqExample>& train,
                      const std::vector<training::SeqExample>& val, const KDConfig& kd,
                      const training::TrainConfig& tc, const std::string& checkpoint_dir) {
    validate_kd_config(kd);
    model::validate_config(teacher_config);
    model::validate_config(student_config);
    if (teacher_config.vocab_size != student_config.vocab_size) {
        throw std::invalid_argument("vocab mismatch between teacher and student");
    }
    if (teacher_config.max_src < student_config.max_src ||
        teacher_config.max_tgt < student_config.max_tgt) {
        throw std::invalid_argument("teacher sequence limits are shorter than the student's");
    }

    DistillResult result;
    result.student = model::init_model(student_config);

    std::vector<KdEpoch> fresh;  // one entry per batch, folded into epochs below
    training::TrainOptions options;
    options.config = tc;
    options.checkpoint_dir = checkpoint_dir;
    options.loss_fn = [&](Tape& tape, const LabeledBatch& lb) {
        Tensor s_logits = model::forward(tape, result.student, student_config, lb.batch);
        if (kd.alpha == 0.0) {
            Tensor loss = training::cross_entropy(tape, s_logits, lb.labels, lb.pad_mask);
            fresh.push_back({loss.item(), 0.0, loss.item()});
            return loss;
        }
        Tape off(false);
        Tensor t_logits = model::forward(off, teacher, teacher_config, lb.batch);
        KdParts parts = kd_parts(tape, s_logits, t_logits, lb.labels, lb.pad_mask, kd);
        fresh.push_back({parts.ce, parts.kl, parts.combined.item()});
        return parts.combined;
    };

    result.run = training::train_model(result.student, student_config, train, val, options);

    // Fold per-batch components into per-epoch means. A resumed run only
    // produced entries for the epochs it actually executed; earlier epochs
    // are recovered from the manifest written by the interrupted run.
    const auto bs = static_cast<std::size_t>(tc.batch_size);
    const std::size_t batches_per_epoch = (train.size() + bs - 1) / bs;
    const std::size_t epochs_now = fresh.size() / batches_per_epoch;
    const std::size_t total_epochs = result.run.history.size();
    result.components.assign(total_epochs, KdEpoch{});

    const fs::path manifest_path = fs::path(checkpoint_dir) / "kd_manifest.json";
    if (!checkpoint_dir.empty() && epochs_now < total_epochs && fs::exists(manifest_path)) {
        const auto stored = nlohmann::json::parse(io::read_text_file(manifest_path.string()));
        const std::size_t head = total_epochs - epochs_now;
        for (std::size_t e = 0; e < head && e < stored["ce"].size(); ++e) {
            result.components[e] = {stored["ce"][e].get<double>(), stored["kl"][e].get<double>(),
                                    stored["combined"][e].get<double>()};
        }
    }
    for (std::size_t e = 0; e < epochs_now; ++e) {
        KdEpoch mean;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            const KdEpoch& x = fresh[e * batches_per_epoch + b];
            mean.ce += x.ce;
            mean.kl += x.kl;
            mean.combined += x.combined;
        }
        const auto denom = static_cast<double>(batches_per_epoch);
        mean.ce /= denom;
        mean.kl /= denom;
        mean.combined /= denom;
        result.components[total_epochs - epochs_now + e] = mean;
    }

    if (!checkpoint_dir.empty()) {
        nlohmann::json m;
        m["alpha"] = kd.alpha;
        m["temperature"] = kd.temperature;
        m["reverse_kl"] = kd.reverse_kl;
        m["teacher_hash"] = store_hash(teacher);
        m["epochs"] = total_epochs;
        auto ce = nlohmann::json::array();
        auto klj = nlohmann::json::array();
        auto comb = nlohmann::json::array();
        for (const KdEpoch& e : result.components) {
            ce.push_back(e.ce);
            klj.push_back(e.kl);
            comb.push_back(e.combined);
        }
        m["ce"] = std::move(ce);
        m["kl"] = std::move(klj);
        m["combined"] = std::move(comb);
        io::write_file_atomic(manifest_path.string(), m.dump(2) + "\n");
    }
    return result;
}

}  // namespace radsum::distillation
