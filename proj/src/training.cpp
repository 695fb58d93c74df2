#include "radsum/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "radsum/hash.hpp"
#include "radsum/io.hpp"
#include "radsum/rng.hpp"

namespace radsum::training {

namespace {

using nlohmann::json;

std::string epoch_checkpoint_path(const std::string& dir, int epoch) {
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%04d.ckpt", epoch);
    return dir + "/" + name;
}

std::string manifest_path(const std::string& dir) { return dir + "/manifest.json"; }

void write_manifest(const std::string& dir, const TrainRun& run) {
    json j;
    j["epochs_completed"] = run.history.size();
    json train_loss = json::array(), val_loss = json::array();
    json lambda = json::array(), drift = json::array();
    for (const auto& r : run.history) {
        train_loss.push_back(r.train_loss);
        val_loss.push_back(r.val_loss);
        lambda.push_back(r.lambda);
        drift.push_back(r.drift);
    }
    j["train_loss"] = std::move(train_loss);
    j["val_loss"] = std::move(val_loss);
    j["lambda"] = std::move(lambda);
    j["drift"] = std::move(drift);
    j["best_epoch"] = run.best_epoch;
    j["best_val"] = run.best_val;
    io::write_file_atomic(manifest_path(dir), j.dump(2) + "\n");
}

// Returns the number of finished epochs recorded in dir, restoring their
// history into run; 0 when no usable manifest exists.
int read_manifest(const std::string& dir, TrainRun& run) {
    json j;
    try {
        j = json::parse(io::read_text_file(manifest_path(dir)));
    } catch (const std::exception&) {
        return 0;
    }
    if (!j.is_object() || !j.contains("epochs_completed")) return 0;
    const int completed = j["epochs_completed"].get<int>();
    const auto& tl = j["train_loss"];
    const auto& vl = j["val_loss"];
    const auto& lam = j["lambda"];
    const auto& dr = j["drift"];
    if (completed < 0 || tl.size() != static_cast<std::size_t>(completed) ||
        vl.size() != tl.size() || lam.size() != tl.size() || dr.size() != tl.size()) {
        throw std::runtime_error("corrupt training manifest in " + dir);
    }
    for (int e = 0; e < completed; ++e) {
        EpochRecord r;
        r.train_loss = tl[static_cast<std::size_t>(e)].get<double>();
        r.val_loss = vl[static_cast<std::size_t>(e)].get<double>();
        r.lambda = lam[static_cast<std::size_t>(e)].get<double>();
        r.drift = dr[static_cast<std::size_t>(e)].get<double>();
        run.history.push_back(r);
    }
    run.best_epoch = j.value("best_epoch", -1);
    run.best_val = j.value("best_val", 0.0);
    return completed;
}

void track_best(TrainRun& run, int epoch, double val_loss) {
    if (run.best_epoch < 0 || val_loss < run.best_val) {
        run.best_epoch = epoch;
        run.best_val = val_loss;
    }
}

std::vector<bool> trainable_mask_for_epoch(const ParameterStore& params,
                                           const UnfreezePlan& plan, int epoch) {
    std::vector<std::string> active;
    for (const auto& [start, prefixes] : plan) {
        if (start > epoch) continue;
        active.insert(active.end(), prefixes.begin(), prefixes.end());
    }
    std::vector<bool> mask(params.size(), false);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string& name = params.items()[i].first;
        for (const auto& prefix : active) {
            if (name.compare(0, prefix.size(), prefix) == 0) {
                mask[i] = true;
                break;
            }
        }
    }
    return mask;
}

void validate_unfreeze_plan(const ParameterStore& params, const UnfreezePlan& plan) {
    for (const auto& [start, prefixes] : plan) {
        if (start < 0) throw std::invalid_argument("unfreeze plan has a negative epoch");
        for (const auto& prefix : prefixes) {
            bool hit = false;
            for (const auto& [name, t] : params.items()) {
                if (name.compare(0, prefix.size(), prefix) == 0) {
                    hit = true;
                    break;
                }
            }
            if (!hit) {
                throw std::invalid_argument("unfreeze plan references unknown layer: " + prefix);
            }
        }
    }
}

// Sum of non-pad label log-probabilities for one labeled batch.
Tensor sequence_loglik(Tape& tape, const ParameterStore& params, const ModelConfig& config,
                       const LabeledBatch& lb) {
    Tensor logits = model::forward(tape, params, config, lb.batch);
    const Index n = logits.dim(0) * logits.dim(1);
    const Index v = logits.dim(2);
    Tensor flat = tensor::reshape(tape, logits, {n, v});
    Tensor logp = tensor::log_softmax(tape, flat, 1);
    Tensor picked = tensor::select_index(tape, logp, lb.labels);
    std::vector<double> keep(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = lb.pad_mask[i] ? 0.0 : 1.0;
    Tensor weighted = tensor::mul(tape, picked, Tensor({n}, std::move(keep)));
    return tensor::reduce_sum(tape, weighted);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void validate_train_config(const TrainConfig& config) {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("train config: " + what);
    };
    if (config.epochs < 1) fail("epochs must be >= 1");
    if (config.batch_size < 1) fail("batch_size must be >= 1");
    if (!(config.lr > 0.0)) fail("lr must be > 0");
    if (config.optimizer != "adamw") fail("unknown optimizer: " + config.optimizer);
    if (config.weight_decay < 0.0) fail("weight_decay must be >= 0");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0)) fail("beta1 must be in [0,1)");
    if (!(config.beta2 >= 0.0 && config.beta2 < 1.0)) fail("beta2 must be in [0,1)");
    if (!(config.eps > 0.0)) fail("eps must be > 0");
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

Tensor cross_entropy(Tape& tape, const Tensor& logits, const std::vector<Index>& targets,
                     const std::vector<std::uint8_t>& pad_mask) {
    if (logits.rank() != 2 && logits.rank() != 3) {
        throw std::invalid_argument("cross_entropy: logits must be [N,V] or [B,T,V]");
    }
    const Index v = logits.dim(logits.rank() - 1);
    const Index n = logits.numel() / v;
    if (static_cast<Index>(targets.size()) != n || static_cast<Index>(pad_mask.size()) != n) {
        throw std::invalid_argument("cross_entropy: targets/pad_mask size mismatch");
    }
    Index kept = 0;
    for (auto m : pad_mask) kept += (m == 0);
    if (kept == 0) throw std::invalid_argument("cross_entropy: every position is masked out");

    Tensor flat = logits.rank() == 2 ? logits : tensor::reshape(tape, logits, {n, v});
    Tensor logp = tensor::log_softmax(tape, flat, 1);
    Tensor picked = tensor::select_index(tape, logp, targets);

    std::vector<double> weights(static_cast<std::size_t>(n), 0.0);
    const double w = 1.0 / static_cast<double>(kept);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (pad_mask[i] == 0) weights[i] = w;
    }
    Tensor mean = tensor::reduce_sum(tape, tensor::mul(tape, picked, Tensor({n}, std::move(weights))));
    return tensor::scale(tape, mean, -1.0);
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

AdamW::AdamW(std::vector<Tensor> params, const TrainConfig& config)
    : params_(std::move(params)),
      trainable_(params_.size(), true),
      lr_(config.lr),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.eps),
      weight_decay_(config.weight_decay),
      clip_norm_(config.clip_norm) {
    validate_train_config(config);
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
        v_.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);
    }
}

void AdamW::set_trainable(std::vector<bool> trainable) {
    if (trainable.size() != params_.size()) {
        throw std::invalid_argument("trainable mask size mismatch");
    }
    trainable_ = std::move(trainable);
}

void AdamW::step() {
    ++step_;
    double scale = 1.0;
    if (clip_norm_ > 0.0) {
        double sq = 0.0;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (!trainable_[i]) continue;
            for (double g : params_[i].grad()) sq += g * g;
        }
        const double norm = std::sqrt(sq);
        if (norm > clip_norm_) scale = clip_norm_ / norm;
    }
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (!trainable_[i]) continue;
        auto& value = params_[i].value();
        auto& grad = params_[i].grad();
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t j = 0; j < value.size(); ++j) {
            const double g = grad[j] * scale;
            m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
            v[j] = beta2_ * v[j] + (1.0 - beta2_) * g * g;
            const double mhat = m[j] / bc1;
            const double vhat = v[j] / bc2;
            value[j] -= lr_ * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * value[j]);
        }
    }
}

void AdamW::zero_grad() {
    for (const auto& p : params_) p.zero_grad();
}

checkpoint::OptimizerState AdamW::state() const {
    checkpoint::OptimizerState s;
    s.step = step_;
    s.m = m_;
    s.v = v_;
    return s;
}

void AdamW::load_state(const checkpoint::OptimizerState& state) {
    if (state.m.size() != params_.size() || state.v.size() != params_.size()) {
        throw std::invalid_argument("optimizer state does not match parameter count");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (state.m[i].size() != params_[i].value().size() ||
            state.v[i].size() != params_[i].value().size()) {
            throw std::invalid_argument("optimizer state does not match parameter shapes");
        }
    }
    step_ = state.step;
    m_ = state.m;
    v_ = state.v;
}

// ---------------------------------------------------------------------------
// Curvature and anchoring
// ---------------------------------------------------------------------------

const std::vector<double>* FisherDiag::find(const std::string& name) const {
    for (const auto& [n, v] : diag) {
        if (n == name) return &v;
    }
    return nullptr;
}

std::vector<std::vector<double>> estimate_fisher_diag(const std::vector<Tensor>& params,
                                                      std::size_t n_samples,
                                                      const LogLikFn& loglik) {
    if (n_samples == 0) throw std::invalid_argument("curvature estimation needs >= 1 sample");
    std::vector<std::vector<double>> acc;
    acc.reserve(params.size());
    for (const auto& p : params) acc.emplace_back(static_cast<std::size_t>(p.numel()), 0.0);

    for (std::size_t s = 0; s < n_samples; ++s) {
        for (const auto& p : params) p.zero_grad();
        Tape tape(true);
        Tensor ll = loglik(tape, s);
        tape.backward(ll);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& g = params[i].grad();
            for (std::size_t j = 0; j < g.size(); ++j) acc[i][j] += g[j] * g[j];
        }
    }
    for (auto& a : acc) {
        for (double& x : a) x /= static_cast<double>(n_samples);
    }
    for (const auto& p : params) p.zero_grad();
    return acc;
}

FisherDiag estimate_fisher(const ParameterStore& params, const ModelConfig& config,
                           const std::vector<SeqExample>& samples,
                           const FisherOptions& options) {
    if (samples.empty()) throw std::invalid_argument("curvature estimation needs >= 1 sample");

    // With label sampling, each position's label is drawn from the model's
    // own softmax while decoder inputs stay teacher-forced on observed text.
    std::vector<std::vector<Index>> sampled_labels;
    if (options.sample_labels) {
        Rng rng(options.seed);
        sampled_labels.resize(samples.size());
        for (std::size_t s = 0; s < samples.size(); ++s) {
            LabeledBatch lb = make_labeled_batch(samples, {s}, config);
            Tape off(false);
            const Tensor logits = model::forward(off, params, config, lb.batch);
            const auto& lv = logits.value();
            const auto v = static_cast<std::size_t>(config.vocab_size);
            sampled_labels[s] = lb.labels;
            for (std::size_t pos = 0; pos < lb.labels.size(); ++pos) {
                if (lb.pad_mask[pos] != 0) continue;
                const double* row = lv.data() + pos * v;
                double mx = row[0];
                for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, row[j]);
                double z = 0.0;
                for (std::size_t j = 0; j < v; ++j) z += std::exp(row[j] - mx);
                double u = rng.uniform() * z;
                std::size_t pick = v - 1;
                double cum = 0.0;
                for (std::size_t j = 0; j < v; ++j) {
                    cum += std::exp(row[j] - mx);
                    if (u < cum) {
                        pick = j;
                        break;
                    }
                }
                sampled_labels[s][pos] = static_cast<Index>(pick);
            }
        }
    }

    std::vector<Tensor> tensors;
    tensors.reserve(params.size());
    for (const auto& [name, t] : params.items()) tensors.push_back(t);

    const auto raw = estimate_fisher_diag(
        tensors, samples.size(), [&](Tape& tape, std::size_t s) {
            LabeledBatch lb = make_labeled_batch(samples, {s}, config);
            if (options.sample_labels) lb.labels = sampled_labels[s];
            return sequence_loglik(tape, params, config, lb);
        });

    FisherDiag fisher;
    fisher.diag.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        fisher.diag.emplace_back(params.items()[i].first, raw[i]);
    }
    return fisher;
}

EwcAnchor make_anchor(const ParameterStore& params, FisherDiag fisher, double lambda0,
                      AnchorSchedule schedule) {
    if (lambda0 < 0.0) throw std::invalid_argument("anchor strength must be >= 0");
    EwcAnchor anchor;
    anchor.theta_star = model::clone_store(params);
    anchor.fisher = std::move(fisher);
    anchor.lambda0 = lambda0;
    anchor.schedule = schedule;
    return anchor;
}

namespace {

// Shared walk for the penalty and the drift diagnostic. Returns
// sum_i F_i (theta_i - theta*_i)^2 and optionally accumulates
// lambda * F_i * (theta_i - theta*_i) into the gradients.
double anchored_quadratic(const ParameterStore& params, const EwcAnchor& anchor, double lambda,
                          bool accumulate_grad) {
    if (anchor.theta_star.size() != params.size() ||
        anchor.fisher.diag.size() != params.size()) {
        throw std::invalid_argument("anchor does not match the live parameters");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, t] = params.items()[i];
        const auto& [sname, st] = anchor.theta_star.items()[i];
        const auto& [fname, f] = anchor.fisher.diag[i];
        if (name != sname || name != fname || st.numel() != t.numel() ||
            f.size() != t.value().size()) {
            throw std::invalid_argument("anchor mismatch at parameter " + name);
        }
        const auto& theta = t.value();
        const auto& star = st.value();
        if (accumulate_grad) {
            auto& grad = t.grad();
            for (std::size_t j = 0; j < theta.size(); ++j) {
                const double d = theta[j] - star[j];
                total += f[j] * d * d;
                grad[j] += lambda * f[j] * d;
            }
        } else {
            for (std::size_t j = 0; j < theta.size(); ++j) {
                const double d = theta[j] - star[j];
                total += f[j] * d * d;
            }
        }
    }
    return total;
}

}  // namespace

double ewc_penalty(const ParameterStore& params, const EwcAnchor& anchor, double lambda,
                   bool accumulate_grad) {
    return 0.5 * anchored_quadratic(params, anchor, lambda, accumulate_grad);
}

double fisher_drift(const ParameterStore& params, const EwcAnchor& anchor) {
    return anchored_quadratic(params, anchor, 0.0, false);
}

double lambda_schedule(int epoch, int total_epochs, const EwcAnchor& anchor) {
    if (total_epochs < 1) throw std::invalid_argument("total_epochs must be >= 1");
    if (epoch < 0 || epoch >= total_epochs) {
        throw std::invalid_argument("epoch outside [0, total_epochs)");
    }
    // A single-epoch run sits at the schedule's endpoint.
    const double frac = total_epochs == 1
                            ? 1.0
                            : static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
    switch (anchor.schedule) {
        case AnchorSchedule::linear_to_zero:
            return anchor.lambda0 * (1.0 - frac);
        case AnchorSchedule::constant:
            return anchor.lambda0;
        case AnchorSchedule::exp_decay:
            return anchor.lambda0 * std::exp(-5.0 * frac);
    }
    throw std::logic_error("unreachable schedule");
}

// ---------------------------------------------------------------------------
// Batching and evaluation helpers
// ---------------------------------------------------------------------------

LabeledBatch make_labeled_batch(const std::vector<SeqExample>& examples,
                                const std::vector<std::size_t>& rows, const ModelConfig& config,
                                Index pad_id, Index eos_id) {
    if (rows.empty()) throw std::invalid_argument("empty batch");
    std::vector<std::vector<Index>> srcs;
    std::vector<std::vector<Index>> tgt_in;
    std::vector<std::vector<Index>> tgt_out;
    srcs.reserve(rows.size());
    tgt_in.reserve(rows.size());
    tgt_out.reserve(rows.size());
    for (std::size_t r : rows) {
        const SeqExample& ex = examples.at(r);
        std::vector<Index> src = ex.src;
        if (static_cast<Index>(src.size()) > config.max_src) {
            src.resize(static_cast<std::size_t>(config.max_src));
        }
        std::vector<Index> out = ex.tgt;
        if (static_cast<Index>(out.size()) > config.max_tgt - 1) {
            out.resize(static_cast<std::size_t>(config.max_tgt - 1));
        }
        std::vector<Index> in;
        in.reserve(out.size() + 1);
        in.push_back(pad_id);
        in.insert(in.end(), out.begin(), out.end());
        out.push_back(eos_id);
        srcs.push_back(std::move(src));
        tgt_in.push_back(std::move(in));
        tgt_out.push_back(std::move(out));
    }
    LabeledBatch lb;
    lb.batch = model::make_batch(srcs, tgt_in, pad_id);
    const auto t = static_cast<std::size_t>(lb.batch.tgt_len);
    lb.labels.assign(static_cast<std::size_t>(lb.batch.batch) * t, pad_id);
    lb.pad_mask.assign(lb.labels.size(), 1);
    for (std::size_t i = 0; i < tgt_out.size(); ++i) {
        for (std::size_t j = 0; j < tgt_out[i].size(); ++j) {
            lb.labels[i * t + j] = tgt_out[i][j];
            lb.pad_mask[i * t + j] = 0;
        }
    }
    return lb;
}

double dataset_loss(const ParameterStore& params, const ModelConfig& config,
                    const std::vector<SeqExample>& examples, int batch_size) {
    if (examples.empty()) throw std::invalid_argument("dataset_loss: no examples");
    if (batch_size < 1) throw std::invalid_argument("dataset_loss: batch_size must be >= 1");
    double total_nll = 0.0;
    std::int64_t total_tokens = 0;
    for (std::size_t pos = 0; pos < examples.size(); pos += static_cast<std::size_t>(batch_size)) {
        std::vector<std::size_t> rows;
        for (std::size_t r = pos; r < std::min(examples.size(), pos + static_cast<std::size_t>(batch_size)); ++r) {
            rows.push_back(r);
        }
        LabeledBatch lb = make_labeled_batch(examples, rows, config);
        Tape off(false);
        Tensor logits = model::forward(off, params, config, lb.batch);
        Tensor loss = cross_entropy(off, logits, lb.labels, lb.pad_mask);
        std::int64_t kept = 0;
        for (auto m : lb.pad_mask) kept += (m == 0);
        total_nll += loss.item() * static_cast<double>(kept);
        total_tokens += kept;
    }
    return total_nll / static_cast<double>(total_tokens);
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

TrainRun train_model(ParameterStore& params, const ModelConfig& config,
                     const std::vector<SeqExample>& train, const std::vector<SeqExample>& val,
                     const TrainOptions& options) {
    const TrainConfig& tc = options.config;
    validate_train_config(tc);
    model::validate_config(config);
    if (train.empty()) throw std::invalid_argument("training set is empty");
    if (options.unfreeze != nullptr) validate_unfreeze_plan(params, *options.unfreeze);

    std::vector<Tensor> tensors;
    tensors.reserve(params.size());
    for (const auto& [name, t] : params.items()) tensors.push_back(t);
    AdamW opt(tensors, tc);
    if (options.unfreeze != nullptr) {
        // Nothing trains until the plan says so.
        opt.set_trainable(std::vector<bool>(params.size(), false));
    }

    TrainRun run;
    int start_epoch = 0;
    if (!options.checkpoint_dir.empty() && options.resume) {
        TrainRun stored;
        int completed = read_manifest(options.checkpoint_dir, stored);
        completed = std::min(completed, tc.epochs);
        if (completed > 0) {
            const auto ck =
                checkpoint::load_checkpoint(epoch_checkpoint_path(options.checkpoint_dir, completed - 1));
            model::copy_values(params, ck.params);
            if (!ck.has_optimizer) {
                throw std::runtime_error("checkpoint lacks optimizer state; cannot resume");
            }
            opt.load_state(ck.optimizer);
            stored.history.resize(static_cast<std::size_t>(completed));
            run.history = stored.history;
            run.best_epoch = -1;
            for (int e = 0; e < completed; ++e) {
                track_best(run, e, run.history[static_cast<std::size_t>(e)].val_loss);
            }
            start_epoch = completed;
        }
    }

    for (int epoch = start_epoch; epoch < tc.epochs; ++epoch) {
        const double lambda =
            options.anchor != nullptr ? lambda_schedule(epoch, tc.epochs, *options.anchor) : 0.0;
        if (options.unfreeze != nullptr) {
            opt.set_trainable(trainable_mask_for_epoch(params, *options.unfreeze, epoch));
        }

        Rng shuffle_rng(hash::derive_seed(tc.seed, "epoch-" + std::to_string(epoch)));
        std::vector<std::size_t> order(train.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);

        double objective_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(tc.batch_size)) {
            const std::vector<std::size_t> rows(
                order.begin() + static_cast<std::ptrdiff_t>(pos),
                order.begin() + static_cast<std::ptrdiff_t>(
                                    std::min(order.size(), pos + static_cast<std::size_t>(tc.batch_size))));
            LabeledBatch lb = make_labeled_batch(train, rows, config);
            Tape tape(true);
            Tensor loss;
            if (options.loss_fn) {
                loss = options.loss_fn(tape, lb);
            } else {
                Tensor logits = model::forward(tape, params, config, lb.batch);
                loss = cross_entropy(tape, logits, lb.labels, lb.pad_mask);
            }
            double objective = loss.item();
            opt.zero_grad();
            tape.backward(loss);
            if (options.anchor != nullptr && lambda != 0.0) {
                objective += lambda * ewc_penalty(params, *options.anchor, lambda, true);
            }
            if (!std::isfinite(objective)) {
                throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batches));
            }
            opt.step();
            objective_sum += objective;
            ++batches;
        }

        EpochRecord rec;
        rec.train_loss = objective_sum / static_cast<double>(batches);
        rec.val_loss = val.empty() ? rec.train_loss
                                   : dataset_loss(params, config, val, tc.batch_size);
        rec.lambda = lambda;
        rec.drift = options.anchor != nullptr ? fisher_drift(params, *options.anchor) : 0.0;
        run.history.push_back(rec);
        track_best(run, epoch, rec.val_loss);

        if (!options.checkpoint_dir.empty()) {
            const auto state = opt.state();
            checkpoint::save_checkpoint(epoch_checkpoint_path(options.checkpoint_dir, epoch),
                                        params, &state);
            write_manifest(options.checkpoint_dir, run);
        }
    }
    return run;
}

TrainRun train_gsg(ParameterStore& params, const ModelConfig& config,
                   const std::vector<SeqExample>& train, const std::vector<SeqExample>& val,
                   const TrainConfig& tc, const std::string& checkpoint_dir) {
    TrainOptions options;
    options.config = tc;
    options.checkpoint_dir = checkpoint_dir;
    return train_model(params, config, train, val, options);
}

TrainRun finetune_summarization(ParameterStore& params, const ModelConfig& config,
                                const EwcAnchor& anchor, const std::vector<SeqExample>& train,
                                const std::vector<SeqExample>& val, const TrainConfig& tc,
                                const std::string& checkpoint_dir) {
    TrainOptions options;
    options.config = tc;
    options.checkpoint_dir = checkpoint_dir;
    options.anchor = &anchor;
    return train_model(params, config, train, val, options);
}

TrainRun layer_unfreeze_finetune(ParameterStore& params, const ModelConfig& config,
                                 const UnfreezePlan& plan, const std::vector<SeqExample>& train,
                                 const std::vector<SeqExample>& val, const TrainConfig& tc,
                                 const std::string& checkpoint_dir) {
    TrainOptions options;
    options.config = tc;
    options.checkpoint_dir = checkpoint_dir;
    options.unfreeze = &plan;
    return train_model(params, config, train, val, options);
}

}  // namespace radsum::training
