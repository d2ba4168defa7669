#include "ssmp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ssmp {

LossMode loss_mode_from_string(const std::string& s) {
    if (s == "ce") return LossMode::ce;
    if (s == "mse") return LossMode::mse;
    throw std::runtime_error("unknown loss mode: " + s);
}

int MaskedSequence::masked_count() const {
    int n = 0;
    for (uint8_t m : mask) n += m;
    return n;
}

Matrix MaskedSequence::tokens(const Matrix& trailer, const Matrix& placeholder) const {
    require(static_cast<int>(mask.size()) == trailer.rows, "tokens: mask size mismatch");
    Matrix out = trailer;
    for (int j = 0; j < trailer.rows; ++j)
        if (mask[j])
            for (int c = 0; c < trailer.cols; ++c) out.at(j, c) = placeholder.at(0, c);
    return out;
}

MaskedSequence mask_sequence(int trailer_shots, double t, std::mt19937_64& rng) {
    require(t > 0.0 && t <= 1.0, "mask_sequence: ratio outside (0,1]");
    require(trailer_shots >= 1, "mask_sequence: empty sequence");
    MaskedSequence ms;
    ms.ratio = t;
    ms.mask.resize(trailer_shots);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    do {
        for (auto& m : ms.mask) m = u(rng) < t ? 1 : 0;
    } while (ms.masked_count() == 0);
    return ms;
}

PairForward forward_pair(const ModelParams& params, const Matrix& movie, const Matrix& trailer,
                         const MaskedSequence& masked, const GroundTruth& truth, LossMode mode) {
    require(movie.cols == trailer.cols, "forward_pair: width mismatch");
    require(masked.masked_count() > 0, "forward_pair: empty mask set");
    require(static_cast<int>(truth.labels.size()) == trailer.rows,
            "forward_pair: truth length mismatch");
    const int I = movie.rows, J = trailer.rows;

    PairForward fw;
    fw.leaves = register_params(fw.tape, params);
    const Tape::Ref masked_tokens =
        fw.tape.assemble_masked(trailer, masked.mask, fw.leaves.mask_placeholder);
    const Tape::Ref input = fw.tape.concat_rows(fw.tape.leaf(movie), masked_tokens);
    std::vector<int> positions(I + J);
    std::iota(positions.begin(), positions.end(), 0);
    const Tape::Ref enc = encode_on_tape(fw.tape, fw.leaves, params.cfg, input, positions);
    fw.vhat = fw.tape.slice_rows(enc, I, J);
    fw.probs = fw.tape.row_softmax(fw.tape.cosine_rows(fw.vhat, movie));

    const double inv_t = 1.0 / masked.ratio;
    if (mode == LossMode::ce) {
        Matrix pick(J, I);
        for (int j = 0; j < J; ++j)
            if (masked.mask[j]) pick.at(j, truth.labels[j]) = 1.0;
        const Tape::Ref weighted = fw.tape.mul(fw.tape.log(fw.probs), fw.tape.leaf(pick));
        fw.loss = fw.tape.scale(fw.tape.sum(weighted), -inv_t);
    } else {
        Matrix targets(J, movie.cols);
        Matrix row_weight(J, movie.cols);
        for (int j = 0; j < J; ++j)
            if (masked.mask[j])
                for (int c = 0; c < movie.cols; ++c) {
                    targets.at(j, c) = movie.at(truth.labels[j], c);
                    row_weight.at(j, c) = 1.0;
                }
        const Tape::Ref diff =
            fw.tape.add(fw.vhat, fw.tape.scale(fw.tape.leaf(targets), -1.0));
        const Tape::Ref sq = fw.tape.mul(fw.tape.mul(diff, diff), fw.tape.leaf(row_weight));
        fw.loss = fw.tape.scale(fw.tape.sum(sq), inv_t);
    }
    return fw;
}

std::pair<Matrix, Matrix> predict_probs(const ModelParams& params, const Matrix& movie,
                                        const Matrix& trailer_tokens) {
    require(movie.cols == trailer_tokens.cols, "predict_probs: width mismatch");
    Tape tape;
    const ParamLeaves leaves = register_params(tape, params);
    const Tape::Ref input = tape.concat_rows(tape.leaf(movie), tape.leaf(trailer_tokens));
    std::vector<int> positions(movie.rows + trailer_tokens.rows);
    std::iota(positions.begin(), positions.end(), 0);
    const Tape::Ref enc = encode_on_tape(tape, leaves, params.cfg, input, positions);
    const Tape::Ref vhat = tape.slice_rows(enc, movie.rows, trailer_tokens.rows);
    const Tape::Ref probs = tape.row_softmax(tape.cosine_rows(vhat, movie));
    return {tape.value(vhat), tape.value(probs)};
}

namespace {

int argmax_row(const Matrix& p, int row) {
    int best = 0;
    for (int i = 1; i < p.cols; ++i)
        if (p.at(row, i) > p.at(row, best)) best = i;
    return best;
}

}  // namespace

double batch_accuracy(const std::vector<BatchPairResult>& batch) {
    require(!batch.empty(), "batch_accuracy: empty batch");
    double total = 0.0;
    for (const auto& pair : batch) {
        int masked = 0, correct = 0;
        for (size_t j = 0; j < pair.mask.size(); ++j) {
            if (!pair.mask[j]) continue;
            ++masked;
            if (argmax_row(pair.probs, static_cast<int>(j)) == pair.labels[j]) ++correct;
        }
        require(masked > 0, "batch_accuracy: pair with empty mask set");
        total += static_cast<double>(correct) / masked;
    }
    return total / static_cast<double>(batch.size());
}

void adamw_step(ModelParams& params, const std::vector<Matrix>& grads, AdamWState& state,
                const AdamWHyper& hyper, double lr_now) {
    std::vector<Matrix*> tensors;
    std::vector<std::string> names;
    params.for_each_tensor([&](const std::string& name, Matrix& m) {
        tensors.push_back(&m);
        names.push_back(name);
    });
    require(grads.size() == tensors.size(), "adamw_step: gradient count mismatch");
    if (state.m.empty()) {
        for (const auto* t : tensors) {
            state.m.push_back(Matrix::zeros(t->rows, t->cols));
            state.v.push_back(Matrix::zeros(t->rows, t->cols));
        }
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < tensors.size(); ++i) {
        Matrix& w = *tensors[i];
        const Matrix& g = grads[i];
        require(w.same_shape(g), "adamw_step: grad shape mismatch for " + names[i]);
        require(g.all_finite(), "adamw_step: non-finite gradient for " + names[i]);
        for (size_t k = 0; k < w.data.size(); ++k) {
            double& m = state.m[i].data[k];
            double& v = state.v[i].data[k];
            m = hyper.beta1 * m + (1.0 - hyper.beta1) * g.data[k];
            v = hyper.beta2 * v + (1.0 - hyper.beta2) * g.data[k] * g.data[k];
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            w.data[k] -= lr_now * (mhat / (std::sqrt(vhat) + hyper.eps) +
                                   hyper.weight_decay * w.data[k]);
        }
    }
}

double lr_at(long step, long total_steps, double lr_max, double warmup_ratio,
             const std::string& shape) {
    const long warmup = std::max<long>(1, static_cast<long>(warmup_ratio * total_steps));
    if (step < warmup) return lr_max * static_cast<double>(step + 1) / warmup;
    if (shape == "constant") return lr_max;
    const double progress =
        static_cast<double>(step - warmup) / std::max<long>(1, total_steps - warmup);
    return lr_max * 0.5 * (1.0 + std::cos(M_PI * std::min(1.0, progress)));
}

void save_curves(const std::string& path, const TrainingCurves& curves) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "save_curves: cannot open " + path);
    os << "step,loss,accuracy,mask_ratio,lr\n";
    for (const auto& r : curves.rows)
        os << r.step << "," << r.loss << "," << r.accuracy << "," << r.mask_ratio << "," << r.lr
           << "\n";
}

void save_scheduler_trajectory(const std::string& path, const TrainingCurves& curves) {
    std::ofstream os(path);
    require(static_cast<bool>(os), "save_scheduler_trajectory: cannot open " + path);
    os << "step,b,t\n";
    for (const auto& r : curves.rows)
        os << r.step << "," << r.momentum_b << "," << r.mask_ratio << "\n";
}

TrainResult train(const std::vector<MovieTrailerPair>& corpus, const EncoderConfig& enc_cfg,
                  const TrainConfig& cfg) {
    require(!corpus.empty(), "train: empty corpus");
    for (const auto& p : corpus) {
        validate_shot_matrix(p.movie, "train movie " + p.id);
        validate_shot_matrix(p.trailer, "train trailer " + p.id);
    }

    EncoderConfig ecfg = enc_cfg;
    ecfg.seed = cfg.seed;
    ModelParams params = init_params(ecfg);

    const long batches_per_epoch =
        (static_cast<long>(corpus.size()) + cfg.batch_size - 1) / cfg.batch_size;
    long total_steps = static_cast<long>(cfg.epochs) * batches_per_epoch;
    if (cfg.max_steps > 0) total_steps = std::min(total_steps, cfg.max_steps);
    require(total_steps >= 1, "train: zero steps");

    SchedulerState sched =
        init_scheduler(cfg.scheduler, cfg.sched_hyper, total_steps, cfg.seed ^ 0x5eedULL);
    sched.monotone = cfg.monotone;

    AdamWHyper opt_hyper;
    opt_hyper.lr = cfg.lr;
    opt_hyper.beta1 = cfg.beta1;
    opt_hyper.beta2 = cfg.beta2;
    opt_hyper.weight_decay = cfg.weight_decay;
    AdamWState opt_state;

    std::mt19937_64 rng(cfg.seed);
    size_t tensor_count = 0;
    params.for_each_tensor([&](const std::string&, Matrix&) { ++tensor_count; });

    TrainResult result;
    std::vector<size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);

    long step = 0;
    for (int epoch = 0; step < total_steps; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (long batch = 0; batch < batches_per_epoch && step < total_steps; ++batch, ++step) {
            const double t_n = sched.t;
            std::vector<size_t> idx;
            for (int k = 0; k < cfg.batch_size; ++k)
                idx.push_back(order[(batch * cfg.batch_size + k) % corpus.size()]);

            // Masks are drawn serially so the run is a pure function of the
            // seed regardless of the worker count.
            std::vector<MaskedSequence> masks(idx.size());
            for (size_t k = 0; k < idx.size(); ++k)
                masks[k] = mask_sequence(corpus[idx[k]].trailer.rows, t_n, rng);

            std::vector<double> losses(idx.size(), 0.0);
            std::vector<BatchPairResult> batch_results(idx.size());
            std::vector<std::vector<Matrix>> pair_grads(idx.size());
#pragma omp parallel for schedule(dynamic)
            for (int k = 0; k < static_cast<int>(idx.size()); ++k) {
                const auto& pair = corpus[idx[k]];
                PairForward fw =
                    forward_pair(params, pair.movie, pair.trailer, masks[k], pair.truth, cfg.loss);
                fw.tape.backward(fw.loss);
                losses[k] = fw.tape.value(fw.loss).at(0, 0);
                batch_results[k] = {fw.tape.value(fw.probs), pair.truth.labels, masks[k].mask};
                pair_grads[k].reserve(tensor_count);
                for (const auto ref : fw.leaves.refs) pair_grads[k].push_back(fw.tape.grad(ref));
            }

            double mean_loss = 0.0;
            for (double l : losses) mean_loss += l;
            mean_loss /= static_cast<double>(losses.size());
            if (!std::isfinite(mean_loss))
                throw std::runtime_error("train: divergence (non-finite loss) at step " +
                                         std::to_string(step));

            // Fixed-order reduction keeps the update bitwise reproducible.
            std::vector<Matrix> grads = std::move(pair_grads[0]);
            for (size_t k = 1; k < pair_grads.size(); ++k)
                for (size_t ti = 0; ti < grads.size(); ++ti)
                    for (size_t e = 0; e < grads[ti].data.size(); ++e)
                        grads[ti].data[e] += pair_grads[k][ti].data[e];
            const double inv_b = 1.0 / static_cast<double>(idx.size());
            for (auto& g : grads)
                for (auto& x : g.data) x *= inv_b;

            const double lr_now =
                lr_at(step, total_steps, cfg.lr, cfg.warmup_ratio, cfg.lr_schedule);
            adamw_step(params, grads, opt_state, opt_hyper, lr_now);

            const double a_n = batch_accuracy(batch_results);
            scheduler_step(sched, a_n);
            result.curves.rows.push_back({step, mean_loss, a_n, t_n, lr_now, sched.b});
        }
    }
    result.params = std::move(params);
    return result;
}

}  // namespace ssmp
