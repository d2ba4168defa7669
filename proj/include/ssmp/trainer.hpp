#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssmp/autograd.hpp"
#include "ssmp/corpus.hpp"
#include "ssmp/encoder.hpp"
#include "ssmp/scheduler.hpp"

namespace ssmp {

enum class LossMode { ce, mse };
LossMode loss_mode_from_string(const std::string& s);

/// Bernoulli(t) mask over the J trailer positions. Resampled until at least
/// one position is masked (the 1/t loss weight needs a nonempty mask set).
struct MaskedSequence {
    std::vector<uint8_t> mask;  // 1 = replaced by the mask placeholder
    double ratio = 0.0;

    int masked_count() const;
    Matrix tokens(const Matrix& trailer, const Matrix& placeholder) const;
};

MaskedSequence mask_sequence(int trailer_shots, double t, std::mt19937_64& rng);

/// One differentiable forward pass over a single movie/trailer pair.
struct PairForward {
    Tape tape;
    ParamLeaves leaves;
    Tape::Ref vhat = -1;   // J x D predicted trailer features
    Tape::Ref probs = -1;  // J x I conditional probabilities
    Tape::Ref loss = -1;   // scalar
};

/// Builds the graph: encode [M; masked V], cosine against the movie rows,
/// row softmax, then the CE or MSE objective over the masked positions
/// scaled by 1/t.
PairForward forward_pair(const ModelParams& params, const Matrix& movie, const Matrix& trailer,
                         const MaskedSequence& masked, const GroundTruth& truth, LossMode mode);

/// Inference-path prediction for an explicit token matrix whose masked rows
/// already hold the placeholder. Returns (V-hat, P).
std::pair<Matrix, Matrix> predict_probs(const ModelParams& params, const Matrix& movie,
                                        const Matrix& trailer_tokens);

struct BatchPairResult {
    Matrix probs;
    std::vector<int> labels;
    std::vector<uint8_t> mask;
};

/// Mean over pairs of the fraction of masked positions whose argmax
/// probability hits the ground-truth shot (ties to the lowest index).
double batch_accuracy(const std::vector<BatchPairResult>& batch);

struct AdamWHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

struct AdamWState {
    long step = 0;
    std::vector<Matrix> m, v;  // for_each_tensor order
};

/// Decoupled-weight-decay adaptive update with bias correction; `lr_now`
/// overrides hyper.lr (schedule already applied by the caller).
void adamw_step(ModelParams& params, const std::vector<Matrix>& grads, AdamWState& state,
                const AdamWHyper& hyper, double lr_now);

/// Warmup-then-cosine learning rate (shape "constant" skips the decay).
double lr_at(long step, long total_steps, double lr_max, double warmup_ratio,
             const std::string& shape);

struct TrainConfig {
    int epochs = 500;
    int batch_size = 5;
    long max_steps = 0;  // 0: run all epochs
    double lr = 1e-4;
    double weight_decay = 0.1;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double warmup_ratio = 0.1;
    std::string lr_schedule = "cosine";
    LossMode loss = LossMode::ce;
    SchedulerMode scheduler = SchedulerMode::self_paced;
    bool monotone = true;
    SchedulerHyper sched_hyper;
    uint64_t seed = 0;
};

struct CurveRow {
    long step;
    double loss;
    double accuracy;
    double mask_ratio;
    double lr;
    double momentum_b;
};

struct TrainingCurves {
    std::vector<CurveRow> rows;
};

void save_curves(const std::string& path, const TrainingCurves& curves);
void save_scheduler_trajectory(const std::string& path, const TrainingCurves& curves);

struct TrainResult {
    ModelParams params;
    TrainingCurves curves;
};

TrainResult train(const std::vector<MovieTrailerPair>& corpus, const EncoderConfig& enc_cfg,
                  const TrainConfig& cfg);

}  // namespace ssmp
