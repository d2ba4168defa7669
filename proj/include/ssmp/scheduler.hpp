#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "ssmp/matrix.hpp"

namespace ssmp {

enum class SchedulerMode { self_paced, random, linear_inc, linear_dec };

SchedulerMode scheduler_mode_from_string(const std::string& s);
std::string to_string(SchedulerMode m);

struct SchedulerHyper {
    double mu_a = 0.98;
    double mu_t = 0.1;
    double beta = 10.0;
    double t_min = 0.1;
    double t_max = 1.0;
};

/// Mask-ratio scheduler state. self_paced follows the momentum rule
///   b'  = mu_a * a + (1 - mu_a) * b
///   t~  = mu_t * t + (1 - mu_t) * [t_min + dt * sigmoid(beta * (b' - 0.5))]
///   t'  = max(t, t~)        (when monotone)
/// The baselines (random, linear increase/decrease) never read the accuracy.
struct SchedulerState {
    SchedulerMode mode = SchedulerMode::self_paced;
    SchedulerHyper hyper;
    bool monotone = true;
    long total_steps = 0;  // required by the linear modes
    double b = 0.0;
    double t = 0.0;
    long n = 0;
    std::mt19937_64 rng;
};

SchedulerState init_scheduler(SchedulerMode mode, const SchedulerHyper& hyper, long total_steps,
                              uint64_t seed);

/// Consumes one batch accuracy and advances the ratio; `a` must be in [0,1].
void scheduler_step(SchedulerState& state, double a);

}  // namespace ssmp
