#include "ssmp/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace ssmp {

SchedulerMode scheduler_mode_from_string(const std::string& s) {
    if (s == "self_paced") return SchedulerMode::self_paced;
    if (s == "random") return SchedulerMode::random;
    if (s == "linear_inc") return SchedulerMode::linear_inc;
    if (s == "linear_dec") return SchedulerMode::linear_dec;
    throw std::runtime_error("unknown scheduler mode: " + s);
}

std::string to_string(SchedulerMode m) {
    switch (m) {
        case SchedulerMode::self_paced: return "self_paced";
        case SchedulerMode::random: return "random";
        case SchedulerMode::linear_inc: return "linear_inc";
        case SchedulerMode::linear_dec: return "linear_dec";
    }
    return "?";
}

namespace {

double linear_ratio(const SchedulerState& s) {
    const double frac = s.total_steps > 1
                            ? std::min(1.0, static_cast<double>(s.n) / (s.total_steps - 1))
                            : 1.0;
    return s.mode == SchedulerMode::linear_inc
               ? s.hyper.t_min + (s.hyper.t_max - s.hyper.t_min) * frac
               : s.hyper.t_max - (s.hyper.t_max - s.hyper.t_min) * frac;
}

}  // namespace

SchedulerState init_scheduler(SchedulerMode mode, const SchedulerHyper& hyper, long total_steps,
                              uint64_t seed) {
    require(hyper.t_min < hyper.t_max, "init_scheduler: need t_min < t_max");
    require(hyper.t_min > 0.0 && hyper.t_max <= 1.0, "init_scheduler: bounds outside (0,1]");
    require(mode == SchedulerMode::self_paced || mode == SchedulerMode::random ||
                total_steps >= 1,
            "init_scheduler: linear modes need total_steps");
    SchedulerState s;
    s.mode = mode;
    s.hyper = hyper;
    s.total_steps = total_steps;
    s.rng.seed(seed);
    switch (mode) {
        case SchedulerMode::self_paced:
            s.b = 0.0;
            s.t = hyper.t_min;
            break;
        case SchedulerMode::random: {
            std::uniform_real_distribution<double> u(hyper.t_min, hyper.t_max);
            s.t = u(s.rng);
            break;
        }
        case SchedulerMode::linear_inc:
        case SchedulerMode::linear_dec:
            s.t = linear_ratio(s);
            break;
    }
    return s;
}

void scheduler_step(SchedulerState& state, double a) {
    require(a >= 0.0 && a <= 1.0, "scheduler_step: accuracy outside [0,1]");
    const SchedulerHyper& h = state.hyper;
    switch (state.mode) {
        case SchedulerMode::self_paced: {
            state.b = h.mu_a * a + (1.0 - h.mu_a) * state.b;
            const double dt = h.t_max - h.t_min;
            const double sig = 1.0 / (1.0 + std::exp(-h.beta * (state.b - 0.5)));
            const double target = h.t_min + dt * sig;
            const double t_new = h.mu_t * state.t + (1.0 - h.mu_t) * target;
            state.t = state.monotone ? std::max(state.t, t_new) : t_new;
            break;
        }
        case SchedulerMode::random: {
            std::uniform_real_distribution<double> u(h.t_min, h.t_max);
            state.t = u(state.rng);
            break;
        }
        case SchedulerMode::linear_inc:
        case SchedulerMode::linear_dec:
            break;  // recomputed from n below
    }
    ++state.n;
    if (state.mode == SchedulerMode::linear_inc || state.mode == SchedulerMode::linear_dec)
        state.t = linear_ratio(state);
}

}  // namespace ssmp
