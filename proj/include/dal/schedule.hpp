#pragma once

#include <vector>

#include "dal/common.hpp"

namespace dal {

enum class ScheduleKind { Linear };

// DDPM forward-noising tables; index t-1 holds the value for timestep
// t = 1..T. alpha_bar_at(0) == 1 by convention (the data distribution).
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;
    std::vector<double> sigma;  // DDPM posterior std (the eta=1 DDIM sigma)

    double alpha_bar_at(int t) const {
        require(t >= 0 && t <= T, "NoiseSchedule: timestep out of range");
        return t == 0 ? 1.0 : alpha_bar[t - 1];
    }
};

NoiseSchedule make_schedule(int T, double beta1, double betaT,
                            ScheduleKind kind = ScheduleKind::Linear);

}  // namespace dal
