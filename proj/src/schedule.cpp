#include "dal/schedule.hpp"

#include <cmath>

namespace dal {

NoiseSchedule make_schedule(int T, double beta1, double betaT, ScheduleKind kind) {
    require(T >= 2, "make_schedule: T must be >= 2");
    require(beta1 > 0.0 && beta1 <= betaT && betaT < 1.0,
            "make_schedule: need 0 < beta1 <= betaT < 1");
    require(kind == ScheduleKind::Linear, "make_schedule: unknown schedule kind");
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    s.sigma.resize(T);
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        s.beta[t] = beta1 + (betaT - beta1) * (T == 1 ? 0.0 : static_cast<double>(t) / (T - 1));
        s.alpha[t] = 1.0 - s.beta[t];
        prod *= s.alpha[t];
        s.alpha_bar[t] = prod;
    }
    for (int t = 0; t < T; ++t) {
        const double ab = s.alpha_bar[t];
        const double ab_prev = t == 0 ? 1.0 : s.alpha_bar[t - 1];
        s.sigma[t] = std::sqrt((1.0 - ab_prev) / (1.0 - ab)) * std::sqrt(1.0 - ab / ab_prev);
    }
    return s;
}

}  // namespace dal
