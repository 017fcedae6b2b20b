#pragma once

#include <array>
#include <vector>

// Independent reference for the scalar LQ problem u′ = −u + f, u(0) = 0,
// J = ½∫(u − 1)² + (γ/2)∫f². The value function ½p u² + q u + r satisfies
//   p′ = −1 + 2p + p²/γ,  q′ = 1 + q + pq/γ,  r′ = −½ + q²/(2γ),  all zero at T,
// and the optimal feedback is f = −(pu + q)/γ. Classical RK4 throughout.
namespace riccati {

struct LqSolution {
    double cost = 0.0;    // r(0), the optimal cost from u(0) = 0
    double f0 = 0.0;      // optimal control at t = 0
};

inline LqSolution solve_lq(double gamma, double horizon, int steps) {
    using State = std::array<double, 3>;
    const double h = horizon / steps;
    auto rhs = [gamma](const State& y) {
        return State{-1.0 + 2.0 * y[0] + y[0] * y[0] / gamma, 1.0 + y[1] + y[0] * y[1] / gamma,
                     -0.5 + y[1] * y[1] / (2.0 * gamma)};
    };
    auto axpy = [](const State& y, double a, const State& k) {
        return State{y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2]};
    };
    // Backward sweep from T with step −h.
    std::vector<State> ys(steps + 1);
    ys[steps] = {0.0, 0.0, 0.0};
    for (int k = steps; k > 0; --k) {
        const State& y = ys[k];
        const State k1 = rhs(y), k2 = rhs(axpy(y, -h / 2, k1)), k3 = rhs(axpy(y, -h / 2, k2)),
                    k4 = rhs(axpy(y, -h, k3));
        ys[k - 1] = {y[0] - h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
                     y[1] - h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
                     y[2] - h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])};
    }
    LqSolution out;
    out.cost = ys[0][2];
    out.f0 = -ys[0][1] / gamma;
    return out;
}

}  // namespace riccati
