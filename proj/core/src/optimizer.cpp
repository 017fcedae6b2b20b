#include "edp/optimizer.hpp"

#include <cmath>
#include <deque>

namespace edp {
namespace {

struct Pair {
    Vector s;
    Vector y;
    double rho;
};

Vector two_loop(const std::deque<Pair>& memory, const Vector& g) {
    Vector q = g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
        alpha[i] = memory[i].rho * memory[i].s.dot(q);
        q -= alpha[i] * memory[i].y;
    }
    if (!memory.empty()) {
        const auto& last = memory.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
        const double b = memory[i].rho * memory[i].y.dot(q);
        q += (alpha[i] - b) * memory[i].s;
    }
    return -q;
}

// Mask of components frozen at a bound with the gradient pointing outward.
std::vector<bool> pinned_mask(const Vector& x, const Vector& g, const std::optional<Box>& box) {
    std::vector<bool> pinned(static_cast<std::size_t>(x.size()), false);
    if (!box) return pinned;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if ((x[i] <= box->lower[i] && g[i] > 0.0) || (x[i] >= box->upper[i] && g[i] < 0.0)) pinned[i] = true;
    }
    return pinned;
}

}  // namespace

OptimizerResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options,
                               const std::optional<Box>& box) {
    const auto n = x0.size();
    if (options.memory < 1) throw std::invalid_argument("L-BFGS memory must be >= 1");
    if (options.max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
    if (options.patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (box && (box->lower.size() != n || box->upper.size() != n)) throw std::invalid_argument("box has wrong size");

    OptimizerResult result;
    Vector x = box ? box->project(x0) : std::move(x0);
    Vector g(n), g_new(n);
    double f = objective(x, g);
    if (!std::isfinite(f)) throw NumericalError("objective is not finite at the initial point");

    auto projected = [&](const Vector& xv, const Vector& gv) {
        Vector pg = gv;
        const auto pinned = pinned_mask(xv, gv, box);
        for (Eigen::Index i = 0; i < n; ++i)
            if (pinned[i]) pg[i] = 0.0;
        return pg;
    };

    Vector pg = projected(x, g);
    result.history.push_back({0, f, pg.norm(), 0.0});
    std::deque<Pair> memory;
    int flat_steps = 0;
    int it = 0;
    for (; it < options.max_iters; ++it) {
        if (f <= options.f_target) {
            result.reached_target = true;
            break;
        }
        if (pg.norm() <= options.g_tol) {
            result.stationary = true;
            break;
        }
        const auto pinned = pinned_mask(x, g, box);
        Vector d = options.first_order ? Vector(-pg) : two_loop(memory, pg);
        for (Eigen::Index i = 0; i < n; ++i)
            if (pinned[i]) d[i] = 0.0;
        if (!(d.dot(pg) < 0.0)) {
            memory.clear();
            d = -pg;
        }

        double step = memory.empty() ? std::min(1.0, 1.0 / std::max(pg.norm(), 1e-300)) : 1.0;
        bool accepted = false;
        Vector x_new(n);
        double f_new = f;
        for (int ls = 0; ls < options.max_backtracks; ++ls) {
            x_new = x + step * d;
            if (box) x_new = box->project(x_new);
            f_new = objective(x_new, g_new);
            const double decrease = g.dot(x_new - x);
            if (std::isfinite(f_new) && f_new <= f + options.armijo * decrease) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!memory.empty()) {
                // Retry from steepest descent before declaring a stall.
                memory.clear();
                continue;
            }
            result.stalled = true;
            break;
        }

        Vector s = x_new - x;
        Vector y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm() && sy > 0.0) {
            memory.push_back({std::move(s), std::move(y), 1.0 / sy});
            if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
        }
        flat_steps = (f - f_new <= options.f_rel_tol * std::abs(f)) ? flat_steps + 1 : 0;
        const bool active_set_changed = box && pinned_mask(x_new, g_new, box) != pinned;
        x = std::move(x_new);
        g = g_new;
        f = f_new;
        if (active_set_changed) memory.clear();
        pg = projected(x, g);
        result.history.push_back({it + 1, f, pg.norm(), step});
        if (flat_steps >= options.patience) {
            result.stagnated = true;
            ++it;
            break;
        }
    }
    if (f <= options.f_target) result.reached_target = true;
    if (pg.norm() <= options.g_tol) result.stationary = true;
    result.iterations = static_cast<int>(result.history.size()) - 1;
    result.x = std::move(x);
    result.objective = f;
    result.grad_norm = pg.norm();
    return result;
}

}  // namespace edp
