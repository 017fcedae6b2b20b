#pragma once

// Unchecked single-state evaluation of the model maps on raw row-major
// buffers. The public model functions validate their arguments and then call
// these, and the per-path loops call them directly, so every caller performs
// the same floating-point operations in the same order.

#include "edp/model.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace edp::detail {

/// Runs body(n, m) with compile-time extents in the scalar case, so the
/// component loops of the kernels below collapse to straight-line code.
template <class Body>
void with_dims(int n, int m, Body&& body) {
    if (n == 1 && m == 1) {
        body(std::integral_constant<int, 1>{}, std::integral_constant<int, 1>{});
    } else {
        body(n, m);
    }
}

inline double log_cosh_raw(double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

inline double sech_sq_raw(double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

/// Σ_{i,k} m(i,k)·(b_i · b_k) over rows of a row-major n×cols block with row stride `stride`.
inline double weighted_trace_raw(const Matrix& m, const double* b, int n, int cols, Eigen::Index stride) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* bi = b + i * stride;
        for (int k = 0; k < n; ++k) {
            const double w = m(i, k);
            if (w == 0.0) continue;
            const double* bk = b + k * stride;
            double dot = 0.0;
            for (int c = 0; c < cols; ++c) dot += bi[c] * bk[c];
            total += w * dot;
        }
    }
    return total;
}

inline double quadratic_form_raw(const Matrix& m, const double* v, int n) {
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
        const double* col = m.data() + static_cast<Eigen::Index>(k) * n;
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += col[i] * v[i];
        total += v[k] * dot;
    }
    return total;
}

/// φ(u) for the unregularized family; callers handle yosida_level > 0.
inline double value_raw(const PotentialSpec& spec, const double* u, int n) {
    double v = 0.5 * quadratic_form_raw(spec.A, u, n);
    if (const double beta = spec.logcosh_weight(); beta != 0.0)
        for (int i = 0; i < n; ++i) v += beta * log_cosh_raw(u[i]);
    return v;
}

/// ∂φ(u) for the unregularized family; callers handle yosida_level > 0.
inline void gradient_raw(const PotentialSpec& spec, const double* u, double* out, int n) {
    const double* a = spec.A.data();
    for (int i = 0; i < n; ++i) out[i] = 0.0;
    for (int k = 0; k < n; ++k) {
        const double uk = u[k];
        const double* col = a + static_cast<Eigen::Index>(k) * n;
        for (int i = 0; i < n; ++i) out[i] += col[i] * uk;
    }
    if (const double beta = spec.logcosh_weight(); beta != 0.0)
        for (int i = 0; i < n; ++i) out[i] += beta * std::tanh(u[i]);
}

inline void forcing_raw(const Forcing& f, double t, double* out, int n) {
    switch (f.kind) {
        case Forcing::Kind::zero:
            for (int i = 0; i < n; ++i) out[i] = 0.0;
            break;
        case Forcing::Kind::constant:
            for (int i = 0; i < n; ++i) out[i] = f.amplitude[i];
            break;
        case Forcing::Kind::sine: {
            const double s = std::sin(f.omega * t + f.phase);
            for (int i = 0; i < n; ++i) out[i] = f.amplitude[i] * s;
            break;
        }
        case Forcing::Kind::grid: {
            auto k = static_cast<Eigen::Index>(std::floor(t / f.step + 1e-9));
            k = std::clamp<Eigen::Index>(k, 0, f.samples.rows() - 1);
            const double* row = f.samples.data() + k * f.samples.cols();
            for (int i = 0; i < n; ++i) out[i] = row[i];
            break;
        }
    }
    if (f.offset.size() != 0)
        for (int i = 0; i < n; ++i) out[i] += f.offset[i];
}

inline void drift_raw(const DriftSpec& spec, double t, const double* u, double* out, int n) {
    forcing_raw(spec.forcing, t, out, n);
    if (spec.gain == 0.0) return;
    if (spec.saturation == Saturation::none) {
        for (int i = 0; i < n; ++i) out[i] += spec.gain * u[i];
    } else {
        for (int i = 0; i < n; ++i) out[i] += spec.gain * spec.kappa * std::tanh(u[i] / spec.kappa);
    }
}

/// G(t,u) into a row-major n×m buffer with row stride `stride`.
inline void diffusion_raw(const DiffusionSpec& spec, const double* u, double* out, int n, int m,
                          Eigen::Index stride) {
    const double* sigma = spec.sigma.data();
    const bool additive = spec.modulation == Modulation::additive;
    const bool shifted = spec.shift.size() != 0;
    for (int i = 0; i < n; ++i) {
        const double g = additive ? 1.0 : spec.g(u[i]);
        double* row = out + i * stride;
        const double* srow = sigma + static_cast<Eigen::Index>(i) * m;
        if (additive) {
            for (int c = 0; c < m; ++c) row[c] = srow[c];
        } else {
            for (int c = 0; c < m; ++c) row[c] = g * srow[c];
        }
        if (shifted) {
            const double* shrow = spec.shift.data() + static_cast<Eigen::Index>(i) * m;
            for (int c = 0; c < m; ++c) row[c] += shrow[c];
        }
    }
}

/// tr(B·Bᵀ·D_G∂φ(u)) for the unregularized family.
inline double trace_raw(const PotentialSpec& spec, const double* u, const double* b, int n, int m,
                        Eigen::Index stride) {
    double total = weighted_trace_raw(spec.A, b, n, m, stride);
    if (const double beta = spec.logcosh_weight(); beta != 0.0) {
        for (int i = 0; i < n; ++i) {
            double sq = 0.0;
            for (int c = 0; c < m; ++c) sq += b[i * stride + c] * b[i * stride + c];
            total += beta * sq * sech_sq_raw(u[i]);
        }
    }
    return total;
}

/// ∂φ(u) for any potential, falling back to the resolvent under regularization.
inline void potential_gradient_fast(const PotentialSpec& spec, const double* u, double* out, int n) {
    if (spec.yosida_level > 0.0) {
        potential_gradient_into(spec, ConstVectorMap(u, n), VectorMap(out, n));
        return;
    }
    gradient_raw(spec, u, out, n);
}

inline double potential_value_fast(const PotentialSpec& spec, const double* u, int n) {
    if (spec.yosida_level > 0.0) return potential_value(spec, ConstVectorMap(u, n));
    return value_raw(spec, u, n);
}

}  // namespace edp::detail
