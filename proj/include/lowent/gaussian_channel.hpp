#pragma once

// Scalar AWGN channel Y = sqrt(snr) X + Z with a discrete input: mutual
// information, MMSE, the I-MMSE cross-checks and the capacity gap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lowent/atomic_measures.hpp"
#include "lowent/errors.hpp"

namespace lowent {

struct ChannelPoint {
    double snr = 1.0;
    AtomicDistribution input = AtomicDistribution::point(0.0);
};

/// Noise averages start at node_count nodes (more when snr is large) and
/// double until two successive rules agree within tolerance (nats).
struct IntegrationSpec {
    std::size_t node_count = 96;
    double tail_sigma = 8.0;
    double tolerance = 1e-10;
    std::size_t max_doublings = 3;
};

namespace detail {

inline void validate(const IntegrationSpec& spec) {
    require(spec.node_count >= 16, ErrorCode::Config, "integration needs node_count >= 16");
    require(spec.tail_sigma >= 6.0, ErrorCode::Config, "integration needs tail_sigma >= 6");
    require(spec.tolerance > 0.0, ErrorCode::Config, "integration tolerance must be positive");
}

/// Equally spaced nodes on [-tail_sigma, tail_sigma] weighted by the normal
/// density and renormalized (trapezoid rule). For analytic integrands the
/// error decays geometrically in the node count.
struct NoiseRule {
    std::vector<double> z;
    std::vector<double> w;
};

inline NoiseRule noise_rule(std::size_t nodes, double tail_sigma) {
    NoiseRule out;
    out.z.resize(nodes);
    out.w.resize(nodes);
    const double step = 2.0 * tail_sigma / static_cast<double>(nodes - 1);
    double total = 0.0;
    for (std::size_t q = 0; q < nodes; ++q) {
        const double z = -tail_sigma + step * static_cast<double>(q);
        out.z[q] = z;
        out.w[q] = std::exp(-0.5 * z * z);
        total += out.w[q];
    }
    for (double& w : out.w) w /= total;
    return out;
}

/// Node count giving a step of at most 0.5 / spread, where spread is
/// sqrt(snr) times the atom range: the posterior switches between atoms over
/// a z-interval of width about 1 / spread.
inline std::size_t resolved_nodes(std::size_t base, double tail_sigma, double spread) {
    const double need = std::ceil(4.0 * tail_sigma * spread) + 1.0;
    if (!(need < 1e7)) fail(ErrorCode::Numeric, "snr too large for the noise quadrature");
    return std::max(base, static_cast<std::size_t>(need));
}

inline double input_spread(std::span<const double> atoms, double snr) {
    if (atoms.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(atoms.begin(), atoms.end());
    return std::sqrt(snr) * (*hi - *lo);
}

/// I(X; Y) = -sum_i w_i E_Z[ log sum_j w_j exp(-z d_ij - d_ij^2 / 2) ],
/// d_ij = sqrt(snr) (a_i - a_j). This is h(Y) - h(Z) written relative to the
/// noise density so no large constants cancel.
inline double mutual_information_fixed(std::span<const double> atoms, std::span<const double> weights, double snr,
                                       const NoiseRule& rule) {
    const std::size_t k = atoms.size();
    if (k <= 1 || snr == 0.0) return 0.0;
    const double s = std::sqrt(snr);
    std::vector<double> d(k), logw(k);
    for (std::size_t j = 0; j < k; ++j) logw[j] = weights[j] > 0.0 ? std::log(weights[j]) : -INFINITY;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (weights[i] <= 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) d[j] = s * (atoms[i] - atoms[j]);
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.z.size(); ++q) {
            const double z = rule.z[q];
            double top = -INFINITY;
            for (std::size_t j = 0; j < k; ++j) top = std::max(top, logw[j] - z * d[j] - 0.5 * d[j] * d[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) sum += std::exp(logw[j] - z * d[j] - 0.5 * d[j] * d[j] - top);
            acc += rule.w[q] * (top + std::log(sum));
        }
        total += weights[i] * acc;
    }
    return -total;
}

/// E[(X - E[X|Y])^2] as sum_i w_i E_Z[(sum_j pi_j (a_i - a_j))^2], pi the
/// posterior at y = sqrt(snr) a_i + z.
inline double mmse_fixed(std::span<const double> atoms, std::span<const double> weights, double snr,
                         const NoiseRule& rule) {
    const std::size_t k = atoms.size();
    if (k <= 1) return 0.0;
    const double s = std::sqrt(snr);
    std::vector<double> d(k), logw(k), t(k);
    for (std::size_t j = 0; j < k; ++j) logw[j] = weights[j] > 0.0 ? std::log(weights[j]) : -INFINITY;
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        if (weights[i] <= 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) d[j] = s * (atoms[i] - atoms[j]);
        double acc = 0.0;
        for (std::size_t q = 0; q < rule.z.size(); ++q) {
            const double z = rule.z[q];
            double top = -INFINITY;
            for (std::size_t j = 0; j < k; ++j) {
                t[j] = logw[j] - z * d[j] - 0.5 * d[j] * d[j];
                top = std::max(top, t[j]);
            }
            double norm = 0.0, err = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                const double p = std::exp(t[j] - top);
                norm += p;
                err += p * (atoms[i] - atoms[j]);
            }
            err /= norm;
            acc += rule.w[q] * err * err;
        }
        total += weights[i] * acc;
    }
    return total;
}

template <class Eval>
double certified(Eval&& eval, const IntegrationSpec& spec, double spread, const char* what) {
    validate(spec);
    std::size_t nodes = resolved_nodes(spec.node_count, spec.tail_sigma, spread);
    double prev = eval(noise_rule(nodes, spec.tail_sigma));
    for (std::size_t level = 0; level < spec.max_doublings; ++level) {
        nodes *= 2;
        const double cur = eval(noise_rule(nodes, spec.tail_sigma));
        if (std::abs(cur - prev) <= spec.tolerance) return cur;
        prev = cur;
    }
    fail(ErrorCode::Numeric, std::string(what) + ": quadrature did not converge under node doubling");
}

inline void check_snr(double snr) {
    require(std::isfinite(snr) && snr >= 0.0, ErrorCode::Domain, "snr must be finite and nonnegative");
}

}  // namespace detail

/// C(snr) = log(1 + snr) / 2 in nats.
inline double capacity(double snr) {
    detail::check_snr(snr);
    return 0.5 * std::log1p(snr);
}

inline double mutual_information(const AtomicDistribution& input, double snr, const IntegrationSpec& spec = {}) {
    detail::check_snr(snr);
    if (input.size() == 1) return 0.0;
    const double raw = detail::certified(
        [&](const detail::NoiseRule& r) { return detail::mutual_information_fixed(input.atoms(), input.weights(), snr, r); },
        spec, detail::input_spread(input.atoms(), snr), "mutual_information");
    const double h = entropy(input);
    const double slack = 10.0 * spec.tolerance;
    detail::require(raw >= -slack && raw <= h + slack, ErrorCode::Numeric,
                    "mutual information outside [0, H(X)] beyond tolerance");
    return std::clamp(raw, 0.0, h);
}
inline double mutual_information(const ChannelPoint& pt, const IntegrationSpec& spec = {}) {
    return mutual_information(pt.input, pt.snr, spec);
}

inline double mmse(const AtomicDistribution& input, double gamma, const IntegrationSpec& spec = {}) {
    detail::check_snr(gamma);
    if (input.size() == 1) return 0.0;
    const double raw = detail::certified(
        [&](const detail::NoiseRule& r) { return detail::mmse_fixed(input.atoms(), input.weights(), gamma, r); },
        spec, detail::input_spread(input.atoms(), gamma), "mmse");
    const double var = input.variance();
    detail::require(raw <= var + 10.0 * spec.tolerance * (1.0 + var), ErrorCode::Numeric,
                    "mmse exceeds the input variance beyond tolerance");
    return std::clamp(raw, 0.0, var);
}
inline double mmse(const ChannelPoint& pt, const IntegrationSpec& spec = {}) { return mmse(pt.input, pt.snr, spec); }

namespace detail {

template <class F>
double simpson_step(F& f, double a, double fa, double b, double fb, double m, double fm, double whole, double tol,
                    int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson on [a, b]; the tolerance is relative to the panel
/// estimate with a small absolute floor.
template <class F>
double adaptive_simpson(F& f, double a, double b, double rel_tol, double abs_floor) {
    const double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double tol = std::max(rel_tol * std::abs(whole), abs_floor);
    return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 40);
}

/// Integral over [0, top] split at top * 2^-k, k = 0..panels-1, so the
/// region near zero gets its own small panels.
template <class F>
double integrate_log_panels(F& f, double top, std::size_t panels, double rel_tol, double abs_floor) {
    if (top <= 0.0) return 0.0;
    double total = 0.0;
    double hi = top;
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = p + 1 == panels ? 0.0 : 0.5 * hi;
        total += adaptive_simpson(f, lo, hi, rel_tol, abs_floor);
        hi = lo;
    }
    return total;
}

}  // namespace detail

/// I(X, snr) - (1/2) integral_0^snr mmse(X, g) dg.
inline double i_mmse_check(const AtomicDistribution& input, double snr, const IntegrationSpec& spec = {}) {
    detail::check_snr(snr);
    if (input.size() == 1) return 0.0;
    auto f = [&](double g) { return mmse(input, g, spec); };
    const double integral = detail::integrate_log_panels(f, snr, 24, 1e-7, 1e-14);
    return mutual_information(input, snr, spec) - 0.5 * integral;
}

struct EntropyViaMmse {
    double integral_nats = 0.0;        ///< (1/2) integral_0^gamma_max mmse
    double truncation_estimate = 0.0;  ///< tail beyond gamma_max from an exponential fit
    double gamma_max = 0.0;
    double total_nats() const noexcept { return integral_nats + truncation_estimate; }
};

/// H(X) recovered as (1/2) integral_0^inf mmse(X, g) dg, truncated at
/// gamma_max with the remainder estimated from the decay of the last panel.
inline EntropyViaMmse entropy_via_mmse(const AtomicDistribution& input, double gamma_max = 1e4,
                                       const IntegrationSpec& spec = {}) {
    detail::require(std::isfinite(gamma_max) && gamma_max > 0.0, ErrorCode::Domain, "gamma_max must be positive");
    EntropyViaMmse out;
    out.gamma_max = gamma_max;
    if (input.size() == 1) return out;
    auto f = [&](double g) { return mmse(input, g, spec); };
    out.integral_nats = 0.5 * detail::integrate_log_panels(f, gamma_max, 40, 1e-7, 1e-15);
    const double last = f(gamma_max);
    const double half = f(0.5 * gamma_max);
    if (last > 0.0) {
        if (half > last) {
            const double rate = std::log(half / last) / (0.5 * gamma_max);
            out.truncation_estimate = 0.5 * last / rate;
        } else {
            out.truncation_estimate = std::numeric_limits<double>::infinity();
        }
    }
    return out;
}

/// C(snr) - I(X, snr) for a standardized input: the non-Gaussianity
/// D(X + Z || X_G + Z) after scaling by sqrt(snr).
inline double capacity_gap(const AtomicDistribution& input, double snr, const IntegrationSpec& spec = {}) {
    detail::require(input.size() >= 2, ErrorCode::Precondition, "capacity gap needs a standardized input");
    detail::require(std::abs(input.mean()) <= 1e-9 && std::abs(input.second_moment() - 1.0) <= 1e-9,
                    ErrorCode::Precondition, "capacity gap needs a zero-mean unit-variance input");
    const double gap = capacity(snr) - mutual_information(input, snr, spec);
    detail::require(gap >= -10.0 * spec.tolerance, ErrorCode::Numeric, "negative capacity gap beyond tolerance");
    return std::max(gap, 0.0);
}

}  // namespace lowent
