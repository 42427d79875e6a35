#pragma once

// Lower bounds on the entropy-constrained capacity C_H(h, snr) by multi-start
// local ascent over discrete inputs, the three-moment baseline input, and the
// low-snr gap scaling experiment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lowent/atomic_measures.hpp"
#include "lowent/errors.hpp"
#include "lowent/gaussian_channel.hpp"
#include "lowent/low_entropy.hpp"

namespace lowent {

struct OptimizationConfig {
    std::size_t support_size = 0;  ///< K; 0 selects 2 ceil(h / log 2) + 1
    std::size_t restarts = 4;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 200;  ///< per penalty stage
    double initial_step = 0.05;
    double step_growth = 1.5;
    double step_shrink = 0.5;
    double min_step = 1e-9;
    double constraint_tolerance = 1e-6;
    double entropy_boundary_tolerance = 1e-6;
    std::size_t penalty_stages = 5;
    double penalty_initial = 1.0;
    double penalty_growth = 10.0;
    IntegrationSpec integration{};
};

inline std::size_t default_support_size(double h_nats) {
    return 2 * static_cast<std::size_t>(std::ceil(h_nats / std::log(2.0) - 1e-12)) + 1;
}

struct RestartDiagnostics {
    std::size_t index = 0;
    std::string init;
    double final_objective = 0.0;     ///< I of the restart's best iterate (fixed rule), nats
    double entropy_residual = 0.0;    ///< h - H(X) at that iterate
    double power_residual = 0.0;      ///< |E[X^2] - 1|
    double mean_residual = 0.0;       ///< |E[X]|
    std::size_t iterations = 0;
    bool boundary_reached = false;
};

struct CapacityEstimate {
    double lower_bound_nats = 0.0;
    AtomicDistribution best_input = AtomicDistribution::point(0.0);
    std::vector<RestartDiagnostics> restarts;
    double h_nats = 0.0;
    double snr = 0.0;
    std::size_t support_size = 0;
    std::string best_source;
    bool boundary_reached = false;
    bool best_effort = false;  ///< H = h could not be reached with the allowed support
};

namespace detail {

inline void validate(const OptimizationConfig& cfg) {
    require(cfg.support_size == 0 || cfg.support_size >= 2, ErrorCode::Config, "support size must be at least 2");
    require(cfg.restarts >= 1, ErrorCode::Config, "at least one restart is required");
    require(cfg.max_iterations >= 1, ErrorCode::Config, "max_iterations must be positive");
    require(cfg.initial_step > 0.0 && cfg.min_step > 0.0, ErrorCode::Config, "step sizes must be positive");
    require(cfg.step_growth >= 1.0 && cfg.step_shrink > 0.0 && cfg.step_shrink < 1.0, ErrorCode::Config,
            "invalid step schedule");
    require(cfg.penalty_stages >= 1 && cfg.penalty_initial > 0.0 && cfg.penalty_growth >= 1.0, ErrorCode::Config,
            "invalid penalty schedule");
    validate(cfg.integration);
}

/// Candidate input with atoms standardized and H(weights) <= h.
struct Iterate {
    std::vector<double> atoms;
    std::vector<double> weights;
    double entropy = 0.0;
};

/// Mixes weights toward the largest atom until H <= h (bisection on the
/// mixing fraction; the feasible side is kept), then maps atoms to mean 0
/// and second moment 1. Returns nullopt for zero-variance inputs.
inline std::optional<Iterate> project(std::vector<double> atoms, std::vector<double> weights, double h) {
    const std::size_t k = atoms.size();
    double total = 0.0;
    for (double w : weights) total += w;
    for (double& w : weights) w /= total;
    double ent = entropy_nats(weights);
    if (ent > h) {
        const std::size_t mode =
            static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());
        std::vector<double> trial(k);
        const auto mix = [&](double t) {
            for (std::size_t i = 0; i < k; ++i) trial[i] = (1.0 - t) * weights[i] + (i == mode ? t : 0.0);
            return entropy_nats(trial);
        };
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mix(mid) > h)
                lo = mid;
            else
                hi = mid;
        }
        ent = mix(hi);
        weights = trial;
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += weights[i] * atoms[i];
    double var = 0.0;
    for (std::size_t i = 0; i < k; ++i) var += weights[i] * (atoms[i] - mean) * (atoms[i] - mean);
    if (!(var > 1e-12)) return std::nullopt;
    const double scale = 1.0 / std::sqrt(var);
    for (double& a : atoms) a = (a - mean) * scale;
    return Iterate{std::move(atoms), std::move(weights), ent};
}

/// Gradient of I(X; sqrt(snr) X + Z) with respect to atom positions and
/// softmax logits of the weights, from dI/dw_j = -E[L_j(Z)] + const and
/// dI/da_j = -w_j sqrt(snr) E[Z L_j(Z)], where L_j(z) is the log-likelihood
/// ratio term of mutual_information_fixed. The rule must be symmetric.
inline void mutual_information_gradient(std::span<const double> atoms, std::span<const double> weights, double snr,
                                        const NoiseRule& rule, std::span<double> d_atoms, std::span<double> d_logits) {
    const std::size_t k = atoms.size();
    const double s = std::sqrt(snr);
    std::vector<double> d(k), logw(k), g(k);
    for (std::size_t j = 0; j < k; ++j) logw[j] = weights[j] > 0.0 ? std::log(weights[j]) : -INFINITY;
    double mean_g = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) d[j] = s * (atoms[i] - atoms[j]);
        double el = 0.0, ezl = 0.0;
        for (std::size_t q = 0; q < rule.z.size(); ++q) {
            const double z = rule.z[q];
            double top = -INFINITY;
            for (std::size_t j = 0; j < k; ++j) top = std::max(top, logw[j] - z * d[j] - 0.5 * d[j] * d[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) sum += std::exp(logw[j] - z * d[j] - 0.5 * d[j] * d[j] - top);
            const double l = top + std::log(sum);
            el += rule.w[q] * l;
            ezl += rule.w[q] * z * l;
        }
        g[i] = -el;
        d_atoms[i] = -weights[i] * s * ezl;
        mean_g += weights[i] * g[i];
    }
    for (std::size_t i = 0; i < k; ++i) d_logits[i] = weights[i] * (g[i] - mean_g);
}

class CapacityAscent {
public:
    CapacityAscent(double h, double snr, const OptimizationConfig& cfg)
        : h_(h), snr_(snr), cfg_(cfg) {}

    double information(const Iterate& it) const {
        return mutual_information_fixed(it.atoms, it.weights, snr_, rule_for(it));
    }

    struct Outcome {
        Iterate best;
        double best_info = -std::numeric_limits<double>::infinity();
        std::size_t iterations = 0;
    };

    Outcome run(const Iterate& start) const {
        Outcome out;
        out.best = start;
        out.best_info = information(start);

        const std::size_t k = start.atoms.size();
        std::vector<double> params(2 * k);
        const auto load = [&](const Iterate& it) {
            for (std::size_t i = 0; i < k; ++i) {
                params[i] = it.atoms[i];
                params[k + i] = std::log(std::max(it.weights[i], 1e-300));
            }
        };
        load(start);
        Iterate current = start;

        for (std::size_t stage = 0; stage < cfg_.penalty_stages; ++stage) {
            const double mu = cfg_.penalty_initial * std::pow(cfg_.penalty_growth, static_cast<double>(stage));
            double value = objective(current, mu);
            double step = cfg_.initial_step;
            for (std::size_t iter = 0; iter < cfg_.max_iterations; ++iter) {
                ++out.iterations;
                const std::vector<double> grad = gradient(current, mu);
                double norm = 0.0;
                for (double g : grad) norm += g * g;
                norm = std::sqrt(norm);
                if (!(norm > 0.0)) break;

                bool moved = false;
                while (step >= cfg_.min_step) {
                    std::vector<double> trial = params;
                    for (std::size_t c = 0; c < 2 * k; ++c) trial[c] += step * grad[c] / norm;
                    auto cand = decode(trial);
                    if (cand) {
                        const double v = objective(*cand, mu);
                        if (v > value + 1e-15) {
                            value = v;
                            current = std::move(*cand);
                            load(current);
                            step *= cfg_.step_growth;
                            moved = true;
                            break;
                        }
                    }
                    step *= cfg_.step_shrink;
                }
                if (!moved) break;
                const double info = information(current);
                if (info > out.best_info) {
                    out.best_info = info;
                    out.best = current;
                }
            }
        }
        return out;
    }

    /// Gradient of the penalized objective in (atoms, log-weights), projected
    /// onto the tangent space of the active constraints.
    std::vector<double> gradient(const Iterate& it, double mu) const {
        const std::size_t k = it.atoms.size();
        std::vector<double> out(2 * k);
        mutual_information_gradient(it.atoms, it.weights, snr_, rule_for(it), std::span(out).first(k),
                                    std::span(out).subspan(k));
        const double gap = it.entropy - h_;
        std::vector<double> dh(2 * k, 0.0), dmean(2 * k), dpower(2 * k);
        double mean = 0.0, power = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
            mean += it.weights[m] * it.atoms[m];
            power += it.weights[m] * it.atoms[m] * it.atoms[m];
        }
        for (std::size_t m = 0; m < k; ++m) {
            const double w = it.weights[m], a = it.atoms[m];
            dh[k + m] = w > 0.0 ? w * (-std::log(w) - it.entropy) : 0.0;
            out[k + m] -= 2.0 * mu * gap * dh[k + m];
            dmean[m] = w;
            dmean[k + m] = w * (a - mean);
            dpower[m] = 2.0 * w * a;
            dpower[k + m] = w * (a * a - power);
        }
        // Remove components along the active constraint normals so steps stay
        // (to first order) on the feasible manifold.
        std::vector<std::vector<double>> normals{dmean, dpower};
        if (-gap <= 1e-9 * std::max(1.0, h_)) normals.push_back(dh);
        std::vector<std::vector<double>> basis;
        for (auto v : normals) {
            for (const auto& b : basis) {
                double dot = 0.0;
                for (std::size_t c = 0; c < v.size(); ++c) dot += v[c] * b[c];
                for (std::size_t c = 0; c < v.size(); ++c) v[c] -= dot * b[c];
            }
            double n2 = 0.0;
            for (double x : v) n2 += x * x;
            if (n2 <= 1e-24) continue;
            for (double& x : v) x /= std::sqrt(n2);
            basis.push_back(std::move(v));
        }
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t c = 0; c < out.size(); ++c) dot += out[c] * b[c];
            for (std::size_t c = 0; c < out.size(); ++c) out[c] -= dot * b[c];
        }
        return out;
    }

private:
    std::optional<Iterate> decode(const std::vector<double>& params) const {
        const std::size_t k = params.size() / 2;
        std::vector<double> atoms(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(k));
        std::vector<double> weights(k);
        const double top = *std::max_element(params.begin() + static_cast<std::ptrdiff_t>(k), params.end());
        for (std::size_t i = 0; i < k; ++i) weights[i] = std::exp(params[k + i] - top);
        auto it = project(std::move(atoms), std::move(weights), h_);
        if (it && nodes_for(*it) > kMaxNodes) return std::nullopt;
        return it;
    }

    static constexpr std::size_t kMaxNodes = std::size_t{1} << 16;

    /// Smallest base * 2^j covering the resolution the iterate needs.
    std::size_t nodes_for(const Iterate& it) const {
        const std::size_t need = resolved_nodes(cfg_.integration.node_count, cfg_.integration.tail_sigma,
                                                input_spread(it.atoms, snr_));
        std::size_t n = cfg_.integration.node_count;
        while (n < need) n *= 2;
        return n;
    }

    const NoiseRule& rule_for(const Iterate& it) const {
        const std::size_t n = nodes_for(it);
        auto pos = rules_.find(n);
        if (pos == rules_.end()) pos = rules_.emplace(n, noise_rule(n, cfg_.integration.tail_sigma)).first;
        return pos->second;
    }

    double objective(const Iterate& it, double mu) const {
        const double gap = h_ - it.entropy;
        return information(it) - mu * gap * gap;
    }

    double h_;
    double snr_;
    OptimizationConfig cfg_;
    mutable std::map<std::size_t, NoiseRule> rules_;
};

struct StartPoint {
    std::string label;
    std::vector<double> atoms;
    std::vector<double> weights;
};

inline StartPoint start_from(const AtomicDistribution& d, std::string label) {
    return {std::move(label), {d.atoms().begin(), d.atoms().end()}, {d.weights().begin(), d.weights().end()}};
}

inline bool satisfies_constraints(const AtomicDistribution& d, double h, double tol) {
    return entropy(d) <= h + tol && std::abs(d.second_moment() - 1.0) <= tol && std::abs(d.mean()) <= tol;
}

}  // namespace detail

/// Best-restart lower bound on C_H(h, snr). Every iterate is feasible
/// (entropy at most h, mean 0, unit power); a quadratic penalty on h - H
/// with a growing weight pushes iterates onto the entropy boundary. Starts:
/// the supplied warm starts, the three-moment construction when
/// h < h2(1/3), the largest Gauss-Hermite rule within the entropy budget, and
/// seeded random inputs. Deterministic for a fixed config.
inline CapacityEstimate estimate_capacity(double h_nats, double snr, const OptimizationConfig& cfg = {},
                                          const std::vector<AtomicDistribution>& warm_starts = {}) {
    detail::require(std::isfinite(h_nats) && h_nats > 0.0, ErrorCode::Domain, "entropy budget must be positive");
    detail::require(std::isfinite(snr) && snr > 0.0, ErrorCode::Domain, "snr must be positive");
    detail::validate(cfg);
    const std::size_t k = cfg.support_size == 0 ? default_support_size(h_nats) : cfg.support_size;

    CapacityEstimate est;
    est.h_nats = h_nats;
    est.snr = snr;
    est.support_size = k;
    est.best_effort = h_nats > std::log(static_cast<double>(k)) + cfg.entropy_boundary_tolerance;

    std::vector<detail::StartPoint> starts;
    for (std::size_t i = 0; i < warm_starts.size(); ++i)
        if (warm_starts[i].size() >= 2) starts.push_back(detail::start_from(warm_starts[i], "warm:" + std::to_string(i)));
    if (h_nats < binary_entropy(1.0 / 3.0))
        starts.push_back(detail::start_from(
            standardize(match_three_moments(TargetMoments::gaussian(3), h_nats)), "three_moment"));
    for (std::size_t m = k; m >= 2; --m) {
        const auto gh = gauss_hermite(m);
        if (entropy(gh) <= h_nats) {
            starts.push_back(detail::start_from(gh, "gauss_hermite:" + std::to_string(m)));
            break;
        }
    }
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    while (starts.size() < cfg.restarts) {
        detail::StartPoint sp{"random:" + std::to_string(starts.size()), std::vector<double>(k), std::vector<double>(k)};
        for (auto& a : sp.atoms) a = normal(rng);
        for (auto& w : sp.weights) w = std::exp(normal(rng));
        starts.push_back(std::move(sp));
    }

    const detail::CapacityAscent ascent(h_nats, snr, cfg);
    struct Candidate {
        AtomicDistribution dist;
        std::string source;
    };
    std::vector<Candidate> candidates;
    for (const auto& w : warm_starts)
        if (w.size() >= 2 && detail::satisfies_constraints(w, h_nats, 1e-12)) candidates.push_back({w, "warm_raw"});

    for (std::size_t r = 0; r < starts.size(); ++r) {
        RestartDiagnostics diag;
        diag.index = r;
        diag.init = starts[r].label;
        auto first = detail::project(starts[r].atoms, starts[r].weights, h_nats);
        if (!first) {
            est.restarts.push_back(diag);
            continue;
        }
        const auto outcome = ascent.run(*first);
        const auto& b = outcome.best;
        double mean = 0.0, power = 0.0;
        for (std::size_t i = 0; i < b.atoms.size(); ++i) {
            mean += b.weights[i] * b.atoms[i];
            power += b.weights[i] * b.atoms[i] * b.atoms[i];
        }
        diag.final_objective = outcome.best_info;
        diag.entropy_residual = h_nats - b.entropy;
        diag.power_residual = std::abs(power - 1.0);
        diag.mean_residual = std::abs(mean);
        diag.iterations = outcome.iterations;
        diag.boundary_reached = std::abs(diag.entropy_residual) <= cfg.entropy_boundary_tolerance;
        est.restarts.push_back(diag);
        candidates.push_back({AtomicDistribution(b.atoms, b.weights), starts[r].label});
    }
    detail::require(!candidates.empty(), ErrorCode::Numeric, "no restart produced a feasible input");

    // Certified evaluation; ties go to the earliest candidate.
    double best = -std::numeric_limits<double>::infinity();
    for (auto& c : candidates) {
        const double info = mutual_information(c.dist, snr, cfg.integration);
        if (info > best) {
            best = info;
            est.best_input = c.dist;
            est.best_source = c.source;
        }
    }
    est.lower_bound_nats = best;
    est.boundary_reached = std::abs(h_nats - entropy(est.best_input)) <= cfg.entropy_boundary_tolerance;
    return est;
}

struct BaselineResult {
    AtomicDistribution input = AtomicDistribution::point(0.0);
    double information_nats = 0.0;
};

/// Standardized three-moment Gaussian match with entropy at most h and its
/// mutual information; certifies C_H(h, snr) >= I.
inline BaselineResult baseline_three_moment(double h_nats, double snr, const IntegrationSpec& spec = {}) {
    detail::require(h_nats > 0.0 && h_nats < binary_entropy(1.0 / 3.0), ErrorCode::Domain,
                    "baseline needs 0 < h < h2(1/3)");
    detail::require(std::isfinite(snr) && snr > 0.0, ErrorCode::Domain, "snr must be positive");
    BaselineResult out;
    out.input = standardize(match_three_moments(TargetMoments::gaussian(3), h_nats));
    out.information_nats = mutual_information(out.input, snr, spec);
    return out;
}

enum class ScalingMode { Baseline, Optimized };

constexpr std::string_view to_string(ScalingMode m) noexcept {
    return m == ScalingMode::Baseline ? "baseline" : "optimized";
}

struct ScalingPoint {
    double snr = 0.0;
    double gap_nats = 0.0;
    double log_snr = 0.0;
    double log_gap = 0.0;
    bool excluded = false;  ///< gap below the 1e-14 nats floor
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t used_points = 0;
};

inline constexpr double kGapFloor = 1e-14;

inline std::vector<double> geometric_grid(double lo, double hi, std::size_t n) {
    detail::require(lo > 0.0 && hi > lo && n >= 2, ErrorCode::Domain, "invalid geometric grid");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

namespace detail {

inline ScalingReport fit_scaling(std::vector<ScalingPoint> points) {
    ScalingReport rep;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& p : points) {
        p.log_snr = std::log(p.snr);
        p.excluded = !(p.gap_nats >= kGapFloor);
        p.log_gap = p.excluded ? -std::numeric_limits<double>::infinity() : std::log(p.gap_nats);
        if (p.excluded) continue;
        ++rep.used_points;
        sx += p.log_snr;
        sy += p.log_gap;
        sxx += p.log_snr * p.log_snr;
        sxy += p.log_snr * p.log_gap;
    }
    require(rep.used_points >= 2, ErrorCode::Numeric, "fewer than two gap values above the numeric floor");
    const double n = static_cast<double>(rep.used_points);
    rep.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    rep.intercept = (sy - rep.slope * sx) / n;
    rep.points = std::move(points);
    return rep;
}

inline void check_scaling_grid(const std::vector<double>& grid) {
    require(grid.size() >= 2, ErrorCode::Domain, "scaling grid needs at least two points");
    for (double s : grid)
        require(s >= 1e-3 * (1.0 - 1e-12) && s <= 1e-1 * (1.0 + 1e-12), ErrorCode::Domain,
                "scaling grid must lie within [1e-3, 1e-1]");
}

}  // namespace detail

/// Least-squares slope of log(C - I) against log(snr) for a fixed
/// standardized input.
inline ScalingReport gap_scaling_fixed(const AtomicDistribution& input, const std::vector<double>& snr_grid,
                                       const IntegrationSpec& spec = {}) {
    detail::check_scaling_grid(snr_grid);
    std::vector<ScalingPoint> pts;
    for (double s : snr_grid) pts.push_back({s, capacity_gap(input, s, spec)});
    return detail::fit_scaling(std::move(pts));
}

/// Gap scaling of C(snr) - I(X_snr, snr) where X_snr is the three-moment
/// baseline (Baseline) or the optimizer's best input warm-started from it
/// (Optimized).
inline ScalingReport gap_scaling_experiment(double h_nats, const std::vector<double>& snr_grid, ScalingMode mode,
                                            const OptimizationConfig& cfg = {}) {
    detail::require(h_nats > 0.0 && h_nats < binary_entropy(1.0 / 3.0), ErrorCode::Domain,
                    "scaling experiment needs 0 < h < h2(1/3)");
    detail::check_scaling_grid(snr_grid);
    std::vector<ScalingPoint> pts;
    for (double s : snr_grid) {
        const auto base = baseline_three_moment(h_nats, s, cfg.integration);
        double info = base.information_nats;
        if (mode == ScalingMode::Optimized) {
            const auto est = estimate_capacity(h_nats, s, cfg, {base.input});
            info = std::max(info, est.lower_bound_nats);
        }
        const double gap = capacity(s) - info;
        detail::require(gap >= -10.0 * cfg.integration.tolerance, ErrorCode::Numeric, "negative capacity gap");
        pts.push_back({s, std::max(gap, 0.0)});
    }
    return detail::fit_scaling(std::move(pts));
}

struct SanityReport {
    bool pass = false;
    double excess_over_entropy_budget = 0.0;  ///< lower_bound - h
    double excess_over_capacity = 0.0;        ///< lower_bound - C(snr)
    double input_entropy_excess = 0.0;        ///< H(best_input) - h
    double power_residual = 0.0;              ///< |E[X^2] - 1|
    double mean_residual = 0.0;               ///< |E[X]|
    double consistency_residual = 0.0;        ///< |lower_bound - I(best_input, snr)|
};

/// Checks C_H <= min(h, C(snr)) and the feasibility of the reported input.
inline SanityReport sanity_bounds(const CapacityEstimate& est, double tolerance = 1e-6,
                                  const IntegrationSpec& spec = {}) {
    SanityReport rep;
    rep.excess_over_entropy_budget = est.lower_bound_nats - est.h_nats;
    rep.excess_over_capacity = est.lower_bound_nats - capacity(est.snr);
    rep.input_entropy_excess = entropy(est.best_input) - est.h_nats;
    rep.power_residual = std::abs(est.best_input.second_moment() - 1.0);
    rep.mean_residual = std::abs(est.best_input.mean());
    rep.consistency_residual = std::abs(est.lower_bound_nats - mutual_information(est.best_input, est.snr, spec));
    rep.pass = rep.excess_over_entropy_budget <= tolerance && rep.excess_over_capacity <= tolerance &&
               rep.input_entropy_excess <= tolerance && rep.power_residual <= tolerance &&
               rep.mean_residual <= tolerance && rep.consistency_residual <= tolerance;
    return rep;
}

}  // namespace lowent
