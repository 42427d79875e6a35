#pragma once

// Low-entropy moment matching: the dominant-atom decomposition of a discrete
// variable, the moments its tail must carry, the four-moment obstruction
// threshold eta(W) and the constructive three-moment matcher.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lowent/atomic_measures.hpp"
#include "lowent/errors.hpp"
#include "lowent/moment_core.hpp"

namespace lowent {

/// Moments (m_1, m_2, ...) of a continuous target variable W.
class TargetMoments {
public:
    TargetMoments(std::vector<double> m, bool symmetric) : m_(std::move(m)), symmetric_(symmetric) {
        detail::require(m_.size() >= 2, ErrorCode::Length, "target needs at least m1 and m2");
        for (double v : m_) detail::require(std::isfinite(v), ErrorCode::Domain, "target moments must be finite");
        detail::require(m_[1] - m_[0] * m_[0] > 0.0, ErrorCode::Domain, "target must have positive variance");
        if (symmetric_) {
            for (std::size_t n = 1; n <= m_.size(); n += 2)
                detail::require(std::abs(m_[n - 1]) <= 1e-12 * (1.0 + std::abs(m_[std::min(n, m_.size() - 1)])),
                                ErrorCode::Domain, "symmetric target must have vanishing odd moments");
        }
        if (m_.size() >= 4)
            detail::require(m_[3] > m_[1] * m_[1], ErrorCode::Domain, "target must satisfy m4 > m2^2");
    }

    /// Standard normal moments through order k (double factorials).
    static TargetMoments gaussian(std::size_t k = 4) {
        std::vector<double> m(std::max<std::size_t>(k, 2), 0.0);
        double df = 1.0;
        for (std::size_t n = 2; n <= m.size(); n += 2) {
            df *= static_cast<double>(n - 1);
            m[n - 1] = df;
        }
        return TargetMoments(std::move(m), true);
    }

    std::size_t order() const noexcept { return m_.size(); }
    bool symmetric() const noexcept { return symmetric_; }
    /// m_n with m_0 = 1.
    double operator()(std::size_t n) const {
        if (n == 0) return 1.0;
        detail::require(n <= m_.size(), ErrorCode::Length, "target moment of order " + std::to_string(n) + " missing");
        return m_[n - 1];
    }
    std::span<const double> values() const noexcept { return m_; }

    MomentSequence sequence() const {
        std::vector<double> s{1.0};
        s.insert(s.end(), m_.begin(), m_.end());
        return MomentSequence(std::move(s));
    }

    /// Moments of W - E[W].
    TargetMoments centered() const {
        const auto c = center_moments(sequence());
        return TargetMoments({c.values().begin() + 1, c.values().end()}, symmetric_);
    }

    bool is_centered() const noexcept { return std::abs(m_[0]) <= 1e-12 * (1.0 + std::sqrt(std::abs(m_[1]))); }

private:
    std::vector<double> m_;
    bool symmetric_;
};

/// X = x0 with probability 1 - eps, otherwise a draw from tail.
struct Decomposition {
    double x0 = 0.0;
    double eps = 0.0;
    AtomicDistribution tail = AtomicDistribution::point(1.0);
};

namespace detail {

inline void validate(const Decomposition& dec) {
    require(dec.eps > 0.0 && dec.eps < 0.5, ErrorCode::Domain, "decomposition needs 0 < eps < 1/2");
    double max_abs = std::abs(dec.x0);
    for (double a : dec.tail.atoms()) max_abs = std::max(max_abs, std::abs(a));
    const double merge = 1e-12 * (1.0 + max_abs);
    for (double a : dec.tail.atoms())
        require(std::abs(a - dec.x0) > merge, ErrorCode::InvariantViolation, "x0 collides with an atom of the tail");
}

}  // namespace detail

/// Mixture with mass 1 - eps at x0 and eps * w~_i at each tail atom. Its
/// entropy is h2(eps) + eps * H(tail).
inline AtomicDistribution compose(const Decomposition& dec) {
    detail::validate(dec);
    std::vector<double> atoms(dec.tail.atoms().begin(), dec.tail.atoms().end());
    std::vector<double> weights;
    weights.reserve(atoms.size() + 1);
    for (double w : dec.tail.weights()) weights.push_back(dec.eps * w);
    atoms.push_back(dec.x0);
    weights.push_back(1.0 - dec.eps);
    return AtomicDistribution(std::move(atoms), std::move(weights));
}

/// Splits off the most probable atom. Requires 0 < H(X) < log 2, which forces
/// the largest mass above 1/2.
inline Decomposition decompose(const AtomicDistribution& x) {
    detail::require(x.size() >= 2, ErrorCode::Degenerate, "a single atom has zero entropy");
    const std::size_t mode = x.mode_index();
    const auto atoms = x.atoms();
    const auto weights = x.weights();
    double eps = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (i != mode) eps += weights[i];
    detail::require(eps < 0.5, ErrorCode::Hypothesis, "largest atom mass must exceed 1/2");
    detail::require(entropy(x) < std::log(2.0), ErrorCode::Hypothesis, "entropy must be below log 2");
    std::vector<double> ta, tw;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i == mode) continue;
        ta.push_back(atoms[i]);
        tw.push_back(weights[i] / eps);
    }
    return Decomposition{atoms[mode], eps, AtomicDistribution(std::move(ta), std::move(tw))};
}

/// Moments the tail must have for the mixture to reproduce the target:
/// s_n = m_n / eps - ((1 - eps) / eps) x0^n.
inline MomentSequence induced_moments(const TargetMoments& target, double eps, double x0, std::size_t k) {
    detail::require(eps > 0.0 && eps < 0.5, ErrorCode::Domain, "induced moments need 0 < eps < 1/2");
    detail::require(k <= target.order(), ErrorCode::Length, "target has too few moments");
    std::vector<double> s(k + 1);
    s[0] = 1.0;
    const double ratio = (1.0 - eps) / eps;
    double p = 1.0;
    for (std::size_t n = 1; n <= k; ++n) {
        p *= x0;
        s[n] = target(n) / eps - ratio * p;
    }
    return MomentSequence(std::move(s));
}

struct HankelDeterminants {
    double det1 = 0.0;   ///< det H_1(1, s1, s2)
    double det3 = 0.0;   ///< det H_2(1, s1, ..., s4)
    double alpha = 0.0;
    double beta = 0.0;
};

/// Closed-form leading minors of the tail's Hankel matrix for a centered
/// target: with p(x) = m2 x^4 - 2 m3 x^3 + (m4 - 3 m2^2) x^2 + 2 m2 m3 x,
/// alpha = p(x0) + m2 m4 - m3^2, beta = p(x0) + m2^3 and
/// det3 = alpha / eps^2 - beta / eps^3.
inline HankelDeterminants det_H2_closed_form(const TargetMoments& target, double eps, double x0) {
    detail::require(target.is_centered(), ErrorCode::Precondition, "closed form needs a centered target");
    detail::require(target.order() >= 4, ErrorCode::Length, "closed form needs moments through order 4");
    detail::require(eps > 0.0 && eps < 0.5, ErrorCode::Domain, "closed form needs 0 < eps < 1/2");
    const double m2 = target(2), m3 = target(3), m4 = target(4);
    const double x2 = x0 * x0;
    const double p = m2 * x2 * x2 - 2.0 * m3 * x2 * x0 + (m4 - 3.0 * m2 * m2) * x2 + 2.0 * m2 * m3 * x0;
    HankelDeterminants out;
    out.alpha = p + (m2 * m4 - m3 * m3);
    out.beta = p + m2 * m2 * m2;
    out.det1 = m2 / eps - (1.0 - eps) / (eps * eps) * x2;
    out.det3 = out.alpha / (eps * eps) - out.beta / (eps * eps * eps);
    return out;
}

enum class EtaMethod { ClosedFormSymmetric, NumericalGeneral };

constexpr std::string_view to_string(EtaMethod m) noexcept {
    return m == EtaMethod::ClosedFormSymmetric ? "ClosedFormSymmetric" : "NumericalGeneral";
}

struct EtaResult {
    double eta = 0.0;
    double entropy_threshold_bits = 0.0;
    EtaMethod method = EtaMethod::ClosedFormSymmetric;
};

struct EtaSearch {
    double bisection_tolerance = 1e-6;
    std::size_t x0_points = 2048;
};

namespace detail {

inline double quartic_p(double m2, double m3, double m4, double x) {
    const double x2 = x * x;
    return m2 * x2 * x2 - 2.0 * m3 * x2 * x + (m4 - 3.0 * m2 * m2) * x2 + 2.0 * m2 * m3 * x;
}

/// min of p over [-r, r]: dense grid, then Newton on p' from the best node.
inline double min_quartic_on_interval(double m2, double m3, double m4, double r, std::size_t points) {
    const auto p = [&](double x) { return quartic_p(m2, m3, m4, x); };
    double best_x = -r;
    double best = p(-r);
    for (std::size_t i = 1; i < points; ++i) {
        const double x = -r + 2.0 * r * static_cast<double>(i) / static_cast<double>(points - 1);
        const double v = p(x);
        if (v < best) {
            best = v;
            best_x = x;
        }
    }
    double x = best_x;
    for (int it = 0; it < 50; ++it) {
        const double d1 = 4.0 * m2 * x * x * x - 6.0 * m3 * x * x + 2.0 * (m4 - 3.0 * m2 * m2) * x + 2.0 * m2 * m3;
        const double d2 = 12.0 * m2 * x * x - 12.0 * m3 * x + 2.0 * (m4 - 3.0 * m2 * m2);
        if (d2 <= 0.0) break;
        const double next = std::clamp(x - d1 / d2, -r, r);
        if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return std::min(best, p(x));
}

/// Largest det3 over the x0 range where det1 >= 0.
inline double max_det3(const TargetMoments& c, double eps, std::size_t points) {
    const double m2 = c(2), m3 = c(3), m4 = c(4);
    const double r = std::sqrt(eps / (1.0 - eps) * m2);
    const double pmin = min_quartic_on_interval(m2, m3, m4, r, points);
    return (-(1.0 - eps) * pmin + eps * (m2 * m4 - m3 * m3) - m2 * m2 * m2) / (eps * eps * eps);
}

}  // namespace detail

/// eta(W): below this eps no tail can carry four matched moments. Symmetric
/// targets use the closed form; others bisect on eps with an inner
/// maximization of det3 over the admissible x0 interval.
inline EtaResult eta(const TargetMoments& target, EtaSearch search = {}) {
    detail::require(target.order() >= 4, ErrorCode::Domain, "eta needs moments through order 4");
    const TargetMoments c = target.centered();
    const double m2 = c(2), m4 = c(4);
    detail::require(m2 > 0.0 && m4 > m2 * m2, ErrorCode::Domain, "degenerate target moments");

    EtaResult out;
    if (target.symmetric()) {
        out.method = EtaMethod::ClosedFormSymmetric;
        out.eta = m4 >= 3.0 * m2 * m2 ? m2 * m2 / m4 : (5.0 * m2 * m2 - m4) / (9.0 * m2 * m2 - m4);
    } else {
        out.method = EtaMethod::NumericalGeneral;
        const auto blocked = [&](double e) { return detail::max_det3(c, e, search.x0_points) < 0.0; };
        double lo = 1e-9;
        double hi = 0.5 - 1e-9;
        detail::require(blocked(lo), ErrorCode::Numeric, "four-moment obstruction not found at small eps");
        if (blocked(hi)) {
            lo = hi;
        } else {
            while (hi - lo > search.bisection_tolerance) {
                const double mid = 0.5 * (lo + hi);
                if (blocked(mid))
                    lo = mid;
                else
                    hi = mid;
            }
        }
        out.eta = lo;
    }
    out.entropy_threshold_bits = binary_entropy(out.eta, kBits);
    return out;
}

struct CertificateGrid {
    std::size_t eps_points = 512;
    std::size_t x0_points = 2048;
    double margin = 0.01;       ///< x0 range extends this fraction past the det1 boundary
    double tolerance = 1e-6;    ///< certificate needs max min(det1, det3) < -tolerance
};

struct SweepRow {
    double eps = 0.0;
    double x0 = 0.0;
    double det1 = 0.0;
    double det3 = 0.0;
};

struct CertificateReport {
    EtaResult eta;
    double h_nats = 0.0;
    double eps_max = 0.0;
    CertificateGrid grid;
    double max_min_det = 0.0;
    SweepRow worst;
    std::vector<SweepRow> worst_per_eps;   ///< the x0 attaining the max for each eps
    bool valid = false;
};

/// Grid evidence that no X with H(X) <= h matches four moments of the
/// target: over eps in (0, h2^{-1}(h)] and x0 covering the det1 >= 0 band,
/// min(det1, det3) stays negative.
inline CertificateReport four_moment_certificate(const TargetMoments& target, double h_nats,
                                                 CertificateGrid grid = {}) {
    detail::require(grid.eps_points >= 1 && grid.x0_points >= 2, ErrorCode::Config, "certificate grid too small");
    CertificateReport rep;
    rep.eta = eta(target);
    const double threshold = binary_entropy(rep.eta.eta);
    detail::require(h_nats > 0.0 && h_nats < threshold, ErrorCode::Precondition,
                    "entropy budget must lie below the h2(eta) threshold");
    rep.h_nats = h_nats;
    rep.grid = grid;
    rep.eps_max = inverse_binary_entropy(h_nats);
    const TargetMoments c = target.centered();
    const double m2 = c(2);

    rep.max_min_det = -std::numeric_limits<double>::infinity();
    rep.worst_per_eps.reserve(grid.eps_points);
    for (std::size_t i = 0; i < grid.eps_points; ++i) {
        const double e = rep.eps_max * static_cast<double>(i + 1) / static_cast<double>(grid.eps_points);
        const double reach = std::sqrt(e / (1.0 - e) * m2) * (1.0 + grid.margin);
        SweepRow row_best{e, 0.0, 0.0, 0.0};
        double row_max = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < grid.x0_points; ++j) {
            const double x0 = -reach + 2.0 * reach * static_cast<double>(j) / static_cast<double>(grid.x0_points - 1);
            const auto d = det_H2_closed_form(c, e, x0);
            const double v = std::min(d.det1, d.det3);
            if (v > row_max) {
                row_max = v;
                row_best = {e, x0, d.det1, d.det3};
            }
        }
        rep.worst_per_eps.push_back(row_best);
        if (row_max > rep.max_min_det) {
            rep.max_min_det = row_max;
            rep.worst = row_best;
        }
    }
    rep.valid = rep.max_min_det < -grid.tolerance;
    return rep;
}

enum class MatchMode {
    Slack,  ///< eps with 2 h2(eps) = h
    Tight,  ///< eps with h2(eps) + eps log 2 = h (two-atom tail at its entropy cap)
};

namespace detail {

inline double match_eps(double h_nats, MatchMode mode) {
    constexpr double cap = 0.45;
    const double ln2 = std::log(2.0);
    if (mode == MatchMode::Slack) return inverse_binary_entropy(std::min(h_nats / 2.0, binary_entropy_nats(cap)));
    const auto g = [&](double e) { return binary_entropy_nats(e) + e * ln2; };
    const double target = h_nats * (1.0 - 1e-9);
    if (g(cap) <= target) return cap;
    double lo = 0.0, hi = cap;
    while (hi - lo > 1e-15) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace detail

/// At most three atoms, entropy at most h, first three moments of the target.
/// The tail sits at the singular extension s~_4 so it has exactly two atoms.
inline AtomicDistribution match_three_moments(const TargetMoments& target, double h_nats,
                                              MatchMode mode = MatchMode::Slack) {
    detail::require(h_nats > 0.0 && std::isfinite(h_nats), ErrorCode::Domain, "entropy budget must be positive");
    detail::require(target.order() >= 3, ErrorCode::Length, "target needs moments through order 3");
    const double shift = target(1);
    const TargetMoments c = target.centered();
    const double eps = detail::match_eps(h_nats, mode);
    detail::require(eps > 0.0, ErrorCode::Domain, "entropy budget too small to resolve");
    const double reach = std::sqrt(eps / (1.0 - eps) * c(2));

    for (double frac : {0.0, 0.25, -0.25, 0.5, -0.5}) {
        const double x0 = frac * reach;
        const auto s = induced_moments(c, eps, x0, 3);
        const double s4 = minimal_extension(s);
        const MomentSequence ext{1.0, s[1], s[2], s[3], s4};
        const AtomicDistribution tail = prony_recover(ext);
        try {
            const AtomicDistribution x = compose(Decomposition{x0, eps, tail});
            std::vector<double> atoms(x.atoms().begin(), x.atoms().end());
            for (double& a : atoms) a += shift;
            return AtomicDistribution(std::move(atoms), {x.weights().begin(), x.weights().end()});
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InvariantViolation) throw;
        }
    }
    detail::fail(ErrorCode::Numeric, "three-moment construction failed for every x0 candidate");
}

}  // namespace lowent
