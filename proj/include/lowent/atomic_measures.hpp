#pragma once

// Finitely supported distributions: moments, entropy, standardization,
// Prony-style recovery from truncated moments and Gauss-Hermite quadrature.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "lowent/errors.hpp"
#include "lowent/moment_core.hpp"

namespace lowent {

inline constexpr double kNats = std::numbers::e;
inline constexpr double kBits = 2.0;

/// Probability distribution on finitely many points. Atoms are kept strictly
/// increasing; atoms closer than 1e-12 * (1 + max |atom|) are merged and
/// zero-weight atoms dropped. Weights are renormalized to sum to one.
class AtomicDistribution {
public:
    AtomicDistribution(std::vector<double> atoms, std::vector<double> weights) {
        detail::require(!atoms.empty(), ErrorCode::Length, "distribution needs at least one atom");
        detail::require(atoms.size() == weights.size(), ErrorCode::Length,
                        "atoms and weights must have the same length");
        double max_abs = 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            detail::require(std::isfinite(atoms[i]) && std::isfinite(weights[i]), ErrorCode::Domain,
                            "atoms and weights must be finite");
            detail::require(weights[i] >= 0.0, ErrorCode::Domain, "weights must be nonnegative");
            max_abs = std::max(max_abs, std::abs(atoms[i]));
            total += weights[i];
        }
        detail::require(std::abs(total - 1.0) <= 1e-9, ErrorCode::Normalization,
                        "weights must sum to 1 (got " + std::to_string(total) + ")");

        std::vector<std::size_t> order(atoms.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

        const double merge = 1e-12 * (1.0 + max_abs);
        for (std::size_t idx : order) {
            const double a = atoms[idx];
            const double w = weights[idx];
            if (w == 0.0) continue;
            if (!atoms_.empty() && a - atoms_.back() <= merge) {
                const double wsum = weights_.back() + w;
                atoms_.back() = (atoms_.back() * weights_.back() + a * w) / wsum;
                weights_.back() = wsum;
            } else {
                atoms_.push_back(a);
                weights_.push_back(w);
            }
        }
        detail::require(!atoms_.empty(), ErrorCode::Normalization, "all weights are zero");
        const double kept = std::accumulate(weights_.begin(), weights_.end(), 0.0);
        for (double& w : weights_) w /= kept;
    }

    static AtomicDistribution point(double at) { return AtomicDistribution({at}, {1.0}); }

    std::size_t size() const noexcept { return atoms_.size(); }
    std::span<const double> atoms() const noexcept { return atoms_; }
    std::span<const double> weights() const noexcept { return weights_; }

    double mean() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * atoms_[i];
        return m;
    }
    double second_moment() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) m += weights_[i] * atoms_[i] * atoms_[i];
        return m;
    }
    double variance() const noexcept {
        const double mu = mean();
        double v = 0.0;
        for (std::size_t i = 0; i < size(); ++i) v += weights_[i] * (atoms_[i] - mu) * (atoms_[i] - mu);
        return v;
    }
    std::size_t mode_index() const noexcept {
        return static_cast<std::size_t>(std::max_element(weights_.begin(), weights_.end()) - weights_.begin());
    }

    friend bool operator==(const AtomicDistribution&, const AtomicDistribution&) = default;

private:
    std::vector<double> atoms_;
    std::vector<double> weights_;
};

inline MomentSequence moments(const AtomicDistribution& dist, std::size_t k) {
    std::vector<double> s(k + 1, 0.0);
    const auto a = dist.atoms();
    const auto w = dist.weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        double p = w[i];
        for (std::size_t n = 0; n <= k; ++n) {
            s[n] += p;
            p *= a[i];
        }
    }
    s[0] = 1.0;
    return MomentSequence(std::move(s));
}

namespace detail {

inline double log_base(double base) {
    require(std::isfinite(base) && base > 1.0, ErrorCode::Domain, "logarithm base must exceed 1");
    return std::log(base);
}

inline double entropy_nats(std::span<const double> weights) {
    double h = 0.0;
    for (double w : weights)
        if (w > 0.0) h -= w * std::log(w);
    return h;
}

inline double binary_entropy_nats(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return -x * std::log(x) - (1.0 - x) * std::log1p(-x);
}

}  // namespace detail

/// Shannon entropy in units of log-base (base e gives nats, 2 gives bits).
inline double entropy(const AtomicDistribution& dist, double base = kNats) {
    return detail::entropy_nats(dist.weights()) / detail::log_base(base);
}

inline double binary_entropy(double x, double base = kNats) {
    detail::require(x >= 0.0 && x <= 1.0, ErrorCode::Domain, "binary entropy argument must lie in [0, 1]");
    return detail::binary_entropy_nats(x) / detail::log_base(base);
}

/// The unique x in [0, 1/2] with h2(x) = y, by bisection to 1e-12.
inline double inverse_binary_entropy(double y, double base = kNats) {
    const double lb = detail::log_base(base);
    const double top = std::log(2.0) / lb;
    detail::require(y >= 0.0 && y <= top * (1.0 + 1e-14), ErrorCode::Domain,
                    "inverse binary entropy argument must lie in [0, h2(1/2)]");
    if (y <= 0.0) return 0.0;
    if (y >= top) return 0.5;
    const double target = y * lb;
    double lo = 0.0, hi = 0.5;
    while (hi - lo > 1e-14) {
        const double mid = 0.5 * (lo + hi);
        if (detail::binary_entropy_nats(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Affine image with mean 0 and variance 1. Weights are untouched.
inline AtomicDistribution standardize(const AtomicDistribution& dist) {
    detail::require(dist.size() >= 2, ErrorCode::Degenerate, "cannot standardize a single atom");
    const double mu = dist.mean();
    const double var = dist.variance();
    detail::require(var > 0.0, ErrorCode::Degenerate, "cannot standardize a zero-variance distribution");
    const double scale = 1.0 / std::sqrt(var);
    std::vector<double> atoms(dist.atoms().begin(), dist.atoms().end());
    for (double& a : atoms) a = (a - mu) * scale;
    return AtomicDistribution(std::move(atoms), {dist.weights().begin(), dist.weights().end()});
}

/// Smallest s~_4 with det H_2(1, s1, s2, s3, s~_4) = 0. The determinant is
/// (s2 - s1^2) s~_4 - (s3^2 - 2 s1 s2 s3 + s2^3).
inline double minimal_extension(const MomentSequence& seq) {
    detail::require(seq.order() >= 3, ErrorCode::Length, "minimal_extension needs moments through order 3");
    detail::require(seq.is_probability(), ErrorCode::Normalization, "minimal_extension requires s_0 = 1");
    const double s1 = seq[1], s2 = seq[2], s3 = seq[3];
    const double d1 = s2 - s1 * s1;
    detail::require(d1 > 1e-12 * (1.0 + std::abs(s2)), ErrorCode::Infeasible,
                    "H_1(1, s1, s2) is not positive definite");
    return (s3 * s3 - 2.0 * s1 * s2 * s3 + s2 * s2 * s2) / d1;
}

namespace detail {

/// Moments of a*X + b from moments of X.
inline std::vector<double> affine_moments(std::span<const double> s, double a, double b) {
    std::vector<double> out(s.size(), 0.0);
    for (std::size_t n = 0; n < s.size(); ++n) {
        double binom = 1.0;
        double acc = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            acc += binom * std::pow(a, static_cast<double>(n - i)) * s[n - i] * std::pow(b, static_cast<double>(i));
            binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
        }
        out[n] = acc;
    }
    return out;
}

inline double moment_residual(std::span<const double> s, const std::vector<double>& atoms,
                              const std::vector<double>& weights) {
    double worst = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            acc += weights[i] * std::pow(atoms[i], static_cast<double>(n));
        worst = std::max(worst, std::abs(acc - s[n]));
    }
    return worst;
}

/// Newton iterations on the square moment system sum_i w_i a_i^j = s_j,
/// j = 0..2r-1. Keeps an iterate only if it lowers the residual.
inline void polish_atoms(std::span<const double> s, std::vector<double>& atoms, std::vector<double>& weights) {
    const std::size_t r = atoms.size();
    if (s.size() < 2 * r) return;
    const auto eqs = s.subspan(0, 2 * r);
    double best = moment_residual(eqs, atoms, weights);
    for (int iter = 0; iter < 8 && best > 0.0; ++iter) {
        Eigen::MatrixXd jac(static_cast<Eigen::Index>(2 * r), static_cast<Eigen::Index>(2 * r));
        Eigen::VectorXd res(static_cast<Eigen::Index>(2 * r));
        for (std::size_t j = 0; j < 2 * r; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < r; ++i) {
                const double pj = std::pow(atoms[i], static_cast<double>(j));
                const double dj = j == 0 ? 0.0 : static_cast<double>(j) * std::pow(atoms[i], static_cast<double>(j - 1));
                jac(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dj * weights[i];
                jac(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r + i)) = pj;
                acc += weights[i] * pj;
            }
            res(static_cast<Eigen::Index>(j)) = acc - eqs[j];
        }
        const Eigen::VectorXd step = jac.fullPivLu().solve(res);
        if (!step.allFinite()) return;
        std::vector<double> na = atoms, nw = weights;
        for (std::size_t i = 0; i < r; ++i) {
            na[i] -= step(static_cast<Eigen::Index>(i));
            nw[i] -= step(static_cast<Eigen::Index>(r + i));
        }
        const double nr = moment_residual(eqs, na, nw);
        if (!(nr < best)) return;
        best = nr;
        atoms = std::move(na);
        weights = std::move(nw);
    }
}

struct RecoveryAttempt {
    bool ok = false;
    std::vector<double> atoms;
    std::vector<double> weights;
};

/// r-atom measure whose atoms are the roots of the monic degree-r orthogonal
/// polynomial of s (well scaled: mean 0, variance 1 where possible).
inline RecoveryAttempt recover_r_atoms(std::span<const double> s, std::size_t r) {
    RecoveryAttempt out;
    const auto ri = static_cast<Eigen::Index>(r);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(ri);
    if (r > 0) {
        Eigen::MatrixXd h(ri, ri);
        Eigen::VectorXd rhs(ri);
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < r; ++j)
                h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[i + j];
            rhs(static_cast<Eigen::Index>(i)) = -s[r + i];
        }
        coeffs = h.colPivHouseholderQr().solve(rhs);
        if (!coeffs.allFinite()) return out;
    }

    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(ri, ri);
    for (Eigen::Index i = 1; i < ri; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < ri; ++i) companion(i, ri - 1) = -coeffs(i);
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
    if (es.info() != Eigen::Success) return out;
    for (Eigen::Index i = 0; i < ri; ++i) {
        const std::complex<double> z = es.eigenvalues()(i);
        if (std::abs(z.imag()) > 1e-8 * (1.0 + std::abs(z))) return out;
        out.atoms.push_back(z.real());
    }
    std::sort(out.atoms.begin(), out.atoms.end());

    // Least-squares Vandermonde solve over every available moment.
    const auto rows = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd vander(rows, ri);
    Eigen::VectorXd target(rows);
    for (Eigen::Index j = 0; j < rows; ++j) {
        for (Eigen::Index i = 0; i < ri; ++i)
            vander(j, i) = std::pow(out.atoms[static_cast<std::size_t>(i)], static_cast<double>(j));
        target(j) = s[static_cast<std::size_t>(j)];
    }
    const Eigen::VectorXd w = vander.colPivHouseholderQr().solve(target);
    if (!w.allFinite()) return out;
    out.weights.assign(w.data(), w.data() + w.size());
    polish_atoms(s, out.atoms, out.weights);
    out.ok = true;
    return out;
}

}  // namespace detail

/// Atomic measure reproducing (s_0, ..., s_k). Odd orders k = 2n-1 give the
/// canonical measure with at most n atoms (singular H_n). Even orders k = 2n
/// first try n atoms and otherwise extend with a feasible s~_{2n+1}, giving
/// at most n+1 atoms. Rank-deficient sequences yield fewer atoms.
inline AtomicDistribution prony_recover(const MomentSequence& seq, double tol = 1e-8) {
    detail::require(seq.is_probability(), ErrorCode::Normalization, "prony_recover requires s_0 = 1");
    const std::size_t k = seq.order();
    if (k == 0) return AtomicDistribution::point(0.0);

    std::vector<double> s(seq.values().begin(), seq.values().end());
    const double match_tol = tol * (1.0 + std::abs(s.back()));

    if (k == 1) return AtomicDistribution::point(s[1]);

    // Degenerate variance: only a point mass can match.
    const double var = s[2] - s[1] * s[1];
    if (var <= 1e-12 * (1.0 + std::abs(s[2]))) {
        const auto pt = AtomicDistribution::point(s[1]);
        const auto ms = moments(pt, k);
        for (std::size_t n = 0; n <= k; ++n)
            if (std::abs(ms[n] - s[n]) > match_tol)
                detail::fail(ErrorCode::Infeasible, "moment sequence has no representing measure");
        return pt;
    }

    const auto attempt_odd = [&](std::span<const double> odd_seq,
                                 std::span<const double> check) -> std::optional<AtomicDistribution> {
        const double mu = s[1];
        const double sd = std::sqrt(var);
        const auto scaled = detail::affine_moments(odd_seq, 1.0 / sd, -mu / sd);
        const std::size_t n_max = odd_seq.size() / 2;
        for (std::size_t r = n_max; r >= 1; --r) {
            auto att = detail::recover_r_atoms(std::span<const double>(scaled).subspan(0, 2 * r), r);
            if (!att.ok) continue;
            bool nonneg = true;
            for (double& w : att.weights) {
                if (w < -tol) nonneg = false;
                w = std::max(w, 0.0);
            }
            if (!nonneg) continue;
            for (double& a : att.atoms) a = a * sd + mu;
            if (detail::moment_residual(check, att.atoms, att.weights) > tol * (1.0 + std::abs(check.back())))
                continue;
            const double total = std::accumulate(att.weights.begin(), att.weights.end(), 0.0);
            if (std::abs(total - 1.0) > 1e-9) continue;
            return AtomicDistribution(std::move(att.atoms), std::move(att.weights));
        }
        return std::nullopt;
    };

    if (k % 2 == 1) {
        if (auto d = attempt_odd(s, s)) return *d;
        detail::fail(ErrorCode::Infeasible, "moment sequence has no representing measure");
    }

    // Even order: n atoms if s_{2n} happens to be the minimal extension.
    if (auto d = attempt_odd(std::span<const double>(s).subspan(0, k), s)) return *d;
    const auto feas = truncated_feasible(seq);
    if (feas.verdict == Feasibility::Infeasible)
        detail::fail(ErrorCode::Infeasible, "moment sequence has no representing measure");
    std::vector<double> ext = s;
    ext.push_back(feas.witness.front());
    if (auto d = attempt_odd(ext, s)) return *d;
    detail::fail(ErrorCode::Infeasible, "failed to recover a representing measure");
}

namespace detail {

struct HermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// m-point Gauss-Hermite rule for the standard normal (probabilists'
/// convention) from the eigen-decomposition of the Jacobi matrix with zero
/// diagonal and off-diagonal sqrt(j). Weights are squared first components
/// of the normalized eigenvectors. Rules are cached per m.
inline const HermiteRule& hermite_rule(std::size_t m) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<HermiteRule>> cache;
    require(m >= 1, ErrorCode::Domain, "quadrature needs at least one point");
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(m);
    if (it != cache.end()) return *it->second;

    auto rule = std::make_unique<HermiteRule>();
    if (m == 1) {
        rule->nodes = {0.0};
        rule->weights = {1.0};
    } else {
        const auto mi = static_cast<Eigen::Index>(m);
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(mi);
        Eigen::VectorXd sub(mi - 1);
        for (Eigen::Index j = 0; j < mi - 1; ++j) sub(j) = std::sqrt(static_cast<double>(j + 1));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        require(es.info() == Eigen::Success, ErrorCode::Numeric, "Jacobi eigen-decomposition failed");
        rule->nodes.resize(m);
        rule->weights.resize(m);
        double total = 0.0;
        for (Eigen::Index i = 0; i < mi; ++i) {
            const double v0 = es.eigenvectors()(0, i);
            rule->nodes[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
            rule->weights[static_cast<std::size_t>(i)] = v0 * v0;
            total += v0 * v0;
        }
        for (double& w : rule->weights) w /= total;
        // The rule is symmetric; enforce it exactly.
        for (std::size_t i = 0; i < m / 2; ++i) {
            const std::size_t j = m - 1 - i;
            const double node = 0.5 * (rule->nodes[j] - rule->nodes[i]);
            const double w = 0.5 * (rule->weights[i] + rule->weights[j]);
            rule->nodes[i] = -node;
            rule->nodes[j] = node;
            rule->weights[i] = w;
            rule->weights[j] = w;
        }
        if (m % 2 == 1) rule->nodes[m / 2] = 0.0;
    }
    auto& ref = *rule;
    cache.emplace(m, std::move(rule));
    return ref;
}

}  // namespace detail

struct QuadratureSpec {
    std::size_t point_count = 1;
};

/// m-point distribution sharing the first 2m-1 moments of N(0, 1).
inline AtomicDistribution gauss_hermite(QuadratureSpec spec) {
    const auto& rule = detail::hermite_rule(spec.point_count);
    return AtomicDistribution(rule.nodes, rule.weights);
}
inline AtomicDistribution gauss_hermite(std::size_t m) { return gauss_hermite(QuadratureSpec{m}); }

}  // namespace lowent
