#pragma once

// Moment sequences, Hankel matrices and the positive-semidefiniteness tests
// that decide whether a truncated sequence has a representing measure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lowent/errors.hpp"

namespace lowent {

/// Finite prefix (s_0, ..., s_k) of a real moment sequence, stored raw.
class MomentSequence {
public:
    explicit MomentSequence(std::vector<double> values) : values_(std::move(values)) {
        detail::require(!values_.empty(), ErrorCode::Length, "moment sequence must be nonempty");
        for (double v : values_)
            detail::require(std::isfinite(v), ErrorCode::Domain, "moment sequence entries must be finite");
    }
    MomentSequence(std::initializer_list<double> values)
        : MomentSequence(std::vector<double>(values)) {}

    std::size_t order() const noexcept { return values_.size() - 1; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_.at(i); }
    std::span<const double> values() const noexcept { return values_; }

    /// s_0 = 1 within 1e-12.
    bool is_probability() const noexcept { return std::abs(values_.front() - 1.0) <= 1e-12; }

    friend bool operator==(const MomentSequence&, const MomentSequence&) = default;

private:
    std::vector<double> values_;
};

/// (n+1)x(n+1) matrix with entry (i, j) = s_{i+j}.
class HankelMatrix {
public:
    HankelMatrix(std::span<const double> s, std::size_t n) : mat_(n + 1, n + 1) {
        detail::require(s.size() >= 2 * n + 1, ErrorCode::Length,
                        "Hankel matrix of order " + std::to_string(n) + " needs " +
                            std::to_string(2 * n + 1) + " moments, got " + std::to_string(s.size()));
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = 0; j <= n; ++j)
                mat_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s[i + j];
    }

    std::size_t order() const noexcept { return static_cast<std::size_t>(mat_.rows()) - 1; }
    const Eigen::MatrixXd& matrix() const noexcept { return mat_; }
    double operator()(std::size_t i, std::size_t j) const {
        return mat_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

private:
    Eigen::MatrixXd mat_;
};

inline HankelMatrix hankel(const MomentSequence& seq, std::size_t n) {
    return HankelMatrix(seq.values(), n);
}

enum class PsdVerdict { PositiveDefinite, PositiveSemidefinite, Indefinite };

constexpr std::string_view to_string(PsdVerdict v) noexcept {
    switch (v) {
        case PsdVerdict::PositiveDefinite: return "PositiveDefinite";
        case PsdVerdict::PositiveSemidefinite: return "PositiveSemidefinite";
        case PsdVerdict::Indefinite: return "Indefinite";
    }
    return "Indefinite";
}

/// 1e-10 * (1 + max |entry|).
inline double default_psd_tolerance(const Eigen::MatrixXd& mat) {
    const double scale = mat.size() == 0 ? 0.0 : mat.cwiseAbs().maxCoeff();
    return 1e-10 * (1.0 + scale);
}

/// Symmetric elimination with diagonal pivoting (largest remaining diagonal
/// first). Pivots above tol give positive definiteness; once every remaining
/// diagonal is at most tol the trailing Schur complement must vanish within
/// tol for the matrix to be semidefinite.
inline PsdVerdict psd_check(const Eigen::MatrixXd& mat, double tol) {
    detail::require(mat.rows() == mat.cols(), ErrorCode::Domain, "psd_check needs a square matrix");
    detail::require(tol >= 0.0, ErrorCode::Domain, "psd_check tolerance must be nonnegative");
    Eigen::MatrixXd a = 0.5 * (mat + mat.transpose());
    const Eigen::Index n = a.rows();
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index p = k;
        for (Eigen::Index i = k + 1; i < n; ++i)
            if (a(i, i) > a(p, p)) p = i;
        const double pivot = a(p, p);
        if (pivot <= tol) {
            for (Eigen::Index i = k; i < n; ++i) {
                if (a(i, i) < -tol) return PsdVerdict::Indefinite;
                for (Eigen::Index j = i + 1; j < n; ++j)
                    if (std::abs(a(i, j)) > tol) return PsdVerdict::Indefinite;
            }
            return PsdVerdict::PositiveSemidefinite;
        }
        if (p != k) {
            a.row(k).swap(a.row(p));
            a.col(k).swap(a.col(p));
        }
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const double l = a(i, k) / pivot;
            for (Eigen::Index j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
        }
    }
    return PsdVerdict::PositiveDefinite;
}

inline PsdVerdict psd_check(const Eigen::MatrixXd& mat) {
    return psd_check(mat, default_psd_tolerance(mat));
}
inline PsdVerdict psd_check(const HankelMatrix& mat, double tol) { return psd_check(mat.matrix(), tol); }
inline PsdVerdict psd_check(const HankelMatrix& mat) { return psd_check(mat.matrix()); }

/// Determinants of the leading principal submatrices of orders 1..n+1.
inline std::vector<double> leading_minors(const Eigen::MatrixXd& mat) {
    detail::require(mat.rows() == mat.cols(), ErrorCode::Domain, "leading_minors needs a square matrix");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(mat.rows()));
    for (Eigen::Index k = 1; k <= mat.rows(); ++k)
        out.push_back(Eigen::PartialPivLU<Eigen::MatrixXd>(mat.topLeftCorner(k, k)).determinant());
    return out;
}
inline std::vector<double> leading_minors(const HankelMatrix& mat) { return leading_minors(mat.matrix()); }

/// Moments of X - E[X] from the raw moments of X.
inline MomentSequence center_moments(const MomentSequence& raw) {
    detail::require(raw.is_probability(), ErrorCode::Normalization, "center_moments requires s_0 = 1");
    const auto s = raw.values();
    if (s.size() == 1) return raw;
    const double mean = s[1];
    std::vector<double> out(s.size(), 0.0);
    out[0] = 1.0;
    for (std::size_t n = 2; n < s.size(); ++n) {
        double binom = 1.0;
        double power = 1.0;
        double acc = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            acc += ((i % 2 == 0) ? 1.0 : -1.0) * binom * s[n - i] * power;
            binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
            power *= mean;
        }
        out[n] = acc;
    }
    return MomentSequence(std::move(out));
}

enum class Feasibility { Feasible, Infeasible };

constexpr std::string_view to_string(Feasibility f) noexcept {
    return f == Feasibility::Feasible ? "Feasible" : "Infeasible";
}

struct FeasibilityResult {
    Feasibility verdict = Feasibility::Infeasible;
    /// Extension values appended to the sequence: (s~_{2n+2}) for odd order,
    /// (s~_{2n+1}, s~_{2n+2}) for even order. Empty when infeasible.
    std::vector<double> witness;
};

namespace detail {

/// Smallest value t such that the Hankel matrix with border b and corner t
/// is PSD, assuming the leading block is PSD: t* = b' H^+ b. Reports the
/// part of b outside the range of H, which must vanish for any t to work.
struct SchurExtension {
    double minimal_corner = 0.0;
    double range_defect = 0.0;
};

inline SchurExtension schur_extension(const Eigen::MatrixXd& h, const Eigen::VectorXd& b, double tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    const auto& lambda = es.eigenvalues();
    const auto& v = es.eigenvectors();
    SchurExtension out;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        const double proj = v.col(i).dot(b);
        if (lambda(i) > tol)
            out.minimal_corner += proj * proj / lambda(i);
        else
            out.range_defect = std::max(out.range_defect, std::abs(proj));
    }
    return out;
}

}  // namespace detail

/// Decides whether (s_0, ..., s_k) has a representing measure by searching
/// extensions that make the next Hankel matrix PSD. Extension candidates
/// start at the minimal (singular) corner value and add margins {0,1,10,100};
/// for even k the free odd moment is scanned over a small grid around the
/// value that keeps the border inside the range of H_n.
inline FeasibilityResult truncated_feasible(const MomentSequence& seq, double tol = 1e-10) {
    detail::require(seq.is_probability(), ErrorCode::Normalization, "truncated_feasible requires s_0 = 1");
    const auto s = seq.values();
    const std::size_t k = seq.order();
    const bool odd = (k % 2) == 1;
    const std::size_t n = odd ? (k - 1) / 2 : k / 2;

    HankelMatrix hn(s, n);
    const double scale = 1.0 + hn.matrix().cwiseAbs().maxCoeff();
    if (psd_check(hn.matrix(), tol * scale) == PsdVerdict::Indefinite) return {};

    const auto border = [&](double free_odd) {
        Eigen::VectorXd b(static_cast<Eigen::Index>(n + 1));
        for (std::size_t i = 0; i <= n; ++i) {
            const std::size_t idx = n + 1 + i;
            b(static_cast<Eigen::Index>(i)) = idx <= k ? s[idx] : free_odd;
        }
        return b;
    };

    std::vector<double> odd_candidates{0.0};
    if (!odd) {
        // Null directions of H_n constrain the free odd moment; take the
        // least-squares value and scan around it.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hn.matrix());
        const Eigen::VectorXd fixed = border(0.0);
        double num = 0.0, den = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            if (es.eigenvalues()(i) > tol * scale) continue;
            const auto vec = es.eigenvectors().col(i);
            const double last = vec(vec.size() - 1);
            num += last * vec.dot(fixed);
            den += last * last;
        }
        const double base = den > 0.0 ? -num / den : 0.0;
        odd_candidates = {base};
        for (double d : {1.0, 10.0, 100.0}) {
            odd_candidates.push_back(base + d);
            odd_candidates.push_back(base - d);
        }
    }

    std::vector<double> ext(s.begin(), s.end());
    for (double t : odd_candidates) {
        const Eigen::VectorXd b = border(t);
        const auto schur = detail::schur_extension(hn.matrix(), b, tol * scale);
        for (double margin : {0.0, 1.0, 10.0, 100.0}) {
            const double corner = schur.minimal_corner + margin;
            ext.assign(s.begin(), s.end());
            if (!odd) ext.push_back(t);
            ext.push_back(corner);
            HankelMatrix next(ext, n + 1);
            const double ntol = tol * (1.0 + next.matrix().cwiseAbs().maxCoeff());
            if (psd_check(next.matrix(), ntol) != PsdVerdict::Indefinite) {
                FeasibilityResult out{Feasibility::Feasible, {}};
                if (!odd) out.witness.push_back(t);
                out.witness.push_back(corner);
                return out;
            }
        }
    }
    return {};
}

}  // namespace lowent
