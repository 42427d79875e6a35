#pragma once

// Independent reference computations and random generators shared by the
// test programs. Nothing here calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

namespace testsupport {

using Matrix = std::vector<std::vector<double>>;

/// Laplace expansion along the first row.
inline double cofactor_det(const Matrix& a) {
    const std::size_t n = a.size();
    if (n == 0) return 1.0;
    if (n == 1) return a[0][0];
    double det = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        Matrix minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<double> row;
            for (std::size_t k = 0; k < n; ++k)
                if (k != c) row.push_back(a[r][k]);
            minor.push_back(row);
        }
        det += ((c % 2 == 0) ? 1.0 : -1.0) * a[0][c] * cofactor_det(minor);
    }
    return det;
}

inline Matrix hankel_oracle(const std::vector<double>& s, std::size_t n) {
    Matrix m(n + 1, std::vector<double>(n + 1));
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= n; ++j) m[i][j] = s[i + j];
    return m;
}

inline Matrix leading_block(const Matrix& a, std::size_t k) {
    Matrix out(k, std::vector<double>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) out[i][j] = a[i][j];
    return out;
}

/// E[Z^n] for standard normal Z: (n-1)!! for even n, 0 for odd n.
inline double normal_moment(std::size_t n) {
    if (n % 2 == 1) return 0.0;
    double v = 1.0;
    for (std::size_t j = n; j > 1; j -= 2) v *= static_cast<double>(j - 1);
    return v;
}

/// sum_i w_i a_i^n by direct summation.
inline std::vector<double> raw_moments(const std::vector<double>& a, const std::vector<double>& w, std::size_t k) {
    std::vector<double> s(k + 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        double p = 1.0;
        for (std::size_t n = 0; n <= k; ++n) {
            s[n] += w[i] * p;
            p *= a[i];
        }
    }
    return s;
}

inline double h2(double x, double base = std::exp(1.0)) {
    const auto term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
    return (term(x) + term(1.0 - x)) / std::log(base);
}

inline double shannon(const std::vector<double>& w) {
    double h = 0.0;
    for (double p : w)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

/// I(X; sqrt(snr) X + Z) = E[log phi(Z) - log f_Y(Y)] by plain Monte Carlo.
inline double mc_mutual_information(const std::vector<double>& a, const std::vector<double>& w, double snr,
                                    std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const double s = std::sqrt(snr);
    double acc = 0.0;
    for (std::size_t t = 0; t < samples; ++t) {
        const std::size_t i = pick(rng);
        const double z = normal(rng);
        const double y = s * a[i] + z;
        double f = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double u = y - s * a[j];
            f += w[j] * std::exp(-0.5 * u * u);
        }
        acc += -0.5 * z * z - std::log(f);
    }
    return acc / static_cast<double>(samples);
}

/// mmse of the equiprobable +-1 input, 1 - E[tanh(g + sqrt(g) Z)], by a fine
/// trapezoid rule on the normal density.
inline double bpsk_mmse(double g) {
    const int n = 400000;
    const double lim = 12.0, h = 2.0 * lim / n;
    double acc = 0.0;
    for (int q = 0; q <= n; ++q) {
        const double z = -lim + h * q;
        const double wgt = (q == 0 || q == n) ? 0.5 : 1.0;
        acc += wgt * std::exp(-0.5 * z * z) * std::tanh(g + std::sqrt(g) * z);
    }
    return 1.0 - acc * h / std::sqrt(2.0 * M_PI);
}

struct Atoms {
    std::vector<double> atoms;
    std::vector<double> weights;
};

/// n atoms in [lo, hi] at pairwise distance >= min_sep, weights >= min_w.
inline Atoms random_atoms(std::mt19937_64& rng, std::size_t n, double lo, double hi, double min_sep, double min_w) {
    std::uniform_real_distribution<double> pos(lo, hi), u(0.0, 1.0);
    Atoms out;
    while (out.atoms.size() < n) {
        const double x = pos(rng);
        bool ok = true;
        for (double y : out.atoms) ok = ok && std::abs(x - y) >= min_sep;
        if (ok) out.atoms.push_back(x);
    }
    std::sort(out.atoms.begin(), out.atoms.end());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.weights.push_back(u(rng));
        total += out.weights.back();
    }
    const double free = 1.0 - min_w * static_cast<double>(n);
    for (double& w : out.weights) w = min_w + free * w / total;
    return out;
}

}  // namespace testsupport
