#pragma once

#include "descforge/error.hpp"
#include "descforge/laplacian.hpp"
#include "descforge/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace descforge {

/// Smallest generalized eigenpairs of L y = lambda C y. Row i of `eigenvectors`
/// pairs with eigenvalues[i]; rows are C-orthonormal.
struct Spectrum {
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;

    Eigen::Index pair_count() const { return eigenvalues.size(); }
    Eigen::Index vertex_count() const { return eigenvectors.cols(); }
};

enum class SolverPath { Auto, Dense, Lanczos };

struct EigenSolverOptions {
    SolverPath path = SolverPath::Auto;
    /// Auto picks the dense path up to this many vertices.
    Eigen::Index dense_limit = 3000;
    /// Shift for shift-invert Lanczos; slightly negative keeps L - shift*C definite.
    double shift = -1e-6;
    /// Convergence: ||L y - lambda C y||_inf <= tolerance * max(1, lambda).
    double tolerance = 1e-10;
    int max_restarts = 200;
    std::uint64_t seed = 0x5eed;
};

inline constexpr double kNullEigenvalue = 1e-8;

namespace detail {

/// Flips each row so its largest-magnitude entry is positive. Magnitudes within
/// a relative 1e-8 of the maximum count as tied, and ties go to the lowest
/// index, so mirror-symmetric meshes get the same sign on every solver path.
inline void fix_signs(Eigen::MatrixXd& rows)
{
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        const double peak = rows.row(r).cwiseAbs().maxCoeff();
        Eigen::Index best = 0;
        while (std::abs(rows(r, best)) < peak * (1.0 - 1e-8))
            ++best;
        if (rows(r, best) < 0.0)
            rows.row(r) *= -1.0;
    }
}

inline void check_pair(const LaplacianPair& pair)
{
    if (pair.L.rows() == 0 || pair.L.rows() != pair.L.cols() || pair.C.size() != pair.L.rows())
        fail(ErrorCode::EmptyMesh, "Laplacian pair is empty or inconsistent");
    for (Eigen::Index i = 0; i < pair.C.size(); ++i)
        if (!(pair.C[i] > 0.0))
            fail(ErrorCode::SingularC, "C(" + std::to_string(i) + ") = " + std::to_string(pair.C[i]) + " is not positive");
}

/// Dense route: M = C^{-1/2} L C^{-1/2} is symmetric, so LAPACK dsyevr gives
/// exactly the requested index range; y = C^{-1/2} v is then C-orthonormal.
inline Spectrum solve_dense(const LaplacianPair& pair, Eigen::Index count)
{
    const Eigen::Index n = pair.size();
    const Eigen::VectorXd inv_sqrt = pair.C.array().rsqrt();
    Eigen::MatrixXd M = Eigen::MatrixXd(pair.L);
    M = inv_sqrt.asDiagonal() * M * inv_sqrt.asDiagonal();

    Eigen::VectorXd values(n);
    Eigen::MatrixXd vectors(n, count);
    std::vector<lapack_int> support(static_cast<std::size_t>(2 * std::max<Eigen::Index>(count, 1)));
    lapack_int found = 0;
    lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', static_cast<lapack_int>(n), M.data(), static_cast<lapack_int>(n),
                                     0.0, 0.0, 1, static_cast<lapack_int>(count), 0.0, &found, values.data(), vectors.data(),
                                     static_cast<lapack_int>(n), support.data());
    if (info != 0 || found != count)
        fail(ErrorCode::ConvergenceFailure, "dsyevr failed (info " + std::to_string(info) + ")");

    Spectrum spectrum;
    spectrum.eigenvalues = values.head(count);
    spectrum.eigenvectors = (inv_sqrt.asDiagonal() * vectors).transpose();
    return spectrum;
}

/// Shift-invert Lanczos in the C inner product with full reorthogonalization.
/// Converged Ritz pairs are locked and later runs start from a random vector
/// C-orthogonal to everything locked, which recovers the missing partners of
/// repeated eigenvalues (a single Krylov sequence only sees one direction per
/// eigenspace). The constant null vector is locked before the first run. The loop ends once `count` pairs are locked and a fresh run in
/// the deflated space finds nothing below the largest of them.
inline Spectrum solve_lanczos(const LaplacianPair& pair, Eigen::Index count, const EigenSolverOptions& options)
{
    const Eigen::Index n = pair.size();
    const Eigen::VectorXd& c = pair.C;

    SparseMatrix shifted = pair.L;
    for (Eigen::Index i = 0; i < n; ++i)
        shifted.coeffRef(i, i) -= options.shift * c[i];
    Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
    if (factor.info() != Eigen::Success)
        fail(ErrorCode::ConvergenceFailure, "factorization of L - shift * C failed");

    auto c_dot = [&c](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a.array() * c.array() * b.array()).sum(); };

    std::vector<Eigen::VectorXd> locked;
    std::vector<double> locked_values;
    std::mt19937_64 rng(options.seed);

    // L 1 = 0 exactly (zero row sums), so the constant vector is locked up front.
    // Left to the iteration it would be the dominant direction (theta = -1/shift)
    // and any residual of it in the deflated space would swamp later runs.
    {
        Eigen::VectorXd ones = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(c.sum()));
        locked_values.push_back(ones.dot(pair.L * ones));
        locked.push_back(std::move(ones));
    }

    auto project_out = [&](Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& basis) {
        for (const auto& b : basis)
            w -= c_dot(b, w) * b;
    };
    auto orthogonalize = [&](Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& basis) {
        project_out(w, basis);
        project_out(w, basis);
    };

    auto residual = [&](const Eigen::VectorXd& y, double lambda) {
        Eigen::VectorXd r = pair.L * y - lambda * (c.array() * y.array()).matrix();
        return r.lpNorm<Eigen::Infinity>();
    };

    Eigen::Index step_budget = std::max<Eigen::Index>(2 * count + 20, 40);

    for (int restart = 0; restart < options.max_restarts; ++restart) {
        const Eigen::Index free_dim = n - static_cast<Eigen::Index>(locked.size());
        if (free_dim <= 0)
            break;
        const Eigen::Index steps = std::min(free_dim, step_budget);

        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i)
            v[i] = standard_normal(rng);
        orthogonalize(v, locked);
        double norm = std::sqrt(c_dot(v, v));
        if (!(norm > 0.0))
            fail(ErrorCode::ConvergenceFailure, "start vector vanished after deflation");
        v /= norm;

        std::vector<Eigen::VectorXd> basis{v};
        std::vector<double> alpha, beta;
        for (Eigen::Index j = 0; j < steps; ++j) {
            Eigen::VectorXd w = factor.solve((c.array() * basis[j].array()).matrix());
            alpha.push_back(c_dot(basis[j], w));
            const double w_norm = std::sqrt(c_dot(w, w));
            // Both passes cover locked and basis vectors together: a single
            // pass against the basis re-imports locked directions, which the
            // normalization below amplifies once the Krylov space saturates.
            for (int pass = 0; pass < 2; ++pass) {
                project_out(w, locked);
                project_out(w, basis);
            }
            double b = std::sqrt(c_dot(w, w));
            if (j + 1 == steps || b <= 1e-10 * w_norm)
                break;
            beta.push_back(b);
            basis.push_back(w / b);
        }

        const auto m = static_cast<Eigen::Index>(alpha.size());
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            T(i, i) = alpha[i];
            if (i + 1 < m)
                T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(T);

        Eigen::MatrixXd V(n, m);
        for (Eigen::Index i = 0; i < m; ++i)
            V.col(i) = basis[i];

        // Largest theta = smallest lambda; walk down while Ritz pairs converge.
        std::vector<Eigen::VectorXd> found;
        std::vector<double> found_values;
        for (Eigen::Index idx = m - 1; idx >= 0; --idx) {
            const double theta = small.eigenvalues()[idx];
            if (!(theta > 0.0))
                break;
            const double lambda = options.shift + 1.0 / theta;
            Eigen::VectorXd y = V * small.eigenvectors().col(idx);
            orthogonalize(y, locked);
            orthogonalize(y, found);
            double ynorm = std::sqrt(c_dot(y, y));
            if (!(ynorm > 0.5))
                break;
            y /= ynorm;
            if (residual(y, lambda) > options.tolerance * std::max(1.0, std::abs(lambda)))
                break;
            found.push_back(std::move(y));
            found_values.push_back(lambda);
        }

        if (found.empty()) {
            step_budget = std::min<Eigen::Index>(2 * step_budget, n);
            continue;
        }
        if (static_cast<Eigen::Index>(locked.size()) >= count) {
            std::vector<double> sorted = locked_values;
            std::sort(sorted.begin(), sorted.end());
            const double kth = sorted[static_cast<std::size_t>(count - 1)];
            // The deflated space has nothing below the k-th locked value.
            if (found_values.front() >= kth - 1e-12 * std::max(1.0, std::abs(kth)))
                break;
        }
        for (std::size_t f = 0; f < found.size(); ++f) {
            locked.push_back(std::move(found[f]));
            locked_values.push_back(found_values[f]);
        }
        if (static_cast<Eigen::Index>(locked.size()) == n)
            break;
    }

    if (static_cast<Eigen::Index>(locked.size()) < count)
        fail(ErrorCode::ConvergenceFailure, "Lanczos locked only " + std::to_string(locked.size()) + " pairs");

    std::vector<std::size_t> order(locked.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return locked_values[a] < locked_values[b]; });

    Spectrum spectrum;
    spectrum.eigenvalues.resize(count);
    spectrum.eigenvectors.resize(count, n);
    for (Eigen::Index i = 0; i < count; ++i) {
        spectrum.eigenvalues[i] = locked_values[order[static_cast<std::size_t>(i)]];
        spectrum.eigenvectors.row(i) = locked[order[static_cast<std::size_t>(i)]].transpose();
    }
    return spectrum;
}

} // namespace detail

/// The k + 1 smallest eigenpairs (including the constant one) of L y = lambda C y,
/// ascending, with the sign convention applied. Throws MultiComponent when more
/// than one eigenvalue falls below 1e-8.
inline Spectrum solve_generalized_eigen(const LaplacianPair& pair, Eigen::Index k, const EigenSolverOptions& options = {})
{
    detail::check_pair(pair);
    const Eigen::Index n = pair.size();
    if (k < 0 || k + 1 > n)
        fail(ErrorCode::InsufficientSpectrum, "requested " + std::to_string(k + 1) + " eigenpairs from " + std::to_string(n) + " vertices");

    // Always look at one pair past the trivial one so disconnection is detected.
    const Eigen::Index count = std::min(n, std::max<Eigen::Index>(k + 1, 2));
    SolverPath path = options.path;
    if (path == SolverPath::Auto)
        path = n <= options.dense_limit ? SolverPath::Dense : SolverPath::Lanczos;

    Spectrum spectrum = path == SolverPath::Dense ? detail::solve_dense(pair, count) : detail::solve_lanczos(pair, count, options);

    if (count >= 2 && spectrum.eigenvalues[1] < kNullEigenvalue)
        fail(ErrorCode::MultiComponent, "more than one eigenvalue below 1e-8; the mesh is disconnected");

    spectrum.eigenvalues.conservativeResize(k + 1);
    spectrum.eigenvectors.conservativeResize(k + 1, n);
    detail::fix_signs(spectrum.eigenvectors);
    return spectrum;
}

} // namespace descforge
