#pragma once

#include "descforge/error.hpp"
#include "descforge/laplacian.hpp"
#include "descforge/spectrum.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace descforge {

/// Inclusive range [first, last] of spectrum indices treated as one eigenvalue.
struct IndexRange {
    Eigen::Index first = 1;
    Eigen::Index last = 1;

    Eigen::Index length() const { return last - first + 1; }
    bool operator==(const IndexRange&) const = default;
};

/// Partition of spectrum dimensions 1..k (the constant dimension 0 is excluded).
struct SymmetryGroups {
    std::vector<IndexRange> ranges;
    double epsilon = 1e-3;
};

enum class DimensionSource { Eigenvector, SymmetryGroup, ViewDependent };

inline std::string to_string(DimensionSource s)
{
    switch (s) {
    case DimensionSource::Eigenvector: return "eigenvector";
    case DimensionSource::SymmetryGroup: return "symmetry_group";
    case DimensionSource::ViewDependent: return "view_dependent";
    }
    return "unknown";
}

/// Per-vertex descriptors: row = descriptor dimension, column = vertex.
struct DescriptorField {
    Eigen::MatrixXd values;
    bool normalized = false;
    std::vector<DimensionSource> sources;
    /// Spectrum indices feeding each row (one for eigenvectors, several for groups).
    std::vector<IndexRange> spectral_ranges;
    std::optional<Eigen::VectorXd> background;

    Eigen::Index dimension() const { return values.rows(); }
    Eigen::Index vertex_count() const { return values.cols(); }
};

enum class SymmetryMode { Off, Gisif };

struct SymmetryOptions {
    SymmetryMode mode = SymmetryMode::Off;
    double epsilon = 1e-3;
    /// Cut the output to exactly D rows even if that splits a group. This breaks
    /// symmetry invariance for the split group.
    bool exact_dimension = false;
};

inline constexpr double kGroupFloor = 1e-12;

/// Greedy left-to-right grouping: dimension j joins the open group when
/// |lambda_j - lambda_start| <= epsilon * max(lambda_start, 1e-12).
inline SymmetryGroups detect_symmetry_groups(const Spectrum& spectrum, double epsilon = 1e-3)
{
    if (!(epsilon > 0.0))
        fail(ErrorCode::InvalidArgument, "epsilon must be positive");
    SymmetryGroups groups;
    groups.epsilon = epsilon;
    const Eigen::Index k = spectrum.pair_count() - 1;
    Eigen::Index start = 1;
    for (Eigen::Index j = 2; j <= k + 1; ++j) {
        const bool joins = j <= k &&
                           std::abs(spectrum.eigenvalues[j] - spectrum.eigenvalues[start]) <=
                               epsilon * std::max(spectrum.eigenvalues[start], kGroupFloor);
        if (!joins) {
            if (start <= k)
                groups.ranges.push_back({start, j - 1});
            start = j;
        }
    }
    return groups;
}

namespace detail {

/// Builds rows from the spectrum; returns nullopt when the last group consumed
/// touches the end of the spectrum and might continue past it.
inline std::optional<DescriptorField> embed_rows(const Spectrum& spectrum, Eigen::Index dimension, const SymmetryOptions& symmetry, bool spectrum_is_complete)
{
    const Eigen::Index k = spectrum.pair_count() - 1;
    DescriptorField field;
    std::vector<Eigen::RowVectorXd> rows;

    if (symmetry.mode == SymmetryMode::Off) {
        if (k < dimension)
            return std::nullopt;
        for (Eigen::Index d = 1; d <= dimension; ++d) {
            rows.push_back(spectrum.eigenvectors.row(d));
            field.sources.push_back(DimensionSource::Eigenvector);
            field.spectral_ranges.push_back({d, d});
        }
    } else {
        const SymmetryGroups groups = detect_symmetry_groups(spectrum, symmetry.epsilon);
        for (const auto& range : groups.ranges) {
            if (static_cast<Eigen::Index>(rows.size()) >= dimension)
                break;
            if (range.last == k && !spectrum_is_complete)
                return std::nullopt;
            if (range.length() == 1) {
                rows.push_back(spectrum.eigenvectors.row(range.first));
                field.sources.push_back(DimensionSource::Eigenvector);
            } else {
                rows.push_back(spectrum.eigenvectors.middleRows(range.first, range.length()).array().square().colwise().sum().matrix());
                field.sources.push_back(DimensionSource::SymmetryGroup);
            }
            field.spectral_ranges.push_back(range);
        }
        if (static_cast<Eigen::Index>(rows.size()) < dimension)
            return spectrum_is_complete ? std::optional<DescriptorField>(std::move(field)) : std::nullopt;
    }

    field.values.resize(static_cast<Eigen::Index>(rows.size()), spectrum.vertex_count());
    for (std::size_t r = 0; r < rows.size(); ++r)
        field.values.row(static_cast<Eigen::Index>(r)) = rows[r];
    return field;
}

} // namespace detail

/// Descriptor rows from an existing spectrum. With symmetry off, rows are
/// eigenvectors 1..D. With GISIF compression, groups are consumed in spectral
/// order: a singleton contributes its eigenvector, a larger group contributes the
/// element-wise sum of squares of its eigenvectors. Groups are never split.
/// Fewer than D rows is reported as InsufficientSpectrum.
inline DescriptorField embed_from_spectrum(const Spectrum& spectrum, Eigen::Index dimension, const SymmetryOptions& symmetry = {})
{
    if (dimension < 1)
        fail(ErrorCode::InvalidArgument, "descriptor dimension must be >= 1");
    const bool complete = spectrum.pair_count() == spectrum.vertex_count();
    auto field = detail::embed_rows(spectrum, dimension, symmetry, complete);
    if (!field || field->dimension() < dimension)
        fail(ErrorCode::InsufficientSpectrum, "spectrum with " + std::to_string(spectrum.pair_count()) + " pairs cannot supply " + std::to_string(dimension) + " rows");
    if (symmetry.exact_dimension && field->dimension() > dimension) {
        field->values.conservativeResize(dimension, Eigen::NoChange);
        field->sources.resize(static_cast<std::size_t>(dimension));
        field->spectral_ranges.resize(static_cast<std::size_t>(dimension));
    }
    return *field;
}

/// Solves the eigenproblem with as many pairs as the requested rows need. In
/// GISIF mode the pair count grows until the last consumed group is known to be
/// complete.
inline DescriptorField embed(const LaplacianPair& pair, Eigen::Index dimension, const SymmetryOptions& symmetry = {},
                             const EigenSolverOptions& solver = {}, Spectrum* spectrum_out = nullptr)
{
    if (dimension < 1)
        fail(ErrorCode::InvalidArgument, "descriptor dimension must be >= 1");
    const Eigen::Index n = pair.size();
    if (dimension + 1 > n)
        fail(ErrorCode::InsufficientSpectrum, "mesh with " + std::to_string(n) + " vertices cannot supply " + std::to_string(dimension) + " rows");

    Eigen::Index k = symmetry.mode == SymmetryMode::Off ? dimension : std::min(n - 1, 2 * dimension + 4);
    while (true) {
        Spectrum spectrum = solve_generalized_eigen(pair, k, solver);
        const bool complete = k + 1 == n;
        auto field = detail::embed_rows(spectrum, dimension, symmetry, complete);
        if (field) {
            if (field->dimension() < dimension)
                fail(ErrorCode::InsufficientSpectrum, "mesh cannot supply " + std::to_string(dimension) + " rows");
            if (symmetry.exact_dimension && field->dimension() > dimension) {
                field->values.conservativeResize(dimension, Eigen::NoChange);
                field->sources.resize(static_cast<std::size_t>(dimension));
                field->spectral_ranges.resize(static_cast<std::size_t>(dimension));
            }
            if (spectrum_out)
                *spectrum_out = std::move(spectrum);
            return std::move(*field);
        }
        k = std::min(n - 1, 2 * k);
    }
}

/// Per-dimension min-max scaling onto [0, 1]; every dimension attains 0 and 1.
inline DescriptorField normalize_descriptors(const DescriptorField& field)
{
    if (field.normalized)
        fail(ErrorCode::InvalidArgument, "field is already normalized");
    DescriptorField out = field;
    for (Eigen::Index d = 0; d < field.dimension(); ++d) {
        const double lo = field.values.row(d).minCoeff();
        const double hi = field.values.row(d).maxCoeff();
        if (!(hi - lo >= 1e-12))
            fail(ErrorCode::ConstantDimension, "dimension " + std::to_string(d) + " has range " + std::to_string(hi - lo));
        out.values.row(d) = (field.values.row(d).array() - lo) / (hi - lo);
    }
    out.normalized = true;
    out.background.reset();
    return out;
}

struct BackgroundResult {
    Eigen::VectorXd point;
    double distance = 0.0;
};

namespace detail {

/// Radical-inverse sequence in base `base`.
inline double radical_inverse(std::uint64_t index, std::uint64_t base)
{
    double inv = 1.0 / static_cast<double>(base), f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % base);
        index /= base;
        f *= inv;
    }
    return r;
}

inline constexpr std::array<std::uint64_t, 16> kPrimes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

inline double min_sq_distance(const Eigen::MatrixXd& points, const Eigen::VectorXd& c)
{
    return (points.colwise() - c).colwise().squaredNorm().minCoeff();
}

inline bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

} // namespace detail

inline constexpr int kHaltonSamples = 4096;
inline constexpr int kRefinementIterations = 20;

/// Approximate maximin point of the unit cube: the candidate c maximizing
/// min_i ||c - y_i||. Candidates are the 2^D corners plus a grid with
/// `grid_resolution` samples per axis (D <= 3) or 4096 Halton points (D > 3);
/// the best is refined coordinate-wise for 20 iterations with the step halving
/// from 1 / grid_resolution. Exact ties go to the lexicographically smallest.
inline BackgroundResult compute_background_descriptor(const DescriptorField& field, int grid_resolution = 9)
{
    if (!field.normalized)
        fail(ErrorCode::UnnormalizedField, "background needs a normalized field");
    if (grid_resolution < 2)
        fail(ErrorCode::InvalidArgument, "grid resolution must be >= 2");
    const Eigen::Index dim = field.dimension();
    if (dim > static_cast<Eigen::Index>(detail::kPrimes.size()))
        fail(ErrorCode::InvalidArgument, "background search supports at most 16 dimensions");

    const Eigen::MatrixXd& points = field.values;
    Eigen::VectorXd best;
    double best_sq = -1.0;
    auto consider = [&](const Eigen::VectorXd& c) {
        double sq = detail::min_sq_distance(points, c);
        if (sq > best_sq || (sq == best_sq && detail::lex_less(c, best))) {
            best_sq = sq;
            best = c;
        }
    };

    Eigen::VectorXd c(dim);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << dim); ++mask) {
        for (Eigen::Index d = 0; d < dim; ++d)
            c[d] = static_cast<double>((mask >> d) & 1u);
        consider(c);
    }
    if (dim <= 3) {
        std::uint64_t total = 1;
        for (Eigen::Index d = 0; d < dim; ++d)
            total *= static_cast<std::uint64_t>(grid_resolution);
        for (std::uint64_t idx = 0; idx < total; ++idx) {
            std::uint64_t rest = idx;
            for (Eigen::Index d = 0; d < dim; ++d) {
                c[d] = static_cast<double>(rest % static_cast<std::uint64_t>(grid_resolution)) / (grid_resolution - 1);
                rest /= static_cast<std::uint64_t>(grid_resolution);
            }
            consider(c);
        }
    } else {
        for (std::uint64_t s = 1; s <= kHaltonSamples; ++s) {
            for (Eigen::Index d = 0; d < dim; ++d)
                c[d] = detail::radical_inverse(s, detail::kPrimes[static_cast<std::size_t>(d)]);
            consider(c);
        }
    }

    double step = 1.0 / grid_resolution;
    for (int iter = 0; iter < kRefinementIterations; ++iter) {
        for (Eigen::Index d = 0; d < dim; ++d) {
            for (double sign : {-1.0, 1.0}) {
                Eigen::VectorXd trial = best;
                trial[d] = std::clamp(trial[d] + sign * step, 0.0, 1.0);
                double sq = detail::min_sq_distance(points, trial);
                if (sq > best_sq) {
                    best_sq = sq;
                    best = trial;
                }
            }
        }
        step *= 0.5;
    }
    return {best, std::sqrt(best_sq)};
}

/// Computes the background descriptor and stores it in the field.
inline Eigen::VectorXd background_descriptor(DescriptorField& field, int grid_resolution = 9)
{
    BackgroundResult result = compute_background_descriptor(field, grid_resolution);
    field.background = result.point;
    return result.point;
}

} // namespace descforge
