#pragma once

#include "descforge/correspondence.hpp"
#include "descforge/error.hpp"
#include "descforge/raster.hpp"

#include <algorithm>
#include <cmath>

namespace descforge {

struct ContrastiveLoss {
    double match_loss = 0.0;
    double nonmatch_loss = 0.0;
    double total = 0.0;
};

struct SupervisedLoss {
    double object_loss = 0.0;
    double background_loss = 0.0;
    double total = 0.0;
};

inline constexpr double kObjectMargin = 0.5;
inline constexpr double kBackgroundMargin = 2.5;

namespace detail {

inline double descriptor_distance(const DescriptorImage& a, const PixelCoord& pa, const DescriptorImage& b, const PixelCoord& pb)
{
    const Eigen::Vector2i ia = nearest_pixel(pa), ib = nearest_pixel(pb);
    if (!a.in_bounds(ia.x(), ia.y()) || !b.in_bounds(ib.x(), ib.y()))
        fail(ErrorCode::IndexOutOfRange, "correspondence pixel outside the image");
    const auto da = a.descriptor(ia.x(), ia.y()), db = b.descriptor(ib.x(), ib.y());
    double sq = 0.0;
    for (std::size_t c = 0; c < da.size(); ++c) {
        const double diff = static_cast<double>(da[c]) - static_cast<double>(db[c]);
        sq += diff * diff;
    }
    return std::sqrt(sq);
}

} // namespace detail

/// Pixelwise contrastive loss: mean squared match distance plus mean squared
/// hinge max(0, M - D) over all non-matches, with M chosen per pair type.
/// Pairs are evaluated at their nearest pixels.
inline ContrastiveLoss contrastive_loss(const DescriptorImage& desc_a, const DescriptorImage& desc_b, const CorrespondenceSet& set,
                                        double margin_object = kObjectMargin, double margin_background = kBackgroundMargin)
{
    if (desc_a.width != desc_b.width || desc_a.height != desc_b.height || desc_a.channels != desc_b.channels)
        fail(ErrorCode::ShapeMismatch, "descriptor images differ in shape");
    if (set.matches.empty() && set.non_match_count() == 0)
        fail(ErrorCode::EmptySet, "correspondence set is empty");
    ContrastiveLoss loss;
    for (const auto& m : set.matches) {
        const double d = detail::descriptor_distance(desc_a, m.a, desc_b, m.b);
        loss.match_loss += d * d;
    }
    if (!set.matches.empty())
        loss.match_loss /= static_cast<double>(set.matches.size());
    auto hinge = [&](const std::vector<PixelPair>& pairs, double margin) {
        double sum = 0.0;
        for (const auto& p : pairs) {
            const double h = std::max(0.0, margin - detail::descriptor_distance(desc_a, p.a, desc_b, p.b));
            sum += h * h;
        }
        return sum;
    };
    if (set.non_match_count() > 0)
        loss.nonmatch_loss = (hinge(set.non_matches_object, margin_object) + hinge(set.non_matches_background, margin_background)) /
                             static_cast<double>(set.non_match_count());
    loss.total = loss.match_loss + loss.nonmatch_loss;
    return loss;
}

/// Masked L2 loss with object and background terms each normalized by their
/// pixel count; an empty region contributes 0.
inline SupervisedLoss supervised_l2_loss(const DescriptorImage& pred, const DescriptorImage& target)
{
    if (pred.width != target.width || pred.height != target.height || pred.channels != target.channels)
        fail(ErrorCode::ShapeMismatch, "prediction and target differ in shape");
    if (target.mask.size() != target.pixel_count() || pred.descriptors.size() != target.descriptors.size())
        fail(ErrorCode::ShapeMismatch, "target mask or descriptor buffer has the wrong size");
    double object_sum = 0.0, background_sum = 0.0;
    std::size_t object_count = 0, background_count = 0;
    const std::size_t dims = static_cast<std::size_t>(target.channels);
    for (std::size_t p = 0; p < target.pixel_count(); ++p) {
        double sq = 0.0;
        for (std::size_t c = 0; c < dims; ++c) {
            const double diff = static_cast<double>(pred.descriptors[p * dims + c]) - static_cast<double>(target.descriptors[p * dims + c]);
            sq += diff * diff;
        }
        if (target.mask[p]) {
            object_sum += sq;
            ++object_count;
        } else {
            background_sum += sq;
            ++background_count;
        }
    }
    SupervisedLoss loss;
    loss.object_loss = object_count ? object_sum / static_cast<double>(object_count) : 0.0;
    loss.background_loss = background_count ? background_sum / static_cast<double>(background_count) : 0.0;
    loss.total = loss.object_loss + loss.background_loss;
    return loss;
}

} // namespace descforge
