#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "tri/image.hpp"

namespace tri {

/// Serialized value for an infinite PSNR (identical images).
inline constexpr double kPsnrCap = 99.0;

inline double capped_psnr(double db) { return db > kPsnrCap ? kPsnrCap : db; }

/// 10 log10(peak^2 / MSE) over all channels of the masked pixels. Returns
/// +infinity when the images agree exactly. Throws DomainError on shape
/// mismatch or an empty mask.
double psnr(const Image& a, const Image& b, const Mask* mask = nullptr, double peak = 1.0);

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

/// Mean SSIM over all fully-inside windows (and, with a mask, only windows
/// whose pixels are all valid), averaged over channels.
double ssim(const Image& a, const Image& b, const Mask* mask = nullptr, const SsimOptions& opt = {});

struct DepthPair {
    Image prediction;   // 1 channel
    Image ground_truth; // 1 channel
    Mask valid;         // empty = all pixels valid
};

struct DepthErrors {
    double l1 = 0;
    double rmse = 0;
    std::size_t n_pixels = 0;
    double scale = 0; // fitted a in a * pred + b
    double shift = 0;
};

/// Ground truth is min-max normalized to [0, 1] over valid pixels, then
/// a * pred + b is least-squares fitted to it and the residuals reported.
/// A constant prediction fits a = 0, b = mean(gt). Residuals within float32
/// rounding of the inputs count as zero.
DepthErrors depth_si_errors(const DepthPair& pair);

struct Point2 {
    double x = 0;
    double y = 0;
};

/// p -> R p + t with R a proper rotation.
struct SimilarityTransform2D {
    std::array<std::array<double, 2>, 2> rotation{{{1, 0}, {0, 1}}};
    double tx = 0;
    double ty = 0;

    static SimilarityTransform2D from_angle(double theta, double tx, double ty);
    /// Rotation by theta about `center`, followed by a translation.
    static SimilarityTransform2D about(Point2 center, double theta, double dx, double dy);

    double angle() const;
    Point2 apply(Point2 p) const;
    SimilarityTransform2D inverse() const;
};

/// Rotation + translation minimizing sum |R src_i + t - dst_i|^2.
/// Throws DomainError for fewer than 2 points, mismatched sizes, or
/// coincident point sets.
SimilarityTransform2D procrustes_2d(std::span<const Point2> src, std::span<const Point2> dst);

struct Warped {
    Image image;
    Mask coverage; // false where the source position fell outside the input
};

/// out(q) = img(T^-1 q), bilinear; pixel centres at integer coordinates.
/// Out-of-bounds pixels are black and excluded from the coverage mask.
Warped warp_image(const Image& img, const SimilarityTransform2D& t);

/// Zeroes every channel of pixels where the mask is false.
Image black_out(const Image& img, const Mask& keep);

struct MisalignmentOffset {
    double dx = 0;
    double dy = 0;
    double dtheta_deg = 0;
};

struct SweepRow {
    MisalignmentOffset offset;
    double raw_psnr = 0;
    double raw_ssim = 0;
    double aligned_psnr = 0;
    double aligned_ssim = 0;
    SimilarityTransform2D recovered;
};

/// n x n landmark lattice spanning the central 80% of a w x h image.
std::vector<Point2> landmark_lattice(int width, int height, int n = 5);

/// Warps `reference` by each offset, scores it against the reference, then
/// realigns it with Procrustes on the landmark lattice and scores again.
std::vector<SweepRow> misalignment_sweep(const Image& reference, std::span<const MisalignmentOffset> offsets);

struct AlignedPair {
    Image reference;
    Image aligned;
    SimilarityTransform2D transform;
    std::size_t covered = 0;
};

/// Aligns `moving` onto `reference` from landmark correspondences; pixels
/// outside the warp's coverage are blacked out in both images.
AlignedPair align_to_reference(const Image& reference, const Image& moving, std::span<const Point2> moving_landmarks,
                               std::span<const Point2> reference_landmarks);

struct MetricReport {
    std::optional<double> psnr_db;
    std::optional<double> ssim;
    std::optional<double> depth_l1;
    std::optional<double> depth_rmse;
    std::size_t n_pixels = 0;
    bool aligned = false;
    std::optional<SimilarityTransform2D> transform;

    /// Keys: psnr_db, ssim, depth_l1, depth_rmse, n_pixels, aligned,
    /// transform {theta_deg, tx, ty} or null. PSNR is capped at 99 dB.
    nlohmann::json to_json() const;
};

} // namespace tri
