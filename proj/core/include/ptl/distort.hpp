#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ptl/homography.hpp"
#include "ptl/image_tensor.hpp"
#include "ptl/random.hpp"
#include "ptl/sampling.hpp"

namespace ptl {

struct DistortConfig {
    double rho = 0.15;           // max corner displacement, fraction of min(H, W)
    double keep_fraction = 0.0;  // fraction of images left unmodified
    std::uint64_t seed = 0;
};

inline constexpr int kMaxDistortAttempts = 100;

// Corner-perturbation homography: each image corner moves by an independent
// uniform offset in [-rho*min(H,W), rho*min(H,W)]^2. Samples with collinear
// corners or a non-positive omega anywhere on the image are redrawn.
Homography random_homography(const DistortConfig& cfg, std::size_t width, std::size_t height, Rng& rng);

// Single-TM gather warp: out(p) = in(h(p)), zero outside the input.
ImageTensor warp_image(const ImageTensor& input, const Homography& h, KernelSpec kernel = KernelSpec::bilinear());

struct ManifestEntry {
    std::size_t index = 0;
    bool transformed = false;
    Homography homography = Homography::identity();
};

struct DistortedCorpus {
    std::vector<ImageTensor> images;
    std::vector<ManifestEntry> manifest;
};

// Number of images kept unmodified: ceil(keep_fraction * n).
std::size_t unmodified_count(double keep_fraction, std::size_t n);

DistortedCorpus distort_corpus(std::span<const ImageTensor> images, const DistortConfig& cfg);

// Header "index,transformed,t11,t12,t13,t21,t22,t23,t31,t32".
std::string manifest_csv(std::span<const ManifestEntry> manifest);
std::vector<ManifestEntry> parse_manifest_csv(const std::string& text);

}  // namespace ptl
