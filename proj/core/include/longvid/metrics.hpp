#pragma once

#include <torch/torch.h>

#include <functional>
#include <memory>
#include <string>

namespace longvid {

// Normalized 3-D color histogram of one frame [3, H, W] in [-1, 1].
// Returns [n_bins^3] summing to 1.
torch::Tensor color_histogram(const torch::Tensor& frame, int64_t n_bins = 20);

// Histogram intersection between frame 0 and frame t of a clip [T, 3, H, W].
double color_similarity(const torch::Tensor& clip, int64_t t,
                        int64_t n_bins = 20);

struct CurveStats {
  torch::Tensor mean;  // [T]
  torch::Tensor std;   // [T]
};

// Per-separation mean/std of S(., t) over clips; get_clip(i) yields clip i.
CurveStats similarity_curve(
    const std::function<torch::Tensor(int64_t)>& get_clip, int64_t n_clips,
    int64_t n_bins = 20);

void write_curve_csv(const CurveStats& curve, const std::string& path);

struct FrechetStats {
  torch::Tensor mean;  // [d] float64
  torch::Tensor cov;   // [d, d] float64
  double weight_total = 0.0;
};

// Gaussian fit; optional per-row weights (unnormalized).
FrechetStats fit_stats(const torch::Tensor& features,
                       const torch::Tensor& weights = {});

// |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}), matrix root via
// eigendecomposition of Sa^{1/2} Sb Sa^{1/2}; small negative eigenvalues
// are clamped, ones below -1e-6 * lambda_max are an error.
double frechet_distance(const FrechetStats& a, const FrechetStats& b);

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual int64_t dim() const = 0;
  // segment: [T, 3, H, W] -> [dim]; per-frame extractors accept T = 1.
  virtual torch::Tensor extract(const torch::Tensor& segment) = 0;
};

// Seeded random-weight 3-D conv network; the built-in desk-scale stand-in
// for a pretrained video feature extractor.
std::unique_ptr<FeatureExtractor> make_random_video_extractor(
    uint64_t seed = 17, int64_t dim = 128);

// Per-frame 2-D counterpart used by FID_V and feature-distance curves.
std::unique_ptr<FeatureExtractor> make_random_frame_extractor(
    uint64_t seed = 17, int64_t dim = 128);

// Yields one random segment of the requested length.
using SegmentSource =
    std::function<torch::Tensor(int64_t segment_len, torch::Generator&)>;

// Frechet distance between feature distributions of n random segments from
// each source. Sampling is driven entirely by `seed`.
double fvd(const SegmentSource& real_source, const SegmentSource& gen_source,
           int64_t segment_len, int64_t n_segments,
           FeatureExtractor& extractor, uint64_t seed);

class ClipStore;

// Video-balanced per-frame FID: every real frame of clip c is weighted by
// 1/len(c) so each clip contributes total weight 1; the generated side is
// unweighted.
double fid_v(const ClipStore& real_store,
             const std::function<torch::Tensor(int64_t)>& gen_frame,
             int64_t n_gen_frames, FeatureExtractor& extractor,
             bool low_res = false);

// Mean feature distance between frame 0 and frame t over clips.
torch::Tensor feature_distance_curve(
    const std::function<torch::Tensor(int64_t)>& get_clip, int64_t n_clips,
    FeatureExtractor& extractor, int64_t t_max);

// Segment source over a clip store (low or high resolution frames).
SegmentSource store_segment_source(const ClipStore& store, bool low = true);

}  // namespace longvid
