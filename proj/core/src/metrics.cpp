#include "longvid/metrics.hpp"

#include <fstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "longvid/data.hpp"

namespace longvid {

torch::Tensor color_histogram(const torch::Tensor& frame, int64_t n_bins) {
  TORCH_CHECK(frame.dim() == 3 && frame.size(0) == 3,
              "color_histogram expects [3, H, W]");
  auto x = frame.to(torch::kFloat64);
  auto idx = ((x + 1.0) / 2.0 * static_cast<double>(n_bins))
                 .floor()
                 .clamp(0, n_bins - 1)
                 .to(torch::kInt64);
  auto flat = idx[0] * n_bins * n_bins + idx[1] * n_bins + idx[2];
  auto counts = torch::bincount(flat.flatten(), {}, n_bins * n_bins * n_bins);
  return counts.to(torch::kFloat64) / static_cast<double>(flat.numel());
}

double color_similarity(const torch::Tensor& clip, int64_t t, int64_t n_bins) {
  auto h0 = color_histogram(clip[0], n_bins);
  auto ht = color_histogram(clip[t], n_bins);
  return torch::minimum(h0, ht).sum().item<double>();
}

CurveStats similarity_curve(
    const std::function<torch::Tensor(int64_t)>& get_clip, int64_t n_clips,
    int64_t n_bins) {
  TORCH_CHECK(n_clips > 0, "similarity_curve needs at least one clip");
  std::vector<torch::Tensor> rows;
  rows.reserve(n_clips);
  for (int64_t c = 0; c < n_clips; ++c) {
    auto clip = get_clip(c);
    int64_t t_len = clip.size(0);
    auto h0 = color_histogram(clip[0], n_bins);
    auto row = torch::empty({t_len}, torch::kFloat64);
    row[0] = 1.0;
    for (int64_t t = 1; t < t_len; ++t) {
      auto ht = color_histogram(clip[t], n_bins);
      row[t] = torch::minimum(h0, ht).sum();
    }
    rows.push_back(row);
  }
  auto all = torch::stack(rows, 0);  // [n_clips, T]
  CurveStats out;
  out.mean = all.mean(0);
  out.std = n_clips > 1 ? all.std(0, /*unbiased=*/true)
                        : torch::zeros_like(out.mean);
  return out;
}

void write_curve_csv(const CurveStats& curve, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "t,mean,std\n";
  for (int64_t t = 0; t < curve.mean.size(0); ++t) {
    f << t << ',' << curve.mean[t].item<double>() << ','
      << curve.std[t].item<double>() << '\n';
  }
}

FrechetStats fit_stats(const torch::Tensor& features,
                       const torch::Tensor& weights) {
  TORCH_CHECK(features.dim() == 2, "fit_stats expects [n, d]");
  auto x = features.to(torch::kFloat64);
  torch::Tensor w;
  if (weights.defined()) {
    w = weights.to(torch::kFloat64);
    TORCH_CHECK(w.numel() == x.size(0), "weight count mismatch");
  } else {
    w = torch::ones({x.size(0)}, torch::kFloat64);
  }
  double total = w.sum().item<double>();
  TORCH_CHECK(total > 0.0, "fit_stats needs positive total weight");
  auto wn = (w / total).unsqueeze(1);  // [n, 1]
  FrechetStats s;
  s.mean = (x * wn).sum(0);
  auto centered = x - s.mean.unsqueeze(0);
  s.cov = centered.t().mm(centered * wn);
  s.weight_total = total;
  return s;
}

namespace {

// Symmetric PSD square root with a tolerance for tiny negative eigenvalues.
torch::Tensor psd_sqrt(const torch::Tensor& m) {
  auto sym = (m + m.t()) / 2.0;
  auto [vals, vecs] = torch::linalg_eigh(sym);
  double top = vals.max().item<double>();
  double floor = vals.min().item<double>();
  if (top > 0.0 && floor < -1e-6 * top) {
    throw std::invalid_argument("matrix is not PSD within tolerance");
  }
  auto root = vals.clamp_min(0.0).sqrt();
  return vecs.mm(torch::diag(root)).mm(vecs.t());
}

}  // namespace

double frechet_distance(const FrechetStats& a, const FrechetStats& b) {
  auto diff = a.mean - b.mean;
  auto ra = psd_sqrt(a.cov);
  auto inner = psd_sqrt(ra.mm(b.cov).mm(ra));
  double tr = (a.cov.trace() + b.cov.trace() - 2.0 * inner.trace())
                  .item<double>();
  return diff.dot(diff).item<double>() + tr;
}

namespace {

class RandomVideoExtractor : public FeatureExtractor {
 public:
  RandomVideoExtractor(uint64_t seed, int64_t dim) : dim_(dim) {
    torch::NoGradGuard ng;
    auto gen = torch::make_generator<torch::CPUGeneratorImpl>(seed);
    auto conv = [&](int64_t cin, int64_t cout,
                    std::array<int64_t, 3> stride) {
      auto layer = torch::nn::Conv3d(
          torch::nn::Conv3dOptions(cin, cout, 3)
              .stride({stride[0], stride[1], stride[2]})
              .padding(1));
      for (auto& p : layer->parameters()) {
        p.set_data(torch::randn(p.sizes(), gen) /
                   std::sqrt(static_cast<double>(p.numel() / p.size(0))));
      }
      return layer;
    };
    net_ = torch::nn::Sequential(
        conv(3, 32, {1, 2, 2}), torch::nn::LeakyReLU(
            torch::nn::LeakyReLUOptions().negative_slope(0.2)),
        conv(32, 64, {2, 2, 2}), torch::nn::LeakyReLU(
            torch::nn::LeakyReLUOptions().negative_slope(0.2)),
        conv(64, 128, {2, 2, 2}), torch::nn::LeakyReLU(
            torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    proj_ = torch::nn::Linear(128, dim);
    for (auto& p : proj_->parameters()) {
      p.set_data(torch::randn(p.sizes(), gen) / std::sqrt(128.0));
    }
    net_->eval();
    proj_->eval();
  }

  std::string name() const override { return "random-video"; }
  int64_t dim() const override { return dim_; }

  torch::Tensor extract(const torch::Tensor& segment) override {
    TORCH_CHECK(segment.dim() == 4 && segment.size(1) == 3,
                "extract expects [T, 3, H, W]");
    torch::NoGradGuard ng;
    auto x = segment.permute({1, 0, 2, 3}).unsqueeze(0);  // [1, 3, T, H, W]
    auto y = net_->forward(x);
    auto pooled = y.mean({2, 3, 4});  // [1, 128]
    return proj_->forward(pooled).squeeze(0);
  }

 private:
  int64_t dim_;
  torch::nn::Sequential net_ = nullptr;
  torch::nn::Linear proj_ = nullptr;
};

class RandomFrameExtractor : public FeatureExtractor {
 public:
  RandomFrameExtractor(uint64_t seed, int64_t dim) : dim_(dim) {
    torch::NoGradGuard ng;
    auto gen = torch::make_generator<torch::CPUGeneratorImpl>(seed);
    auto conv = [&](int64_t cin, int64_t cout) {
      auto layer = torch::nn::Conv2d(
          torch::nn::Conv2dOptions(cin, cout, 3).stride(2).padding(1));
      for (auto& p : layer->parameters()) {
        p.set_data(torch::randn(p.sizes(), gen) /
                   std::sqrt(static_cast<double>(p.numel() / p.size(0))));
      }
      return layer;
    };
    net_ = torch::nn::Sequential(
        conv(3, 32), torch::nn::LeakyReLU(
            torch::nn::LeakyReLUOptions().negative_slope(0.2)),
        conv(32, 64), torch::nn::LeakyReLU(
            torch::nn::LeakyReLUOptions().negative_slope(0.2)),
        conv(64, 128), torch::nn::LeakyReLU(
            torch::nn::LeakyReLUOptions().negative_slope(0.2)));
    proj_ = torch::nn::Linear(128, dim);
    for (auto& p : proj_->parameters()) {
      p.set_data(torch::randn(p.sizes(), gen) / std::sqrt(128.0));
    }
    net_->eval();
    proj_->eval();
  }

  std::string name() const override { return "random-frame"; }
  int64_t dim() const override { return dim_; }

  torch::Tensor extract(const torch::Tensor& segment) override {
    torch::NoGradGuard ng;
    auto x = segment.dim() == 3 ? segment.unsqueeze(0) : segment;
    TORCH_CHECK(x.size(1) == 3, "extract expects 3-channel frames");
    auto y = net_->forward(x).mean({2, 3});  // [T, 128]
    return proj_->forward(y).mean(0);
  }

 private:
  int64_t dim_;
  torch::nn::Sequential net_ = nullptr;
  torch::nn::Linear proj_ = nullptr;
};

}  // namespace

std::unique_ptr<FeatureExtractor> make_random_video_extractor(uint64_t seed,
                                                              int64_t dim) {
  return std::make_unique<RandomVideoExtractor>(seed, dim);
}

std::unique_ptr<FeatureExtractor> make_random_frame_extractor(uint64_t seed,
                                                              int64_t dim) {
  return std::make_unique<RandomFrameExtractor>(seed, dim);
}

double fvd(const SegmentSource& real_source, const SegmentSource& gen_source,
           int64_t segment_len, int64_t n_segments,
           FeatureExtractor& extractor, uint64_t seed) {
  auto rng = torch::make_generator<torch::CPUGeneratorImpl>(seed);
  auto collect = [&](const SegmentSource& src) {
    std::vector<torch::Tensor> feats;
    feats.reserve(n_segments);
    for (int64_t i = 0; i < n_segments; ++i) {
      feats.push_back(extractor.extract(src(segment_len, rng)));
    }
    return torch::stack(feats, 0);
  };
  auto real = fit_stats(collect(real_source));
  auto fake = fit_stats(collect(gen_source));
  return frechet_distance(real, fake);
}

double fid_v(const ClipStore& real_store,
             const std::function<torch::Tensor(int64_t)>& gen_frame,
             int64_t n_gen_frames, FeatureExtractor& extractor, bool low_res) {
  std::vector<torch::Tensor> real_feats;
  std::vector<double> weights;
  const auto& clips = real_store.clips();
  for (size_t c = 0; c < clips.size(); ++c) {
    int64_t len = clips[c].frames;
    auto frames = real_store.load_frames(static_cast<int64_t>(c), 0, len,
                                         low_res);
    for (int64_t t = 0; t < len; ++t) {
      real_feats.push_back(extractor.extract(frames[t]));
      weights.push_back(1.0 / static_cast<double>(len));
    }
  }
  auto real = fit_stats(
      torch::stack(real_feats, 0),
      torch::tensor(weights, torch::kFloat64));

  std::vector<torch::Tensor> gen_feats;
  gen_feats.reserve(n_gen_frames);
  for (int64_t i = 0; i < n_gen_frames; ++i) {
    gen_feats.push_back(extractor.extract(gen_frame(i)));
  }
  auto fake = fit_stats(torch::stack(gen_feats, 0));
  return frechet_distance(real, fake);
}

torch::Tensor feature_distance_curve(
    const std::function<torch::Tensor(int64_t)>& get_clip, int64_t n_clips,
    FeatureExtractor& extractor, int64_t t_max) {
  auto acc = torch::zeros({t_max}, torch::kFloat64);
  for (int64_t c = 0; c < n_clips; ++c) {
    auto clip = get_clip(c);
    auto f0 = extractor.extract(clip[0]).to(torch::kFloat64);
    for (int64_t t = 0; t < t_max; ++t) {
      auto ft = extractor.extract(clip[t]).to(torch::kFloat64);
      acc[t] += (ft - f0).norm();
    }
  }
  return acc / static_cast<double>(n_clips);
}

SegmentSource store_segment_source(const ClipStore& store, bool low) {
  return [&store, low](int64_t segment_len, torch::Generator& gen) {
    return sample_clip(store, segment_len, gen, low);
  };
}

}  // namespace longvid
