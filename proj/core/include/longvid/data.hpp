#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace longvid {

struct ClipInfo {
  std::string id;
  int64_t frames = 0;
  double fps = 30.0;
  int64_t height = 0;  // high-res height
  int64_t width = 0;
};

// Directory-per-clip store of 8-bit PNG frames at two aligned resolutions
// (low = prefiltered 4x downsample of high), plus a JSON manifest.
class ClipStore {
 public:
  static ClipStore create(const std::filesystem::path& root, double fps,
                          std::pair<int64_t, int64_t> low_res,
                          std::pair<int64_t, int64_t> high_res);
  static ClipStore open(const std::filesystem::path& root);

  // Quantizes to 8 bits, writes high and low PNG frames, records the clip.
  void append_clip(const std::string& id, const torch::Tensor& high_frames);

  // Frames [start, start+count) of a clip as [count, 3, h, w] in [-1, 1].
  torch::Tensor load_frames(int64_t clip, int64_t start, int64_t count,
                            bool low) const;

  const std::vector<ClipInfo>& clips() const { return clips_; }
  const std::filesystem::path& root() const { return root_; }
  double fps() const { return fps_; }
  std::pair<int64_t, int64_t> low_res() const { return low_res_; }
  std::pair<int64_t, int64_t> high_res() const { return high_res_; }
  int64_t total_frames() const;

 private:
  void save_manifest() const;

  std::filesystem::path root_;
  double fps_ = 30.0;
  std::pair<int64_t, int64_t> low_res_{0, 0};   // (h, w)
  std::pair<int64_t, int64_t> high_res_{0, 0};  // (h, w)
  std::vector<ClipInfo> clips_;
};

// [-1, 1] float <-> 8-bit conversions used for all frame files.
torch::Tensor bytes_to_unit(const torch::Tensor& u8);
torch::Tensor unit_to_bytes(const torch::Tensor& x);

// PNG round trip for one frame [3, H, W] in [-1, 1].
void write_png(const std::filesystem::path& path, const torch::Tensor& frame);
torch::Tensor read_png(const std::filesystem::path& path);

struct IngestOptions {
  double aspect = 16.0 / 9.0;  // target width / height
  std::pair<int64_t, int64_t> low_res{36, 64};
  std::pair<int64_t, int64_t> high_res{144, 256};
  int64_t min_frames = 128;
  double fps = 30.0;
};

// Decodes every video under source_dir, center-crops to the target aspect,
// Lanczos-resizes to the high resolution and stores both resolutions.
// Unreadable files are skipped with a warning; throws if nothing usable.
ClipStore ingest(const std::filesystem::path& source_dir,
                 const std::filesystem::path& out_root,
                 const IngestOptions& options);

// Uniform choice over eligible clips, then over valid start offsets.
torch::Tensor sample_clip(const ClipStore& store, int64_t frames,
                          torch::Generator& gen, bool low = true);

// Procedural dataset: a smoothly scrolling panorama with world-anchored
// sprites, so new content enters the frame at a constant rate.
struct SyntheticSceneSpec {
  uint64_t background_seed = 0;
  double scroll_velocity = 2.0;  // high-res pixels per frame
  double sprite_rate = 0.01;     // sprites per panorama column
  int64_t sprite_palette = 6;
  int64_t duration = 128;
};

ClipStore generate_synthetic(const SyntheticSceneSpec& spec, int64_t n_clips,
                             const std::filesystem::path& out_root,
                             std::pair<int64_t, int64_t> low_res = {32, 32},
                             std::pair<int64_t, int64_t> high_res = {128, 128});

// One rendered clip [T, 3, H, W] in [-1, 1], without touching disk.
torch::Tensor render_synthetic_clip(const SyntheticSceneSpec& spec,
                                    uint64_t clip_seed, int64_t frames,
                                    int64_t height, int64_t width);

}  // namespace longvid
