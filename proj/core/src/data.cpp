#include "longvid/data.hpp"

#include <opencv2/opencv.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "longvid/resample.hpp"

namespace longvid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(int64_t index) {
  std::ostringstream os;
  os << std::setw(6) << std::setfill('0') << index << ".png";
  return os.str();
}

constexpr int kManifestVersion = 1;

}  // namespace

torch::Tensor bytes_to_unit(const torch::Tensor& u8) {
  return u8.to(torch::kFloat32) / 255.0 * 2.0 - 1.0;
}

torch::Tensor unit_to_bytes(const torch::Tensor& x) {
  auto v = ((x.clamp(-1.0, 1.0) + 1.0) / 2.0 * 255.0).round();
  return v.to(torch::kUInt8);
}

void write_png(const fs::path& path, const torch::Tensor& frame) {
  auto bytes = unit_to_bytes(frame).permute({1, 2, 0}).contiguous();  // HWC RGB
  cv::Mat rgb(static_cast<int>(bytes.size(0)), static_cast<int>(bytes.size(1)),
              CV_8UC3, bytes.data_ptr<uint8_t>());
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  if (!cv::imwrite(path.string(), bgr)) {
    throw std::runtime_error("write_png: failed to write " + path.string());
  }
}

torch::Tensor read_png(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) {
    throw std::runtime_error("read_png: failed to read " + path.string());
  }
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  auto u8 = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3}, torch::kUInt8)
                .clone()
                .permute({2, 0, 1});
  return bytes_to_unit(u8);
}

ClipStore ClipStore::create(const fs::path& root, double fps,
                            std::pair<int64_t, int64_t> low_res,
                            std::pair<int64_t, int64_t> high_res) {
  ClipStore store;
  store.root_ = root;
  store.fps_ = fps;
  store.low_res_ = low_res;
  store.high_res_ = high_res;
  fs::create_directories(root);
  store.save_manifest();
  return store;
}

ClipStore ClipStore::open(const fs::path& root) {
  std::ifstream in(root / "manifest.json");
  if (!in) {
    throw std::runtime_error("ClipStore: no manifest at " + root.string());
  }
  json m = json::parse(in);
  if (m.at("version").get<int>() != kManifestVersion) {
    throw std::runtime_error("ClipStore: unsupported manifest version");
  }
  ClipStore store;
  store.root_ = root;
  store.fps_ = m.at("fps").get<double>();
  store.low_res_ = {m.at("low_res")[0].get<int64_t>(),
                    m.at("low_res")[1].get<int64_t>()};
  store.high_res_ = {m.at("high_res")[0].get<int64_t>(),
                     m.at("high_res")[1].get<int64_t>()};
  for (const auto& c : m.at("clips")) {
    store.clips_.push_back({c.at("id").get<std::string>(),
                            c.at("frames").get<int64_t>(),
                            c.at("fps").get<double>(),
                            c.at("height").get<int64_t>(),
                            c.at("width").get<int64_t>()});
  }
  return store;
}

void ClipStore::save_manifest() const {
  json m;
  m["version"] = kManifestVersion;
  m["fps"] = fps_;
  m["low_res"] = {low_res_.first, low_res_.second};
  m["high_res"] = {high_res_.first, high_res_.second};
  m["clips"] = json::array();
  for (const auto& c : clips_) {
    m["clips"].push_back({{"id", c.id},
                          {"frames", c.frames},
                          {"fps", c.fps},
                          {"height", c.height},
                          {"width", c.width}});
  }
  std::ofstream out(root_ / "manifest.json");
  out << m.dump(2) << "\n";
}

void ClipStore::append_clip(const std::string& id,
                            const torch::Tensor& high_frames) {
  TORCH_CHECK(high_frames.dim() == 4 && high_frames.size(1) == 3,
              "append_clip: expected [T, 3, H, W]");
  TORCH_CHECK(high_frames.size(2) == high_res_.first &&
                  high_frames.size(3) == high_res_.second,
              "append_clip: frames do not match the store's high resolution");
  int64_t factor = high_res_.first / low_res_.first;
  TORCH_CHECK(low_res_.first * factor == high_res_.first &&
                  low_res_.second * factor == high_res_.second,
              "append_clip: resolutions are not an integer factor apart");

  fs::create_directories(root_ / id / "high");
  fs::create_directories(root_ / id / "low");
  // quantize high first so the stored pair stays self-consistent
  auto high_q = bytes_to_unit(unit_to_bytes(high_frames));
  auto low = prefiltered_downsample(high_q, factor);
  for (int64_t t = 0; t < high_frames.size(0); ++t) {
    write_png(root_ / id / "high" / frame_name(t), high_q[t]);
    write_png(root_ / id / "low" / frame_name(t), low[t]);
  }
  clips_.push_back({id, high_frames.size(0), fps_, high_res_.first,
                    high_res_.second});
  save_manifest();
}

torch::Tensor ClipStore::load_frames(int64_t clip, int64_t start,
                                     int64_t count, bool low) const {
  TORCH_CHECK(clip >= 0 && clip < static_cast<int64_t>(clips_.size()),
              "load_frames: clip index out of range");
  const auto& info = clips_[clip];
  TORCH_CHECK(start >= 0 && start + count <= info.frames,
              "load_frames: frame range outside the clip");
  std::vector<torch::Tensor> frames;
  frames.reserve(count);
  auto dir = root_ / info.id / (low ? "low" : "high");
  for (int64_t t = start; t < start + count; ++t) {
    frames.push_back(read_png(dir / frame_name(t)));
  }
  return torch::stack(frames, 0);
}

int64_t ClipStore::total_frames() const {
  int64_t n = 0;
  for (const auto& c : clips_) n += c.frames;
  return n;
}

ClipStore ingest(const fs::path& source_dir, const fs::path& out_root,
                 const IngestOptions& options) {
  auto store = ClipStore::create(out_root, options.fps, options.low_res,
                                 options.high_res);
  std::vector<fs::path> sources;
  for (const auto& entry : fs::recursive_directory_iterator(source_dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    if (ext == ".mp4" || ext == ".avi" || ext == ".mov" || ext == ".mkv" ||
        ext == ".webm") {
      sources.push_back(entry.path());
    }
  }
  std::sort(sources.begin(), sources.end());

  int64_t index = 0;
  for (const auto& src : sources) {
    cv::VideoCapture cap(src.string());
    if (!cap.isOpened()) {
      std::cerr << "ingest: skipping unreadable " << src << "\n";
      continue;
    }
    std::vector<torch::Tensor> frames;
    cv::Mat bgr;
    while (cap.read(bgr)) {
      int h = bgr.rows, w = bgr.cols;
      int crop_w = std::min<int>(w, static_cast<int>(std::lround(h * options.aspect)));
      int crop_h = std::min<int>(h, static_cast<int>(std::lround(w / options.aspect)));
      int x0 = (w - crop_w) / 2, y0 = (h - crop_h) / 2;
      cv::Mat cropped = bgr(cv::Rect(x0, y0, crop_w, crop_h));
      cv::Mat rgb;
      cv::cvtColor(cropped, rgb, cv::COLOR_BGR2RGB);
      auto u8 = torch::from_blob(rgb.data, {rgb.rows, rgb.cols, 3},
                                 torch::kUInt8)
                    .clone()
                    .permute({2, 0, 1});
      auto frame = lanczos3_resize(bytes_to_unit(u8), options.high_res.first,
                                   options.high_res.second);
      frames.push_back(frame.clamp(-1.0, 1.0));
    }
    if (static_cast<int64_t>(frames.size()) < options.min_frames) {
      if (frames.empty()) {
        std::cerr << "ingest: skipping undecodable " << src << "\n";
      } else {
        std::cerr << "ingest: dropping short clip " << src << " ("
                  << frames.size() << " frames)\n";
      }
      continue;
    }
    std::ostringstream id;
    id << "clip" << std::setw(4) << std::setfill('0') << index++;
    store.append_clip(id.str(), torch::stack(frames, 0));
  }
  if (store.clips().empty()) {
    throw std::runtime_error("ingest: no usable clips found under " +
                             source_dir.string());
  }
  return store;
}

torch::Tensor sample_clip(const ClipStore& store, int64_t frames,
                          torch::Generator& gen, bool low) {
  std::vector<int64_t> eligible;
  for (int64_t i = 0; i < static_cast<int64_t>(store.clips().size()); ++i) {
    if (store.clips()[i].frames >= frames) eligible.push_back(i);
  }
  TORCH_CHECK(!eligible.empty(), "sample_clip: no clip has ", frames,
              " frames");
  int64_t pick = eligible[torch::randint(0, static_cast<int64_t>(eligible.size()),
                                         {1}, gen, torch::kInt64)
                              .item<int64_t>()];
  int64_t max_start = store.clips()[pick].frames - frames;
  int64_t start =
      torch::randint(0, max_start + 1, {1}, gen, torch::kInt64).item<int64_t>();
  return store.load_frames(pick, start, frames, low);
}

torch::Tensor render_synthetic_clip(const SyntheticSceneSpec& spec,
                                    uint64_t clip_seed, int64_t frames,
                                    int64_t height, int64_t width) {
  auto gen = torch::make_generator<torch::CPUGeneratorImpl>(
      spec.background_seed * 0x9e3779b9ULL + clip_seed + 1);
  int64_t travel =
      static_cast<int64_t>(std::ceil(spec.scroll_velocity * frames));
  int64_t pan_w = width + travel + 1;

  // smooth panorama: coarse random field upsampled to full size
  int64_t coarse_h = std::max<int64_t>(2, height / 16);
  int64_t coarse_w = std::max<int64_t>(2, pan_w / 16);
  auto coarse = torch::randn({3, coarse_h, coarse_w}, gen, torch::kFloat32);
  auto pano = bilinear_resize(coarse, height, pan_w) * 0.6;
  // slow horizontal hue drift so distant columns differ in color
  auto xs = torch::arange(pan_w, torch::kFloat32) * (2.0 * M_PI / 800.0);
  pano[0] += 0.5 * torch::sin(xs).unsqueeze(0);
  pano[1] += 0.5 * torch::sin(xs * 0.7 + 2.0).unsqueeze(0);
  pano[2] += 0.5 * torch::sin(xs * 1.3 + 4.0).unsqueeze(0);

  // world-anchored sprites that scroll through the frame
  int64_t n_sprites = static_cast<int64_t>(spec.sprite_rate * pan_w);
  for (int64_t s = 0; s < n_sprites; ++s) {
    int64_t size = std::max<int64_t>(2, height / 8);
    int64_t sx = torch::randint(0, std::max<int64_t>(1, pan_w - size), {1},
                                gen, torch::kInt64)
                     .item<int64_t>();
    int64_t sy = torch::randint(0, std::max<int64_t>(1, height - size), {1},
                                gen, torch::kInt64)
                     .item<int64_t>();
    int64_t color_idx =
        torch::randint(0, std::max<int64_t>(1, spec.sprite_palette), {1}, gen,
                       torch::kInt64)
            .item<int64_t>();
    double hue = 2.0 * M_PI * color_idx /
                 std::max<int64_t>(1, spec.sprite_palette);
    auto color = torch::tensor({std::sin(hue), std::sin(hue + 2.094),
                                std::sin(hue + 4.189)},
                               torch::kFloat32);
    pano.slice(1, sy, sy + size).slice(2, sx, sx + size) =
        color.view({3, 1, 1});
  }
  pano = pano.clamp(-1.0, 1.0);

  auto clip = torch::empty({frames, 3, height, width}, torch::kFloat32);
  for (int64_t t = 0; t < frames; ++t) {
    int64_t x0 = static_cast<int64_t>(std::llround(spec.scroll_velocity * t));
    clip[t] = pano.slice(2, x0, x0 + width);
  }
  return clip;
}

ClipStore generate_synthetic(const SyntheticSceneSpec& spec, int64_t n_clips,
                             const fs::path& out_root,
                             std::pair<int64_t, int64_t> low_res,
                             std::pair<int64_t, int64_t> high_res) {
  auto store = ClipStore::create(out_root, 30.0, low_res, high_res);
  for (int64_t c = 0; c < n_clips; ++c) {
    auto clip = render_synthetic_clip(spec, static_cast<uint64_t>(c),
                                      spec.duration, high_res.first,
                                      high_res.second);
    std::ostringstream id;
    id << "synth" << std::setw(4) << std::setfill('0') << c;
    store.append_clip(id.str(), clip);
  }
  return store;
}

}  // namespace longvid
