#include "ussci/pipeline/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ussci/core/errors.hpp"
#include "ussci/core/stns.hpp"

namespace fs = std::filesystem;

namespace ussci {

std::vector<ClipEntry> DatasetManifest::split(Split s) const {
  std::vector<ClipEntry> out;
  for (const auto& c : clips)
    if (c.split == s) out.push_back(c);
  return out;
}

DatasetManifest load_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  DatasetManifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string name, dir, split, extra;
    if (!(ls >> name)) continue;
    if (!(ls >> dir >> split) || (ls >> extra)) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) +
                                  ": expected '<name> <directory> <train|test>'");
    }
    ClipEntry c;
    c.name = name;
    c.directory = fs::path(dir).is_absolute() ? fs::path(dir) : path.parent_path() / dir;
    if (split == "train") {
      c.split = Split::Train;
    } else if (split == "test") {
      c.split = Split::Test;
    } else {
      throw std::invalid_argument(path.string() + ":" + std::to_string(number) + ": unknown split '" + split + "'");
    }
    scan_clip(c);
    m.clips.push_back(std::move(c));
  }
  if (m.clips.empty()) throw std::invalid_argument(path.string() + ": manifest lists no clips");
  return m;
}

namespace {

std::vector<fs::path> frame_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::invalid_argument("clip directory '" + dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (e.is_regular_file() && ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct PngInfo {
  std::size_t height = 0, width = 0;
};

struct ImageGuard {
  png_image* image;
  ~ImageGuard() { png_image_free(image); }
};

// 8-bit RGB through libpng's simplified API (grey is replicated, palettes and
// 16-bit samples are expanded/reduced by libpng), then Rec. 601 luma.
bool read_png(const fs::path& path, std::vector<double>* pixels, PngInfo& info, std::string& error) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  ImageGuard guard{&image};
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    error = image.message;
    return false;
  }
  info.height = image.height;
  info.width = image.width;
  if (!pixels) return true;
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    error = image.message;
    return false;
  }
  pixels->resize(info.height * info.width);
  for (std::size_t i = 0; i < pixels->size(); ++i) {
    const png_byte* p = buffer.data() + 3 * i;
    (*pixels)[i] = (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0;
  }
  return true;
}

}  // namespace

void scan_clip(ClipEntry& clip) {
  const auto files = frame_files(clip.directory);
  if (files.empty()) throw std::invalid_argument("clip '" + clip.name + "' has no PNG frames");
  clip.frames = files.size();
  clip.height = clip.width = 0;
  for (const auto& f : files) {
    PngInfo info;
    std::string err;
    if (!read_png(f, nullptr, info, err)) throw std::invalid_argument(f.string() + ": " + err);
    if (clip.height == 0) {
      clip.height = info.height;
      clip.width = info.width;
    } else if (info.height != clip.height || info.width != clip.width) {
      throw ShapeError("clip '" + clip.name + "': frame " + f.filename().string() + " is " +
                       std::to_string(info.height) + "x" + std::to_string(info.width) + ", expected " +
                       std::to_string(clip.height) + "x" + std::to_string(clip.width));
    }
  }
}

VideoCube<double> load_clip(const ClipEntry& clip, std::size_t min_frames) {
  const auto files = frame_files(clip.directory);
  if (files.size() < min_frames) {
    throw ShapeError("clip '" + clip.name + "' has " + std::to_string(files.size()) + " frames, need " +
                     std::to_string(min_frames));
  }
  VideoCube<double> out;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const Tensor<double> img = read_png_gray(files[i]);
    if (i == 0) out = VideoCube<double>(Shape{files.size(), img.dim(0), img.dim(1)});
    if (img.dim(0) != out.dim(1) || img.dim(1) != out.dim(2)) {
      throw ShapeError("clip '" + clip.name + "': frame " + files[i].filename().string() + " has different extents");
    }
    std::copy(img.values().begin(), img.values().end(), out.data() + i * img.size());
  }
  return out;
}

Tensor<double> read_png_gray(const fs::path& path) {
  std::vector<double> px;
  PngInfo info;
  std::string err;
  if (!read_png(path, &px, info, err)) throw std::invalid_argument(path.string() + ": " + err);
  return Tensor<double>(Shape{info.height, info.width}, std::move(px));
}

namespace {

bool write_png_file(const fs::path& path, const Tensor<double>& img, std::string& error) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.dim(1));
  image.height = static_cast<png_uint_32>(img.dim(0));
  image.format = PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(img.size());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    buffer[i] = static_cast<png_byte>(std::lround(std::clamp(img[i], 0.0, 1.0) * 255.0));
  }
  const bool ok = png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr);
  if (!ok) error = image.message;
  png_image_free(&image);
  return ok;
}

}  // namespace

void write_png_gray(const fs::path& path, const Tensor<double>& image) {
  if (image.rank() != 2) throw ShapeError("write_png_gray: expected [H,W], got " + shape_string(image.shape()));
  fs::path tmp = path;
  tmp += ".tmp";
  std::string err;
  if (!write_png_file(tmp, image, err)) {
    fs::remove(tmp);
    throw std::runtime_error(path.string() + ": " + (err.empty() ? "write failed" : err));
  }
  fs::rename(tmp, path);
}

void write_png_frames(const fs::path& dir, const VideoCube<double>& video) {
  if (video.rank() != 3) throw ShapeError("write_png_frames: expected [T,H,W]");
  fs::create_directories(dir);
  const std::size_t H = video.dim(1), W = video.dim(2);
  for (std::size_t t = 0; t < video.dim(0); ++t) {
    Tensor<double> frame(Shape{H, W});
    std::copy_n(video.data() + t * H * W, H * W, frame.data());
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03zu.png", t);
    write_png_gray(dir / name, frame);
  }
}

}  // namespace ussci
