#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ussci/sensing.hpp"

namespace ussci {

enum class Split { Train, Test };

struct ClipEntry {
  std::string name;
  std::filesystem::path directory;  // ordered *.png frames, sorted by file name
  Split split = Split::Train;
  std::size_t frames = 0;           // filled by scan_clip
  std::size_t height = 0;
  std::size_t width = 0;
};

struct DatasetManifest {
  std::vector<ClipEntry> clips;

  std::vector<ClipEntry> split(Split s) const;
};

/// One clip per line: "<name> <directory> <train|test>". Relative directories
/// resolve against the manifest's own directory; '#' starts a comment.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Lists the clip's PNG frames and checks that every frame has the same extents.
void scan_clip(ClipEntry& clip);
/// Loads all frames as a [F,H,W] cube in [0,1]. Rejects clips shorter than `min_frames`.
VideoCube<double> load_clip(const ClipEntry& clip, std::size_t min_frames = 1);

/// 8- or 16-bit grey, grey+alpha, RGB, RGBA or palette PNG to [H,W] in [0,1];
/// colour is reduced with Rec. 601 luma 0.299 R + 0.587 G + 0.114 B, alpha ignored.
Tensor<double> read_png_gray(const std::filesystem::path& path);
/// 8-bit greyscale PNG of an [H,W] image, values clipped to [0,1] and rounded.
void write_png_gray(const std::filesystem::path& path, const Tensor<double>& image);
/// Writes frame_000.png, frame_001.png, ... into `dir` (created if missing).
void write_png_frames(const std::filesystem::path& dir, const VideoCube<double>& video);

}  // namespace ussci
