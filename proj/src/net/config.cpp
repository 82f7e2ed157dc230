#include "ussci/net/config.hpp"

#include "ussci/core/kv.hpp"

#include <sstream>
#include <stdexcept>

namespace ussci {

void NetworkConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("NetworkConfig: " + msg); };
  if (channels == 0 || channels % 3 != 0) fail("channels must be a positive multiple of 3");
  if (branches.count() == 0) fail("at least one branch must be enabled");
  if (channels % branches.count() != 0) fail("channels must divide evenly across enabled branches");
  if (heads == 0 || branch_channels() % heads != 0) {
    fail("branch width " + std::to_string(branch_channels()) + " not divisible by heads " + std::to_string(heads));
  }
  if (blocks == 0) fail("blocks must be >= 1");
  if (frames == 0) fail("frames must be >= 1");
  if (height == 0 || width == 0 || height % 2 || width % 2) fail("H and W must be positive and even");
  if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) fail("leaky_slope must lie in (0,1)");
  if (stem() == 0) fail("stem width must be positive");
  const std::size_t fh = feature_height(), fw = feature_width();
  if (window == 0 || fh % window || fw % window) {
    fail("window " + std::to_string(window) + " must divide the " + std::to_string(fh) + "x" + std::to_string(fw) +
         " feature map");
  }
  if (grid == 0 || fh % grid || fw % grid) {
    fail("grid " + std::to_string(grid) + " must divide the " + std::to_string(fh) + "x" + std::to_string(fw) +
         " feature map");
  }
}

std::map<std::string, std::string> NetworkConfig::to_kv() const {
  std::ostringstream slope;
  slope.precision(17);
  slope << leaky_slope;
  return {{"channels", std::to_string(channels)},
          {"blocks", std::to_string(blocks)},
          {"window", std::to_string(window)},
          {"grid", std::to_string(grid)},
          {"heads", std::to_string(heads)},
          {"leaky_slope", slope.str()},
          {"lba", branches.lba ? "1" : "0"},
          {"gsa", branches.gsa ? "1" : "0"},
          {"gta", branches.gta ? "1" : "0"},
          {"frames", std::to_string(frames)},
          {"height", std::to_string(height)},
          {"width", std::to_string(width)},
          {"stem_channels", std::to_string(stem_channels)}};
}

NetworkConfig NetworkConfig::from_kv(const std::map<std::string, std::string>& kv) {
  NetworkConfig c;
  kv_read(kv, "channels", c.channels);
  kv_read(kv, "blocks", c.blocks);
  kv_read(kv, "window", c.window);
  kv_read(kv, "grid", c.grid);
  kv_read(kv, "heads", c.heads);
  kv_read(kv, "frames", c.frames);
  kv_read(kv, "height", c.height);
  kv_read(kv, "width", c.width);
  kv_read(kv, "stem_channels", c.stem_channels);
  kv_read(kv, "leaky_slope", c.leaky_slope);
  kv_read(kv, "lba", c.branches.lba);
  kv_read(kv, "gsa", c.branches.gsa);
  kv_read(kv, "gta", c.branches.gta);
  c.validate();
  return c;
}

NetworkConfig NetworkConfig::toy() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::tiny() {
  NetworkConfig c;
  c.channels = 6;
  c.blocks = 1;
  c.window = 2;
  c.grid = 2;
  c.heads = 1;
  c.frames = 2;
  c.height = 8;
  c.width = 8;
  return c;
}

NetworkConfig NetworkConfig::full_size() {
  NetworkConfig c;
  c.channels = 192;
  c.blocks = 4;
  c.window = 7;
  c.grid = 7;
  c.heads = 4;
  c.frames = 8;
  c.height = 224;
  c.width = 224;
  return c;
}

}  // namespace ussci
