#include "ussci/net/checkpoint.hpp"

#include <charconv>
#include <cstring>
#include <map>
#include <sstream>

#include "ussci/core/errors.hpp"
#include "ussci/core/stns.hpp"
#include "ussci/net/network.hpp"

namespace ussci {
namespace {

constexpr char kMagic[4] = {'S', 'C', 'K', 'P'};
constexpr std::size_t kPrefix = 16;

template <typename U>
void put_le(std::vector<std::byte>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

template <typename U>
U get_le(std::span<const std::byte> b, std::size_t at) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(std::to_integer<unsigned>(b[at + i])) << (8 * i);
  return v;
}

std::string join_shape(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out;
}

std::uint64_t parse_u64(const std::string& text, std::size_t offset) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw FormatError("checkpoint: bad integer '" + text + "'", offset);
  }
  return v;
}

void check_against_config(const Checkpoint& ck) {
  const ParamMap<float> expected = BstNetwork<float>(ck.config).init_params(0);
  for (const auto& [name, t] : expected) {
    auto it = ck.params.find(name);
    if (it == ck.params.end()) throw ShapeError("checkpoint: missing parameter '" + name + "'");
    if (it->second.shape() != t.shape()) {
      throw ShapeError("checkpoint: parameter '" + name + "' is " + shape_string(it->second.shape()) +
                       ", config expects " + shape_string(t.shape()));
    }
  }
  for (const auto& [name, t] : ck.params) {
    if (!expected.contains(name)) throw ShapeError("checkpoint: unexpected parameter '" + name + "'");
  }
}

}  // namespace

std::vector<std::byte> encode_checkpoint(const Checkpoint& ck) {
  std::ostringstream m;
  for (const auto& [k, v] : ck.config.to_kv()) m << k << '=' << v << '\n';
  m << "step=" << ck.step << '\n';
  m << "loss=";
  char buf[32];
  for (std::size_t i = 0; i < ck.loss_history.size(); ++i) {
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, ck.loss_history[i]);
    m << (i ? "," : "") << std::string_view(buf, static_cast<std::size_t>(end - buf));
  }
  m << '\n';
  for (const auto& [name, t] : ck.params) m << "param " << name << ' ' << join_shape(t.shape()) << '\n';
  const std::string manifest = m.str();

  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint32_t>(out, kCheckpointFormat);
  put_le<std::uint64_t>(out, manifest.size());
  for (char c : manifest) out.push_back(static_cast<std::byte>(c));
  for (const auto& [name, t] : ck.params) {
    const auto rec = encode_stns(AnyTensor{t});
    out.insert(out.end(), rec.begin(), rec.end());
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::byte> bytes) {
  if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: missing SCKP magic", 0);
  }
  const auto format = get_le<std::uint32_t>(bytes, 4);
  if (format != kCheckpointFormat) {
    throw FormatError("checkpoint: unsupported format " + std::to_string(format), 4);
  }
  const auto mlen = get_le<std::uint64_t>(bytes, 8);
  if (mlen > bytes.size() - kPrefix) throw FormatError("checkpoint: manifest runs past end of file", 8);
  const std::string manifest(reinterpret_cast<const char*>(bytes.data() + kPrefix), mlen);

  Checkpoint ck;
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::string>> params;
  std::istringstream in(manifest);
  std::string line;
  std::size_t at = kPrefix;
  while (std::getline(in, line)) {
    const std::size_t line_at = at;
    at += line.size() + 1;
    if (line.empty()) continue;
    if (line.rfind("param ", 0) == 0) {
      std::istringstream ls(line.substr(6));
      std::string name, shape;
      if (!(ls >> name >> shape)) throw FormatError("checkpoint: malformed param line", line_at);
      params.emplace_back(name, shape);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint: malformed manifest line '" + line + "'", line_at);
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "step") {
      ck.step = parse_u64(value, line_at);
    } else if (key == "loss") {
      std::size_t pos = 0;
      while (pos < value.size()) {
        std::size_t end = value.find(',', pos);
        if (end == std::string::npos) end = value.size();
        double v = 0;
        auto [p, ec] = std::from_chars(value.data() + pos, value.data() + end, v);
        if (ec != std::errc{} || p != value.data() + end) throw FormatError("checkpoint: bad loss value", line_at);
        ck.loss_history.push_back(v);
        pos = end + 1;
      }
    } else {
      kv[key] = value;
    }
  }
  try {
    ck.config = NetworkConfig::from_kv(kv);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what(), kPrefix);
  }

  std::size_t offset = kPrefix + mlen;
  for (const auto& [name, shape] : params) {
    std::size_t used = 0;
    AnyTensor t;
    try {
      t = decode_stns(bytes.subspan(offset), &used);
    } catch (const FormatError& e) {
      throw FormatError("checkpoint: parameter '" + name + "': " + e.what(), offset + e.offset());
    }
    if (join_shape(any_shape(t)) != shape) {
      throw FormatError("checkpoint: parameter '" + name + "' record does not match manifest shape " + shape, offset);
    }
    ck.params.emplace(name, as_tensor<float>(t));
    offset += used;
  }
  if (offset != bytes.size()) throw FormatError("checkpoint: trailing bytes", offset);
  check_against_config(ck);
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  check_against_config(ck);
  write_file_atomic(path, encode_checkpoint(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file_bytes(path)); }

}  // namespace ussci
