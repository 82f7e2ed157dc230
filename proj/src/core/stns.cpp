#include "ussci/core/stns.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

namespace ussci {
namespace {

static_assert(std::endian::native == std::endian::little, "STNS payload assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'T', 'N', 'S'};

template <typename T>
struct DtypeOf;
template <>
struct DtypeOf<float> {
  static constexpr const char* name = "f32";
};
template <>
struct DtypeOf<double> {
  static constexpr const char* name = "f64";
};
template <>
struct DtypeOf<std::uint8_t> {
  static constexpr const char* name = "u8";
};

void append(std::vector<std::byte>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::byte*>(p);
  out.insert(out.end(), b, b + n);
}

Shape parse_shape(const std::string& text, std::size_t offset) {
  Shape shape;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw FormatError("bad shape extent '" + item + "'", offset);
    }
    shape.push_back(std::stoull(item));
    if (shape.back() == 0) throw FormatError("zero shape extent", offset);
  }
  if (shape.empty()) throw FormatError("empty shape", offset);
  return shape;
}

template <typename T>
AnyTensor read_payload(Shape shape, std::span<const std::byte> bytes, std::size_t start) {
  const std::size_t n = shape_numel(shape);
  const std::size_t need = n * sizeof(T);
  if (bytes.size() - start < need) {
    throw FormatError("truncated payload: need " + std::to_string(need) + " bytes, have " +
                          std::to_string(bytes.size() - start),
                      bytes.size());
  }
  std::vector<T> data(n);
  std::memcpy(data.data(), bytes.data() + start, need);
  return Tensor<T>(std::move(shape), std::move(data));
}

}  // namespace

std::string dtype_name(const AnyTensor& t) {
  return std::visit([](const auto& x) { return std::string(DtypeOf<typename std::decay_t<decltype(x)>::value_type>::name); }, t);
}

const Shape& any_shape(const AnyTensor& t) {
  return std::visit([](const auto& x) -> const Shape& { return x.shape(); }, t);
}

std::vector<std::byte> encode_stns(const AnyTensor& any) {
  return std::visit(
      [](const auto& t) {
        using T = typename std::decay_t<decltype(t)>::value_type;
        std::string header = std::string("dtype=") + DtypeOf<T>::name + " shape=";
        for (std::size_t i = 0; i < t.rank(); ++i) {
          if (i) header += ",";
          header += std::to_string(t.dim(i));
        }
        std::vector<std::byte> out;
        out.reserve(8 + header.size() + t.size() * sizeof(T));
        append(out, kMagic, 4);
        const auto len = static_cast<std::uint32_t>(header.size());
        append(out, &len, 4);
        append(out, header.data(), header.size());
        append(out, t.data(), t.size() * sizeof(T));
        return out;
      },
      any);
}

AnyTensor decode_stns(std::span<const std::byte> bytes, std::size_t* consumed) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("missing STNS magic", 0);
  }
  if (bytes.size() < 8) throw FormatError("truncated header length", bytes.size());
  std::uint32_t len = 0;
  std::memcpy(&len, bytes.data() + 4, 4);
  if (bytes.size() - 8 < len) throw FormatError("truncated header text", bytes.size());
  const std::string header(reinterpret_cast<const char*>(bytes.data() + 8), len);

  std::string dtype;
  std::string shape_text;
  std::stringstream ss(header);
  std::string field;
  while (ss >> field) {
    if (field.rfind("dtype=", 0) == 0) {
      dtype = field.substr(6);
    } else if (field.rfind("shape=", 0) == 0) {
      shape_text = field.substr(6);
    } else {
      throw FormatError("unknown header field '" + field + "'", 8);
    }
  }
  if (dtype.empty() || shape_text.empty()) throw FormatError("header lacks dtype or shape", 8);
  Shape shape = parse_shape(shape_text, 8);
  const std::size_t start = 8 + len;

  AnyTensor out;
  std::size_t elem = 0;
  if (dtype == "f32") {
    out = read_payload<float>(std::move(shape), bytes, start);
    elem = 4;
  } else if (dtype == "f64") {
    out = read_payload<double>(std::move(shape), bytes, start);
    elem = 8;
  } else if (dtype == "u8") {
    out = read_payload<std::uint8_t>(std::move(shape), bytes, start);
    elem = 1;
  } else {
    throw FormatError("unknown dtype '" + dtype + "'", 8);
  }
  if (consumed) *consumed = start + shape_numel(any_shape(out)) * elem;
  return out;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<std::byte> buf(size);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!in) throw std::runtime_error("read failed on " + path.string());
  return buf;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed on " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_stns(const std::filesystem::path& path, const AnyTensor& t) {
  write_file_atomic(path, encode_stns(t));
}

AnyTensor read_stns(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  std::size_t used = 0;
  AnyTensor t = decode_stns(bytes, &used);
  if (used != bytes.size()) throw FormatError("trailing bytes after payload", used);
  return t;
}

}  // namespace ussci
