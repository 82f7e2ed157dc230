#pragma once

// STNS tensor container:
//   bytes 0..3   "STNS"
//   bytes 4..7   header length N, u32 little-endian
//   next N bytes UTF-8 header "dtype=<f32|f64|u8> shape=<e0>,<e1>,..."
//   payload      row-major values, little-endian

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ussci/core/tensor.hpp"

namespace ussci {

using AnyTensor = std::variant<Tensor<float>, Tensor<double>, Tensor<std::uint8_t>>;

std::string dtype_name(const AnyTensor& t);
const Shape& any_shape(const AnyTensor& t);

std::vector<std::byte> encode_stns(const AnyTensor& t);

/// Decodes one record starting at `bytes[0]`; `consumed` receives its total length.
AnyTensor decode_stns(std::span<const std::byte> bytes, std::size_t* consumed = nullptr);

void write_stns(const std::filesystem::path& path, const AnyTensor& t);
AnyTensor read_stns(const std::filesystem::path& path);

/// Reads any stored dtype and widens/narrows to T.
template <typename T>
Tensor<T> as_tensor(const AnyTensor& any) {
  return std::visit([](const auto& t) { return t.template cast<T>(); }, any);
}

// Whole-file helpers shared by every writer. Writes go to a sibling temp file
// that is renamed into place, so a failed write never leaves a partial target.
std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace ussci
