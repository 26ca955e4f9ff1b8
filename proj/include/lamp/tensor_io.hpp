#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "lamp/tensor.hpp"

namespace lamp {

/// Raw tensor file: 7 magic bytes "LTNSR1\0", u32 LE rank, rank x u32 LE
/// dims, then float64 LE payload in row-major order.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
};

inline constexpr char kTensorMagic[7] = {'L', 'T', 'N', 'S', 'R', '1', '\0'};

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

/// Images are stored as rank-3 (channels, height, width) tensors. Reading
/// also accepts rank 2 (height, width) and rank 1 (length) as one channel.
Tensor to_tensor(const Image& img);
void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);

/// 8-bit binary PGM (1 channel) or PPM (3 channels), values clamped to [0,1].
void write_pnm(const std::filesystem::path& path, const Image& img);

}  // namespace lamp
