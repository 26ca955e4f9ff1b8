#include "lamp/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "lamp/errors.hpp"

namespace lamp {
namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw std::runtime_error("tensor file truncated");
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  std::size_t n = 1;
  for (auto d : t.dims) n *= d;
  if (n != t.data.size()) throw ShapeError("write_tensor: dims do not match payload length");
  os.write(kTensorMagic, sizeof(kTensorMagic));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_le<std::uint32_t>(os, d);
  for (double v : t.data) put_le<double>(os, v);
  if (!os) throw std::runtime_error("write_tensor: stream error");
}

Tensor read_tensor(std::istream& is) {
  char magic[sizeof(kTensorMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kTensorMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("not a tensor file (bad magic)");
  }
  Tensor t;
  const auto rank = get_le<std::uint32_t>(is);
  if (rank > 16) throw std::runtime_error("tensor rank " + std::to_string(rank) + " too large");
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims.push_back(get_le<std::uint32_t>(is));
    n *= t.dims.back();
  }
  t.data.resize(n);
  for (auto& v : t.data) v = get_le<double>(is);
  return t;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_tensor(os, t);
}

Tensor read_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_tensor(is);
}

Tensor to_tensor(const Image& img) {
  const Shape& s = img.shape();
  return Tensor{{static_cast<std::uint32_t>(s.channels), static_cast<std::uint32_t>(s.height),
                 static_cast<std::uint32_t>(s.width)},
                img.vec()};
}

void write_image(const std::filesystem::path& path, const Image& img) {
  write_tensor(path, to_tensor(img));
}

Image read_image(const std::filesystem::path& path) {
  Tensor t = read_tensor(path);
  Shape s;
  switch (t.dims.size()) {
    case 1: s = Shape{1, 1, t.dims[0]}; break;
    case 2: s = Shape{1, t.dims[0], t.dims[1]}; break;
    case 3: s = Shape{t.dims[0], t.dims[1], t.dims[2]}; break;
    default: throw ShapeError(path.string() + ": expected a tensor of rank 1-3");
  }
  return Image(s, std::move(t.data));
}

void write_pnm(const std::filesystem::path& path, const Image& img) {
  const Shape& s = img.shape();
  if (s.channels != 1 && s.channels != 3) throw ShapeError("write_pnm: need 1 or 3 channels");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << (s.channels == 1 ? "P5" : "P6") << "\n" << s.width << " " << s.height << "\n255\n";
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      for (std::size_t c = 0; c < s.channels; ++c) {
        const double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        os.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
}

}  // namespace lamp
