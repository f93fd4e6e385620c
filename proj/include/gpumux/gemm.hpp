#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>

namespace gpumux {

// Problem dimensions of one SGEMM kernel: C[m,n] += A[m,k] * B[k,n].
struct GemmShape {
  std::int64_t m = 1;
  std::int64_t n = 1;
  std::int64_t k = 1;

  bool valid() const { return m >= 1 && n >= 1 && k >= 1; }
  bool operator==(const GemmShape&) const = default;
  auto operator<=>(const GemmShape&) const = default;
};

// A convolution layer before im2col lowering.
struct ConvSpec {
  std::int64_t image_h = 1;
  std::int64_t image_w = 1;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
};

inline std::int64_t gemm_flops(const GemmShape& s) {
  return 2 * s.m * s.n * s.k;
}

// Operand traffic: A + B + C, no cache reuse modeled.
inline std::int64_t gemm_bytes(const GemmShape& s, std::int64_t element_size = 4) {
  return element_size * (s.m * s.k + s.k * s.n + s.m * s.n);
}

// Lower a convolution to its im2col GEMM: rows are output positions, columns
// are output channels, the inner dimension is the unrolled filter patch.
inline GemmShape im2col_gemm_dims(const ConvSpec& c) {
  const std::int64_t out_h = (c.image_h + 2 * c.padding - c.kernel_h) / c.stride + 1;
  const std::int64_t out_w = (c.image_w + 2 * c.padding - c.kernel_w) / c.stride + 1;
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("im2col: non-positive output dims");
  }
  return GemmShape{out_h * out_w, c.out_channels, c.kernel_h * c.kernel_w * c.in_channels};
}

// Input batching multiplies the im2col row dimension.
inline GemmShape batch_inputs(const GemmShape& s, std::int64_t batch) {
  return GemmShape{s.m * batch, s.n, s.k};
}

inline std::string shape_key(const GemmShape& s) {
  return std::to_string(s.m) + "x" + std::to_string(s.n) + "x" + std::to_string(s.k);
}

}  // namespace gpumux
