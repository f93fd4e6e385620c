#include <doctest.h>

#include <random>

#include "gpumux/cost_model.hpp"

using namespace gpumux;

namespace {

DeviceSpec test_device() {
  DeviceSpec d;
  d.peak_flops = 14e12;
  d.mem_bandwidth = 900e9;
  d.sm_count = 80;
  d.blocks_per_sm = 2;
  d.launch_overhead = 5e-6;
  d.tile_m = 64;
  d.tile_n = 64;
  return d;
}

}  // namespace

TEST_CASE("gemm_flops matches 2*M*N*K") {
  CHECK(gemm_flops({256, 128, 1152}) == 75497472);
  CHECK(gemm_flops({1, 1, 1}) == 2);
  CHECK(gemm_flops({512, 1, 512}) == 524288);
}

TEST_CASE("gemm_bytes counts all three operands") {
  CHECK(gemm_bytes({1, 1, 1}, 4) == 12);
  CHECK(gemm_bytes({256, 128, 1152}, 4) == 1900544);
  CHECK(gemm_bytes({512, 1, 512}, 4) == 1052672);
}

TEST_CASE("thread_blocks ceil-tiles the output grid") {
  const DeviceSpec d = test_device();
  CHECK(thread_blocks({256, 128, 1152}, d) == 8);
  CHECK(thread_blocks({64, 64, 999}, d) == 1);
  CHECK(thread_blocks({65, 64, 999}, d) == 2);
}

TEST_CASE("dispatch_duration: single small kernel runs at low occupancy") {
  const DeviceSpec d = test_device();
  const KernelCost c = dispatch_duration({256, 128, 1152}, d, 160, 1);
  CHECK(c.blocks == 8);
  CHECK(c.waves == 1);
  // efficiency 8/160 = 0.05 of peak
  const double expected_compute = 75497472.0 / (14e12 * 0.05);
  CHECK(c.duration == doctest::Approx(expected_compute + 5e-6).epsilon(1e-12));
}

TEST_CASE("dispatch_duration: a full wave does 20x the work in the same time") {
  const DeviceSpec d = test_device();
  const KernelCost one = dispatch_duration({256, 128, 1152}, d, 160, 1);
  const KernelGroup group{{256, 128, 1152}, 20};
  const KernelCost twenty =
      dispatch_duration(std::span<const KernelGroup>(&group, 1), d, 160, 1);
  CHECK(twenty.blocks == 160);
  CHECK(twenty.waves == 1);
  CHECK(twenty.flops == 20 * one.flops);
  CHECK((twenty.duration - 5e-6) ==
        doctest::Approx(one.duration - 5e-6).epsilon(1e-12));
}

TEST_CASE("dispatch_duration: exact slot fill gives efficiency 1") {
  const DeviceSpec d = test_device();
  const KernelGroup group{{64, 64, 64}, 160};  // 1 block each
  const KernelCost c =
      dispatch_duration(std::span<const KernelGroup>(&group, 1), d, 160, 1);
  CHECK(c.waves == 1);
  // compute side runs at full peak; this shape happens to be bandwidth-bound
  const double compute = static_cast<double>(c.flops) / 14e12;
  const double memory = static_cast<double>(c.bytes) / 900e9;
  CHECK(c.duration ==
        doctest::Approx(5e-6 + std::max(compute, memory)).epsilon(1e-12));
}

TEST_CASE("dispatch_duration rejects bad inputs") {
  const DeviceSpec d = test_device();
  CHECK_THROWS_WITH_AS(
      dispatch_duration(std::span<const KernelGroup>{}, d, 160, 1),
      "empty dispatch", std::invalid_argument);
  CHECK_THROWS_AS(dispatch_duration({1, 1, 1}, d, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(dispatch_duration({1, 1, 1}, d, 161, 1), std::invalid_argument);
}

TEST_CASE("duration always exceeds launch overhead") {
  const DeviceSpec d = test_device();
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const GemmShape s{static_cast<std::int64_t>(rng() % 512 + 1),
                      static_cast<std::int64_t>(rng() % 512 + 1),
                      static_cast<std::int64_t>(rng() % 512 + 1)};
    const std::int64_t launches = static_cast<std::int64_t>(rng() % 4 + 1);
    const KernelCost c = dispatch_duration(s, d, 160, launches);
    CHECK(c.duration > static_cast<double>(launches) * d.launch_overhead);
  }
}

TEST_CASE("wave quantization over replica count") {
  const DeviceSpec d = test_device();
  const GemmShape conv{256, 128, 1152};  // 8 blocks
  double prev_duration = 0;
  double prev_throughput = 0;
  for (std::int64_t r = 1; r <= 60; ++r) {
    const KernelGroup group{conv, r};
    const KernelCost c =
        dispatch_duration(std::span<const KernelGroup>(&group, 1), d, 160, 1);
    CHECK(c.waves == (r * 8 + 159) / 160);
    // duration non-decreasing in R (flat within a wave band, up to rounding)
    CHECK(c.duration >= prev_duration * (1.0 - 1e-12));
    prev_duration = c.duration;
    // efficiency == 1 exactly when R*8 is a multiple of 160
    const bool full = (r * 8) % 160 == 0;
    const double eff = static_cast<double>(c.blocks) /
                       static_cast<double>(c.waves * 160);
    if (full) {
      CHECK(eff == 1.0);
    } else {
      CHECK(eff < 1.0);
    }
    // throughput non-decreasing up to one wave, never above peak
    const double tput = static_cast<double>(c.flops) / c.duration;
    if (r <= 20) {
      CHECK(tput >= prev_throughput);
      prev_throughput = tput;
    }
    CHECK(tput < d.peak_flops);
  }
}

TEST_CASE("im2col lowering") {
  CHECK(im2col_gemm_dims({3, 3, 3, 3, 1, 1, 1, 0}) == GemmShape{1, 1, 9});
  // 3x3 kernel over 128 input channels gives the benchmark K
  CHECK(im2col_gemm_dims({16, 16, 3, 3, 128, 128, 1, 1}).k == 1152);
  CHECK(im2col_gemm_dims({16, 16, 3, 3, 128, 128, 1, 1}) ==
        GemmShape{256, 128, 1152});
  CHECK_THROWS_AS(im2col_gemm_dims({2, 2, 5, 5, 1, 1, 1, 0}),
                  std::invalid_argument);
}

TEST_CASE("batch_inputs scales the row dimension") {
  CHECK(batch_inputs({256, 128, 1152}, 1) == GemmShape{256, 128, 1152});
  CHECK(batch_inputs({256, 128, 1152}, 26) == GemmShape{6656, 128, 1152});
  CHECK(batch_inputs({1, 1, 1}, 4) == GemmShape{4, 1, 1});
}

TEST_CASE("flops are exactly linear under batching") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const GemmShape s{static_cast<std::int64_t>(rng() % 300 + 1),
                      static_cast<std::int64_t>(rng() % 300 + 1),
                      static_cast<std::int64_t>(rng() % 300 + 1)};
    const std::int64_t b = static_cast<std::int64_t>(rng() % 40 + 1);
    CHECK(gemm_flops(batch_inputs(s, b)) == b * gemm_flops(s));
  }
}

TEST_CASE("memory footprint: context wall and shared scaling") {
  DeviceSpec d = test_device();
  d.process_context_bytes = 800e6;
  d.mem_capacity = 16e9;
  Tenant t;
  t.layers = {{256, 128, 1152}};
  t.weights_bytes = 102.4e6;

  std::vector<Tenant> eighteen(18, t);
  const double process =
      memory_footprint(eighteen, SharingMode::kProcessPerTenant, d);
  CHECK(process == doctest::Approx(18 * (800e6 + 102.4e6)));
  CHECK(process > d.mem_capacity);

  std::vector<Tenant> sixty(60, t);
  const double shared = memory_footprint(sixty, SharingMode::kSharedContext, d);
  CHECK(shared == doctest::Approx(800e6 + 60 * 102.4e6));
  CHECK(shared < d.mem_capacity);

  CHECK(memory_footprint({}, SharingMode::kSharedContext, d) ==
        doctest::Approx(800e6));
}

TEST_CASE("process footprint dominates shared for 2+ tenants") {
  DeviceSpec d = test_device();
  d.process_context_bytes = 800e6;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    Tenant t;
    t.layers = {{8, 8, 8}};
    t.weights_bytes = static_cast<double>(rng() % 1000000);
    std::vector<Tenant> tenants(2 + rng() % 30, t);
    const double process =
        memory_footprint(tenants, SharingMode::kProcessPerTenant, d);
    const double shared =
        memory_footprint(tenants, SharingMode::kSharedContext, d);
    CHECK(process > shared);
  }
}
