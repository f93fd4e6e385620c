#include "gpumux/workload.hpp"

#include <stdexcept>

namespace gpumux {

namespace {

// SGEMM shapes from the throughput-comparison benchmarks plus im2col layer
// lists standing in for the two image-classification models used in the
// multi-replica latency and memory studies. The model lists follow the
// benchmark's compressed spatial convention (stage-2 activations at 16x16),
// which keeps per-layer problem sizes in the same regime as the measured
// intermediate convolution.
std::vector<WorkloadPreset> build_presets() {
  std::vector<WorkloadPreset> presets;

  presets.push_back({"rnn-matvec", {{512, 1, 512}}, 512.0 * 512 * 4, 0.05});
  presets.push_back({"resnet18-conv2_2", {{256, 128, 1152}}, 1152.0 * 128 * 4, 0.05});
  presets.push_back({"square-256", {{256, 256, 256}}, 256.0 * 256 * 4, 0.05});

  {
    WorkloadPreset p;
    p.name = "resnet50";
    p.weights_bytes = 102.4e6;
    p.slo_latency = 0.040;
    auto& l = p.layers;
    l.push_back({1024, 64, 147});  // 7x7 stem
    // Bottleneck stages: 1x1 reduce, 3x3, 1x1 expand; one downsample each.
    for (int i = 0; i < 3; ++i) {
      l.push_back({256, 64, 64});
      l.push_back({256, 64, 576});
      l.push_back({256, 256, 64});
    }
    l.push_back({256, 256, 64});
    for (int i = 0; i < 4; ++i) {
      l.push_back({64, 128, 256});
      l.push_back({64, 128, 1152});
      l.push_back({64, 512, 128});
    }
    l.push_back({64, 512, 256});
    for (int i = 0; i < 6; ++i) {
      l.push_back({16, 256, 512});
      l.push_back({16, 256, 2304});
      l.push_back({16, 1024, 256});
    }
    l.push_back({16, 1024, 512});
    for (int i = 0; i < 3; ++i) {
      l.push_back({4, 512, 1024});
      l.push_back({4, 512, 4608});
      l.push_back({4, 2048, 512});
    }
    l.push_back({4, 2048, 1024});
    l.push_back({1, 1000, 2048});  // classifier
    presets.push_back(std::move(p));
  }

  {
    WorkloadPreset p;
    p.name = "mobilenetv2";
    p.weights_bytes = 13.6e6;
    p.slo_latency = 0.020;
    auto& l = p.layers;
    l.push_back({1024, 32, 27});
    l.push_back({256, 96, 16});
    l.push_back({256, 96, 9});
    l.push_back({256, 24, 96});
    for (int i = 0; i < 2; ++i) {
      l.push_back({64, 144, 24});
      l.push_back({64, 144, 9});
      l.push_back({64, 32, 144});
    }
    for (int i = 0; i < 3; ++i) {
      l.push_back({16, 192, 32});
      l.push_back({16, 192, 9});
      l.push_back({16, 64, 192});
    }
    for (int i = 0; i < 2; ++i) {
      l.push_back({4, 384, 64});
      l.push_back({4, 384, 9});
      l.push_back({4, 96, 384});
    }
    for (int i = 0; i < 2; ++i) {
      l.push_back({4, 576, 96});
      l.push_back({4, 576, 9});
      l.push_back({4, 160, 576});
    }
    l.push_back({4, 960, 160});
    l.push_back({4, 960, 9});
    l.push_back({4, 320, 960});
    l.push_back({4, 1280, 320});
    l.push_back({1, 1000, 1280});
    presets.push_back(std::move(p));
  }

  return presets;
}

}  // namespace

const std::vector<WorkloadPreset>& all_presets() {
  static const std::vector<WorkloadPreset> presets = build_presets();
  return presets;
}

const WorkloadPreset* find_preset(std::string_view name) {
  for (const WorkloadPreset& p : all_presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::vector<Tenant> make_tenants(const WorkloadPreset& preset, int count,
                                 int concurrency) {
  if (count < 1) throw std::invalid_argument("tenant count must be >= 1");
  std::vector<Tenant> tenants;
  tenants.reserve(count);
  for (int i = 0; i < count; ++i) {
    Tenant t;
    t.tenant_id = "t" + std::to_string(i);
    t.layers = preset.layers;
    t.weights_bytes = preset.weights_bytes;
    t.slo_latency = preset.slo_latency;
    t.concurrency = concurrency;
    tenants.push_back(std::move(t));
  }
  return tenants;
}

}  // namespace gpumux
