#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "pseudoflow/flow_field.hpp"
#include "pseudoflow/ops.hpp"
#include "pseudoflow/rng.hpp"

namespace pseudoflow {

enum class FlowMode { full, translation_only, scaling_only, wrong_pair };

struct FlowSpec {
  FlowMode mode = FlowMode::full;
  double sigma_m = 8.0;   // motion grid std, pixels
  double sigma_s = 10.0;  // constant shift std, pixels
  int block = 100;        // grid cell size, pixels
  int filter = 100;       // box filter size, pixels
  double scale_sigma = 0.05;
  int reference_resolution = 256;
  bool auto_scale = true;

  void validate() const;
};

enum class NoiseSharing { independent, shared, off };

struct NoiseSpec {
  bool enabled = true;
  double sigma_low = 0.01;
  double sigma_high = 0.02;
  NoiseSharing sharing = NoiseSharing::independent;

  bool active() const { return enabled && sharing != NoiseSharing::off; }
  void validate() const;
};

// Multiplies block/filter/sigmas by min(width,height)/reference_resolution;
// block and filter round to integers and clamp to >= 1.
FlowSpec scale_spec(const FlowSpec& spec, int width, int height);

FlowField synthesize_flow(const FlowSpec& spec, int width, int height, std::uint64_t seed);

// The flow used to warp real frames and the one used to warp translated
// frames. They are the same object except in wrong_pair mode, which draws
// two independent fields to mismatch motion across domains on purpose.
struct FlowDraw {
  std::shared_ptr<const FlowField> real;
  std::shared_ptr<const FlowField> translated;
  bool wrong_pair = false;

  bool matched() const { return real == translated; }
};

FlowDraw synthesize_flow_draw(const FlowSpec& spec, int width, int height, std::uint64_t seed);

// W(x, f) = warp(x, f) + gaussian noise, clamped to [-1, 1]. With noise
// inactive this is exactly the warp. sigma_n is drawn once per call from
// U(sigma_low, sigma_high).
template <typename T>
TensorT<T> simulate_future_frame(TapeT<T>* tape, const TensorT<T>& image, const FlowField& flow,
                                 const NoiseSpec& noise, Rng& rng);

// Middlebury .flo container; round-trips bit-exactly.
void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);

// 8-bit RGB visualization (dx -> red, dy -> green around mid-gray).
std::vector<std::uint8_t> flow_debug_rgb(const FlowField& flow);

}  // namespace pseudoflow
