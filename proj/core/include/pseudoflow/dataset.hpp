#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pseudoflow/flow.hpp"
#include "pseudoflow/scene.hpp"

namespace pseudoflow {

inline constexpr int kDatasetFormatVersion = 1;
inline constexpr const char* kDomainX = "domainX";
inline constexpr const char* kDomainY = "domainY";

enum class Split { train, val };
std::string split_name(Split s);

struct VideoSequence {
  int width = 0;
  int height = 0;
  std::string domain;
  int clip_id = -1;
  std::vector<Tensor> frames;                      // {1,3,H,W} in [-1,1]
  std::vector<FlowField> gt_flow;                  // f_{t=>t-1} at index t-1
  std::vector<std::vector<std::uint8_t>> labels;   // per-frame class ids

  std::size_t size() const { return frames.size(); }
  void check() const;  // structural invariants
};

// On-disk layout:
//   root/manifest.json
//   root/{domainX|domainY}/{train|val}/clip_%04d/
//     manifest.json, frame_%05d.png,
//     flow_%05d.flo (X val; index t addresses f_{t=>t-1}),
//     labels_%05d.png (val splits)
struct DatasetInfo {
  int format_version = kDatasetFormatVersion;
  int width = 0, height = 0;
  std::uint64_t seed = 0;
  int train_clips_x = 0, train_clips_y = 0, val_clips_x = 0, val_clips_y = 0;
  int frames_per_clip = 0;
  Palette palette;
};

// Renders `clips` scene clips for both domains of one split. Train-split X
// and Y clips come from disjoint seed streams, so the domains are unpaired
// by construction; val-split X clips additionally carry ground-truth flow
// and labels for evaluation.
void generate_split(const SceneConfig& cfg, std::uint64_t seed, Split split, int clips,
                    const std::filesystem::path& root);

void write_root_manifest(const std::filesystem::path& root, const SceneConfig& cfg,
                         std::uint64_t seed, int train_clips, int val_clips);
DatasetInfo read_root_manifest(const std::filesystem::path& root);

std::vector<std::filesystem::path> list_clips(const std::filesystem::path& root,
                                              const std::string& domain, Split split);

VideoSequence read_clip(const std::filesystem::path& clip_dir);
void write_clip(const std::filesystem::path& clip_dir, const VideoSequence& seq);

// All frames of one domain's train split decoded to tensors, flattened
// across clips; the sampler works on frame granularity.
struct FrameDataset {
  int width = 0, height = 0;
  std::vector<ImageU8> frames;
  std::size_t size() const { return frames.size(); }
};

FrameDataset load_training_frames(const std::filesystem::path& root, const std::string& domain);

}  // namespace pseudoflow
