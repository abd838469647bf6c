#pragma once

#include <span>
#include <string>
#include <vector>

#include "pseudoflow/dataset.hpp"
#include "pseudoflow/models.hpp"

namespace pseudoflow {

inline constexpr int kMetricVersion = 1;

// Occlusion-mask-weighted L1 between adjacent translated frames and their
// flow-warped predecessors, normalized as a per-element mean over frames,
// pixels and channels. The mask always comes from the source sequence.
double warping_error(const VideoSequence& translated, const VideoSequence& source,
                     std::span<const FlowField> gt_flow, double alpha = 50.0);

struct SegScores {
  double mp = 0.0;    // mean pixel accuracy
  double ac = 0.0;    // average per-class accuracy over gt-present classes
  double miou = 0.0;  // mean IoU over present classes
  std::vector<double> per_class_iou;  // NaN-free: absent classes report -1
  std::vector<std::int64_t> gt_pixels_per_class;
};

// Scores from the global confusion matrix accumulated over all maps.
// Classes absent from the ground truth are excluded from AC and mIoU.
SegScores segmentation_scores(const std::vector<std::vector<std::uint8_t>>& pred,
                              const std::vector<std::vector<std::uint8_t>>& gt, int n_classes);

struct ClipResult {
  int clip_id = -1;
  int frames = 0;
  double warp_error = 0.0;
  double oracle_warp_error = 0.0;  // source sequence against itself
};

struct EvalReport {
  int metric_version = kMetricVersion;
  std::string warping_status = "skipped: not run";
  std::string segmentation_status = "skipped: not run";
  std::vector<ClipResult> clips;
  double warp_mean = 0.0;
  double oracle_warp_mean = 0.0;
  SegScores seg;
  int n_classes = 0;
  double alpha = 50.0;
  std::string config_echo;  // JSON blob from the caller

  std::string to_json() const;
  std::string to_csv() const;
};

// Translates every X-domain val clip with `gy`, scores temporal stability
// against the stored ground-truth flow and segmentation quality against the
// stored labels. Missing ground truth marks the metric "skipped".
EvalReport evaluate_run(const Network& gy, const std::filesystem::path& data_root,
                        double alpha = 50.0, const std::string& config_echo = "{}");

}  // namespace pseudoflow
