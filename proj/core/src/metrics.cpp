#include "pseudoflow/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <mutex>
#include <sstream>

#include "pseudoflow/threading.hpp"
#include "pseudoflow/warp.hpp"

namespace pseudoflow {

using nlohmann::json;

double warping_error(const VideoSequence& translated, const VideoSequence& source,
                     std::span<const FlowField> gt_flow, double alpha) {
  translated.check();
  source.check();
  if (translated.size() != source.size())
    throw ShapeError("warping_error: translated and source sequences differ in length");
  if (translated.size() < 2) throw ShapeError("warping_error: needs at least two frames");
  if (gt_flow.size() != translated.size() - 1)
    throw ShapeError("warping_error: expected " + std::to_string(translated.size() - 1) +
                     " flow fields, got " + std::to_string(gt_flow.size()));

  double sum = 0.0;
  std::int64_t count = 0;
  for (std::size_t t = 1; t < translated.size(); ++t) {
    const FlowField& flow = gt_flow[t - 1];
    const Tensor mask = occlusion_mask(source.frames[t - 1], source.frames[t], flow,
                                       static_cast<float>(alpha));
    const Tensor warped = backward_warp<float>(nullptr, translated.frames[t - 1], flow, Border::clamp);
    const Tensor& cur = translated.frames[t];
    const std::int64_t c = cur.size(1), plane = cur.size(2) * cur.size(3);
    const auto mv = mask.data();
    const auto av = cur.data();
    const auto bv = warped.data();
    for (std::int64_t ch = 0; ch < c; ++ch)
      for (std::int64_t i = 0; i < plane; ++i)
        sum += static_cast<double>(mv[static_cast<std::size_t>(i)]) *
               std::abs(static_cast<double>(av[static_cast<std::size_t>(ch * plane + i)]) -
                        static_cast<double>(bv[static_cast<std::size_t>(ch * plane + i)]));
    count += c * plane;
  }
  return sum / static_cast<double>(count);
}

SegScores segmentation_scores(const std::vector<std::vector<std::uint8_t>>& pred,
                              const std::vector<std::vector<std::uint8_t>>& gt, int n_classes) {
  if (pred.size() != gt.size()) throw ShapeError("segmentation_scores: map count mismatch");
  if (n_classes < 1) throw ConfigError("segmentation_scores: n_classes must be >= 1");
  std::vector<std::int64_t> confusion(static_cast<std::size_t>(n_classes) * n_classes, 0);
  for (std::size_t m = 0; m < pred.size(); ++m) {
    if (pred[m].size() != gt[m].size()) throw ShapeError("segmentation_scores: map size mismatch");
    for (std::size_t i = 0; i < pred[m].size(); ++i) {
      const int p = pred[m][i], g = gt[m][i];
      if (p >= n_classes || g >= n_classes)
        throw ShapeError("segmentation_scores: class id out of range");
      ++confusion[static_cast<std::size_t>(g) * n_classes + p];
    }
  }

  SegScores s;
  s.per_class_iou.assign(static_cast<std::size_t>(n_classes), -1.0);
  s.gt_pixels_per_class.assign(static_cast<std::size_t>(n_classes), 0);
  std::int64_t total = 0, diag = 0;
  for (int g = 0; g < n_classes; ++g)
    for (int p = 0; p < n_classes; ++p) {
      const std::int64_t v = confusion[static_cast<std::size_t>(g) * n_classes + p];
      total += v;
      if (g == p) diag += v;
      s.gt_pixels_per_class[static_cast<std::size_t>(g)] += v;
    }
  if (total == 0) throw ShapeError("segmentation_scores: empty input");
  s.mp = static_cast<double>(diag) / static_cast<double>(total);

  double acc_sum = 0.0, iou_sum = 0.0;
  int present = 0;
  for (int k = 0; k < n_classes; ++k) {
    const std::int64_t row = s.gt_pixels_per_class[static_cast<std::size_t>(k)];
    if (row == 0) continue;
    std::int64_t col = 0;
    for (int g = 0; g < n_classes; ++g) col += confusion[static_cast<std::size_t>(g) * n_classes + k];
    const std::int64_t tp = confusion[static_cast<std::size_t>(k) * n_classes + k];
    const double iou = static_cast<double>(tp) / static_cast<double>(row + col - tp);
    s.per_class_iou[static_cast<std::size_t>(k)] = iou;
    acc_sum += static_cast<double>(tp) / static_cast<double>(row);
    iou_sum += iou;
    ++present;
  }
  s.ac = acc_sum / present;
  s.miou = iou_sum / present;
  return s;
}

namespace {

VideoSequence translate_clip(const Network& net, const VideoSequence& in) {
  VideoSequence out;
  out.width = in.width;
  out.height = in.height;
  out.domain = in.domain + ":translated";
  out.clip_id = in.clip_id;
  out.frames.reserve(in.frames.size());
  for (const auto& f : in.frames) out.frames.push_back(net.forward(f, nullptr));
  return out;
}

}  // namespace

std::string EvalReport::to_json() const {
  json j;
  j["metric_version"] = metric_version;
  j["alpha"] = alpha;
  j["warping"]["status"] = warping_status;
  j["warping"]["mean"] = warp_mean;
  j["warping"]["oracle_mean"] = oracle_warp_mean;
  json clips_j = json::array();
  for (const auto& c : clips)
    clips_j.push_back({{"clip_id", c.clip_id},
                       {"frames", c.frames},
                       {"warp_error", c.warp_error},
                       {"oracle_warp_error", c.oracle_warp_error}});
  j["warping"]["clips"] = clips_j;
  j["segmentation"]["status"] = segmentation_status;
  j["segmentation"]["mp"] = seg.mp;
  j["segmentation"]["ac"] = seg.ac;
  j["segmentation"]["miou"] = seg.miou;
  j["segmentation"]["n_classes"] = n_classes;
  j["segmentation"]["per_class_iou"] = seg.per_class_iou;
  j["segmentation"]["gt_pixels_per_class"] = seg.gt_pixels_per_class;
  try {
    j["config"] = json::parse(config_echo);
  } catch (...) {
    j["config"] = config_echo;
  }
  return j.dump(2);
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "record,clip_id,frames,warp_error,oracle_warp_error,mp,ac,miou\n";
  for (const auto& c : clips)
    os << "clip," << c.clip_id << ',' << c.frames << ',' << c.warp_error << ','
       << c.oracle_warp_error << ",,,\n";
  os << "aggregate,,," << warp_mean << ',' << oracle_warp_mean << ',' << seg.mp << ',' << seg.ac
     << ',' << seg.miou << '\n';
  return os.str();
}

EvalReport evaluate_run(const Network& gy, const std::filesystem::path& data_root, double alpha,
                        const std::string& config_echo) {
  EvalReport report;
  report.alpha = alpha;
  report.config_echo = config_echo;

  const auto clip_dirs = list_clips(data_root, kDomainX, Split::val);
  if (clip_dirs.empty()) {
    report.warping_status = "skipped: no domainX val clips";
    report.segmentation_status = "skipped: no domainX val clips";
    return report;
  }
  const DatasetInfo info = read_root_manifest(data_root);
  report.n_classes = static_cast<int>(info.palette.size());

  struct PerClip {
    ClipResult result;
    std::vector<std::vector<std::uint8_t>> pred, gt;
    bool has_flow = false, has_labels = false;
  };
  std::vector<PerClip> per_clip(clip_dirs.size());

  parallel_for(static_cast<int>(clip_dirs.size()), [&](int i) {
    const VideoSequence src = read_clip(clip_dirs[static_cast<std::size_t>(i)]);
    const VideoSequence out = translate_clip(gy, src);
    PerClip& pc = per_clip[static_cast<std::size_t>(i)];
    pc.result.clip_id = src.clip_id;
    pc.result.frames = static_cast<int>(src.size());
    if (!src.gt_flow.empty() && src.size() >= 2) {
      pc.has_flow = true;
      pc.result.warp_error = warping_error(out, src, src.gt_flow, alpha);
      pc.result.oracle_warp_error = warping_error(src, src, src.gt_flow, alpha);
    }
    if (!src.labels.empty()) {
      pc.has_labels = true;
      for (std::size_t t = 0; t < out.frames.size(); ++t) {
        pc.pred.push_back(labels_decode(tensor_to_image(out.frames[t]), info.palette));
        pc.gt.push_back(src.labels[t]);
      }
    }
  });

  int with_flow = 0, with_labels = 0;
  std::vector<std::vector<std::uint8_t>> all_pred, all_gt;
  for (auto& pc : per_clip) {
    report.clips.push_back(pc.result);
    if (pc.has_flow) {
      report.warp_mean += pc.result.warp_error;
      report.oracle_warp_mean += pc.result.oracle_warp_error;
      ++with_flow;
    }
    if (pc.has_labels) {
      ++with_labels;
      for (auto& m : pc.pred) all_pred.push_back(std::move(m));
      for (auto& m : pc.gt) all_gt.push_back(std::move(m));
    }
  }
  if (with_flow > 0) {
    report.warp_mean /= with_flow;
    report.oracle_warp_mean /= with_flow;
    report.warping_status = "ok";
  } else {
    report.warping_status = "skipped: no ground-truth flow in val clips";
  }
  if (with_labels > 0) {
    report.seg = segmentation_scores(all_pred, all_gt, report.n_classes);
    report.segmentation_status = "ok";
  } else {
    report.segmentation_status = "skipped: no ground-truth labels in val clips";
  }
  return report;
}

}  // namespace pseudoflow
