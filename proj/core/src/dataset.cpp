#include "pseudoflow/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pseudoflow/threading.hpp"

namespace pseudoflow {

using nlohmann::json;

namespace {

std::string clip_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%04d", index);
  return buf;
}

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.png", index);
  return buf;
}

std::string flow_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "flow_%05d.flo", index);
  return buf;
}

std::string labels_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "labels_%05d.png", index);
  return buf;
}

int clip_id_base(const std::string& domain, Split split) {
  const bool x = domain == kDomainX;
  if (x) return split == Split::train ? 0 : 10000;
  return split == Split::train ? 20000 : 30000;
}

json palette_to_json(const Palette& p) {
  json out = json::array();
  for (const auto& c : p.colors) out.push_back({c[0], c[1], c[2]});
  return out;
}

Palette palette_from_json(const json& j) {
  Palette p;
  p.colors.clear();
  for (const auto& c : j)
    p.colors.push_back({c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(),
                        c.at(2).get<std::uint8_t>()});
  p.validate();
  return p;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("malformed manifest " + path.string() + ": " + e.what());
  }
}

struct ClipManifest {
  std::string domain;
  std::string split;
  int clip_id = -1;
  int width = 0, height = 0, frames = 0;
  bool has_flow = false, has_labels = false;
  Palette palette;
};

void write_clip_manifest(const std::filesystem::path& dir, const ClipManifest& m) {
  json j;
  j["format_version"] = kDatasetFormatVersion;
  j["domain"] = m.domain;
  j["split"] = m.split;
  j["clip_id"] = m.clip_id;
  j["width"] = m.width;
  j["height"] = m.height;
  j["frames"] = m.frames;
  j["has_flow"] = m.has_flow;
  j["has_labels"] = m.has_labels;
  j["palette"] = palette_to_json(m.palette);
  write_json(dir / "manifest.json", j);
}

ClipManifest read_clip_manifest(const std::filesystem::path& dir) {
  const json j = read_json(dir / "manifest.json");
  if (j.value("format_version", -1) != kDatasetFormatVersion)
    throw FormatError("unsupported clip manifest version in " + dir.string());
  ClipManifest m;
  m.domain = j.at("domain").get<std::string>();
  m.split = j.at("split").get<std::string>();
  m.clip_id = j.at("clip_id").get<int>();
  m.width = j.at("width").get<int>();
  m.height = j.at("height").get<int>();
  m.frames = j.at("frames").get<int>();
  m.has_flow = j.at("has_flow").get<bool>();
  m.has_labels = j.at("has_labels").get<bool>();
  m.palette = palette_from_json(j.at("palette"));
  return m;
}

void generate_one_clip(const SceneConfig& cfg, std::uint64_t master_seed,
                       const std::string& domain, Split split, int index,
                       const std::filesystem::path& split_dir) {
  const int clip_id = clip_id_base(domain, split) + index;
  const std::uint64_t clip_seed = derive_seed(master_seed, static_cast<std::uint64_t>(clip_id));
  const Scene scene = make_scene(cfg, clip_seed);

  const auto dir = split_dir / clip_dir_name(index);
  std::filesystem::create_directories(dir);

  const bool is_x = domain == kDomainX;
  const bool val = split == Split::val;
  for (int t = 0; t < scene.frames; ++t) {
    const ImageU8 img = is_x ? render_textured(scene, t) : render_labels(scene, t, cfg.palette);
    write_png(dir / frame_name(t), img);
    if (val) write_png(dir / labels_name(t), labels_encode(label_map(scene, t), scene.width,
                                                           scene.height, cfg.palette));
  }
  if (is_x && val)
    for (int t = 1; t < scene.frames; ++t) write_flo(dir / flow_name(t), scene_backward_flow(scene, t));

  ClipManifest m;
  m.domain = domain;
  m.split = split_name(split);
  m.clip_id = clip_id;
  m.width = scene.width;
  m.height = scene.height;
  m.frames = scene.frames;
  m.has_flow = is_x && val;
  m.has_labels = val;
  m.palette = cfg.palette;
  write_clip_manifest(dir, m);
}

}  // namespace

std::string split_name(Split s) { return s == Split::train ? "train" : "val"; }

void VideoSequence::check() const {
  if (!gt_flow.empty() && gt_flow.size() != frames.size() - 1)
    throw FormatError("video sequence: flow count " + std::to_string(gt_flow.size()) +
                      " does not match " + std::to_string(frames.size()) + " frames");
  if (!labels.empty() && labels.size() != frames.size())
    throw FormatError("video sequence: label count does not match frame count");
  for (const auto& f : frames)
    if (f.dims() != 4 || f.size(2) != height || f.size(3) != width)
      throw ShapeError("video sequence: frame canvas mismatch");
  for (const auto& fl : gt_flow)
    if (fl.width != width || fl.height != height)
      throw ShapeError("video sequence: flow canvas mismatch");
  for (const auto& l : labels)
    if (l.size() != static_cast<std::size_t>(width) * height)
      throw ShapeError("video sequence: label canvas mismatch");
}

void generate_split(const SceneConfig& cfg, std::uint64_t seed, Split split, int clips,
                    const std::filesystem::path& root) {
  cfg.validate();
  for (const std::string domain : {kDomainX, kDomainY}) {
    const auto split_dir = root / domain / split_name(split);
    std::filesystem::create_directories(split_dir);
    parallel_for(clips, [&](int i) { generate_one_clip(cfg, seed, domain, split, i, split_dir); });
  }
}

void write_root_manifest(const std::filesystem::path& root, const SceneConfig& cfg,
                         std::uint64_t seed, int train_clips, int val_clips) {
  std::filesystem::create_directories(root);
  json j;
  j["format_version"] = kDatasetFormatVersion;
  j["seed"] = seed;
  j["width"] = cfg.width;
  j["height"] = cfg.height;
  j["frames_per_clip"] = cfg.frames_per_clip;
  j["train_clips"] = train_clips;
  j["val_clips"] = val_clips;
  j["palette"] = palette_to_json(cfg.palette);
  j["scene"] = {{"min_objects", cfg.min_objects},
                {"max_objects", cfg.max_objects},
                {"min_size", cfg.min_size},
                {"max_size", cfg.max_size},
                {"max_speed", cfg.max_speed},
                {"max_drift", cfg.max_drift},
                {"texture_amp", cfg.texture_amp},
                {"texture_scale", cfg.texture_scale},
                {"hue_jitter", cfg.hue_jitter}};
  write_json(root / "manifest.json", j);
}

DatasetInfo read_root_manifest(const std::filesystem::path& root) {
  const json j = read_json(root / "manifest.json");
  if (j.value("format_version", -1) != kDatasetFormatVersion)
    throw FormatError("unsupported dataset format version in " + root.string());
  DatasetInfo info;
  info.width = j.at("width").get<int>();
  info.height = j.at("height").get<int>();
  info.seed = j.at("seed").get<std::uint64_t>();
  info.frames_per_clip = j.at("frames_per_clip").get<int>();
  info.train_clips_x = info.train_clips_y = j.at("train_clips").get<int>();
  info.val_clips_x = info.val_clips_y = j.at("val_clips").get<int>();
  info.palette = palette_from_json(j.at("palette"));
  return info;
}

std::vector<std::filesystem::path> list_clips(const std::filesystem::path& root,
                                              const std::string& domain, Split split) {
  const auto dir = root / domain / split_name(split);
  std::vector<std::filesystem::path> clips;
  if (!std::filesystem::exists(dir)) return clips;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_directory() && e.path().filename().string().rfind("clip_", 0) == 0)
      clips.push_back(e.path());
  std::sort(clips.begin(), clips.end());
  return clips;
}

VideoSequence read_clip(const std::filesystem::path& clip_dir) {
  const ClipManifest m = read_clip_manifest(clip_dir);
  VideoSequence seq;
  seq.width = m.width;
  seq.height = m.height;
  seq.domain = m.domain;
  seq.clip_id = m.clip_id;
  for (int t = 0; t < m.frames; ++t) {
    const auto path = clip_dir / frame_name(t);
    if (!std::filesystem::exists(path))
      throw FormatError("missing frame " + std::to_string(t) + " of " + std::to_string(m.frames) +
                        " in " + clip_dir.string());
    const ImageU8 img = read_png(path);
    if (img.width != m.width || img.height != m.height)
      throw FormatError("frame " + std::to_string(t) + " has wrong size in " + clip_dir.string());
    seq.frames.push_back(image_to_tensor(img));
  }
  if (m.has_flow)
    for (int t = 1; t < m.frames; ++t) {
      const auto path = clip_dir / flow_name(t);
      if (!std::filesystem::exists(path))
        throw FormatError("missing flow " + std::to_string(t) + " in " + clip_dir.string());
      seq.gt_flow.push_back(read_flo(path));
    }
  if (m.has_labels)
    for (int t = 0; t < m.frames; ++t) {
      const auto path = clip_dir / labels_name(t);
      if (!std::filesystem::exists(path))
        throw FormatError("missing labels " + std::to_string(t) + " in " + clip_dir.string());
      seq.labels.push_back(labels_decode(read_png(path), m.palette));
    }
  seq.check();
  return seq;
}

void write_clip(const std::filesystem::path& clip_dir, const VideoSequence& seq) {
  seq.check();
  std::filesystem::create_directories(clip_dir);
  for (std::size_t t = 0; t < seq.frames.size(); ++t)
    write_png(clip_dir / frame_name(static_cast<int>(t)), tensor_to_image(seq.frames[t]));
  for (std::size_t t = 0; t < seq.gt_flow.size(); ++t)
    write_flo(clip_dir / flow_name(static_cast<int>(t) + 1), seq.gt_flow[t]);
  const Palette palette = Palette::default_shapes();
  for (std::size_t t = 0; t < seq.labels.size(); ++t)
    write_png(clip_dir / labels_name(static_cast<int>(t)),
              labels_encode(seq.labels[t], seq.width, seq.height, palette));
  ClipManifest m;
  m.domain = seq.domain;
  m.split = "val";
  m.clip_id = seq.clip_id;
  m.width = seq.width;
  m.height = seq.height;
  m.frames = static_cast<int>(seq.frames.size());
  m.has_flow = !seq.gt_flow.empty();
  m.has_labels = !seq.labels.empty();
  m.palette = palette;
  write_clip_manifest(clip_dir, m);
}

FrameDataset load_training_frames(const std::filesystem::path& root, const std::string& domain) {
  FrameDataset ds;
  const auto clips = list_clips(root, domain, Split::train);
  if (clips.empty()) throw IoError("no training clips under " + (root / domain).string());
  for (const auto& dir : clips) {
    const ClipManifest m = read_clip_manifest(dir);
    if (ds.width == 0) {
      ds.width = m.width;
      ds.height = m.height;
    } else if (ds.width != m.width || ds.height != m.height) {
      throw FormatError("mixed clip resolutions under " + (root / domain).string());
    }
    for (int t = 0; t < m.frames; ++t) {
      const auto path = dir / frame_name(t);
      if (!std::filesystem::exists(path))
        throw FormatError("missing frame " + std::to_string(t) + " in " + dir.string());
      ds.frames.push_back(read_png(path));
    }
  }
  return ds;
}

}  // namespace pseudoflow
