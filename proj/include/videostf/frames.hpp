#pragma once

/// Testbed manifest ingestion, uniform frame sampling, and frame
/// materialization for transport.
///
/// The canonical on-disk input is a directory of pre-extracted frames per
/// video, named frame_000000.jpg .. frame_{F-1:06d}.jpg (or .png), ordered by
/// the zero-padded index. Decoding raw video containers is an external
/// pre-extraction step, documented in the README but deliberately not
/// implemented here.
///
/// Sampling is midpoint-uniform: idx_i = floor((i + 0.5) * F / T), clamped to
/// [0, F-1]. In strict mode T must not exceed F; force mode permits T > F by
/// clamping, duplicating nearest frames for short videos.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "videostf/base64.hpp"
#include "videostf/errors.hpp"
#include "videostf/rng.hpp"

namespace videostf::frames {

namespace fs = std::filesystem;

struct VideoRecord {
  std::string video_id;
  std::string frames_dir;  // absolute after load_manifest resolution
  size_t frame_count = 0;  // F
  std::optional<double> duration_s;
  std::optional<std::string> category;
};

struct FrameRef {
  std::string video_id;
  size_t source_index = 0;  // position in the stored frame list
  std::string digest;       // content hash of the frame file
  std::string path;
};

inline bool same_identity(const FrameRef& a, const FrameRef& b) {
  return a.video_id == b.video_id && a.source_index == b.source_index &&
         a.digest == b.digest;
}

struct FrameSequence {
  std::string video_id;
  std::vector<FrameRef> frames;

  size_t size() const { return frames.size(); }

  std::vector<std::string> digest_list() const {
    std::vector<std::string> out;
    out.reserve(frames.size());
    for (const FrameRef& f : frames) out.push_back(f.digest);
    return out;
  }

  // Digest over the ordered frame digests; identifies the exact sequence.
  std::string sequence_digest() const {
    std::string joined;
    for (const FrameRef& f : frames) {
      joined += f.digest;
      joined += ',';
    }
    return rng::to_hex(rng::fnv1a64(joined));
  }
};

enum class SamplingMode { strict, force };

struct SamplingSpec {
  size_t target_frames = 8;  // T
  SamplingMode mode = SamplingMode::strict;
};

inline std::string digest_bytes(std::string_view bytes) {
  return rng::to_hex(rng::fnv1a64(bytes));
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot read file: " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return bytes;
}

inline std::string digest_file(const fs::path& path) {
  return digest_bytes(read_file(path));
}

// ---------------------------------------------------------------------------
// Manifest: one JSON object per line.
// {"video_id": str, "frames_dir": str, "frame_count": int,
//  "duration_s": float?, "category": str?}
// Relative frames_dir paths resolve against the manifest's directory.
// ---------------------------------------------------------------------------

inline std::vector<VideoRecord> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open manifest: " + path.string());
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : ".";
  std::vector<VideoRecord> records;
  std::map<std::string, size_t> seen;  // video_id -> line number
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) +
                            ": " + e.what());
    }
    VideoRecord rec;
    try {
      rec.video_id = j.at("video_id").get<std::string>();
      rec.frames_dir = j.at("frames_dir").get<std::string>();
      const auto count = j.at("frame_count").get<int64_t>();
      if (count < 1) {
        throw ValidationError("manifest line " + std::to_string(line_no) +
                              ": frame_count must be >= 1");
      }
      rec.frame_count = static_cast<size_t>(count);
      if (j.contains("duration_s") && !j["duration_s"].is_null()) {
        rec.duration_s = j["duration_s"].get<double>();
      }
      if (j.contains("category") && !j["category"].is_null()) {
        rec.category = j["category"].get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) +
                            ": " + e.what());
    }
    if (rec.video_id.empty()) {
      throw ValidationError("manifest line " + std::to_string(line_no) +
                            ": empty video_id");
    }
    const auto [it, inserted] = seen.emplace(rec.video_id, line_no);
    if (!inserted) {
      throw ValidationError("duplicate video_id '" + rec.video_id +
                            "' at manifest lines " +
                            std::to_string(it->second) + " and " +
                            std::to_string(line_no));
    }
    const fs::path dir(rec.frames_dir);
    rec.frames_dir = (dir.is_absolute() ? dir : base / dir).lexically_normal()
                         .string();
    records.push_back(std::move(rec));
  }
  return records;
}

inline void save_manifest(const std::vector<VideoRecord>& records,
                          const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ValidationError("cannot write manifest: " + path.string());
  }
  for (const VideoRecord& rec : records) {
    nlohmann::json j{{"video_id", rec.video_id},
                     {"frames_dir", rec.frames_dir},
                     {"frame_count", rec.frame_count}};
    if (rec.duration_s) j["duration_s"] = *rec.duration_s;
    if (rec.category) j["category"] = *rec.category;
    out << j.dump() << '\n';
  }
}

namespace detail {

inline std::string frame_file_name(size_t index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%06zu", index);
  return std::string(buf) + ext;
}

// Scans a frame directory and checks the bit-exact layout contract:
// exactly F files named frame_000000..frame_{F-1}, one extension throughout.
// Returns the extension in use (".jpg" or ".png").
inline std::string verify_frame_dir(const fs::path& dir, size_t frame_count,
                                    const std::string& video_id) {
  if (!fs::is_directory(dir)) {
    throw ValidationError("frames_dir missing for video '" + video_id +
                          "': " + dir.string());
  }
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) names.insert(entry.path().filename().string());
  }
  std::string ext;
  for (const char* cand : {".jpg", ".png"}) {
    if (names.count(frame_file_name(0, cand))) {
      ext = cand;
      break;
    }
  }
  if (ext.empty()) {
    throw ValidationError("video '" + video_id + "': no frame_000000.jpg/.png in " +
                          dir.string());
  }
  for (size_t i = 0; i < frame_count; ++i) {
    if (!names.count(frame_file_name(i, ext))) {
      throw ValidationError("video '" + video_id + "': missing frame file " +
                            frame_file_name(i, ext));
    }
  }
  size_t matching = 0;
  for (const std::string& name : names) {
    if (name.rfind("frame_", 0) == 0 && name.size() == 16 &&
        name.substr(12) == ext) {
      ++matching;
    }
  }
  if (matching != frame_count) {
    throw ValidationError("video '" + video_id + "': directory holds " +
                          std::to_string(matching) + " frame files, manifest says " +
                          std::to_string(frame_count));
  }
  return ext;
}

}  // namespace detail

// Midpoint-uniform sampling indices; a function of (F, T) only.
inline std::vector<size_t> sampling_indices(size_t frame_count,
                                            size_t target_frames,
                                            SamplingMode mode) {
  if (target_frames < 1) {
    throw ValidationError("target_frames must be >= 1");
  }
  if (mode == SamplingMode::strict && target_frames > frame_count) {
    throw ValidationError("insufficient frames: requested " +
                          std::to_string(target_frames) + " of " +
                          std::to_string(frame_count) +
                          " (use force mode to clamp)");
  }
  std::vector<size_t> out;
  out.reserve(target_frames);
  for (size_t i = 0; i < target_frames; ++i) {
    const double pos = (static_cast<double>(i) + 0.5) *
                       static_cast<double>(frame_count) /
                       static_cast<double>(target_frames);
    auto idx = static_cast<size_t>(pos);
    if (idx >= frame_count) idx = frame_count - 1;
    out.push_back(idx);
  }
  return out;
}

inline FrameSequence sample_frames(const VideoRecord& record,
                                   const SamplingSpec& spec) {
  const fs::path dir(record.frames_dir);
  const std::string ext =
      detail::verify_frame_dir(dir, record.frame_count, record.video_id);
  const auto indices =
      sampling_indices(record.frame_count, spec.target_frames, spec.mode);
  FrameSequence seq;
  seq.video_id = record.video_id;
  seq.frames.reserve(indices.size());
  std::map<size_t, std::string> digest_cache;  // force mode repeats indices
  for (size_t idx : indices) {
    const fs::path file = dir / detail::frame_file_name(idx, ext);
    auto it = digest_cache.find(idx);
    if (it == digest_cache.end()) {
      it = digest_cache.emplace(idx, digest_file(file)).first;
    }
    seq.frames.push_back(
        FrameRef{record.video_id, idx, it->second, file.string()});
  }
  return seq;
}

enum class FrameEncoding { jpeg_base64, png_base64 };

inline std::string media_type(FrameEncoding e) {
  return e == FrameEncoding::jpeg_base64 ? "image/jpeg" : "image/png";
}

inline FrameEncoding frame_encoding_from_name(std::string_view name) {
  if (name == "jpeg_base64" || name == "jpeg") return FrameEncoding::jpeg_base64;
  if (name == "png_base64" || name == "png") return FrameEncoding::png_base64;
  throw ConfigError("unknown frame encoding: " + std::string(name));
}

struct EncodedFrame {
  std::string media_type;
  std::string payload_base64;
};

// Reads, integrity-checks, and base64-encodes every frame, in sequence order.
inline std::vector<EncodedFrame> materialize(const FrameSequence& seq,
                                             FrameEncoding encoding) {
  std::vector<EncodedFrame> out;
  out.reserve(seq.size());
  const std::string mime = media_type(encoding);
  for (const FrameRef& ref : seq.frames) {
    const std::string bytes = read_file(ref.path);
    if (digest_bytes(bytes) != ref.digest) {
      throw IntegrityError("frame digest mismatch for " + ref.video_id +
                           " frame " + std::to_string(ref.source_index) +
                           " (" + ref.path + ")");
    }
    out.push_back(EncodedFrame{mime, base64::encode(bytes)});
  }
  return out;
}

}  // namespace videostf::frames
