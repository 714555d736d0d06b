// Generates a synthetic sample testbed: per-video directories of tiny solid
// color PNG frames plus the JSONL manifest describing them. The bundled
// data/sample set was produced by this tool; regenerate or scale it up with
// different --videos/--seed values. Frame bytes are a pure function of
// (seed, video, frame), so generated testbeds are byte-reproducible.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "videostf/frames.hpp"
#include "videostf/rng.hpp"

namespace fs = std::filesystem;
using namespace videostf;

namespace {

uint32_t crc32_of(const std::string& bytes) {
  uint32_t crc = 0xFFFFFFFFu;
  for (unsigned char c : bytes) {
    crc ^= c;
    for (int bit = 0; bit < 8; ++bit) {
      crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
    }
  }
  return crc ^ 0xFFFFFFFFu;
}

uint32_t adler32_of(const std::string& bytes) {
  uint32_t a = 1, b = 0;
  for (unsigned char c : bytes) {
    a = (a + c) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

void put_be32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void put_chunk(std::string& out, const char type[4], const std::string& data) {
  put_be32(out, static_cast<uint32_t>(data.size()));
  std::string body(type, 4);
  body += data;
  out += body;
  put_be32(out, crc32_of(body));
}

// Minimal truecolor PNG: one stored-deflate block, no external encoder.
std::string solid_png(size_t width, size_t height, uint8_t r, uint8_t g,
                      uint8_t b) {
  std::string raw;  // filter byte 0 per row, then RGB triples
  for (size_t y = 0; y < height; ++y) {
    raw.push_back('\0');
    for (size_t x = 0; x < width; ++x) {
      raw.push_back(static_cast<char>(r));
      raw.push_back(static_cast<char>(g));
      raw.push_back(static_cast<char>(b));
    }
  }
  std::string idat;
  idat.push_back('\x78');  // zlib header, 32K window
  idat.push_back('\x01');
  idat.push_back('\x01');  // final stored block
  const auto len = static_cast<uint16_t>(raw.size());
  idat.push_back(static_cast<char>(len & 0xff));
  idat.push_back(static_cast<char>(len >> 8));
  idat.push_back(static_cast<char>(~len & 0xff));
  idat.push_back(static_cast<char>((~len >> 8) & 0xff));
  idat += raw;
  put_be32(idat, adler32_of(raw));

  std::string ihdr;
  put_be32(ihdr, static_cast<uint32_t>(width));
  put_be32(ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace

  std::string png("\x89PNG\r\n\x1a\n", 8);
  put_chunk(png, "IHDR", ihdr);
  put_chunk(png, "IDAT", idat);
  put_chunk(png, "IEND", "");
  return png;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic sample testbed (frames + manifest)"};
  std::string out_dir = "data/sample";
  size_t videos = 20;
  uint64_t seed = 7;
  size_t min_frames = 6, max_frames = 48;
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--videos", videos, "Number of videos");
  app.add_option("--seed", seed, "Generator seed");
  app.add_option("--min-frames", min_frames, "Minimum frames per video");
  app.add_option("--max-frames", max_frames, "Maximum frames per video");
  CLI11_PARSE(app, argc, argv);

  if (min_frames < 1 || min_frames > max_frames) {
    std::cerr << "invalid frame range\n";
    return 2;
  }

  const std::vector<std::string> categories = {"comedy", "lifestyle", "sports",
                                               "travel", "news"};
  std::vector<frames::VideoRecord> records;
  for (size_t v = 0; v < videos; ++v) {
    char id[32];
    std::snprintf(id, sizeof(id), "vid_%04zu", v);
    rng::SplitMix64 gen(rng::split(seed, std::string(id)));
    const size_t frame_count =
        min_frames + static_cast<size_t>(gen.bounded(max_frames - min_frames + 1));
    const fs::path dir = fs::path(out_dir) / "frames" / id;
    fs::create_directories(dir);
    for (size_t f = 0; f < frame_count; ++f) {
      const uint64_t color = rng::split(seed, std::string(id), f);
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%06zu.png", f);
      std::ofstream file(dir / name, std::ios::binary | std::ios::trunc);
      const std::string png =
          solid_png(8, 8, static_cast<uint8_t>(color & 0xff),
                    static_cast<uint8_t>((color >> 8) & 0xff),
                    static_cast<uint8_t>((color >> 16) & 0xff));
      file.write(png.data(), static_cast<std::streamsize>(png.size()));
    }
    frames::VideoRecord rec;
    rec.video_id = id;
    rec.frames_dir = (fs::path("frames") / id).string();
    rec.frame_count = frame_count;
    rec.duration_s = static_cast<double>(frame_count) / 2.0;
    rec.category = categories[v % categories.size()];
    records.push_back(std::move(rec));
  }
  frames::save_manifest(records, fs::path(out_dir) / "manifest.jsonl");
  std::cout << "wrote " << videos << " videos under " << out_dir << "\n";
  return 0;
}
