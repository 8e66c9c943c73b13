#pragma once

#include <d2cip/core.hpp>
#include <d2cip/observation.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

/**
 * \file
 * \brief Sequence ingestion: binary PGM frames, `groundtruth.txt` boxes and `key = value` config files.
 */

namespace d2cip {

/// Frame file name for 0-based frame `index` (files are numbered from 1).
inline std::string frameFileName(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.pgm", index + 1);
  return buf;
}

namespace detail {

inline std::string nextPgmToken(std::istream& in) {
  std::string token;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> token;
  return token;
}

}  // namespace detail

/// Reads an 8-bit binary (P5) portable graymap.
inline Frame readPgm(const std::filesystem::path& path, int index = 0) {
  std::ifstream in{path, std::ios::binary};
  if (!in) throw std::runtime_error("cannot open " + path.string());
  if (detail::nextPgmToken(in) != "P5") throw std::runtime_error(path.string() + ": not a binary PGM (P5)");
  Frame f;
  f.index = index;
  int maxval = 0;
  try {
    f.width = std::stoi(detail::nextPgmToken(in));
    f.height = std::stoi(detail::nextPgmToken(in));
    maxval = std::stoi(detail::nextPgmToken(in));
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed PGM header");
  }
  if (f.width < 1 || f.height < 1 || maxval < 1 || maxval > 255) {
    throw std::runtime_error(path.string() + ": unsupported PGM dimensions or depth");
  }
  in.get();
  std::vector<unsigned char> raw(static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) throw std::runtime_error(path.string() + ": truncated");
  f.pixels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) f.pixels[i] = static_cast<float>(raw[i]) / static_cast<float>(maxval);
  return f;
}

inline void writePgm(const std::filesystem::path& path, const Frame& frame) {
  std::ofstream out{path, std::ios::binary};
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << frame.width << ' ' << frame.height << "\n255\n";
  std::vector<unsigned char> raw(frame.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<unsigned char>(std::lround(std::clamp(frame.pixels[i], 0.0F, 1.0F) * 255.0F));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

/// Reads `x,y,w,h` lines (top-left corner); returns center-based states. Whitespace or tabs also separate values.
inline std::vector<TargetState> readGroundTruth(const std::filesystem::path& path) {
  std::ifstream in{path};
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TargetState> boxes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == '\t'; }, ' ');
    if (line.find_first_not_of(" \r") == std::string::npos) continue;
    std::istringstream ss{line};
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    if (!(ss >> x >> y >> w >> h)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected x,y,w,h");
    }
    boxes.push_back({{x + 0.5 * w, y + 0.5 * h}, {w, h}});
  }
  return boxes;
}

inline void writeGroundTruth(const std::filesystem::path& path, const std::vector<TargetState>& boxes) {
  std::ofstream out{path};
  if (!out) throw std::runtime_error("cannot write " + path.string());
  char buf[128];
  for (const auto& b : boxes) {
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f\n", b.position.x - 0.5 * b.size.x,
                  b.position.y - 0.5 * b.size.y, b.size.x, b.size.y);
    out << buf;
  }
}

/// Frames `000001.pgm`, `000002.pgm`, ... of a directory, stopping at the first missing file.
inline std::vector<Frame> readFrameDirectory(const std::filesystem::path& dir) {
  std::vector<Frame> frames;
  for (int i = 0;; ++i) {
    const auto file = dir / frameFileName(i);
    if (!std::filesystem::exists(file)) break;
    frames.push_back(readPgm(file, i));
  }
  if (frames.empty()) throw std::runtime_error("no frames found in " + dir.string());
  return frames;
}

/// Flat `key = value` file. `#` starts a comment; keys are case-sensitive.
using KeyValues = std::map<std::string, std::string>;

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline KeyValues parseKeyValues(std::istream& in, const std::string& source = "config") {
  KeyValues kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline KeyValues readKeyValues(const std::filesystem::path& path) {
  std::ifstream in{path};
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parseKeyValues(in, path.string());
}

}  // namespace d2cip
