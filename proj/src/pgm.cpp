// Copyright 2026 The rfscope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rfscope/pgm.hpp"

#include <fstream>
#include <sstream>

namespace rfscope {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) continue;
    tok.push_back(char(c));
    while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') tok.push_back(char(in.get()));
    return tok;
  }
  throw IOError("pgm: truncated header");
}

Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> load_pgm_raw(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IOError("pgm: cannot open " + path.string());
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2")
    throw IOError("pgm: unsupported format '" + magic + "' in " + path.string());
  int w, h, maxval;
  try {
    w = std::stoi(next_token(in));
    h = std::stoi(next_token(in));
    maxval = std::stoi(next_token(in));
  } catch (const std::exception&) {
    throw IOError("pgm: malformed header in " + path.string());
  }
  if (w < 1 || h < 1) throw IOError("pgm: bad dimensions in " + path.string());
  if (maxval != 255) throw IOError("pgm: maxval must be 255 in " + path.string());

  Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> img(h, w);
  if (magic == "P5") {
    in.get();  // single whitespace byte after maxval
    std::vector<char> buf(size_t(w) * h);
    in.read(buf.data(), std::streamsize(buf.size()));
    if (in.gcount() != std::streamsize(buf.size()))
      throw IOError("pgm: truncated payload in " + path.string());
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) img(i, j) = std::uint8_t(buf[size_t(i) * w + j]);
  } else {
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        int v;
        try {
          v = std::stoi(next_token(in));
        } catch (const std::exception&) {
          throw IOError("pgm: truncated payload in " + path.string());
        }
        if (v < 0 || v > 255) throw IOError("pgm: sample out of range in " + path.string());
        img(i, j) = std::uint8_t(v);
      }
  }
  return img;
}

}  // namespace

Eigen::MatrixXd load_pgm_gray(const std::filesystem::path& path) {
  const auto raw = load_pgm_raw(path);
  return raw.cast<double>() / 255.0;
}

MaskImage load_mask(const std::filesystem::path& path) {
  const auto raw = load_pgm_raw(path);
  MaskImage mask;
  mask.height = int(raw.rows());
  mask.width = int(raw.cols());
  mask.pixels = raw.array() >= 128;
  return mask;
}

void save_pgm_gray(const std::filesystem::path& path, const Eigen::MatrixXd& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IOError("pgm: cannot write " + path.string());
  out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < image.rows(); ++i)
    for (Eigen::Index j = 0; j < image.cols(); ++j) {
      const double v = std::clamp(image(i, j), 0.0, 1.0);
      out.put(char(std::lround(v * 255.0)));
    }
}

}  // namespace rfscope
