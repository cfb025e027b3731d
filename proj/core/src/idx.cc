// Copyright 2026 The uend Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <iterator>
#include <string>

#include "uend/data.h"
#include "uend/error.h"

namespace uend {
namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open IDX file " + path.string(), 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::string name)
      : bytes_(bytes), name_(std::move(name)) {}

  std::uint32_t u32() {
    need(4, "header field");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v = (v << 8) | bytes_[pos_++];
    return v;
  }

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > bytes_.size()) {
      throw FormatError(name_ + ": truncated " + what, pos_);
    }
  }

  std::size_t pos() const { return pos_; }
  const std::uint8_t* data() const { return bytes_.data() + pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

void put_u32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

IdxData load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto image_bytes = read_file(images_path);
  const auto label_bytes = read_file(labels_path);

  IdxData out;
  Reader img(image_bytes, images_path.string());
  const std::uint32_t img_magic = img.u32();
  if (img_magic != kIdxImagesMagic) {
    throw FormatError(images_path.string() + ": bad images magic", 0);
  }
  const std::uint32_t n_images = img.u32();
  out.images.rows = static_cast<int>(img.u32());
  out.images.cols = static_cast<int>(img.u32());
  const auto pixels = static_cast<std::size_t>(out.images.rows) * out.images.cols;

  Reader lab(label_bytes, labels_path.string());
  const std::uint32_t lab_magic = lab.u32();
  if (lab_magic != kIdxLabelsMagic) {
    throw FormatError(labels_path.string() + ": bad labels magic", 0);
  }
  const std::uint32_t n_labels = lab.u32();
  if (n_labels != n_images) {
    throw FormatError("image count " + std::to_string(n_images) +
                          " differs from label count " + std::to_string(n_labels),
                      4);
  }

  img.need(static_cast<std::size_t>(n_images) * pixels, "image data");
  lab.need(n_labels, "label data");
  out.images.pixels.reserve(n_images);
  out.labels.reserve(n_labels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    out.images.pixels.emplace_back(img.data(), img.data() + pixels);
    img.skip(pixels);
    out.labels.push_back(*lab.data());
    lab.skip(1);
  }
  return out;
}

void write_idx_images(const std::filesystem::path& path, const RawImages& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  put_u32(out, kIdxImagesMagic);
  put_u32(out, static_cast<std::uint32_t>(images.size()));
  put_u32(out, static_cast<std::uint32_t>(images.rows));
  put_u32(out, static_cast<std::uint32_t>(images.cols));
  for (const auto& grid : images.pixels) {
    out.write(reinterpret_cast<const char*>(grid.data()),
              static_cast<std::streamsize>(grid.size()));
  }
}

void write_idx_labels(const std::filesystem::path& path, std::span<const int> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  put_u32(out, kIdxLabelsMagic);
  put_u32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) out.put(static_cast<char>(l));
}

}  // namespace uend
