#include "sparseadv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "sparseadv/error.hpp"

namespace sparseadv {

namespace fs = std::filesystem;

void validate(const DatasetHandle& ds) {
  if (ds.images.size() != ds.labels.size()) {
    throw ParseError("dataset has " + std::to_string(ds.images.size()) +
                     " images but " + std::to_string(ds.labels.size()) +
                     " labels");
  }
  for (int label : ds.labels) {
    if (label < 0 || label >= ds.num_classes) {
      throw ParseError("label " + std::to_string(label) + " outside [0, " +
                       std::to_string(ds.num_classes) + ")");
    }
  }
  for (const auto& img : ds.images) {
    if (!img.same_shape(ds.images.front())) {
      throw ParseError("dataset images have mixed dimensions");
    }
  }
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const std::string& path,
                        std::size_t offset) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) {
    throw ParseError(path + ": truncated at byte offset " +
                     std::to_string(offset));
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

DatasetHandle load_idx(const std::string& images_path,
                       const std::string& labels_path) {
  std::ifstream img_in(images_path, std::ios::binary);
  if (!img_in) throw ParseError("cannot open " + images_path);
  std::ifstream lbl_in(labels_path, std::ios::binary);
  if (!lbl_in) throw ParseError("cannot open " + labels_path);

  const std::uint32_t img_magic = read_be32(img_in, images_path, 0);
  if (img_magic != kImagesMagic) {
    throw ParseError(images_path + ": bad magic number");
  }
  const std::uint32_t count = read_be32(img_in, images_path, 4);
  const std::uint32_t rows = read_be32(img_in, images_path, 8);
  const std::uint32_t cols = read_be32(img_in, images_path, 12);

  const std::uint32_t lbl_magic = read_be32(lbl_in, labels_path, 0);
  if (lbl_magic != kLabelsMagic) {
    throw ParseError(labels_path + ": bad magic number");
  }
  const std::uint32_t lbl_count = read_be32(lbl_in, labels_path, 4);
  if (lbl_count != count) {
    throw ParseError("image count " + std::to_string(count) +
                     " does not match label count " +
                     std::to_string(lbl_count));
  }

  DatasetHandle ds;
  ds.source = images_path + " + " + labels_path;
  ds.format = "idx";
  ds.images.reserve(count);
  ds.labels.reserve(count);

  const std::size_t plane = std::size_t(rows) * cols;
  std::vector<unsigned char> buf(plane);
  for (std::uint32_t i = 0; i < count; ++i) {
    img_in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(plane));
    if (static_cast<std::size_t>(img_in.gcount()) != plane) {
      throw ParseError(images_path + ": truncated at byte offset " +
                       std::to_string(16 + std::size_t(i) * plane +
                                      static_cast<std::size_t>(
                                          std::max<std::streamsize>(
                                              img_in.gcount(), 0))));
    }
    ImageTensor img(1, static_cast<int>(rows), static_cast<int>(cols));
    for (std::size_t p = 0; p < plane; ++p) {
      img.pixels[static_cast<Eigen::Index>(p)] = buf[p] / 255.0;
    }
    ds.images.push_back(std::move(img));

    char lbl = 0;
    lbl_in.read(&lbl, 1);
    if (lbl_in.gcount() != 1) {
      throw ParseError(labels_path + ": truncated at byte offset " +
                       std::to_string(8 + i));
    }
    ds.labels.push_back(static_cast<unsigned char>(lbl));
  }

  ds.num_classes =
      ds.labels.empty() ? 0 : *std::max_element(ds.labels.begin(),
                                                ds.labels.end()) + 1;
  validate(ds);
  return ds;
}

void save_idx(const DatasetHandle& ds, const std::string& images_path,
              const std::string& labels_path) {
  if (ds.images.empty()) throw ParseError("refusing to save empty dataset");
  if (ds.images.front().channels != 1) {
    throw ParseError("idx format stores single-channel images only");
  }
  std::ofstream img_out(images_path, std::ios::binary | std::ios::trunc);
  if (!img_out) throw ParseError("cannot open " + images_path);
  std::ofstream lbl_out(labels_path, std::ios::binary | std::ios::trunc);
  if (!lbl_out) throw ParseError("cannot open " + labels_path);

  write_be32(img_out, kImagesMagic);
  write_be32(img_out, static_cast<std::uint32_t>(ds.images.size()));
  write_be32(img_out, static_cast<std::uint32_t>(ds.images.front().height));
  write_be32(img_out, static_cast<std::uint32_t>(ds.images.front().width));
  write_be32(lbl_out, kLabelsMagic);
  write_be32(lbl_out, static_cast<std::uint32_t>(ds.labels.size()));

  std::vector<unsigned char> buf;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto& img = ds.images[i];
    buf.resize(static_cast<std::size_t>(img.pixel_count()));
    for (Eigen::Index p = 0; p < img.pixel_count(); ++p) {
      const double v = std::clamp(img.pixels[p], 0.0, 1.0);
      buf[static_cast<std::size_t>(p)] =
          static_cast<unsigned char>(std::lround(v * 255.0));
    }
    img_out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size()));
    const char lbl = static_cast<char>(ds.labels[i]);
    lbl_out.write(&lbl, 1);
  }
  if (!img_out || !lbl_out) throw ParseError("short write saving dataset");
}

namespace {

// Reads one whitespace-delimited PNM header token, skipping '#' comments.
// Consumes exactly one trailing whitespace byte, which after the maxval
// token is the separator before the raster.
std::string pnm_token(std::istream& in, const std::string& path) {
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
    } else if (!std::isspace(ch)) {
      break;
    }
  }
  if (ch == EOF) throw ParseError(path + ": truncated PNM header");
  std::string tok(1, static_cast<char>(ch));
  while ((ch = in.get()) != EOF && !std::isspace(ch)) {
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

ImageTensor load_pnm_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);

  const std::string magic = pnm_token(in, path);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw ParseError(path + ": unsupported PNM magic '" + magic + "'");
  }
  const int width = std::stoi(pnm_token(in, path));
  const int height = std::stoi(pnm_token(in, path));
  const int maxval = std::stoi(pnm_token(in, path));
  if (width <= 0 || height <= 0) {
    throw ParseError(path + ": nonpositive dimensions");
  }
  if (maxval != 255) {
    throw ParseError(path + ": unsupported maxval " + std::to_string(maxval));
  }

  const std::size_t raster =
      std::size_t(channels) * std::size_t(width) * std::size_t(height);
  std::vector<unsigned char> buf(raster);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(raster));
  if (static_cast<std::size_t>(in.gcount()) != raster) {
    throw ParseError(path + ": truncated raster, expected " +
                     std::to_string(raster) + " bytes, got " +
                     std::to_string(in.gcount()));
  }

  // PNM interleaves channels per pixel; our layout is channel-major.
  ImageTensor img(channels, height, width);
  const Eigen::Index plane = img.plane();
  for (Eigen::Index p = 0; p < plane; ++p) {
    for (int c = 0; c < channels; ++c) {
      img.pixels[c * plane + p] =
          buf[static_cast<std::size_t>(p) * channels + c] / 255.0;
    }
  }
  return img;
}

}  // namespace

DatasetHandle load_pnm(const std::string& dir_path,
                       const std::string& manifest_path) {
  std::ifstream manifest(manifest_path);
  if (!manifest) throw ParseError("cannot open " + manifest_path);

  std::map<std::string, int> label_of;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("filename", 0) == 0) continue;  // header
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw ParseError(manifest_path + ":" + std::to_string(line_no) +
                       ": expected filename,label");
    }
    const std::string name = line.substr(0, comma);
    int label = 0;
    try {
      label = std::stoi(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError(manifest_path + ":" + std::to_string(line_no) +
                       ": bad label for " + name);
    }
    label_of[name] = label;
  }

  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir_path)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pnm" || ext == ".pgm" || ext == ".ppm") {
      files.push_back(entry.path().filename().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw ParseError("no PNM files found under " + dir_path);
  }

  DatasetHandle ds;
  ds.source = dir_path + " + " + manifest_path;
  ds.format = "pnm";
  for (const auto& name : files) {
    const auto it = label_of.find(name);
    if (it == label_of.end()) {
      throw ParseError("image " + name + " is missing from the manifest");
    }
    ImageTensor img = load_pnm_file((fs::path(dir_path) / name).string());
    if (!ds.images.empty() && !img.same_shape(ds.images.front())) {
      throw ParseError(name + ": dimensions differ from the rest of the set");
    }
    ds.images.push_back(std::move(img));
    ds.labels.push_back(it->second);
  }
  ds.num_classes =
      *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
  validate(ds);
  return ds;
}

}  // namespace sparseadv
