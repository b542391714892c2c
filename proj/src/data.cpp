#include "snn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "snn/random.hpp"

namespace fs = std::filesystem;

namespace snn {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + std::string(text) +
                              "' (expected train, val or test)");
}

Tensor Dataset::gather(std::span<const std::size_t> indices) const {
  const auto& s = images.shape();
  const std::size_t plane = s[1] * s[2] * s[3];
  Tensor out(Shape{indices.size(), s[1], s[2], s[3]});
  auto src = images.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(src.data() + indices[i] * plane, plane, dst.data() + i * plane);
  }
  return out;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.images = gather(indices);
  out.class_count = class_count;
  out.split = split;
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  return out;
}

void normalize(Tensor& images) {
  const std::size_t n = images.dim(0), c = images.dim(1);
  if (c != 3) throw std::invalid_argument("normalize: expected 3 channels");
  const std::size_t area = images.dim(2) * images.dim(3);
  auto x = images.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      float* p = x.data() + (i * c + ch) * area;
      for (std::size_t k = 0; k < area; ++k) p[k] = (p[k] - kNormMean[ch]) / kNormStd[ch];
    }
}

void denormalize(Tensor& images) {
  const std::size_t n = images.dim(0), c = images.dim(1);
  if (c != 3) throw std::invalid_argument("denormalize: expected 3 channels");
  const std::size_t area = images.dim(2) * images.dim(3);
  auto x = images.data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t ch = 0; ch < c; ++ch) {
      float* p = x.data() + (i * c + ch) * area;
      for (std::size_t k = 0; k < area; ++k) p[k] = p[k] * kNormStd[ch] + kNormMean[ch];
    }
}

// CIFAR --------------------------------------------------------------------------

Dataset load_cifar_bin(const fs::path& path, int variant) {
  if (variant != 10 && variant != 100) {
    throw std::invalid_argument("load_cifar_bin: variant must be 10 or 100");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  constexpr std::size_t kPixels = 3 * 32 * 32;
  const std::size_t label_bytes = variant == 10 ? 1 : 2;
  const std::size_t record = label_bytes + kPixels;
  if (bytes.empty() || bytes.size() % record != 0) {
    throw std::runtime_error(path.string() + ": size " + std::to_string(bytes.size()) +
                             " is not a multiple of the " + std::to_string(record) +
                             "-byte CIFAR-" + std::to_string(variant) + " record");
  }
  const std::size_t n = bytes.size() / record;
  Dataset ds;
  ds.class_count = variant;
  ds.images = Tensor(Shape{n, 3, 32, 32});
  ds.labels.resize(n);
  auto x = ds.images.data();
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * record;
    const int label = rec[label_bytes - 1];
    if (label >= variant) {
      throw std::runtime_error(path.string() + ": record " + std::to_string(i) +
                               " has label " + std::to_string(label));
    }
    ds.labels[i] = label;
    for (std::size_t k = 0; k < kPixels; ++k)
      x[i * kPixels + k] = static_cast<float>(rec[label_bytes + k]) / 255.0f;
  }
  return ds;
}

Dataset load_cifar_dir(const fs::path& dir, int variant, Split split) {
  std::vector<fs::path> files;
  if (variant == 10) {
    if (split == Split::test) {
      files.push_back(dir / "test_batch.bin");
    } else {
      for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
    }
  } else {
    files.push_back(dir / (split == Split::test ? "test.bin" : "train.bin"));
  }
  std::vector<Dataset> parts;
  std::size_t total = 0;
  for (const auto& f : files) {
    parts.push_back(load_cifar_bin(f, variant));
    total += parts.back().size();
  }
  Dataset ds;
  ds.class_count = variant;
  ds.split = split;
  ds.images = Tensor(Shape{total, 3, 32, 32});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.images.data().begin(), p.images.data().end(),
              ds.images.data().begin() + offset * 3 * 32 * 32);
    ds.labels.insert(ds.labels.end(), p.labels.begin(), p.labels.end());
    offset += p.size();
  }
  return ds;
}

// TinyImageNet ------------------------------------------------------------------------

namespace {

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw std::runtime_error("missing directory " + dir.string());
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void append_image(std::vector<float>& pixels, const fs::path& file) {
  const Image img = read_image(file);
  auto small = resize_bilinear(img.planes, 3, img.height, img.width, 32, 32);
  pixels.insert(pixels.end(), small.begin(), small.end());
}

}  // namespace

Dataset load_tinyimagenet(const fs::path& dir, Split split) {
  const fs::path wnid_file = dir / "wnids.txt";
  std::ifstream wn(wnid_file);
  if (!wn) throw std::runtime_error("missing class list " + wnid_file.string());
  std::vector<std::string> wnids;
  for (std::string line; std::getline(wn, line);) {
    std::istringstream ls(line);
    std::string id;
    if (ls >> id) wnids.push_back(id);
  }
  std::sort(wnids.begin(), wnids.end());
  wnids.erase(std::unique(wnids.begin(), wnids.end()), wnids.end());
  if (wnids.empty()) throw std::runtime_error(wnid_file.string() + " lists no classes");
  std::map<std::string, int> class_of;
  for (std::size_t i = 0; i < wnids.size(); ++i) class_of[wnids[i]] = static_cast<int>(i);

  Dataset ds;
  ds.class_count = static_cast<int>(wnids.size());
  ds.split = split;
  std::vector<float> pixels;

  if (split == Split::train) {
    for (const auto& id : wnids) {
      for (const auto& f : sorted_files(dir / "train" / id / "images")) {
        append_image(pixels, f);
        ds.labels.push_back(class_of.at(id));
      }
    }
  } else {
    const std::string sub = split == Split::val ? "val" : "test";
    const fs::path ann = dir / sub / (sub + "_annotations.txt");
    std::ifstream in(ann);
    if (!in) {
      throw std::runtime_error("missing annotations file " + ann.string() +
                               (split == Split::test ? " (the public test split is unlabeled)" : ""));
    }
    std::vector<std::pair<std::string, std::string>> rows;
    for (std::string line; std::getline(in, line);) {
      std::istringstream ls(line);
      std::string file, id;
      if (!(ls >> file)) continue;
      if (!(ls >> id)) throw std::runtime_error(ann.string() + ": malformed line '" + line + "'");
      rows.emplace_back(file, id);
    }
    std::sort(rows.begin(), rows.end());
    for (const auto& [file, id] : rows) {
      auto it = class_of.find(id);
      if (it == class_of.end()) {
        throw std::runtime_error(ann.string() + ": unknown class id '" + id + "' for " + file);
      }
      append_image(pixels, dir / sub / "images" / file);
      ds.labels.push_back(it->second);
    }
  }
  ds.images = Tensor(Shape{ds.labels.size(), 3, 32, 32}, std::move(pixels));
  return ds;
}

// Synthetic blobs --------------------------------------------------------------------------

Dataset synth_blobs(std::uint64_t seed, int classes, int per_class, int size) {
  if (classes < 2) throw std::invalid_argument("synth_blobs: need at least 2 classes");
  if (per_class < 1 || size < 4) throw std::invalid_argument("synth_blobs: bad size");
  Rng rng(seed);
  const std::size_t n = std::size_t(classes) * std::size_t(per_class);
  const std::size_t S = static_cast<std::size_t>(size);
  Dataset ds;
  ds.class_count = classes;
  ds.images = Tensor(Shape{n, 3, S, S});
  ds.labels.resize(n);
  auto x = ds.images.data();
  const double two_pi = 2.0 * std::numbers::pi;
  const double radius = 0.28 * size, sigma = 0.15 * size, jitter = 0.04 * size;
  for (std::size_t i = 0; i < n; ++i) {
    const int k = static_cast<int>(i % std::size_t(classes));
    ds.labels[i] = k;
    const double angle = two_pi * k / classes;
    const double cy = 0.5 * (size - 1) + radius * std::sin(angle) + jitter * rng.normal();
    const double cx = 0.5 * (size - 1) + radius * std::cos(angle) + jitter * rng.normal();
    const double amp = 0.75 + 0.1 * rng.normal();
    for (std::size_t ch = 0; ch < 3; ++ch) {
      const double colour = 0.5 + 0.45 * std::cos(angle + two_pi * double(ch) / 3.0);
      for (std::size_t r = 0; r < S; ++r)
        for (std::size_t c = 0; c < S; ++c) {
          const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
          double v = 0.1 + amp * colour * std::exp(-d2 / (2 * sigma * sigma)) +
                     0.03 * rng.normal();
          x[((i * 3 + ch) * S + r) * S + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
  }
  return ds;
}

// Splits -----------------------------------------------------------------------------------

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("train_val_split: fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * double(n)));
  std::vector<std::size_t> val(idx.begin(), idx.begin() + n_val);
  std::vector<std::size_t> train(idx.begin() + n_val, idx.end());
  return {train, val};
}

std::pair<Dataset, Dataset> train_val_split(const Dataset& data, double fraction,
                                            std::uint64_t seed) {
  auto [train_idx, val_idx] = split_indices(data.size(), fraction, seed);
  Dataset train = data.subset(train_idx);
  Dataset val = data.subset(val_idx);
  train.split = Split::train;
  val.split = Split::val;
  return {std::move(train), std::move(val)};
}

}  // namespace snn
