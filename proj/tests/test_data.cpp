#include <doctest.h>

#include <cstddef>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "oracles.hpp"
#include "snn/data.hpp"

#include <jpeglib.h>

using namespace snn;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / "snn_data_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_records(const fs::path& p, const std::vector<std::vector<unsigned char>>& recs) {
  std::ofstream out(p, std::ios::binary);
  for (const auto& r : recs) out.write(reinterpret_cast<const char*>(r.data()), long(r.size()));
}

std::vector<unsigned char> cifar_record(std::vector<unsigned char> labels, unsigned char fill) {
  labels.resize(labels.size() + 3072, fill);
  return labels;
}

Image checkerboard(std::size_t size, std::size_t cell) {
  Image img{size, size, std::vector<float>(3 * size * size)};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < size; ++y)
      for (std::size_t x = 0; x < size; ++x)
        img.planes[(c * size + y) * size + x] = ((y / cell + x / cell) % 2) ? 1.0f : 0.0f;
  return img;
}

Image constant(std::size_t size, float r, float g, float b) {
  Image img{size, size, std::vector<float>(3 * size * size)};
  const float v[] = {r, g, b};
  for (std::size_t c = 0; c < 3; ++c)
    std::fill_n(img.planes.begin() + long(c * size * size), size * size, v[c]);
  return img;
}

void write_jpeg(const fs::path& p, std::size_t h, std::size_t w, unsigned char r,
                unsigned char g, unsigned char b) {
  FILE* f = std::fopen(p.c_str(), "wb");
  REQUIRE(f);
  jpeg_compress_struct info{};
  jpeg_error_mgr err{};
  info.err = jpeg_std_error(&err);
  jpeg_create_compress(&info);
  jpeg_stdio_dest(&info, f);
  info.image_width = JDIMENSION(w);
  info.image_height = JDIMENSION(h);
  info.input_components = 3;
  info.in_color_space = JCS_RGB;
  jpeg_set_defaults(&info);
  jpeg_set_quality(&info, 100, TRUE);
  jpeg_start_compress(&info, TRUE);
  std::vector<unsigned char> row(w * 3);
  for (std::size_t x = 0; x < w; ++x) {
    row[3 * x] = r;
    row[3 * x + 1] = g;
    row[3 * x + 2] = b;
  }
  while (info.next_scanline < info.image_height) {
    JSAMPROW rows[] = {row.data()};
    jpeg_write_scanlines(&info, rows, 1);
  }
  jpeg_finish_compress(&info);
  jpeg_destroy_compress(&info);
  std::fclose(f);
}

// wnids.txt, train/<id>/images/*.ppm, val/images + val/val_annotations.txt
fs::path tiny_fixture() {
  const auto d = fresh_dir("tin");
  std::ofstream(d / "wnids.txt") << "n02\nn01\n";
  fs::create_directories(d / "train" / "n01" / "images");
  fs::create_directories(d / "train" / "n02" / "images");
  fs::create_directories(d / "val" / "images");
  write_ppm(d / "train" / "n01" / "images" / "a.ppm", constant(64, 1.0f, 0.0f, 0.0f));
  write_ppm(d / "train" / "n01" / "images" / "b.ppm", checkerboard(64, 1));
  write_ppm(d / "train" / "n02" / "images" / "c.ppm", constant(64, 0.0f, 0.0f, 1.0f));
  write_ppm(d / "val" / "images" / "v0.ppm", constant(64, 0.2f, 0.4f, 0.6f));
  write_ppm(d / "val" / "images" / "v1.ppm", constant(64, 1.0f, 1.0f, 1.0f));
  std::ofstream(d / "val" / "val_annotations.txt")
      << "v1.ppm\tn01\t0\t0\t63\t63\nv0.ppm\tn02\t0\t0\t63\t63\n";
  return d;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("CIFAR-10 records") {
  const auto d = fresh_dir("c10");
  write_records(d / "two.bin", {cifar_record({7}, 255), cifar_record({0}, 0)});
  const Dataset ds = load_cifar_bin(d / "two.bin", 10);
  REQUIRE(ds.size() == 2);
  CHECK(ds.class_count == 10);
  CHECK(ds.labels == std::vector<int>{7, 0});
  CHECK(ds.images.shape() == Shape{2, 3, 32, 32});
  for (std::size_t k = 0; k < 3072; ++k) {
    CHECK(ds.images[k] == 1.0f);
    CHECK(ds.images[3072 + k] == 0.0f);
  }
  // plane order is kept: byte 1024 is the first green pixel
  auto rec = cifar_record({1}, 0);
  rec[1 + 1024] = 51;
  write_records(d / "one.bin", {rec});
  const Dataset one = load_cifar_bin(d / "one.bin", 10);
  CHECK(one.images[1024] == 0.2f);
  CHECK(one.images[0] == 0.0f);

  // reload is identical
  const Dataset again = load_cifar_bin(d / "two.bin", 10);
  CHECK(std::equal(again.images.data().begin(), again.images.data().end(),
                   ds.images.data().begin()));
}

TEST_CASE("CIFAR-100 uses the fine label") {
  const auto d = fresh_dir("c100");
  write_records(d / "f.bin", {cifar_record({3, 88}, 10), cifar_record({19, 5}, 10)});
  const Dataset ds = load_cifar_bin(d / "f.bin", 100);
  CHECK(ds.labels == std::vector<int>{88, 5});
  CHECK(ds.class_count == 100);
}

TEST_CASE("CIFAR length and label errors") {
  const auto d = fresh_dir("cbad");
  auto rec = cifar_record({2}, 0);
  rec.pop_back();
  write_records(d / "short.bin", {cifar_record({2}, 0), rec});
  CHECK_THROWS_WITH_AS(load_cifar_bin(d / "short.bin", 10),
                       doctest::Contains("not a multiple"), std::runtime_error);
  write_records(d / "label.bin", {cifar_record({12}, 0)});
  CHECK_THROWS(load_cifar_bin(d / "label.bin", 10));
  // a CIFAR-10 file is not a whole number of CIFAR-100 records
  write_records(d / "ten.bin", {cifar_record({1}, 0), cifar_record({1}, 0)});
  CHECK_THROWS(load_cifar_bin(d / "ten.bin", 100));
  CHECK_THROWS(load_cifar_bin(d / "absent.bin", 10));
  CHECK_THROWS(load_cifar_dir(d, 10, Split::train));
}

TEST_CASE("bilinear resize") {
  for (std::size_t cell : {1, 3, 8}) {
    const Image img = checkerboard(64, cell);
    const auto out = resize_bilinear(img.planes, 3, 64, 64, 32, 32);
    const std::vector<float> plane(img.planes.begin(), img.planes.begin() + 64 * 64);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 32; ++i)
        for (std::size_t j = 0; j < 32; ++j) {
          const double want = oracle::bilinear_at(plane, 64, 64, (i + 0.5) * 2.0 - 0.5,
                                                  (j + 0.5) * 2.0 - 0.5);
          CHECK(std::abs(out[(c * 32 + i) * 32 + j] - want) < 1e-6);
        }
  }
  // non-integer ratio and upsampling
  Rng rng(17);
  std::vector<float> src(5 * 7);
  for (auto& v : src) v = rng.uniform();
  const auto up = resize_bilinear(src, 1, 5, 7, 9, 4);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const double want = oracle::bilinear_at(src, 5, 7, (i + 0.5) * 5.0 / 9.0 - 0.5,
                                              (j + 0.5) * 7.0 / 4.0 - 0.5);
      CHECK(std::abs(up[i * 4 + j] - want) < 1e-6);
    }
  const Image flat = constant(64, 0.3f, 0.6f, 0.9f);
  const auto small = resize_bilinear(flat.planes, 3, 64, 64, 32, 32);
  for (std::size_t k = 0; k < small.size(); ++k)
    CHECK(small[k] == flat.planes[(k / 1024) * 4096]);
}

TEST_CASE("TinyImageNet directory") {
  const auto d = tiny_fixture();
  const Dataset tr = load_tinyimagenet(d, Split::train);
  CHECK(tr.class_count == 2);
  CHECK(tr.labels == std::vector<int>{0, 0, 1});
  CHECK(tr.images.shape() == Shape{3, 3, 32, 32});
  for (std::size_t k = 0; k < 1024; ++k) {
    CHECK(tr.images[k] == 1.0f);         // red plane of a.ppm
    CHECK(tr.images[1024 + k] == 0.0f);  // green plane
  }
  // 1-pixel checkerboard averages to exactly one half
  for (std::size_t k = 0; k < 3072; ++k) CHECK(tr.images[3072 + k] == 0.5f);

  const Dataset val = load_tinyimagenet(d, Split::val);
  CHECK(val.labels == std::vector<int>{1, 0});  // v0 (n02), v1 (n01)
  CHECK(val.images[0] == 0.2f);
  CHECK(val.split == Split::val);

  CHECK_THROWS_WITH(load_tinyimagenet(d, Split::test), doctest::Contains("annotations"));
  std::ofstream(d / "val" / "val_annotations.txt") << "v0.ppm\tn99\t0\t0\t1\t1\n";
  CHECK_THROWS_WITH(load_tinyimagenet(d, Split::val), doctest::Contains("n99"));
  fs::remove(d / "val" / "val_annotations.txt");
  CHECK_THROWS_WITH(load_tinyimagenet(d, Split::val), doctest::Contains("annotations"));
}

TEST_CASE("JPEG and PPM decoding") {
  const auto d = fresh_dir("img");
  write_jpeg(d / "c.jpeg", 64, 48, 200, 40, 120);
  const Image img = read_image(d / "c.jpeg");
  CHECK(img.height == 64);
  CHECK(img.width == 48);
  const float want[] = {200 / 255.0f, 40 / 255.0f, 120 / 255.0f};
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < 64 * 48; k += 97)
      CHECK(std::abs(img.planes[c * 64 * 48 + k] - want[c]) <= 3.0f / 255.0f);

  const Image board = checkerboard(6, 2);
  write_ppm(d / "b.ppm", board);
  CHECK(read_image(d / "b.ppm").planes == board.planes);

  std::ofstream(d / "junk.jpg") << "not an image";
  CHECK_THROWS(read_image(d / "junk.jpg"));
}

TEST_CASE("normalization") {
  Tensor t(Shape{1, 3, 1, 2},
           std::vector<float>{0.485f, 0.0f, 0.456f + 0.224f, 1.0f, 0.406f, 0.5f});
  Tensor copy = t.clone();
  normalize(t);
  CHECK(t[0] == doctest::Approx(0.0f));
  CHECK(t[2] == doctest::Approx(1.0f));
  CHECK(t[4] == doctest::Approx(0.0f));
  CHECK(t[1] == doctest::Approx(-0.485f / 0.229f));
  denormalize(t);
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(std::abs(t[i] - copy[i]) < 1e-6f);

  Rng rng(18);
  Tensor r = oracle::random_tensor({4, 3, 5, 5}, rng, 0.0f, 1.0f);
  Tensor rc = r.clone();
  normalize(r);
  denormalize(r);
  for (std::size_t i = 0; i < r.numel(); ++i) CHECK(std::abs(r[i] - rc[i]) < 1e-6f);
}

TEST_CASE("synthetic blobs") {
  const Dataset a = synth_blobs(42, 4, 50, 16), b = synth_blobs(42, 4, 50, 16);
  CHECK(a.labels == b.labels);
  CHECK(std::memcmp(a.images.data().data(), b.images.data().data(), a.images.numel() * 4) == 0);
  const Dataset c = synth_blobs(43, 4, 50, 16);
  CHECK(std::memcmp(a.images.data().data(), c.images.data().data(), a.images.numel() * 4) != 0);

  std::vector<int> per(4, 0);
  for (int l : a.labels) ++per[std::size_t(l)];
  for (int n : per) CHECK(n == 50);

  // nearest centroid, fitted on one seed and scored on another
  const Dataset test = synth_blobs(7, 4, 50, 16);
  const std::size_t dim = 3 * 16 * 16;
  std::vector<std::vector<double>> centroid(4, std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < dim; ++k)
      centroid[std::size_t(a.labels[i])][k] += a.images[i * dim + k] / 50.0;
  int correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < 4; ++k) {
      double dist = 0.0;
      for (std::size_t p = 0; p < dim; ++p) {
        const double diff = test.images[i * dim + p] - centroid[std::size_t(k)][p];
        dist += diff * diff;
      }
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    correct += best == test.labels[i];
  }
  CHECK(double(correct) / double(test.size()) >= 0.95);
  CHECK_THROWS(synth_blobs(1, 1, 10, 16));
}

TEST_CASE("train/validation split") {
  const auto [tr, va] = split_indices(100, 0.1, 42);
  CHECK(tr.size() == 90);
  CHECK(va.size() == 10);
  std::set<std::size_t> all(tr.begin(), tr.end());
  for (auto i : va) CHECK(all.insert(i).second);
  CHECK(all.size() == 100);
  CHECK(*all.rbegin() == 99);
  const auto again = split_indices(100, 0.1, 42);
  CHECK(again.first == tr);
  CHECK(again.second == va);
  CHECK(split_indices(100, 0.1, 43).second != va);

  const Dataset d = synth_blobs(1, 2, 10, 8);
  const auto [t, v] = train_val_split(d, 0.25, 3);
  CHECK(t.size() == 15);
  CHECK(v.size() == 5);
  CHECK(t.class_count == 2);
  CHECK(t.images.dim(0) == 15);
}

}  // TEST_SUITE
