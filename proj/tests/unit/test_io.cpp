#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "blurrast/config.hpp"
#include "blurrast/image_io.hpp"

using namespace blurrast;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path d = fs::temp_directory_path() / "blurrast_unit_io";
  fs::create_directories(d);
  return d;
}

std::vector<unsigned char> file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

BlurFrame random_frame(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  BlurFrame f;
  f.width = w;
  f.height = h;
  f.rgb.resize(w * h * 3);
  f.alpha.resize(w * h);
  for (int p = 0; p < w * h; ++p) {
    f.alpha[p] = u(rng);
    for (int c = 0; c < 3; ++c) f.rgb[p * 3 + c] = u(rng) * f.alpha[p];  // premultiplied
  }
  return f;
}

}  // namespace

TEST_CASE("rfi: header layout and round trip") {
  RfiImage img;
  img.width = 3;
  img.height = 2;
  img.channels = 1;
  img.data = {0.0f, 1.0f, -2.5f, 3.25f, 1e-30f, 7.0f};
  const fs::path p = scratch_dir() / "a.rfi";
  write_rfi(p, img);
  const auto bytes = file_bytes(p);
  REQUIRE(bytes.size() == 16 + 6 * 4);
  CHECK(std::memcmp(bytes.data(), "RFI1", 4) == 0);
  CHECK(bytes[4] == 3);
  CHECK(bytes[5] == 0);
  CHECK(bytes[8] == 2);
  CHECK(bytes[12] == 1);
  // 1.0f little-endian: 00 00 80 3f
  CHECK(bytes[20] == 0x00);
  CHECK(bytes[22] == 0x80);
  CHECK(bytes[23] == 0x3f);
  const RfiImage r = read_rfi(p);
  CHECK(r.width == 3);
  CHECK(r.height == 2);
  CHECK(r.data == img.data);
}

TEST_CASE("rfi: malformed files") {
  const fs::path d = scratch_dir();
  {
    std::ofstream(d / "bad.rfi", std::ios::binary) << "XXXX0000000000000000";
  }
  CHECK_THROWS_AS(read_rfi(d / "bad.rfi"), InputError);
  RfiImage img;
  img.width = img.height = 4;
  img.channels = 4;
  img.data.assign(64, 0.5f);
  write_rfi(d / "trunc.rfi", img);
  fs::resize_file(d / "trunc.rfi", 40);
  CHECK_THROWS_AS(read_rfi(d / "trunc.rfi"), InputError);
  CHECK_THROWS_AS(read_rfi(d / "missing.rfi"), InputError);
  img.data.pop_back();
  CHECK_THROWS_AS(write_rfi(d / "x.rfi", img), InputError);
}

TEST_CASE("rfi: BlurFrame conversion") {
  std::mt19937_64 rng(51);
  const BlurFrame f = random_frame(rng, 7, 5);
  const BlurFrame g = frame_from_rfi(to_rfi(f));
  CHECK(g.width == 7);
  CHECK(g.height == 5);
  for (std::size_t i = 0; i < f.rgb.size(); ++i) CHECK(g.rgb[i] == static_cast<float>(f.rgb[i]));
  for (std::size_t i = 0; i < f.alpha.size(); ++i) CHECK(g.alpha[i] == static_cast<float>(f.alpha[i]));
}

TEST_CASE("png: straight alpha, gamma encoding, round trip") {
  BlurFrame f;
  f.width = 2;
  f.height = 1;
  f.alpha = {0.5, 0.0};
  f.rgb = {0.25, 0.5, 0.0, 0.3, 0.3, 0.3};
  const fs::path p = scratch_dir() / "a.png";
  write_png(p, f);
  {
    const BlurFrame r = read_png(p);
    REQUIRE(r.width == 2);
    CHECK(r.alpha[0] == doctest::Approx(128.0 / 255.0));
    CHECK(r.alpha[1] == 0.0);
    // Straight 0.5 encodes to round(255 * 0.5^(1/2.2)) = 186.
    const double straight = r.rgb[0] / r.alpha[0];
    CHECK(straight == doctest::Approx(std::pow(186.0 / 255.0, 2.2)));
    CHECK(r.rgb[2] == 0.0);
    CHECK(r.rgb[3] == 0.0);
  }

  std::mt19937_64 rng(52);
  const BlurFrame big = random_frame(rng, 16, 9);
  write_png(p, big);
  const BlurFrame back = load_image(p);
  for (std::size_t i = 0; i < big.alpha.size(); ++i) CHECK(std::abs(back.alpha[i] - big.alpha[i]) <= 0.5 / 255 + 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < big.rgb.size(); ++i) {
    const std::size_t px = i / 3;
    if (big.alpha[px] < 0.2) continue;
    worst = std::max(worst, std::abs(back.rgb[i] - big.rgb[i]));
  }
  CHECK(worst < 0.02);
}

TEST_CASE("load_image: dispatch and errors") {
  const fs::path d = scratch_dir();
  CHECK_THROWS_AS(load_image(d / "none.png"), InputError);
  {
    std::ofstream(d / "x.bmp") << "x";
  }
  CHECK_THROWS_AS(load_image(d / "x.bmp"), InputError);
  {
    std::ofstream(d / "fake.png") << "not a png";
  }
  CHECK_THROWS_AS(load_image(d / "fake.png"), InputError);
}

TEST_CASE("golden: rotation 12 x 20 render is bit-exact") {
  const SceneConfig cfg = load_scene(fs::path(BLURRAST_REPO_DATA) / "scenes" / "icosahedron_rotation.json");
  const RfiImage now = to_rfi(cfg.scene.render(false));
  const RfiImage gold = read_rfi(fs::path(BLURRAST_TEST_DATA) / "golden_rotation_12x20.rfi");
  REQUIRE(now.width == gold.width);
  REQUIRE(now.height == gold.height);
  REQUIRE(now.data.size() == gold.data.size());
  CHECK(std::memcmp(now.data.data(), gold.data.data(), now.data.size() * sizeof(float)) == 0);
}
