#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "cyclops/error.hpp"
#include "cyclops/image_io.hpp"
#include "cyclops/middlebury_io.hpp"
#include "test_support.hpp"

using namespace cyclops;
using cyclops::testing::Rng;
using cyclops::testing::TempDir;

namespace {

// Independent encoder: header text, then rows bottom-up as 4-byte floats in
// the requested byte order.
std::vector<std::uint8_t> encode(const std::string& header, const std::vector<std::vector<float>>& rows_top_down,
                                 bool little) {
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (auto it = rows_top_down.rbegin(); it != rows_top_down.rend(); ++it) {
    for (float f : *it) {
      std::uint8_t b[4];
      std::memcpy(b, &f, 4);
      if ((std::endian::native == std::endian::little) != little) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      out.insert(out.end(), b, b + 4);
    }
  }
  return out;
}

const float kInf = std::numeric_limits<float>::infinity();

DisparityMap random_map(Rng& rng, int w, int h) {
  DisparityMap m{View::Left, Grid<double>(w, h, 0.0)};
  for (auto& v : m.values.data()) {
    // Values representable in float so a round trip is exact.
    v = cyclops::testing::uniform_int(rng, 0, 9) == 0
            ? kUnknownDisparity
            : double(static_cast<float>(cyclops::testing::uniform(rng, 0.0, 300.0)));
  }
  return m;
}

const char* kAdirondack =
    "cam0=[4161.221 0 1445.577; 0 4161.221 984.686; 0 0 1]\n"
    "cam1=[4161.221 0 1654.636; 0 4161.221 984.686; 0 0 1]\n"
    "doffs=209.059\n"
    "baseline=176.252\n"
    "width=2880\n"
    "height=1988\n"
    "ndisp=280\n"
    "isint=0\n"
    "vmin=23\n"
    "vmax=266\n"
    "dyavg=0\n"
    "dymax=0\n";

}  // namespace

TEST_CASE("parse_pfm reads bottom-up little-endian rows top-down") {
  const auto bytes = encode("Pf\n3 2\n-1.0\n", {{1.0f, 2.0f, 3.0f}, {4.5f, kInf, -0.25f}}, true);
  const auto m = parse_pfm(bytes, View::Right);
  CHECK(m.view == View::Right);
  REQUIRE(m.width() == 3);
  REQUIRE(m.height() == 2);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(2, 0) == 3.0);
  CHECK(m(0, 1) == 4.5);
  CHECK_FALSE(is_known(m(1, 1)));
  CHECK(m(2, 1) == -0.25);
}

TEST_CASE("both byte orders parse to equal values") {
  const std::vector<std::vector<float>> rows{{0.5f, 17.25f}, {kInf, 3.0f}, {8.0f, 1e-3f}};
  const auto le = parse_pfm(encode("Pf\n2 3\n-1.0\n", rows, true));
  const auto be = parse_pfm(encode("Pf\n2 3\n1.0\n", rows, false));
  CHECK(le == be);
}

TEST_CASE("write_pfm emits the canonical encoding") {
  DisparityMap m{View::Left, Grid<double>(1, 1, 2.0)};
  const auto bytes = write_pfm(m);
  CHECK(bytes.size() == 16);
  CHECK(bytes == encode("Pf\n1 1\n-1.0\n", {{2.0f}}, true));

  DisparityMap two{View::Left, Grid<double>(2, 2, kUnknownDisparity)};
  two.values(1, 0) = 7.0;
  CHECK(write_pfm(two) == encode("Pf\n2 2\n-1.0\n", {{kInf, 7.0f}, {kInf, kInf}}, true));
  CHECK(write_pfm(two, 1.0) == encode("Pf\n2 2\n1.000000\n", {{kInf, 7.0f}, {kInf, kInf}}, false));
}

TEST_CASE("non-finite payload values become the unknown sentinel") {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const auto m = parse_pfm(encode("Pf\n2 1\n-1.0\n", {{nan, -kInf}}, true));
  CHECK(m(0, 0) == kUnknownDisparity);
  CHECK(m(1, 0) == kUnknownDisparity);
}

TEST_CASE("write then parse is byte-identical on random maps") {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto m = random_map(rng, cyclops::testing::uniform_int(rng, 1, 40), cyclops::testing::uniform_int(rng, 1, 30));
    const auto bytes = write_pfm(m);
    const auto back = parse_pfm(bytes);
    CHECK(back == m);
    CHECK(write_pfm(back) == bytes);
  }
}

TEST_CASE("malformed PFM input is rejected with a specific error") {
  auto code_of = [](const std::vector<std::uint8_t>& bytes) {
    try {
      parse_pfm(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::Io;
  };
  CHECK(code_of(encode("P6\n1 1\n-1.0\n", {{1.0f}}, true)) == ErrorCode::BadMagic);
  CHECK(code_of(encode("PF\n1 1\n-1.0\n", {{1.0f}}, true)) == ErrorCode::InvalidArgument);
  CHECK(code_of(encode("Pf\n0 1\n-1.0\n", {}, true)) == ErrorCode::Parse);
  CHECK(code_of(encode("Pf\n1 1\n0.0\n", {{1.0f}}, true)) == ErrorCode::Parse);
  auto truncated = encode("Pf\n2 2\n-1.0\n", {{1.0f, 2.0f}, {3.0f, 4.0f}}, true);
  truncated.pop_back();
  CHECK(code_of(truncated) == ErrorCode::Truncated);
  CHECK(code_of({}) == ErrorCode::BadMagic);
}

TEST_CASE("write_pfm refuses empty maps and stray non-finite values") {
  CHECK_THROWS_AS(write_pfm(DisparityMap{}), Error);
  DisparityMap m{View::Left, Grid<double>(1, 1, std::nan(""))};
  CHECK_THROWS_AS(write_pfm(m), Error);
}

TEST_CASE("calib.txt from a real scene") {
  const auto res = parse_calib_with_warnings(kAdirondack);
  const auto& rig = res.rig;
  CHECK(res.warnings.empty());
  CHECK(rig.focal_px == 4161.221);
  CHECK(rig.cx == 1445.577);
  CHECK(rig.cy == 984.686);
  CHECK(rig.doffs == 209.059);
  CHECK(rig.baseline == 176.252);
  CHECK(rig.width == 2880);
  CHECK(rig.height == 1988);
  CHECK(rig.ndisp == 280);
  // Formatting and reparsing preserves every field.
  CHECK(parse_calib(format_calib(rig)) == rig);
}

TEST_CASE("calib.txt problems") {
  std::string missing = kAdirondack;
  missing.replace(missing.find("baseline"), 8, "baseXine");
  try {
    parse_calib(missing);
    FAIL("expected MissingKey");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingKey);
  }
  std::string mismatched = kAdirondack;
  mismatched.replace(mismatched.find("cam1=[4161.221"), 14, "cam1=[4000.000");
  const auto res = parse_calib_with_warnings(mismatched);
  CHECK(res.warnings.size() == 1);
}

TEST_CASE("scene directories round-trip") {
  TempDir dir;
  Rng rng(9);
  ScenePair s;
  s.left_image = cyclops::testing::noise_image(rng, 12, 5);
  s.right_image = cyclops::testing::noise_image(rng, 12, 5);
  s.gt_left = random_map(rng, 12, 5);
  s.rig = parse_calib(kAdirondack);
  s.rig.width = 12;
  s.rig.height = 5;
  write_scene(dir.path() / "tiny", s);
  const auto back = load_scene(dir.path() / "tiny");
  CHECK(back.name == "tiny");
  CHECK(back.left_image == s.left_image);
  CHECK(back.right_image == s.right_image);
  REQUIRE(back.gt_left);
  CHECK(*back.gt_left == *s.gt_left);
  CHECK_FALSE(back.gt_right);
  CHECK(back.rig == s.rig);
}

TEST_CASE("scene loading errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_scene(dir.path() / "absent"), Error);
  CHECK_THROWS_AS(load_scene(dir.path()), Error);
  Rng rng(1);
  ScenePair s;
  s.left_image = cyclops::testing::noise_image(rng, 8, 4);
  s.right_image = cyclops::testing::noise_image(rng, 9, 4);
  s.rig = parse_calib(kAdirondack);
  s.rig.width = 8;
  s.rig.height = 4;
  write_scene(dir.path() / "bad", s);
  try {
    load_scene(dir.path() / "bad");
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("PGM images load as intensity") {
  TempDir dir;
  Grid<std::uint8_t> g(3, 2, 0);
  g(0, 0) = 255;
  g(2, 1) = 51;
  write_pgm(dir.path() / "a.pgm", g);
  const auto img = read_intensity_image(dir.path() / "a.pgm");
  CHECK(img(0, 0) == 1.0);
  CHECK(img(2, 1) == 51.0 / 255.0);
  CHECK(img(1, 0) == 0.0);
}

TEST_CASE("downsampling averages images and rescales geometry") {
  ScenePair s;
  s.left_image = Image(4, 2, 0.0);
  s.left_image(0, 0) = 1.0;
  s.right_image = Image(4, 2, 0.5);
  s.gt_left = DisparityMap{View::Left, Grid<double>(4, 2, 8.0)};
  s.gt_left->values(2, 0) = kUnknownDisparity;
  s.rig = parse_calib(kAdirondack);
  s.rig.width = 4;
  s.rig.height = 2;
  const auto d = downsample_scene(s, 2);
  CHECK(d.width() == 2);
  CHECK(d.height() == 1);
  CHECK(d.left_image(0, 0) == 0.25);
  CHECK(d.right_image(1, 0) == 0.5);
  CHECK(d.gt_left->values(0, 0) == 4.0);
  CHECK_FALSE(is_known(d.gt_left->values(1, 0)));
  CHECK(d.rig.focal_px == s.rig.focal_px / 2);
  CHECK(d.rig.ndisp == 140);
  // Depth is unchanged by the rescale.
  CHECK(disparity_to_depth(d.rig, 4.0) == doctest::Approx(disparity_to_depth(s.rig, 8.0)));
}
