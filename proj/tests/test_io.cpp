#include "geomix/io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace geomix;

namespace {

GridField sample_field() {
  GridField f{"density", 3, 2, Box{0, 1, -1, 1}, DType::f64, {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 0.0, 42}};
  return f;
}

}  // namespace

TEST(GridFieldIO, RoundTripIsExact) {
  const GridField f = sample_field();
  std::stringstream ss;
  write_grid_field(ss, f);
  const GridField g = read_grid_field(ss);
  EXPECT_EQ(g.name, "density");
  EXPECT_EQ(g.nx, 3);
  EXPECT_EQ(g.ny, 2);
  EXPECT_EQ(g.bounds.y_lo, -1.0);
  EXPECT_EQ(g.values, f.values);
}

TEST(GridFieldIO, HeaderLayout) {
  std::stringstream ss;
  write_grid_field(ss, sample_field());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(ss, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 8u);
  EXPECT_EQ(lines[0], "field density");
  EXPECT_EQ(lines[1], "nx 3");
  EXPECT_EQ(lines[2], "ny 2");
  EXPECT_EQ(lines[3], "bounds 0 1 -1 1");
  EXPECT_EQ(lines[4], "dtype f64");
  EXPECT_EQ(lines[5], "layout row-major");
}

TEST(GridFieldIO, IntegerLabels) {
  GridField f{"labels", 2, 2, Box{0, 1, 0, 1}, DType::i32, {0, 1, 2, 1}};
  std::stringstream ss;
  write_grid_field(ss, f);
  EXPECT_NE(ss.str().find("0 1\n2 1\n"), std::string::npos);
  EXPECT_EQ(read_grid_field(ss).values, f.values);
}

TEST(GridFieldIO, MalformedInput) {
  std::stringstream missing("field x\nnx 2\n");
  EXPECT_THROW(read_grid_field(missing), Error);
  std::stringstream short_rows("field x\nnx 2\nny 2\nbounds 0 1 0 1\ndtype f64\nlayout row-major\n1 2\n3\n");
  EXPECT_THROW(read_grid_field(short_rows), Error);
  std::stringstream bad_number("field x\nnx 2\nny 1\nbounds 0 1 0 1\ndtype f64\nlayout row-major\n1 abc\n");
  EXPECT_THROW(read_grid_field(bad_number), Error);
  EXPECT_THROW(load_grid_field("/nonexistent/file.field"), Error);
}

TEST(SpectrumIO, RoundTrip) {
  const std::vector<double> l{0.0, -0.000791519141031645, -2.5};
  std::stringstream ss;
  write_spectrum(ss, l);
  EXPECT_EQ(ss.str().substr(0, 4), "1 0\n");
  const std::vector<double> r = read_spectrum(ss);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_NEAR(r[1], l[1], 1e-18);
}

TEST(VelocityIO, RoundTripAndModel) {
  VelocitySamples s;
  s.nx = 2;
  s.ny = 3;
  s.bounds = Box{0, 1, 0, 2};
  s.periodic = {true, false};
  s.times = {0.0, 0.5};
  s.u = {{1, 2, 3, 4, 5, 6}, {1, 1, 1, 1, 1, 1}};
  s.v = {{0, 0, 0, 0, 0, 0}, {-1, -1, -1, -1, -1, -1}};
  std::stringstream ss;
  write_velocity_data(ss, s);
  const VelocitySamples r = read_velocity_data(ss);
  EXPECT_EQ(r.nx, 2);
  EXPECT_EQ(r.ny, 3);
  EXPECT_TRUE(r.periodic[0]);
  EXPECT_EQ(r.times, s.times);
  EXPECT_EQ(r.u, s.u);
  EXPECT_EQ(r.v, s.v);
}

TEST(VelocityIO, ShapeErrors) {
  std::stringstream bad("nx 2\nny 2\nnt 1\nbounds 0 1 0 1\ntimes 0\n1 2\n3 4\n1 2\n");
  EXPECT_THROW(read_velocity_data(bad), Error);
  std::stringstream times("nx 2\nny 2\nnt 2\nbounds 0 1 0 1\ntimes 0\n");
  EXPECT_THROW(read_velocity_data(times), Error);
}

TEST(Hash, Fnv1a64) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Render, PpmHeaderAndOrientation) {
  // Bottom row 0, top row 1: the first pixel row written is the top (y max).
  GridField f{"x", 2, 2, Box{0, 1, 0, 1}, DType::f64, {0, 0, 1, 1}};
  const std::string img = render_heatmap(f, Colormap::gray);
  const std::string header = "P6\n2 2\n255\n";
  ASSERT_EQ(img.size(), header.size() + 12);
  EXPECT_EQ(img.substr(0, header.size()), header);
  EXPECT_EQ(static_cast<unsigned char>(img[header.size()]), 255);
  EXPECT_EQ(static_cast<unsigned char>(img[header.size() + 6]), 0);
}

TEST(Render, ConstantFieldAndClip) {
  GridField f{"c", 2, 1, Box{0, 1, 0, 1}, DType::f64, {5, 5}};
  const std::string img = render_heatmap(f, Colormap::gray);
  EXPECT_EQ(static_cast<unsigned char>(img.back()), 128);
  GridField g{"g", 2, 1, Box{0, 1, 0, 1}, DType::f64, {-10, 10}};
  const std::string clipped = render_heatmap(g, Colormap::gray, std::make_pair(0.0, 1.0));
  EXPECT_EQ(static_cast<unsigned char>(clipped.back()), 255);
}

TEST(Render, NanIsRejected) {
  GridField f{"n", 2, 1, Box{0, 1, 0, 1}, DType::f64, {1, std::numeric_limits<double>::quiet_NaN()}};
  EXPECT_THROW(render_heatmap(f, Colormap::viridis), Error);
}

TEST(Colormap, Endpoints) {
  EXPECT_EQ(colormap_rgb(Colormap::gray, 0.0), (std::array<unsigned char, 3>{0, 0, 0}));
  EXPECT_EQ(colormap_rgb(Colormap::gray, 1.0), (std::array<unsigned char, 3>{255, 255, 255}));
  const auto lo = colormap_rgb(Colormap::viridis, 0.0);
  const auto hi = colormap_rgb(Colormap::viridis, 1.0);
  EXPECT_LT(lo[1], hi[1]);
  EXPECT_EQ(parse_colormap("coolwarm"), Colormap::coolwarm);
  EXPECT_THROW(parse_colormap("jet"), Error);
}
