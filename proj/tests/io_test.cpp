// Copyright 2026 The dpclip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "dpclip/arch_io.hpp"
#include "dpclip/data.hpp"
#include "dpclip/errors.hpp"
#include "dpclip/report.hpp"
#include "dpclip/train.hpp"

namespace dpclip {
namespace {

const std::string kData = DPCLIP_DATA_DIR;

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("dpclip_io_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(ArchIo, Vgg11) {
  const ArchSpec a = load_arch(kData + "/arch/vgg11_224.json");
  std::size_t convs = 0, linears = 0;
  std::vector<std::size_t> ladder;
  for (std::size_t idx : a.trainable_layers()) {
    const LayerSpec& l = a.layers[idx];
    if (l.kind == LayerKind::Conv) {
      ++convs;
      ladder.push_back(l.conv.input[0]);
    } else {
      ++linears;
    }
  }
  EXPECT_EQ(convs, 8u);
  EXPECT_EQ(linears, 3u);
  EXPECT_EQ(ladder, (std::vector<std::size_t>{224, 112, 56, 56, 28, 28, 14, 14}));
  EXPECT_EQ(a.classes, 1000u);
}

TEST(ArchIo, SmallCnn) {
  const ArchSpec a = load_arch(kData + "/arch/smallcnn_32.json");
  EXPECT_EQ(a.trainable_layers().size(), 3u);
  EXPECT_EQ(a.classes, 3u);
}

TEST(ArchIo, ScalarsBroadcastToAxes) {
  const ArchSpec a = parse_arch(R"({"input": {"spatial": [5, 6], "channels": 2},
    "layers": [{"kind": "conv2d", "out_channels": 3, "kernel": 3, "padding": 1},
               {"kind": "flatten"}, {"kind": "linear", "out_features": 2}]})");
  EXPECT_EQ(a.layers[0].conv.kernel, (Shape{3, 3}));
  EXPECT_EQ(a.layers[0].conv.output, (Shape{5, 6}));
}

TEST(ArchIo, StrideBeyondPaddedInput) {
  try {
    parse_arch(R"({"input": {"spatial": [4], "channels": 1},
      "layers": [{"kind": "conv1d", "out_channels": 1, "kernel": 6}, {"kind": "flatten"},
                 {"kind": "linear", "out_features": 2}]})");
    FAIL() << "expected a geometry error";
  } catch (const GeometryError& e) {
    EXPECT_NE(std::string(e.what()).find("layers[0]"), std::string::npos) << e.what();
  }
}

TEST(ArchIo, ParseErrorsNameTheField) {
  try {
    parse_arch(R"({"input": {"features": 4}, "layers": [{"kind": "linear"}]})");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("layers[0].out_features"), std::string::npos) << e.what();
  }
  try {
    parse_arch("{\"input\": {\"features\": 4},\n \"layers\": [ oops ]}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_arch(R"({"input": {"features": 4}, "layers": [{"kind": "softmax"}]})"), ParseError);
  EXPECT_THROW(parse_arch(R"({"input": {"spatial": [4, 4], "channels": 1},
    "layers": [{"kind": "conv2d", "out_channels": 2, "kernel": 3, "groups": 2}]})"), ParseError);
  EXPECT_THROW(parse_arch(R"({"input": {"spatial": [4, 4], "channels": 1},
    "layers": [{"kind": "conv1d", "out_channels": 2, "kernel": 3}]})"), ParseError);
  EXPECT_THROW(load_arch("/nonexistent/arch.json"), ParseError);
}

TEST(Idx, HeaderIsBitExact) {
  data::IdxArray a;
  a.type = 0x08;
  a.dims = {2, 2, 3};
  a.values = {0, 1, 2, 3, 4, 5, 250, 251, 252, 253, 254, 255};
  const auto bytes = data::encode_idx(a);
  ASSERT_EQ(bytes.size(), 4u + 12u + 12u);
  const std::uint8_t header[] = {0, 0, 0x08, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 3};
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(bytes[i], header[i]) << i;
  EXPECT_EQ(bytes[16 + 11], 255);
  const data::IdxArray back = data::parse_idx(bytes);
  EXPECT_EQ(back.dims, a.dims);
  EXPECT_EQ(back.values, a.values);
}

TEST(Idx, WideTypesRoundTrip) {
  for (std::uint8_t type : {0x09, 0x0B, 0x0C, 0x0D, 0x0E}) {
    data::IdxArray a;
    a.type = type;
    a.dims = {4};
    a.values = {-3, 0, 7, 100};
    const data::IdxArray back = data::parse_idx(data::encode_idx(a));
    EXPECT_EQ(back.type, type);
    EXPECT_EQ(back.values, a.values);
  }
  data::IdxArray i32;
  i32.type = 0x0C;
  i32.dims = {1};
  i32.values = {258};
  const auto bytes = data::encode_idx(i32);
  EXPECT_EQ(bytes[bytes.size() - 2], 1);  // big-endian
  EXPECT_EQ(bytes[bytes.size() - 1], 2);
}

TEST(Idx, RejectsMalformed) {
  EXPECT_THROW(data::parse_idx({0, 0, 0x08}), ParseError);
  EXPECT_THROW(data::parse_idx({1, 0, 0x08, 1, 0, 0, 0, 1, 0}), ParseError);
  EXPECT_THROW(data::parse_idx({0, 0, 0x08, 1, 0, 0, 0, 2, 0}), ParseError);
  EXPECT_THROW(data::parse_idx({0, 0, 0x0A, 1, 0, 0, 0, 1, 0}), ParseError);
}

TEST(Idx, DatasetLoadsAndRemapsLabels) {
  const auto dir = temp_dir();
  data::IdxArray images;
  images.dims = {3, 2, 2};
  images.values = {0, 255, 0, 255, 51, 51, 51, 51, 255, 0, 0, 0};
  data::IdxArray labels;
  labels.dims = {3};
  labels.values = {7, 3, 7};
  data::write_idx((dir / "train-images-idx3-ubyte").string(), images);
  data::write_idx((dir / "train-labels-idx1-ubyte").string(), labels);
  const Batch b = data::load_idx_spec("idx:" + dir.string());
  EXPECT_EQ(b.inputs.shape(), (Shape{3, 2, 2, 1}));
  EXPECT_DOUBLE_EQ(b.inputs[1], 1.0);
  EXPECT_DOUBLE_EQ(b.inputs[4], 0.2);
  EXPECT_EQ(b.labels, (std::vector<std::size_t>{1, 0, 1}));
  const Batch same = data::load_idx_spec("idx:" + (dir / "train-images-idx3-ubyte").string() + "," +
                                         (dir / "train-labels-idx1-ubyte").string());
  EXPECT_EQ(same.labels, b.labels);
  EXPECT_THROW(data::load_idx_spec("idx:" + (dir / "missing").string()), ParseError);
  std::filesystem::remove_all(dir);
}

TEST(Synthetic, DeterministicAndBalanced) {
  const Batch a = data::synthetic_blobs({4, 4, 1}, 3, 30, 5);
  const Batch b = data::synthetic_blobs({4, 4, 1}, 3, 30, 5);
  EXPECT_EQ(a.inputs.shape(), (Shape{30, 4, 4, 1}));
  for (std::size_t i = 0; i < a.inputs.size(); ++i) EXPECT_EQ(a.inputs[i], b.inputs[i]);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(a.labels[i], i % 3);
}

TEST(Report, CsvQuoting) {
  EXPECT_EQ(report::csv_escape("plain"), "plain");
  EXPECT_EQ(report::csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(report::csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(report::csv_escape("two\nlines"), "\"two\nlines\"");
  report::Table t({"name", "value"});
  t.add_row({"x,y", "1"});
  std::ostringstream out;
  t.write_csv(out);
  EXPECT_EQ(out.str(), "name,value\r\n\"x,y\",1\r\n");
  EXPECT_THROW(t.add_row({"only one"}), std::invalid_argument);
}

TEST(Report, TextAlignment) {
  report::Table t({"layer", "T"});
  t.add_row({"conv1", "50176"});
  t.add_row({"fc9", "1"});
  std::ostringstream out;
  t.write_text(out);
  EXPECT_EQ(out.str(), "layer  T\n-----  -----\nconv1  50176\nfc9        1\n");
}

TEST(Report, RoundTripDouble) {
  EXPECT_EQ(report::format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(report::format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(ParamDump, RoundTrip) {
  const auto dir = temp_dir();
  const ArchSpec a = ArchBuilder({5}).linear(3).relu().linear(2, false).build();
  Rng rng(1);
  const ParamSet p = init_params(a, rng);
  const std::string path = (dir / "params.bin").string();
  save_params(path, p);
  EXPECT_EQ(std::filesystem::file_size(path), (4 + 16 + 8 * 15) + (4 + 8 + 8 * 3) + (4 + 16 + 8 * 6));
  EXPECT_TRUE(bit_equal(load_params(path), p));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace dpclip
