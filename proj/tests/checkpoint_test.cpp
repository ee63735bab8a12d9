#include <gtest/gtest.h>

#include <filesystem>

#include <unistd.h>

#include "srvnn/checkpoint.hpp"
#include "test_support.hpp"

namespace srvnn {
namespace {

ModelConfig sample_config() {
  return {.subcarriers = 5,
          .heads = 2,
          .layers = 3,
          .ffn_hidden = 7,
          .classes = 4,
          .pos_encoding = PositionalEncoding::SinusoidalTime,
          .time_reference_length = 37.5,
          .output_norm = false,
          .layer_norm_eps = 1e-7,
          .init_seed = 99,
          .init_scale = 0.25};
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const SrvModel model(sample_config());
  const auto back = decode_checkpoint(encode_checkpoint(model));
  EXPECT_EQ(back.parameters(), model.parameters());
  const auto& a = back.config();
  const auto b = sample_config();
  EXPECT_EQ(a.subcarriers, b.subcarriers);
  EXPECT_EQ(a.heads, b.heads);
  EXPECT_EQ(a.layers, b.layers);
  EXPECT_EQ(a.ffn_hidden, b.ffn_hidden);
  EXPECT_EQ(a.classes, b.classes);
  EXPECT_EQ(a.pos_encoding, b.pos_encoding);
  EXPECT_EQ(a.time_reference_length, b.time_reference_length);
  EXPECT_EQ(a.output_norm, b.output_norm);
  EXPECT_EQ(a.layer_norm_eps, b.layer_norm_eps);
  EXPECT_EQ(a.init_seed, b.init_seed);
  EXPECT_EQ(a.init_scale, b.init_scale);
  Rng rng(0);
  const auto x = testing::random_instance(6, 5, rng, 0);
  EXPECT_EQ(forward(back, x), forward(model, x));
}

TEST(Checkpoint, FileRoundTripAndErrors) {
  const SrvModel model(sample_config());
  const auto path = std::filesystem::temp_directory_path() / ("srvnn_ckpt_" + std::to_string(::getpid()));
  write_checkpoint(model, path);
  EXPECT_EQ(read_checkpoint(path).parameters(), model.parameters());
  std::filesystem::remove(path);
  try {
    read_checkpoint(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Checkpoint, CorruptBytesAreFormatErrors) {
  const std::string good = encode_checkpoint(SrvModel(sample_config()));
  auto expect_format = [](const std::string& bytes) {
    try {
      decode_checkpoint(bytes);
      ADD_FAILURE() << "accepted corrupt checkpoint";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::FormatError);
    }
  };
  expect_format(good.substr(0, good.size() - 8));
  expect_format(good + "x");
  std::string magic = good;
  magic[3] = 'X';
  expect_format(magic);
  std::string zero_width = good;
  zero_width[8] = 0;  // C = 0
  expect_format(zero_width);
  std::string heads = good;
  heads[12] = 3;  // Z no longer matches the parameter count
  expect_format(heads);
}

}  // namespace
}  // namespace srvnn
