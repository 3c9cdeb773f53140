#include <gtest/gtest.h>

#include <cstring>

#include "fvkit/errors.hpp"
#include "fvkit/serialization.hpp"
#include "test_util.hpp"

namespace fvkit {
namespace {

using testing::TempDir;

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInvalidArgument;
}

std::uint32_t read_u32(const Bytes& b, std::size_t offset) {
  return static_cast<std::uint32_t>(b[offset]) | (static_cast<std::uint32_t>(b[offset + 1]) << 8) |
         (static_cast<std::uint32_t>(b[offset + 2]) << 16) |
         (static_cast<std::uint32_t>(b[offset + 3]) << 24);
}

TEST(GmmFormat, RoundTripIsExact) {
  std::mt19937_64 rng(1);
  const auto gmm = testing::random_gmm(5, 7, rng);
  EXPECT_EQ(decode_gmm(encode_gmm(gmm)), gmm);
  TempDir dir("ser");
  save_gmm(dir / "a.gmm", gmm);
  EXPECT_EQ(load_gmm(dir / "a.gmm"), gmm);
}

TEST(GmmFormat, LayoutIsLittleEndian) {
  GaussianMixture gmm({1.0}, Matrix(1, 2, {0.5, -1.0}), Matrix(1, 2, {2.0, 3.0}));
  const auto b = encode_gmm(gmm);
  ASSERT_EQ(b.size(), 4u + 8u + 8u * 5u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "GMM1");
  EXPECT_EQ(read_u32(b, 4), 1u);
  EXPECT_EQ(read_u32(b, 8), 2u);
  // 1.0 = 0x3FF0000000000000, low byte first.
  EXPECT_EQ(b[12], 0x00);
  EXPECT_EQ(b[19], 0x3F);
  EXPECT_EQ(b[18], 0xF0);
}

TEST(GmmFormat, RejectsCorruption) {
  std::mt19937_64 rng(2);
  const auto good = encode_gmm(testing::random_gmm(2, 3, rng));
  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(kind_of([&] { decode_gmm(bad_magic); }), ErrorKind::kFormat);
  const Bytes truncated(good.begin(), good.end() - 1);
  EXPECT_EQ(kind_of([&] { decode_gmm(truncated); }), ErrorKind::kFormat);
  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(kind_of([&] { decode_gmm(trailing); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { decode_gmm(Bytes{}); }), ErrorKind::kFormat);
}

TEST(GmmFormat, RejectsInvalidParameters) {
  GaussianMixture gmm({1.0}, Matrix(1, 1, {0.0}), Matrix(1, 1, {1.0}));
  auto bytes = encode_gmm(gmm);
  // Overwrite the variance with -1.0.
  const double negative = -1.0;
  std::memcpy(bytes.data() + bytes.size() - 8, &negative, 8);
  EXPECT_EQ(kind_of([&] { decode_gmm(bytes); }), ErrorKind::kFormat);
}

TEST(FisherVectorFormat, RoundTripThroughFloat32) {
  std::vector<double> v = {0.25, -0.5, 1.0, 0.0, 1.0 / 3.0};
  const FisherVector fv(v, true);
  const auto back = decode_fisher_vector(encode_fisher_vector(fv));
  EXPECT_TRUE(back.normalized());
  ASSERT_EQ(back.dim(), 5u);
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(back.values()[i], static_cast<double>(static_cast<float>(v[i])));
  }
  const auto raw = decode_fisher_vector(encode_fisher_vector(FisherVector(v, false)));
  EXPECT_FALSE(raw.normalized());
  const auto bytes = encode_fisher_vector(fv);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FVV1");
  EXPECT_EQ(bytes.size(), 4u + 4u + 1u + 4u * 5u);
  EXPECT_EQ(kind_of([&] { decode_fisher_vector(Bytes(bytes.begin(), bytes.end() - 2)); }),
            ErrorKind::kFormat);
}

TEST(DescriptorFormat, RoundTripAndLayout) {
  Matrix m(3, 2, {1.0, 2.0, 3.0, 4.0, 5.5, -6.25});
  const DescriptorSet set("ignored", m);
  const auto bytes = encode_descriptors(set);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FVD1");
  EXPECT_EQ(read_u32(bytes, 4), 2u);
  EXPECT_EQ(read_u32(bytes, 8), 3u);
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + 12, 4);
  EXPECT_EQ(first, 1.0f);
  const auto back = decode_descriptors(bytes);
  EXPECT_EQ(back.data(), m);
  EXPECT_EQ(back.image_id(), "");
  auto trailing = bytes;
  trailing.push_back(1);
  EXPECT_EQ(kind_of([&] { decode_descriptors(trailing); }), ErrorKind::kFormat);
}

TEST(DescriptorFormat, EmptySetRoundTrips) {
  const auto back = decode_descriptors(encode_descriptors(DescriptorSet("", Matrix(0, 4))));
  EXPECT_EQ(back.size(), 0u);
  EXPECT_EQ(back.dim(), 4u);
}

TEST(LinearModelFormat, RoundTrip) {
  LinearModel m{{"MEL", "NV", "é"}, Matrix(3, 2, {0.5, -1.0, 2.0, 0.25, 0.0, 8.0}), {1.0, -0.5, 0.0}};
  EXPECT_EQ(decode_linear_model(encode_linear_model(m)), m);
  TempDir dir("ser");
  save_linear_model(dir / "m.lsv", m);
  EXPECT_EQ(load_linear_model(dir / "m.lsv"), m);
  const auto bytes = encode_linear_model(m);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "LSV1");
  EXPECT_EQ(kind_of([&] { decode_linear_model(Bytes(bytes.begin(), bytes.end() - 1)); }),
            ErrorKind::kFormat);
}

TEST(Files, MissingFileIsIoError) {
  TempDir dir("ser");
  EXPECT_EQ(kind_of([&] { load_gmm(dir / "nope.gmm"); }), ErrorKind::kIo);
  EXPECT_EQ(kind_of([&] { write_file(dir / "no" / "such" / "dir" / "x", Bytes{1}); }),
            ErrorKind::kIo);
  EXPECT_EQ(exit_code_for(ErrorKind::kIo), 3);
  EXPECT_EQ(exit_code_for(ErrorKind::kFormat), 2);
}

}  // namespace
}  // namespace fvkit
