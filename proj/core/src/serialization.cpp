#include "fvkit/serialization.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>

#include "fvkit/errors.hpp"

namespace fvkit {

namespace {

class Writer {
 public:
  explicit Writer(std::string_view magic) { bytes_.assign(magic.begin(), magic.end()); }

  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

class Reader {
 public:
  Reader(std::span<const std::uint8_t> bytes, std::string_view magic, const char* what)
      : bytes_(bytes), what_(what) {
    if (bytes_.size() < magic.size() ||
        std::memcmp(bytes_.data(), magic.data(), magic.size()) != 0) {
      fail("bad magic, expected '" + std::string(magic) + "'");
    }
    pos_ = magic.size();
  }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  // Checks up front that `count` items of `width` bytes are present, so a
  // corrupt header cannot trigger a huge allocation.
  void expect(std::uint64_t count, std::uint64_t width) {
    if (width != 0 && count > (bytes_.size() - pos_) / width) fail("truncated payload");
  }

  void finish() {
    if (pos_ != bytes_.size()) fail("unexpected trailing bytes");
  }

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorKind::kFormat, std::string(what_) + ": " + message);
  }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) fail("truncated payload");
  }

  std::span<const std::uint8_t> bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorKind::kInvalidArgument, std::string(what) + " does not fit in u32");
  }
  return static_cast<std::uint32_t>(v);
}

}  // namespace

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorKind::kIo, "failed reading '" + path.string() + "'");
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "failed writing '" + path.string() + "'");
}

Bytes encode_gmm(const GaussianMixture& gmm) {
  Writer w("GMM1");
  w.u32(checked_u32(gmm.num_components(), "K"));
  w.u32(checked_u32(gmm.dim(), "D"));
  for (double v : gmm.weights()) w.f64(v);
  for (double v : gmm.means().data()) w.f64(v);
  for (double v : gmm.variances().data()) w.f64(v);
  return w.take();
}

GaussianMixture decode_gmm(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "GMM1", "GMM file");
  const std::size_t k = r.u32();
  const std::size_t d = r.u32();
  r.expect(static_cast<std::uint64_t>(k) * (1 + 2 * static_cast<std::uint64_t>(d)), 8);
  std::vector<double> weights(k);
  for (double& v : weights) v = r.f64();
  Matrix means(k, d);
  for (double& v : means.data()) v = r.f64();
  Matrix vars(k, d);
  for (double& v : vars.data()) v = r.f64();
  r.finish();
  try {
    return GaussianMixture(std::move(weights), std::move(means), std::move(vars));
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, std::string("GMM file holds invalid parameters: ") + e.what());
  }
}

void save_gmm(const std::filesystem::path& path, const GaussianMixture& gmm) {
  write_file(path, encode_gmm(gmm));
}

GaussianMixture load_gmm(const std::filesystem::path& path) {
  return decode_gmm(read_file(path));
}

Bytes encode_fisher_vector(const FisherVector& fv) {
  Writer w("FVV1");
  w.u32(checked_u32(fv.dim(), "dim"));
  w.u8(fv.normalized() ? 1 : 0);
  for (double v : fv.values()) w.f32(v);
  return w.take();
}

FisherVector decode_fisher_vector(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "FVV1", "Fisher vector file");
  const std::size_t dim = r.u32();
  const std::uint8_t flag = r.u8();
  if (flag > 1) r.fail("normalized flag must be 0 or 1");
  r.expect(dim, 4);
  std::vector<double> values(dim);
  for (double& v : values) {
    v = r.f32();
    if (!std::isfinite(v)) r.fail("non-finite value");
  }
  r.finish();
  return FisherVector(std::move(values), flag == 1);
}

void save_fisher_vector(const std::filesystem::path& path, const FisherVector& fv) {
  write_file(path, encode_fisher_vector(fv));
}

FisherVector load_fisher_vector(const std::filesystem::path& path) {
  return decode_fisher_vector(read_file(path));
}

Bytes encode_descriptors(const DescriptorSet& set) {
  Writer w("FVD1");
  w.u32(checked_u32(set.dim(), "D"));
  w.u32(checked_u32(set.size(), "T"));
  for (double v : set.data().data()) w.f32(v);
  return w.take();
}

DescriptorSet decode_descriptors(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "FVD1", "descriptor file");
  const std::size_t d = r.u32();
  const std::size_t t = r.u32();
  r.expect(static_cast<std::uint64_t>(d) * t, 4);
  Matrix data(t, d);
  for (double& v : data.data()) v = r.f32();
  r.finish();
  return DescriptorSet("", std::move(data));
}

void save_descriptors(const std::filesystem::path& path, const DescriptorSet& set) {
  write_file(path, encode_descriptors(set));
}

DescriptorSet load_descriptors(const std::filesystem::path& path) {
  try {
    return decode_descriptors(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat) {
      throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
    }
    throw;
  }
}

Bytes encode_linear_model(const LinearModel& model) {
  model.validate();
  Writer w("LSV1");
  w.u32(checked_u32(model.num_classes(), "C"));
  w.u32(checked_u32(model.dim(), "dim"));
  for (const auto& name : model.classes) {
    w.u32(checked_u32(name.size(), "class name"));
    w.raw(name);
  }
  for (double v : model.weights.data()) w.f32(v);
  for (double v : model.biases) w.f32(v);
  return w.take();
}

LinearModel decode_linear_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes, "LSV1", "linear model file");
  const std::size_t c = r.u32();
  const std::size_t dim = r.u32();
  LinearModel model;
  r.expect(c, 4);
  for (std::size_t i = 0; i < c; ++i) {
    const std::size_t len = r.u32();
    model.classes.push_back(r.raw(len));
  }
  r.expect(static_cast<std::uint64_t>(c) * (dim + 1), 4);
  model.weights = Matrix(c, dim);
  for (double& v : model.weights.data()) v = r.f32();
  model.biases.resize(c);
  for (double& v : model.biases) v = r.f32();
  r.finish();
  model.validate();
  return model;
}

void save_linear_model(const std::filesystem::path& path, const LinearModel& model) {
  write_file(path, encode_linear_model(model));
}

LinearModel load_linear_model(const std::filesystem::path& path) {
  return decode_linear_model(read_file(path));
}

}  // namespace fvkit
