#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fvkit/classifier.hpp"
#include "fvkit/descriptor_set.hpp"
#include "fvkit/fisher.hpp"
#include "fvkit/gmm.hpp"

// Binary artifact formats. All integers and floats are little-endian.
//
//   GMM1  u32 K, u32 D, f64 weights[K], f64 means[K*D], f64 variances[K*D]
//   FVV1  u32 dim, u8 normalized, f32 values[dim]
//   FVD1  u32 D, u32 T, f32 rows[T*D]
//   LSV1  u32 C, u32 dim, C x (u32 length, UTF-8 bytes), f32 weights[C*dim], f32 biases[C]
//
// Decoders reject a wrong magic, a truncated payload and trailing bytes with
// ErrorKind::kFormat. File helpers report open/read/write failures as kIo.

namespace fvkit {

using Bytes = std::vector<std::uint8_t>;

Bytes encode_gmm(const GaussianMixture& gmm);
GaussianMixture decode_gmm(std::span<const std::uint8_t> bytes);
void save_gmm(const std::filesystem::path& path, const GaussianMixture& gmm);
GaussianMixture load_gmm(const std::filesystem::path& path);

Bytes encode_fisher_vector(const FisherVector& fv);
FisherVector decode_fisher_vector(std::span<const std::uint8_t> bytes);
void save_fisher_vector(const std::filesystem::path& path, const FisherVector& fv);
FisherVector load_fisher_vector(const std::filesystem::path& path);

// Values are stored as f32; the image id is not part of the file.
Bytes encode_descriptors(const DescriptorSet& set);
DescriptorSet decode_descriptors(std::span<const std::uint8_t> bytes);
void save_descriptors(const std::filesystem::path& path, const DescriptorSet& set);
DescriptorSet load_descriptors(const std::filesystem::path& path);

Bytes encode_linear_model(const LinearModel& model);
LinearModel decode_linear_model(std::span<const std::uint8_t> bytes);
void save_linear_model(const std::filesystem::path& path, const LinearModel& model);
LinearModel load_linear_model(const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace fvkit
