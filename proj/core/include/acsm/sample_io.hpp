#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "acsm/gibbs_sampler.hpp"

namespace acsm {

struct SampleIoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Binary sample file layout (little endian):
//   bytes 0..3   magic "ACSM"
//   bytes 4..7   u32 format version (currently 1)
//   bytes 8..11  u32 length L of the JSON parameter block
//   bytes 12..   L bytes of JSON: chain parameters, seed, n_samples,
//                generator id, config digest
//   then n_samples records of 2*N doubles: q[0..N-1], p[0..N-1]
inline constexpr std::uint32_t kSampleFormatVersion = 1;

void write_sample_file(const std::string& path, const SampleSet& sample,
                       const std::string& config_digest);

SampleSet read_sample_file(const std::string& path);

struct SampleFileInfo {
  FpuParams params;
  std::uint64_t seed = 0;
  std::size_t n_points = 0;
  std::string generator_id;
  std::string config_digest;
};

SampleFileInfo read_sample_header(const std::string& path);

// Streams the file in chunks of at most chunk_points to bound memory use.
void for_each_sample_chunk(
    const std::string& path, std::size_t chunk_points,
    const std::function<void(const SampleSet& chunk, std::size_t offset)>& fn);

}  // namespace acsm
