#include "acsm/sample_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <memory>

#include <nlohmann/json.hpp>

namespace acsm {
namespace {

static_assert(std::endian::native == std::endian::little,
              "sample files are little endian; big endian hosts unsupported");
static_assert(sizeof(double) == 8);

using nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

constexpr char kMagic[4] = {'A', 'C', 'S', 'M'};

json params_to_json(const FpuParams& p) {
  return json{{"n_particles", p.n_particles},
              {"alpha", p.alpha},
              {"beta", p.beta},
              {"temperature", p.temperature}};
}

FpuParams params_from_json(const json& j) {
  FpuParams p;
  p.n_particles = j.at("n_particles").get<int>();
  p.alpha = j.at("alpha").get<double>();
  p.beta = j.at("beta").get<double>();
  p.temperature = j.at("temperature").get<double>();
  return p;
}

struct Header {
  SampleFileInfo info;
  long payload_offset = 0;
};

Header read_header(std::FILE* f, const std::string& path) {
  char magic[4];
  std::uint32_t version = 0, json_len = 0;
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kMagic, 4) != 0) {
    throw SampleIoError(path + ": not a sample file");
  }
  if (std::fread(&version, 4, 1, f) != 1 || version != kSampleFormatVersion) {
    throw SampleIoError(path + ": unsupported sample format version");
  }
  if (std::fread(&json_len, 4, 1, f) != 1 || json_len > (1u << 20)) {
    throw SampleIoError(path + ": corrupt header");
  }
  std::string text(json_len, '\0');
  if (std::fread(text.data(), 1, json_len, f) != json_len) {
    throw SampleIoError(path + ": truncated header");
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SampleIoError(path + ": bad header JSON: " + e.what());
  }
  Header h;
  try {
    h.info.params = params_from_json(j.at("params"));
    h.info.seed = j.at("seed").get<std::uint64_t>();
    h.info.n_points = j.at("n_samples").get<std::size_t>();
    h.info.generator_id = j.at("generator_id").get<std::string>();
    h.info.config_digest = j.value("config_digest", "");
  } catch (const json::exception& e) {
    throw SampleIoError(path + ": incomplete header: " + e.what());
  }
  h.payload_offset = 12 + static_cast<long>(json_len);
  return h;
}

}  // namespace

void write_sample_file(const std::string& path, const SampleSet& sample,
                       const std::string& config_digest) {
  const int n = sample.n_particles();
  if (sample.q.size() != sample.n_points * n || sample.p.size() != sample.q.size()) {
    throw SampleIoError("sample container is inconsistent");
  }
  json j{{"params", params_to_json(sample.params)},
         {"seed", sample.seed},
         {"n_samples", sample.n_points},
         {"generator_id", sample.generator_id},
         {"config_digest", config_digest}};
  const std::string text = j.dump();

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw SampleIoError(path + ": cannot open for writing");
  const std::uint32_t version = kSampleFormatVersion;
  const std::uint32_t json_len = static_cast<std::uint32_t>(text.size());
  bool ok = std::fwrite(kMagic, 1, 4, f.get()) == 4 &&
            std::fwrite(&version, 4, 1, f.get()) == 1 &&
            std::fwrite(&json_len, 4, 1, f.get()) == 1 &&
            std::fwrite(text.data(), 1, text.size(), f.get()) == text.size();
  for (std::size_t i = 0; ok && i < sample.n_points; ++i) {
    ok = std::fwrite(sample.q.data() + i * n, 8, n, f.get()) ==
             static_cast<std::size_t>(n) &&
         std::fwrite(sample.p.data() + i * n, 8, n, f.get()) ==
             static_cast<std::size_t>(n);
  }
  if (!ok) throw SampleIoError(path + ": write failed");
}

SampleFileInfo read_sample_header(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw SampleIoError(path + ": cannot open");
  return read_header(f.get(), path).info;
}

SampleSet read_sample_file(const std::string& path) {
  SampleSet out;
  bool first = true;
  for_each_sample_chunk(path, 1u << 16,
                        [&](const SampleSet& chunk, std::size_t) {
                          if (first) {
                            out.params = chunk.params;
                            out.seed = chunk.seed;
                            out.generator_id = chunk.generator_id;
                            first = false;
                          }
                          out.q.insert(out.q.end(), chunk.q.begin(), chunk.q.end());
                          out.p.insert(out.p.end(), chunk.p.begin(), chunk.p.end());
                          out.n_points += chunk.n_points;
                        });
  if (first) {
    // Zero-point file: still surface the header metadata.
    const SampleFileInfo info = read_sample_header(path);
    out.params = info.params;
    out.seed = info.seed;
    out.generator_id = info.generator_id;
  }
  return out;
}

void for_each_sample_chunk(
    const std::string& path, std::size_t chunk_points,
    const std::function<void(const SampleSet& chunk, std::size_t offset)>& fn) {
  if (chunk_points == 0) throw SampleIoError("chunk size must be positive");
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw SampleIoError(path + ": cannot open");
  const Header h = read_header(f.get(), path);
  const int n = h.info.params.n_particles;

  SampleSet chunk;
  chunk.params = h.info.params;
  chunk.seed = h.info.seed;
  chunk.generator_id = h.info.generator_id;

  std::vector<double> record(2 * static_cast<std::size_t>(n));
  std::size_t offset = 0;
  while (offset < h.info.n_points) {
    const std::size_t count = std::min(chunk_points, h.info.n_points - offset);
    chunk.n_points = count;
    chunk.q.resize(count * n);
    chunk.p.resize(count * n);
    for (std::size_t i = 0; i < count; ++i) {
      if (std::fread(record.data(), 8, record.size(), f.get()) != record.size()) {
        throw SampleIoError(path + ": truncated payload");
      }
      std::memcpy(chunk.q.data() + i * n, record.data(), 8 * n);
      std::memcpy(chunk.p.data() + i * n, record.data() + n, 8 * n);
    }
    fn(chunk, offset);
    offset += count;
  }
}

}  // namespace acsm
