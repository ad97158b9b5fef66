#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>

#include "sketchmix/freqdesign.hpp"
#include "sketchmix/model.hpp"
#include "sketchmix/sketch.hpp"

namespace sketchmix::io {

// GMM text format: JSON object {d, k, weights, means, variances}, reals with
// 17 significant digits.
std::string gmm_to_text(const Mixture& mix);
Mixture gmm_from_text(const std::string& text);
void write_gmm(const std::filesystem::path& path, const Mixture& mix);
Mixture read_gmm(const std::filesystem::path& path);

// CLDATA01: magic, u32 d, u64 n, n*d f64 row-major.
void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Reads CLDATA01 or, when the magic is absent, CSV (one sample per line).
Dataset read_dataset(const std::filesystem::path& path);

/// Chunked reader over a CLDATA01 or CSV file.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  Eigen::Index dim() const noexcept { return d_; }
  /// Next block of up to `rows` items; empty when the file is exhausted.
  Dataset next(std::size_t rows);

 private:
  std::ifstream in_;
  bool binary_ = false;
  Eigen::Index d_ = 0;
  std::uint64_t remaining_ = 0;
  std::string pending_line_;
  bool has_pending_ = false;
  std::size_t line_no_ = 0;

  bool parse_csv_line(const std::string& line, std::vector<double>& out);
};

// CLFREQ01: magic, u32 d, u32 m, u8 kind, f64 sigma2_bar, u64 seed,
// m*d f64 row-major, u64 fingerprint.
std::string freqs_to_bytes(const FrequencySet& fs);
FrequencySet freqs_from_bytes(const std::string& bytes);
void write_freqs(const std::filesystem::path& path, const FrequencySet& fs);
FrequencySet read_freqs(const std::filesystem::path& path);

// CLSKCH01: magic, u32 m, u64 count, u8 analytic, u64 fingerprint, m (re, im) f64 pairs.
std::string sketch_to_bytes(const Sketch& s);
Sketch sketch_from_bytes(const std::string& bytes);
void write_sketch(const std::filesystem::path& path, const Sketch& s);
Sketch read_sketch(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace sketchmix::io
