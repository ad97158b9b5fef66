#include "sketchmix/io.hpp"

#include <bit>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sketchmix/error.hpp"

namespace sketchmix::io {

namespace {

constexpr char kDataMagic[] = "CLDATA01";
constexpr char kFreqMagic[] = "CLFREQ01";
constexpr char kSketchMagic[] = "CLSKCH01";
constexpr std::size_t kMagicLen = 8;

class ByteWriter {
 public:
  void magic(const char* m) { out_.append(m, kMagicLen); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) out_.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
  }
  std::string out_;
};

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const char* what) : bytes_(bytes), what_(what) {}

  void magic(const char* m) {
    need(kMagicLen);
    if (bytes_.compare(pos_, kMagicLen, m) != 0) {
      throw FormatError(std::string(what_) + ": bad magic (expected " + m + ")");
    }
    pos_ += kMagicLen;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  void finish() const {
    if (pos_ != bytes_.size()) throw FormatError(std::string(what_) + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string(what_) + ": truncated file");
  }
  std::uint64_t le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int b = 0; b < n; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    }
    return v;
  }
  const std::string& bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_array(std::ostringstream& os, const Vector& v) {
  os << '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << fmt17(v[i]);
  }
  os << ']';
}

std::uint64_t read_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw FormatError("CLDATA01: truncated header");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// GMM text

std::string gmm_to_text(const Mixture& mix) {
  std::ostringstream os;
  os << "{\n  \"d\": " << mix.dim() << ",\n  \"k\": " << mix.size() << ",\n  \"weights\": ";
  append_array(os, mix.weights);
  os << ",\n  \"means\": [";
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    os << (k ? ",\n    " : "\n    ");
    append_array(os, mix.components[k].mean());
  }
  os << "\n  ],\n  \"variances\": [";
  for (std::size_t k = 0; k < mix.components.size(); ++k) {
    os << (k ? ",\n    " : "\n    ");
    append_array(os, mix.components[k].variances());
  }
  os << "\n  ]\n}\n";
  return os.str();
}

Mixture gmm_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    const auto d = j.at("d").get<Eigen::Index>();
    const auto k = j.at("k").get<std::size_t>();
    const auto w = j.at("weights").get<std::vector<double>>();
    const auto means = j.at("means").get<std::vector<std::vector<double>>>();
    const auto vars = j.at("variances").get<std::vector<std::vector<double>>>();
    if (w.size() != k || means.size() != k || vars.size() != k) {
      throw FormatError("GMM text: weights/means/variances must have k entries");
    }
    std::vector<GaussianParams> comps;
    for (std::size_t c = 0; c < k; ++c) {
      if (static_cast<Eigen::Index>(means[c].size()) != d || static_cast<Eigen::Index>(vars[c].size()) != d) {
        throw FormatError("GMM text: component rows must have d entries");
      }
      comps.emplace_back(Eigen::Map<const Vector>(means[c].data(), d),
                         Eigen::Map<const Vector>(vars[c].data(), d));
    }
    return Mixture(std::move(comps), Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(k)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("GMM text: ") + e.what());
  }
}

void write_gmm(const std::filesystem::path& path, const Mixture& mix) { write_file(path, gmm_to_text(mix)); }

Mixture read_gmm(const std::filesystem::path& path) { return gmm_from_text(read_file(path)); }

// ---------------------------------------------------------------------------
// Datasets

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  ByteWriter w;
  w.magic(kDataMagic);
  w.u32(static_cast<std::uint32_t>(data.cols()));
  w.u64(static_cast<std::uint64_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    for (Eigen::Index l = 0; l < data.cols(); ++l) w.f64(data(i, l));
  write_file(path, w.take());
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  if (!in_) throw FormatError("cannot open " + path.string());
  char magic[kMagicLen] = {};
  in_.read(magic, kMagicLen);
  if (in_.gcount() == static_cast<std::streamsize>(kMagicLen) && std::memcmp(magic, kDataMagic, kMagicLen) == 0) {
    binary_ = true;
    unsigned char b[4];
    in_.read(reinterpret_cast<char*>(b), 4);
    if (!in_) throw FormatError("CLDATA01: truncated header");
    d_ = static_cast<Eigen::Index>(b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24));
    remaining_ = read_u64_le(in_);
    if (d_ < 1) throw FormatError("CLDATA01: dimension must be >= 1");
    return;
  }
  in_.clear();
  in_.seekg(0);
  std::vector<double> row;
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (parse_csv_line(line, row)) {
      d_ = static_cast<Eigen::Index>(row.size());
      pending_line_ = line;
      has_pending_ = true;
      break;
    }
  }
  if (d_ < 1) throw FormatError("CSV: no data rows in " + path.string());
}

bool DatasetReader::parse_csv_line(const std::string& line, std::vector<double>& out) {
  out.clear();
  const char* p = line.c_str();
  while (*p == ' ' || *p == '\t') ++p;
  if (*p == '\0' || *p == '\r' || *p == '#') return false;
  for (;;) {
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(p, &end);
    if (end == p) throw FormatError("CSV line " + std::to_string(line_no_) + ": not a number");
    if (!std::isfinite(v)) throw FormatError("CSV line " + std::to_string(line_no_) + ": non-finite value");
    out.push_back(v);
    p = end;
    while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
    if (*p == '\0') break;
    if (*p != ',') throw FormatError("CSV line " + std::to_string(line_no_) + ": expected ','");
    ++p;
  }
  return true;
}

Dataset DatasetReader::next(std::size_t rows) {
  if (binary_) {
    const std::uint64_t take = std::min<std::uint64_t>(rows, remaining_);
    Dataset out(static_cast<Eigen::Index>(take), d_);
    std::vector<unsigned char> buf(static_cast<std::size_t>(take) * static_cast<std::size_t>(d_) * 8);
    in_.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in_.gcount()) != buf.size()) throw FormatError("CLDATA01: truncated data");
    for (std::size_t idx = 0; idx < static_cast<std::size_t>(out.size()); ++idx) {
      std::uint64_t v = 0;
      for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(buf[idx * 8 + static_cast<std::size_t>(b)]) << (8 * b);
      out.data()[idx] = std::bit_cast<double>(v);
    }
    remaining_ -= take;
    if (!out.allFinite()) throw FormatError("CLDATA01: non-finite entries");
    return out;
  }
  std::vector<double> values, row;
  std::size_t got = 0;
  std::string line;
  while (got < rows) {
    if (has_pending_) {
      line = std::move(pending_line_);
      has_pending_ = false;
    } else if (std::getline(in_, line)) {
      ++line_no_;
    } else {
      break;
    }
    if (!parse_csv_line(line, row)) continue;
    if (static_cast<Eigen::Index>(row.size()) != d_) {
      throw FormatError("CSV line " + std::to_string(line_no_) + ": expected " + std::to_string(d_) + " columns");
    }
    values.insert(values.end(), row.begin(), row.end());
    ++got;
  }
  return Eigen::Map<const Dataset>(values.data(), static_cast<Eigen::Index>(got), d_);
}

Dataset read_dataset(const std::filesystem::path& path) {
  DatasetReader reader(path);
  std::vector<Dataset> blocks;
  Eigen::Index total = 0;
  for (;;) {
    Dataset block = reader.next(1 << 16);
    if (block.rows() == 0) break;
    total += block.rows();
    blocks.push_back(std::move(block));
  }
  if (total == 0) throw FormatError("dataset " + path.string() + " has no rows");
  Dataset out(total, reader.dim());
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frequencies and sketches

std::string freqs_to_bytes(const FrequencySet& fs) {
  ByteWriter w;
  w.magic(kFreqMagic);
  w.u32(static_cast<std::uint32_t>(fs.dim()));
  w.u32(static_cast<std::uint32_t>(fs.m()));
  w.u8(static_cast<std::uint8_t>(fs.kind));
  w.f64(fs.sigma2_bar);
  w.u64(fs.seed);
  for (Eigen::Index j = 0; j < fs.m(); ++j)
    for (Eigen::Index l = 0; l < fs.dim(); ++l) w.f64(fs.freqs(j, l));
  w.u64(fs.fingerprint);
  return w.take();
}

FrequencySet freqs_from_bytes(const std::string& bytes) {
  ByteReader r(bytes, "CLFREQ01");
  r.magic(kFreqMagic);
  const auto d = static_cast<Eigen::Index>(r.u32());
  const auto m = static_cast<Eigen::Index>(r.u32());
  const std::uint8_t kind = r.u8();
  if (kind > 2) throw FormatError("CLFREQ01: unknown kind byte");
  const double s2 = r.f64();
  const std::uint64_t seed = r.u64();
  RowMatrix f(m, d);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index l = 0; l < d; ++l) f(j, l) = r.f64();
  const std::uint64_t stored = r.u64();
  r.finish();
  FrequencySet fs(std::move(f), static_cast<FreqKind>(kind), s2, seed);
  if (fs.fingerprint != stored) throw IntegrityError("CLFREQ01: fingerprint does not match contents");
  return fs;
}

void write_freqs(const std::filesystem::path& path, const FrequencySet& fs) { write_file(path, freqs_to_bytes(fs)); }

FrequencySet read_freqs(const std::filesystem::path& path) { return freqs_from_bytes(read_file(path)); }

std::string sketch_to_bytes(const Sketch& s) {
  ByteWriter w;
  w.magic(kSketchMagic);
  w.u32(static_cast<std::uint32_t>(s.m()));
  w.u64(s.count);
  w.u8(s.analytic ? 1 : 0);
  w.u64(s.freq_fingerprint);
  for (Eigen::Index j = 0; j < s.m(); ++j) {
    w.f64(s.values[j].real());
    w.f64(s.values[j].imag());
  }
  return w.take();
}

Sketch sketch_from_bytes(const std::string& bytes) {
  ByteReader r(bytes, "CLSKCH01");
  r.magic(kSketchMagic);
  Sketch s;
  const auto m = static_cast<Eigen::Index>(r.u32());
  s.count = r.u64();
  const std::uint8_t flag = r.u8();
  if (flag > 1) throw FormatError("CLSKCH01: bad analytic flag");
  s.analytic = flag == 1;
  s.freq_fingerprint = r.u64();
  s.values.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double re = r.f64();
    const double im = r.f64();
    s.values[j] = {re, im};
  }
  r.finish();
  return s;
}

void write_sketch(const std::filesystem::path& path, const Sketch& s) { write_file(path, sketch_to_bytes(s)); }

Sketch read_sketch(const std::filesystem::path& path) { return sketch_from_bytes(read_file(path)); }

}  // namespace sketchmix::io
