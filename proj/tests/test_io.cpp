#include <bit>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "sketchmix/error.hpp"
#include "sketchmix/eval.hpp"
#include "sketchmix/io.hpp"
#include "sketchmix/sketch.hpp"

using namespace sketchmix;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  const fs::path p = fs::temp_directory_path() / "sketchmix_test_io";
  fs::create_directories(p);
  return p;
}

std::uint64_t le_u64(const std::string& b, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

std::uint32_t le_u32(const std::string& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
  return v;
}

FrequencySet small_freqs() {
  Rng rng(1);
  return draw_freq({Vector::Ones(3)}, Vector::Ones(1), 7, FreqKind::AdaptedRadius, rng);
}

}  // namespace

TEST_CASE("GMM text round-trips exactly") {
  Rng rng(2);
  const auto prob = gen_synthetic(4, 3, rng, WeightMode::FlatDirichlet);
  const std::string text = io::gmm_to_text(prob.truth);
  const Mixture back = io::gmm_from_text(text);
  REQUIRE(back.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(back.components[k] == prob.truth.components[k]);
  CHECK(back.weights == prob.truth.weights);
  CHECK(io::gmm_to_text(back) == text);
  CHECK(text.find("\"d\": 4") != std::string::npos);
  CHECK(text.find("\"k\": 3") != std::string::npos);
}

TEST_CASE("GMM text errors") {
  CHECK_THROWS_AS(io::gmm_from_text("{"), FormatError);
  CHECK_THROWS_AS(io::gmm_from_text(R"({"d":1,"k":2,"weights":[1],"means":[[0]],"variances":[[1]]})"), FormatError);
  CHECK_THROWS_AS(io::gmm_from_text(R"({"d":2,"k":1,"weights":[1],"means":[[0]],"variances":[[1]]})"), FormatError);
  const Mixture m = io::gmm_from_text(R"({"d":1,"k":1,"weights":[1],"means":[[0.5]],"variances":[[2]]})");
  CHECK(m.components[0].mean()[0] == 0.5);
}

TEST_CASE("CLFREQ01 layout") {
  const FrequencySet f = small_freqs();
  const std::string b = io::freqs_to_bytes(f);
  REQUIRE(b.size() == 8 + 4 + 4 + 1 + 8 + 8 + 7 * 3 * 8 + 8);
  CHECK(b.substr(0, 8) == "CLFREQ01");
  CHECK(le_u32(b, 8) == 3);
  CHECK(le_u32(b, 12) == 7);
  CHECK(static_cast<unsigned char>(b[16]) == 2);
  CHECK(std::bit_cast<double>(le_u64(b, 17)) == f.sigma2_bar);
  CHECK(le_u64(b, 25) == f.seed);
  CHECK(std::bit_cast<double>(le_u64(b, 33)) == f.freqs(0, 0));
  CHECK(std::bit_cast<double>(le_u64(b, 41)) == f.freqs(0, 1));
  CHECK(le_u64(b, b.size() - 8) == f.fingerprint);

  const FrequencySet back = io::freqs_from_bytes(b);
  CHECK(back.freqs == f.freqs);
  CHECK(back.kind == f.kind);
  CHECK(back.fingerprint == f.fingerprint);
  CHECK(io::freqs_to_bytes(back) == b);

  std::string tampered = b;
  tampered[40] ^= 1;
  CHECK_THROWS_AS(io::freqs_from_bytes(tampered), IntegrityError);
  CHECK_THROWS_AS(io::freqs_from_bytes(b.substr(0, b.size() - 3)), FormatError);
  std::string bad_magic = b;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(io::freqs_from_bytes(bad_magic), FormatError);
}

TEST_CASE("CLSKCH01 layout") {
  const FrequencySet f = small_freqs();
  Dataset x = Dataset::Random(20, 3);
  const Sketch s = sketch_empirical(x, f);
  const std::string b = io::sketch_to_bytes(s);
  REQUIRE(b.size() == 8 + 4 + 8 + 1 + 8 + 7 * 16);
  CHECK(b.substr(0, 8) == "CLSKCH01");
  CHECK(le_u32(b, 8) == 7);
  CHECK(le_u64(b, 12) == 20);
  CHECK(b[20] == 0);
  CHECK(le_u64(b, 21) == f.fingerprint);
  CHECK(std::bit_cast<double>(le_u64(b, 29)) == s.values[0].real());
  CHECK(std::bit_cast<double>(le_u64(b, 37)) == s.values[0].imag());
  const Sketch back = io::sketch_from_bytes(b);
  CHECK(back.values == s.values);
  CHECK(back.count == 20);
  CHECK(!back.analytic);

  Mixture mix({{Vector::Zero(3), Vector::Ones(3)}}, Vector::Ones(1));
  const Sketch a = io::sketch_from_bytes(io::sketch_to_bytes(sketch_gmm(mix, f)));
  CHECK(a.analytic);
  CHECK(a.count == 0);
}

TEST_CASE("CLDATA01 and CSV ingestion") {
  const fs::path dir = tmp_dir();
  Rng rng(3);
  Dataset x(1000, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  io::write_dataset(dir / "d.bin", x);
  const std::string b = io::read_file(dir / "d.bin");
  CHECK(b.substr(0, 8) == "CLDATA01");
  CHECK(le_u32(b, 8) == 2);
  CHECK(le_u64(b, 12) == 1000);
  CHECK(b.size() == 20 + 1000 * 2 * 8);
  CHECK(io::read_dataset(dir / "d.bin") == x);

  io::DatasetReader reader(dir / "d.bin");
  CHECK(reader.dim() == 2);
  Eigen::Index seen = 0;
  for (;;) {
    const Dataset block = reader.next(300);
    if (block.rows() == 0) break;
    CHECK(block == x.middleRows(seen, block.rows()));
    seen += block.rows();
  }
  CHECK(seen == 1000);

  io::write_file(dir / "d.csv", "# comment\n1.5, -2\n\n3e-1,4\r\n");
  const Dataset c = io::read_dataset(dir / "d.csv");
  REQUIRE(c.rows() == 2);
  CHECK(c(0, 0) == 1.5);
  CHECK(c(0, 1) == -2.0);
  CHECK(c(1, 0) == 0.3);
  CHECK(c(1, 1) == 4.0);

  io::write_file(dir / "bad.csv", "1,2\n3\n");
  CHECK_THROWS_AS(io::read_dataset(dir / "bad.csv"), FormatError);
  io::write_file(dir / "nan.csv", "1,nan\n");
  CHECK_THROWS_AS(io::read_dataset(dir / "nan.csv"), FormatError);
  CHECK_THROWS_AS(io::read_dataset(dir / "missing.bin"), FormatError);
  std::string trunc = b.substr(0, 100);
  io::write_file(dir / "trunc.bin", trunc);
  CHECK_THROWS_AS(io::read_dataset(dir / "trunc.bin"), FormatError);
}
