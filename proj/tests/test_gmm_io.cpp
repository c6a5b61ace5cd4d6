#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>

#include "pnpgmm/errors.hpp"
#include "pnpgmm/gmm_io.hpp"
#include "test_support.hpp"

using namespace pnpgmm;
namespace t = pnpgmm::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "pnpgmm_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("binary and text files load back bit-exact") {
  std::mt19937_64 rng(6);
  const GmmModel m = t::random_model(5, 3, rng, 100.0, 10.0);
  const auto bin = scratch("m.gmm");
  const auto txt = scratch("m.txt");
  save_model(bin, m, ModelFormat::binary);
  save_model(txt, m, ModelFormat::text);
  CHECK(load_model(bin) == m);
  CHECK(load_model(txt) == m);
  CHECK(slurp(bin).rfind("GMMPRIOR v1\n", 0) == 0);
  CHECK(slurp(txt).rfind("GMMPRIOR v1 text\n", 0) == 0);
  CHECK(slurp(bin).size() == 12 + 8 * (3 + 5 + 5 * 9 + 5 * 81) + 4);
}

TEST_CASE("corruption is detected") {
  std::mt19937_64 rng(7);
  const GmmModel m = t::random_model(2, 2, rng);
  const auto path = scratch("c.gmm");
  save_model(path, m);
  const std::string good = slurp(path);

  std::string flipped = good;
  flipped[40] = static_cast<char>(flipped[40] ^ 0x10);
  spit(path, flipped);
  CHECK_THROWS_AS(load_model(path), DataError);

  spit(path, good.substr(0, good.size() - 9));
  CHECK_THROWS_AS(load_model(path), DataError);

  spit(path, "GMMPRIOR v2\n" + good.substr(12));
  CHECK_THROWS_AS(load_model(path), DataError);

  const auto txt = scratch("c.txt");
  save_model(txt, m, ModelFormat::text);
  std::string text = slurp(txt);
  const auto pos = text.find("weights ");
  text[pos + 8] = text[pos + 8] == '1' ? '2' : '1';
  spit(txt, text);
  CHECK_THROWS_AS(load_model(txt), DataError);

  CHECK_THROWS_AS(load_model(scratch("does-not-exist.gmm")), DataError);
}

TEST_CASE("payload checksum is the standard CRC-32") {
  CHECK(payload_crc32("123456789") == 0xCBF43926u);
}
