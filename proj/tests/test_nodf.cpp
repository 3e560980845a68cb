#include <doctest.h>

#include <filesystem>

#include "lnf/nodf.hpp"
#include "lnf/rng.hpp"

using namespace lnf;
using nodf::Component;
using nodf::NodfFile;

namespace {

NodfFile sample_file(int n_samples) {
  NodfFile f;
  f.metadata = {{"benchmark", "laplace"}, {"n", std::to_string(n_samples)},
                {"created", "2026-01-01T00:00:00Z"}};
  Rng rng(1, 0);
  std::vector<double> g(size_t(n_samples) * 200);
  for (double& v : g) v = rng.uniform(-1, 1);
  std::vector<double> u(size_t(n_samples) * 2601);
  for (double& v : u) v = rng.uniform(-1, 1);
  f.components.push_back(Component::make_f64(
      "g", nodf::Role::Input, {uint32_t(n_samples), 200}, std::move(g)));
  f.components.push_back(Component::make_f64(
      "u", nodf::Role::Output, {uint32_t(n_samples), 2601}, std::move(u)));
  f.components.push_back(Component::make_u32("mesh_tris", nodf::Role::Aux, {3, 3},
                                             {0, 1, 2, 3, 4, 5, 6, 7, 8}));
  return f;
}

}  // namespace

TEST_CASE("nodf: round trip is bit-identical") {
  NodfFile f = sample_file(4);
  auto tmp = std::filesystem::temp_directory_path() / "lnf_roundtrip.nodf";
  nodf::write_nodf(f, tmp);
  NodfFile back = nodf::read_nodf(tmp);
  CHECK(back.metadata == f.metadata);
  REQUIRE(back.components.size() == f.components.size());
  for (size_t i = 0; i < f.components.size(); ++i) {
    CHECK(back.components[i].name == f.components[i].name);
    CHECK(back.components[i].dims == f.components[i].dims);
    CHECK(back.components[i].f64 == f.components[i].f64);
    CHECK(back.components[i].u32 == f.components[i].u32);
  }
  // a laplace file reports dims [n, 200] and [n, 2601]
  CHECK(back.at("g").dims == std::vector<uint32_t>{4, 200});
  CHECK(back.at("u").dims == std::vector<uint32_t>{4, 2601});

  // encoding twice yields identical bytes
  CHECK(nodf::encode_nodf(f) == nodf::encode_nodf(back));
  std::filesystem::remove(tmp);
}

TEST_CASE("nodf: empty component list is a valid file") {
  NodfFile f;
  f.metadata = {{"note", "empty"}};
  std::vector<uint8_t> bytes = nodf::encode_nodf(f);
  NodfFile back = nodf::decode_nodf(bytes);
  CHECK(back.components.empty());
  CHECK(back.meta("note") == "empty");
}

TEST_CASE("nodf: payload offsets are 8-byte aligned") {
  NodfFile f = sample_file(3);
  std::vector<uint8_t> bytes = nodf::encode_nodf(f);
  size_t off = nodf::header_size(bytes);
  for (const auto& c : f.components) {
    off = (off + 7) / 8 * 8;
    CHECK(off % 8 == 0);
    off += c.byte_size();
  }
  CHECK(off == bytes.size());
}

TEST_CASE("nodf: format errors name the failing region") {
  NodfFile f = sample_file(2);
  std::vector<uint8_t> bytes = nodf::encode_nodf(f);

  std::vector<uint8_t> truncated(bytes.begin(), bytes.end() - 17);
  CHECK_THROWS_AS(nodf::decode_nodf(truncated), FormatError);
  try {
    nodf::decode_nodf(truncated);
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("payload") != std::string::npos);
  }

  std::vector<uint8_t> bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(nodf::decode_nodf(bad_magic), FormatError);

  std::vector<uint8_t> bad_version = bytes;
  bad_version[6] = 0x7f;
  CHECK_THROWS_AS(nodf::decode_nodf(bad_version), FormatError);

  std::vector<uint8_t> trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(nodf::decode_nodf(trailing), FormatError);
}

TEST_CASE("nodf: every single-byte header corruption is rejected") {
  NodfFile f = sample_file(2);
  std::vector<uint8_t> bytes = nodf::encode_nodf(f);
  size_t header = nodf::header_size(bytes);
  Rng rng(99, 0);
  int rejected = 0;
  int trials = 300;
  for (int t = 0; t < trials; ++t) {
    std::vector<uint8_t> corrupt = bytes;
    size_t pos = rng.below(header);
    uint8_t delta = 1 + uint8_t(rng.below(255));
    corrupt[pos] = uint8_t(corrupt[pos] + delta);
    try {
      nodf::decode_nodf(corrupt);
    } catch (const FormatError&) {
      ++rejected;
    }
  }
  CHECK(rejected == trials);
}

TEST_CASE("nodf: sample-count mismatch across roles is rejected") {
  NodfFile f;
  f.components.push_back(Component::make_f64("a", nodf::Role::Input, {3, 2},
                                             std::vector<double>(6, 0.0)));
  f.components.push_back(Component::make_f64("b", nodf::Role::Output, {4, 2},
                                             std::vector<double>(8, 0.0)));
  CHECK_THROWS_AS(nodf::encode_nodf(f), ContractError);
}
