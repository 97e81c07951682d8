#include <doctest.h>

#include <random>

#include "nftm/address.hpp"
#include "nftm/bytes.hpp"
#include "nftm/error.hpp"
#include "support/oracles.hpp"

using namespace nftm;

TEST_CASE("hex round trip and rejects malformed input") {
  Bytes b = {0x00, 0x7f, 0x80, 0xff};
  CHECK(to_hex(b) == "007f80ff");
  CHECK(from_hex("007F80ff") == b);
  CHECK_THROWS_AS(from_hex("abc"), Error);
  CHECK_THROWS_AS(from_hex("zz"), Error);
}

TEST_CASE("sha256 matches the OpenSSL oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    Bytes data(rng() % 300);
    for (auto& x : data) x = static_cast<std::uint8_t>(rng());
    CHECK(to_hex(sha256(data)) == oracle::hex(oracle::sha256(data)));
  }
}

TEST_CASE("byte writer encodes big-endian with u32 length prefixes") {
  ByteWriter w;
  w.u64(0x0102030405060708ULL);
  w.str("ab");
  CHECK(to_hex(w.bytes()) == "01020304050607080000000261" "62");

  ByteReader r(w.bytes());
  CHECK(r.u64() == 0x0102030405060708ULL);
  CHECK(r.str() == "ab");
  CHECK(r.done());

  ByteReader short_read(ByteView(w.bytes()).first(5));
  CHECK_THROWS_AS(short_read.u64(), Error);
}

TEST_CASE("address parse/render round-trips and is strict") {
  const std::string text = "0x00112233445566778899aabbccddeeff00112233";
  auto a = Address::parse(text);
  CHECK(a.hex() == text);
  CHECK(a.hex().size() == 42);

  CHECK_THROWS_AS(Address::parse("0x00112233"), Error);
  CHECK_THROWS_AS(Address::parse("0X00112233445566778899aabbccddeeff00112233"), Error);
  CHECK_THROWS_AS(Address::parse("0x00112233445566778899AABBCCDDEEFF00112233"), Error);
  CHECK_THROWS_AS(Address::parse("0x00112233445566778899aabbccddeeff0011223g"), Error);

  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    std::array<std::uint8_t, 20> raw{};
    for (auto& x : raw) x = static_cast<std::uint8_t>(rng());
    Address addr(raw);
    CHECK(Address::parse(addr.hex()) == addr);
  }
}
