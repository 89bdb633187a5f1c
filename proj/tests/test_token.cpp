// Copyright 2026 The minifed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "minifed/token.hpp"

#include <random>

#include <gtest/gtest.h>

#include "minifed/encoding.hpp"

namespace minifed {
namespace {

// Golden value computed once with an independent HMAC-SHA256 reference
// implementation (Python hmac/hashlib, base64.urlsafe_b64encode) over the
// canonical payload {"exp":4102444800,"scopes":["read:/ligo"],"sub":"probe"}
// with secret "k".
constexpr const char* kGoldenWire =
    "eyJleHAiOjQxMDI0NDQ4MDAsInNjb3BlcyI6WyJyZWFkOi9saWdvIl0sInN1YiI6InByb2Jl"
    "In0.kRgtk9nfP_QahoRtNw_ZLqNJzK5xAm_inXy-Rsa2ezY";

TEST(MintToken, MatchesGoldenReferenceValue) {
  EXPECT_EQ(mint_token("probe", {"read:/ligo"}, 4102444800, "k"), kGoldenWire);
}

TEST(MintToken, Deterministic) {
  std::string a = mint_token("probe", {"read:/ligo"}, 4102444800, "k");
  std::string b = mint_token("probe", {"read:/ligo"}, 4102444800, "k");
  EXPECT_EQ(a, b);
}

TEST(MintToken, RejectsWriteScope) {
  EXPECT_THROW(mint_token("s", {"write:/x"}, 1, "k"), InputError);
}

TEST(MintToken, RejectsEmptySecret) {
  EXPECT_THROW(mint_token("s", {"read:/x"}, 1, ""), InputError);
}

TEST(MintToken, RejectsRelativeScopePrefix) {
  EXPECT_THROW(mint_token("s", {"read:x"}, 1, "k"), InputError);
}

TEST(VerifyToken, AllowsInScopeUnexpired) {
  std::string t = mint_token("probe", {"read:/ligo"}, 1000, "k");
  EXPECT_EQ(verify_token(t, "k", "/ligo/a", 999), TokenVerdict::Allow);
  EXPECT_EQ(verify_token(t, "k", "/ligo", 999), TokenVerdict::Allow);
}

TEST(VerifyToken, ExpiryIsStrict) {
  std::string t = mint_token("probe", {"read:/ligo"}, 1000, "k");
  EXPECT_EQ(verify_token(t, "k", "/ligo/a", 1000), TokenVerdict::Expired);
  EXPECT_EQ(verify_token(t, "k", "/ligo/a", 5000), TokenVerdict::Expired);
}

TEST(VerifyToken, OutOfScopeAtComponentBoundary) {
  std::string t = mint_token("probe", {"read:/ligo"}, 1000, "k");
  EXPECT_EQ(verify_token(t, "k", "/ligo2/a", 1), TokenVerdict::OutOfScope);
  EXPECT_EQ(verify_token(t, "k", "/nova/a", 1), TokenVerdict::OutOfScope);
}

TEST(VerifyToken, WrongSecretIsBadSignature) {
  std::string t = mint_token("probe", {"read:/ligo"}, 1000, "k");
  EXPECT_EQ(verify_token(t, "other", "/ligo/a", 1),
            TokenVerdict::BadSignature);
}

TEST(VerifyToken, EveryFlippedSignatureByteDenies) {
  std::string t = mint_token("probe", {"read:/ligo"}, 1000, "k");
  std::size_t dot = t.find('.');
  std::string sig = *base64url_decode(t.substr(dot + 1));
  ASSERT_EQ(sig.size(), 32u);
  for (std::size_t i = 0; i < sig.size(); ++i) {
    std::string corrupted = sig;
    corrupted[i] = char(uint8_t(corrupted[i]) ^ 0x01);
    std::string wire = t.substr(0, dot + 1) + base64url_encode(corrupted);
    EXPECT_EQ(verify_token(wire, "k", "/ligo/a", 1),
              TokenVerdict::BadSignature)
        << "byte " << i;
  }
}

TEST(VerifyToken, MalformedShapes) {
  EXPECT_EQ(verify_token("nodots", "k", "/a", 1), TokenVerdict::Malformed);
  EXPECT_EQ(verify_token("a.b.c", "k", "/a", 1), TokenVerdict::Malformed);
  EXPECT_EQ(verify_token("!!!.###", "k", "/a", 1), TokenVerdict::Malformed);
  // Valid signature over a payload that is not a token object.
  std::string payload = "[1,2,3]";
  auto mac = hmac_sha256("k", payload);
  std::string wire =
      base64url_encode(payload) + "." +
      base64url_encode(std::string(reinterpret_cast<const char*>(mac.data()),
                                   mac.size()));
  EXPECT_EQ(verify_token(wire, "k", "/a", 1), TokenVerdict::Malformed);
}

// Round-trip property: every path under a scope prefix verifies, every
// path outside all scopes is denied out-of-scope.
TEST(VerifyToken, RoundTripPropertyOverRandomPaths) {
  std::mt19937_64 rng(37);
  const std::vector<std::string> segs = {"x", "y", "z", "w"};
  for (int iter = 0; iter < 200; ++iter) {
    std::string prefix = "/" + segs[rng() % segs.size()];
    if (rng() % 2) prefix += "/" + segs[rng() % segs.size()];
    std::string t = mint_token("s", {std::string("read:") + prefix}, 100, "k");

    std::string under = prefix;
    int extra = int(rng() % 3);
    for (int i = 0; i < extra; ++i) under += "/" + segs[rng() % segs.size()];
    EXPECT_EQ(verify_token(t, "k", under, 99), TokenVerdict::Allow) << under;

    std::string outside = "/outside/" + segs[rng() % segs.size()];
    EXPECT_EQ(verify_token(t, "k", outside, 99), TokenVerdict::OutOfScope);
  }
}

TEST(Base64Url, RejectsNonCanonicalInput) {
  EXPECT_FALSE(base64url_decode("a").has_value());      // length 1 mod 4
  EXPECT_FALSE(base64url_decode("a+b/").has_value());   // std alphabet
  EXPECT_TRUE(base64url_decode("a-b_").has_value());
}

}  // namespace
}  // namespace minifed
