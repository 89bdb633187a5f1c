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

#include "minifed/wire.hpp"

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "tests/random_values.hpp"
#include "tests/malformed_corpus.hpp"

namespace minifed {
namespace {

TEST(RequestCodec, DecodeBareGet) {
  Request r = decode_request("GET /ligo/a OSDF-MINI/1\r\n\r\n");
  EXPECT_EQ(r.method, Method::Get);
  EXPECT_EQ(r.path, "/ligo/a");
  EXPECT_TRUE(r.headers.empty());
}

TEST(RequestCodec, EncodeLocate) {
  Request r;
  r.method = Method::Locate;
  r.path = "/nova/f";
  EXPECT_EQ(encode_request(r), "LOCATE /nova/f OSDF-MINI/1\r\n\r\n");
}

TEST(RequestCodec, StatsHasEmptyPathToken) {
  Request r;
  r.method = Method::Stats;
  std::string wire = encode_request(r);
  EXPECT_EQ(wire, "STATS  OSDF-MINI/1\r\n\r\n");
  EXPECT_EQ(decode_request(wire), r);
}

TEST(RequestCodec, UnknownMethodRejected) {
  try {
    decode_request("PUT /x OSDF-MINI/1\r\n\r\n");
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.kind(), "unknown-method");
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(RequestCodec, HeadersPreserveOrderAndCase) {
  Request r;
  r.method = Method::Get;
  r.path = "/a";
  r.headers = {{"X-First", "1"}, {"Authorization", "tok"}, {"X-Last", "z z"}};
  Request back = decode_request(encode_request(r));
  ASSERT_EQ(back.headers.size(), 3u);
  EXPECT_EQ(back.headers[0].first, "X-First");
  EXPECT_EQ(back.headers[2].second, "z z");
  EXPECT_EQ(back, r);
}

TEST(RequestCodec, HeaderLookupIsCaseInsensitive) {
  Request r = decode_request(
      "GET /a OSDF-MINI/1\r\nAuthorization: tok\r\n\r\n");
  auto v = get_header(r.headers, "authorization");
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(*v, "tok");
}

TEST(ResponseCodec, Ok200) {
  Response r{200, {{"Content-Length", "2"}}, "ab"};
  EXPECT_EQ(encode_response(r), "OSDF-MINI/1 200 OK\r\nContent-Length: 2\r\n\r\nab");
  EXPECT_EQ(decode_response(encode_response(r)), r);
}

TEST(ResponseCodec, RedirectCarriesLocationAndNoBody) {
  Response r{302, {{"Location", "h:1"}}, ""};
  std::string wire = encode_response(r);
  EXPECT_EQ(wire, "OSDF-MINI/1 302 Found\r\nLocation: h:1\r\n\r\n");
  EXPECT_EQ(decode_response(wire), r);
}

TEST(ResponseCodec, BodyShorterThanDeclaredRejected) {
  try {
    decode_response("OSDF-MINI/1 200 OK\r\nContent-Length: 5\r\n\r\nab");
    FAIL() << "expected ProtocolError";
  } catch (const ProtocolError& e) {
    EXPECT_EQ(e.kind(), "length-mismatch");
  }
}

TEST(ResponseCodec, BodyMayContainBlankLines) {
  std::string body = "ab\r\n\r\ncd";
  Response r{200, {{"Content-Length", std::to_string(body.size())}}, body};
  EXPECT_EQ(decode_response(encode_response(r)), r);
}

TEST(FrameCodec, EncodesLengthPrefix) {
  std::string framed = frame_encode("{}");
  ASSERT_EQ(framed.size(), 6u);
  EXPECT_EQ(framed, std::string("\x00\x00\x00\x02{}", 6));
}

TEST(FrameCodec, EmptyPayload) {
  EXPECT_EQ(frame_encode(""), std::string("\x00\x00\x00\x00", 4));
  std::size_t pos = 0;
  EXPECT_EQ(frame_decode(std::string("\x00\x00\x00\x00", 4), pos), "");
  EXPECT_EQ(pos, 4u);
}

TEST(FrameCodec, ConcatenatedFramesDecodeInOrder) {
  std::mt19937_64 rng(7);
  std::vector<std::string> payloads;
  std::string stream;
  for (int i = 0; i < 50; ++i) {
    payloads.push_back(testutil::random_blob(rng, rng() % 200));
    stream += frame_encode(payloads.back());
  }
  std::size_t pos = 0;
  for (const auto& expected : payloads) {
    EXPECT_EQ(frame_decode(stream, pos), expected);
  }
  EXPECT_EQ(pos, stream.size());
}

TEST(FrameCodec, RandomRoundTrips) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    std::string payload = testutil::random_blob(rng, rng() % 1000);
    std::size_t pos = 0;
    EXPECT_EQ(frame_decode(frame_encode(payload), pos), payload);
  }
}

TEST(RequestCodec, RandomRoundTrips) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    Request r = testutil::random_request(rng);
    EXPECT_EQ(decode_request(encode_request(r)), r);
  }
}

TEST(ResponseCodec, RandomRoundTrips) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 2000; ++i) {
    Response r = testutil::random_response(rng);
    EXPECT_EQ(decode_response(encode_response(r)), r);
  }
}

TEST(MalformedCorpus, EveryCaseRejectedWithDocumentedKind) {
  for (const auto& kase : testutil::malformed_corpus()) {
    SCOPED_TRACE(kase.name);
    try {
      kase.decode();
      FAIL() << "decoded successfully: " << kase.name;
    } catch (const ProtocolError& e) {
      EXPECT_EQ(e.kind(), kase.expected_kind) << kase.name;
    }
  }
}

TEST(MalformedCorpus, HasAtLeastTwentyCases) {
  EXPECT_GE(testutil::malformed_corpus().size(), 20u);
}

}  // namespace
}  // namespace minifed
