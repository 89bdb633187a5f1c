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

#include "minifed/paths.hpp"

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

namespace minifed {
namespace {

TEST(ObjectPath, Validation) {
  EXPECT_TRUE(is_valid_object_path("/"));
  EXPECT_TRUE(is_valid_object_path("/ligo/frames/O3/a.gwf"));
  EXPECT_TRUE(is_valid_object_path("/a"));
  EXPECT_FALSE(is_valid_object_path(""));
  EXPECT_FALSE(is_valid_object_path("relative/path"));
  EXPECT_FALSE(is_valid_object_path("/a//b"));
  EXPECT_FALSE(is_valid_object_path("/a/"));
  EXPECT_FALSE(is_valid_object_path("/a/../b"));
  EXPECT_FALSE(is_valid_object_path("/a/./b"));
  EXPECT_FALSE(is_valid_object_path("/a b"));
  EXPECT_FALSE(is_valid_object_path("/a/%2e%2e/b"));
}

TEST(NamespacePrefix, Validation) {
  EXPECT_TRUE(is_valid_namespace_prefix("/"));
  EXPECT_TRUE(is_valid_namespace_prefix("/ligo"));
  EXPECT_TRUE(is_valid_namespace_prefix("/a/b"));
  EXPECT_FALSE(is_valid_namespace_prefix("/ligo/"));
  EXPECT_FALSE(is_valid_namespace_prefix("ligo"));
  EXPECT_FALSE(is_valid_namespace_prefix(""));
}

TEST(PrefixMatch, ComponentBoundary) {
  EXPECT_TRUE(prefix_matches("/ligo", "/ligo"));
  EXPECT_TRUE(prefix_matches("/ligo", "/ligo/frames/a"));
  EXPECT_FALSE(prefix_matches("/ligo", "/ligo2/x"));
  EXPECT_FALSE(prefix_matches("/ligo", "/lig"));
  EXPECT_TRUE(prefix_matches("/", "/anything"));
  EXPECT_TRUE(prefix_matches("/a/b", "/a/b/c"));
  EXPECT_FALSE(prefix_matches("/a/b", "/a/bc"));
}

class MapToFile : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = std::filesystem::temp_directory_path() /
            ("minifed-paths-" + std::to_string(::getpid()));
    std::filesystem::create_directories(root_ / "ligo");
    std::ofstream(root_ / "ligo" / "a.txt") << "data";
    std::ofstream(root_.parent_path() / "outside-minifed.txt") << "secret";
  }
  void TearDown() override {
    std::filesystem::remove_all(root_);
    std::filesystem::remove(root_.parent_path() / "outside-minifed.txt");
  }
  std::filesystem::path root_;
};

TEST_F(MapToFile, ResolvesInsideRoot) {
  auto mapped = map_to_file(root_, "/ligo/a.txt");
  ASSERT_TRUE(mapped.has_value());
  EXPECT_TRUE(std::filesystem::exists(*mapped));
}

TEST_F(MapToFile, RejectsTraversalShapes) {
  EXPECT_FALSE(map_to_file(root_, "/../outside-minifed.txt").has_value());
  EXPECT_FALSE(map_to_file(root_, "/ligo/../../outside-minifed.txt").has_value());
  EXPECT_FALSE(map_to_file(root_, "/%2e%2e/outside-minifed.txt").has_value());
  EXPECT_FALSE(map_to_file(root_, "//etc/passwd").has_value());
  EXPECT_FALSE(map_to_file(root_, "/").has_value());
  EXPECT_FALSE(map_to_file(root_, "relative").has_value());
}

TEST_F(MapToFile, RejectsSymlinkEscape) {
  std::error_code ec;
  std::filesystem::create_symlink(root_.parent_path() / "outside-minifed.txt",
                                  root_ / "ligo" / "leak", ec);
  if (ec) GTEST_SKIP() << "cannot create symlinks here";
  EXPECT_FALSE(map_to_file(root_, "/ligo/leak").has_value());
}

}  // namespace
}  // namespace minifed
