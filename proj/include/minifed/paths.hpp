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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace minifed {

// Object paths are absolute, slash-separated, with segments drawn from
// [A-Za-z0-9._-]. "." and ".." segments are rejected outright so a valid
// path can never climb out of a serving root.

inline bool is_valid_path_segment(std::string_view seg) {
  if (seg.empty() || seg == "." || seg == "..") return false;
  for (char c : seg) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
              (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) return false;
  }
  return true;
}

inline bool is_valid_object_path(std::string_view path) {
  if (path.empty() || path[0] != '/') return false;
  if (path.size() > 1024) return false;
  if (path == "/") return true;
  std::size_t start = 1;
  while (start <= path.size()) {
    std::size_t slash = path.find('/', start);
    std::string_view seg = (slash == std::string_view::npos)
                               ? path.substr(start)
                               : path.substr(start, slash - start);
    if (!is_valid_path_segment(seg)) return false;
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return true;
}

/// Namespace prefixes look like object paths but never end in "/", except
/// the root prefix "/" itself.
inline bool is_valid_namespace_prefix(std::string_view prefix) {
  if (prefix == "/") return true;
  if (prefix.size() < 2 || prefix.back() == '/') return false;
  return is_valid_object_path(prefix);
}

/// True when `prefix` covers `path` at a path-component boundary:
/// "/ligo" covers "/ligo" and "/ligo/a" but not "/ligo2/x".
inline bool prefix_matches(std::string_view prefix, std::string_view path) {
  if (prefix == "/") return !path.empty() && path[0] == '/';
  if (path == prefix) return true;
  return path.size() > prefix.size() && path.substr(0, prefix.size()) == prefix &&
         path[prefix.size()] == '/';
}

/// Maps an object path onto a file below `root`, keeping the namespace
/// prefix in the relative part. Returns nullopt when the path is invalid
/// or the mapped file would land outside `root` (symlinks included).
inline std::optional<std::filesystem::path> map_to_file(
    const std::filesystem::path& root, std::string_view object_path) {
  if (!is_valid_object_path(object_path) || object_path == "/") {
    return std::nullopt;
  }
  std::filesystem::path mapped = root;
  mapped += std::string(object_path);
  std::error_code ec;
  std::filesystem::path resolved = std::filesystem::weakly_canonical(mapped, ec);
  if (ec) return std::nullopt;
  std::filesystem::path root_resolved =
      std::filesystem::weakly_canonical(root, ec);
  if (ec) return std::nullopt;
  auto mismatch =
      std::mismatch(root_resolved.begin(), root_resolved.end(),
                    resolved.begin(), resolved.end());
  if (mismatch.first != root_resolved.end()) return std::nullopt;
  return resolved;
}

}  // namespace minifed
