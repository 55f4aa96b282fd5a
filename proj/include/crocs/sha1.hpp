#pragma once

#include <string>

namespace crocs {

/// Lowercase hex SHA-1 digest of a byte string.
std::string sha1_hex(const std::string& bytes);

/// Git blob hash: sha1("blob <size>\0" + contents). Used for run manifests.
std::string git_blob_hash_file(const std::string& path);

}  // namespace crocs
