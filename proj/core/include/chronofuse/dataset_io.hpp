#pragma once

#include <cstddef>
#include <string>

#include "chronofuse/cohort.hpp"

namespace chronofuse {

/// Streaming SHA-256 (hex digest) used for dataset content addressing.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t len);
  void update(const std::string& bytes) { update(bytes.data(), bytes.size()); }
  std::string hex();  // finalizes; call once

 private:
  void* ctx_ = nullptr;
};

std::string sha256_hex(const std::string& bytes);

/// Dataset directory layout:
///   manifest.json   - schema version, config echo, content digest
///   subjects.jsonl  - one JSON record per subject (sorted keys)
///   signals.bin     - row-major f32 waveform blocks
///   signals.idx     - little-endian u64 count, then one byte offset per block
/// The digest covers subjects.jsonl followed by signals.bin.
void write_dataset(const CohortDataset& ds, const std::string& dir);

/// Reads a dataset directory back, verifying schema version and content
/// digest. Malformed input raises ParseError (with file/line context);
/// an unsupported schema version raises MigrationError.
CohortDataset read_dataset(const std::string& dir);

/// The content digest recorded in an existing dataset directory's manifest.
std::string dataset_digest(const std::string& dir);

}  // namespace chronofuse
