// Versioned binary container for named matrices plus a JSON header.
//
// Layout (little-endian):
//   8 bytes  magic "EVTUPLE\0"
//   u32      format version
//   u64      header length, then that many bytes of UTF-8 JSON
//   f64[]    tensor payloads, row-major, in header order
//   u32      CRC-32 of header bytes followed by payload bytes
#ifndef EVTUPLE_ARCHIVE_H_
#define EVTUPLE_ARCHIVE_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "evtuple/autodiff.h"

namespace evtuple {

inline constexpr uint32_t kArchiveVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct TensorArchive {
  std::string kind;     // "model" or "contextual"
  nlohmann::json meta;  // free-form metadata
  std::vector<NamedTensor> tensors;

  void save(const std::string& path) const;
  // Throws CheckpointError on truncation, bad magic, version or checksum.
  static TensorArchive load(const std::string& path);

  const NamedTensor* find(const std::string& name) const;
};

}  // namespace evtuple

#endif  // EVTUPLE_ARCHIVE_H_
