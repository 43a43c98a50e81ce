#include "evtuple/archive.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

#include "evtuple/errors.h"

namespace evtuple {
namespace {

static_assert(std::endian::native == std::endian::little,
              "archive I/O assumes a little-endian host");

constexpr char kMagic[8] = {'E', 'V', 'T', 'U', 'P', 'L', 'E', '\0'};

template <class T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <class T>
T take(const std::string& buf, size_t& at) {
  if (at + sizeof(T) > buf.size()) throw CheckpointError("archive truncated");
  T v;
  std::memcpy(&v, buf.data() + at, sizeof(T));
  at += sizeof(T);
  return v;
}

}  // namespace

void TensorArchive::save(const std::string& path) const {
  nlohmann::json header;
  header["kind"] = kind;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : tensors) {
    header["tensors"].push_back({{"name", t.name}, {"rows", t.value.rows()},
                                 {"cols", t.value.cols()}});
  }
  const std::string head = header.dump();
  std::string body;
  for (const auto& t : tensors) {
    body.append(reinterpret_cast<const char*>(t.value.data()),
                static_cast<size_t>(t.value.size()) * sizeof(double));
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(head.data()), static_cast<uInt>(head.size()));
  crc = crc32(crc, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));

  std::string out(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kArchiveVersion);
  put<uint64_t>(out, head.size());
  out += head;
  out += body;
  put<uint32_t>(out, static_cast<uint32_t>(crc));

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("failed writing '" + path + "'");
}

TensorArchive TensorArchive::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint '" + path + "'");
  const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
  }
  size_t at = sizeof(kMagic);
  const auto version = take<uint32_t>(buf, at);
  if (version != kArchiveVersion) {
    throw CheckpointError("checkpoint format version " + std::to_string(version) +
                          " is incompatible with this build (expects " +
                          std::to_string(kArchiveVersion) + ")");
  }
  const auto head_len = take<uint64_t>(buf, at);
  if (head_len > buf.size() - at) throw CheckpointError("archive truncated");
  const std::string head = buf.substr(at, head_len);
  at += head_len;

  TensorArchive ar;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(head);
    ar.kind = header.at("kind").get<std::string>();
    ar.meta = header.at("meta");
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupted archive header: ") + e.what());
  }
  const size_t body_start = at;
  nlohmann::json entries;
  try {
    entries = header.at("tensors");
    for (const auto& t : entries) {
      (void)t.at("name").get<std::string>();
      (void)t.at("rows").get<int64_t>();
      (void)t.at("cols").get<int64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupted archive header: ") + e.what());
  }
  for (const auto& t : entries) {
    const auto rows = t.at("rows").get<int64_t>();
    const auto cols = t.at("cols").get<int64_t>();
    if (rows < 0 || cols < 0) throw CheckpointError("corrupted tensor shape");
    const size_t bytes = static_cast<size_t>(rows * cols) * sizeof(double);
    if (bytes > buf.size() - at) throw CheckpointError("archive truncated");
    NamedTensor nt{t.at("name").get<std::string>(), Matrix(rows, cols)};
    std::memcpy(nt.value.data(), buf.data() + at, bytes);
    at += bytes;
    ar.tensors.push_back(std::move(nt));
  }
  const auto stored = take<uint32_t>(buf, at);
  if (at != buf.size()) throw CheckpointError("trailing bytes after archive");
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(head.data()), static_cast<uInt>(head.size()));
  crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data() + body_start),
              static_cast<uInt>(at - sizeof(uint32_t) - body_start));
  if (static_cast<uint32_t>(crc) != stored) throw CheckpointError("checkpoint checksum mismatch");
  return ar;
}

const NamedTensor* TensorArchive::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

}  // namespace evtuple
