#include "pgkd/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "pgkd/error.hpp"

using nlohmann::json;

namespace pgkd {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'P', 'G', 'K', 'D', 'C', 'K', 'P', '1'};
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json header;
  header["model_kind"] = c.model_kind;
  header["meta"] = c.meta;
  json tens = json::array();
  for (const auto& [name, m] : c.tensors)
    tens.push_back({{"name", name}, {"rows", m.rows}, {"cols", m.cols}});
  header["tensors"] = tens;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary);
  check(out.good(), ErrorKind::io, "cannot write checkpoint ", path);
  out.write(kMagic, 8);
  auto hlen = static_cast<std::uint32_t>(hs.size());
  out.write(reinterpret_cast<const char*>(&hlen), 4);
  out.write(hs.data(), hs.size());
  for (const auto& [name, m] : c.tensors)
    out.write(reinterpret_cast<const char*>(m.data.data()),
              static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  check(out.good(), ErrorKind::io, "write failed for checkpoint ", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  check(in.good(), ErrorKind::io, "cannot open checkpoint ", path);

  char magic[8];
  in.read(magic, 8);
  check(in.gcount() == 8, ErrorKind::data, path, ": truncated checkpoint header");
  check(std::memcmp(magic, kMagic, 8) == 0, ErrorKind::data, path,
        ": not a checkpoint, or unsupported format version");

  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 4);
  check(in.gcount() == 4 && hlen < (1u << 24), ErrorKind::data, path,
        ": corrupt checkpoint header length");
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  check(static_cast<std::uint32_t>(in.gcount()) == hlen, ErrorKind::data, path,
        ": truncated checkpoint header");

  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, path, ": corrupt checkpoint header: ", e.what());
  }

  Checkpoint c;
  try {
    c.model_kind = header.at("model_kind").get<std::string>();
    c.meta = header.value("meta", json::object());
    for (const json& t : header.at("tensors")) {
      int rows = t.at("rows").get<int>();
      int cols = t.at("cols").get<int>();
      check(rows >= 0 && cols >= 0 && static_cast<std::int64_t>(rows) * cols < (1ll << 32),
            ErrorKind::data, path, ": bad tensor shape");
      c.tensors.emplace_back(t.at("name").get<std::string>(), Matrix(rows, cols));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::data, path, ": corrupt checkpoint header: ", e.what());
  }

  for (auto& [name, m] : c.tensors) {
    auto bytes = static_cast<std::streamsize>(m.data.size() * sizeof(double));
    in.read(reinterpret_cast<char*>(m.data.data()), bytes);
    check(in.gcount() == bytes, ErrorKind::data, path,
          ": truncated checkpoint payload in tensor '", name, "'");
  }
  in.peek();
  check(in.eof(), ErrorKind::data, path, ": trailing bytes after checkpoint payload");
  return c;
}

}  // namespace pgkd
