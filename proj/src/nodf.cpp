#include "lnf/nodf.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace lnf::nodf {

namespace {

constexpr char kMagic[6] = {'N', 'O', 'D', 'F', '1', '\0'};
constexpr uint16_t kVersion = 1;
constexpr uint64_t kMaxElements = uint64_t(1) << 40;

uint32_t crc32(const uint8_t* data, size_t len) {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int b = 0; b < 8; ++b) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t crc = 0xffffffffu;
  for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xffffffffu;
}

struct Writer {
  std::vector<uint8_t> buf;
  void u8(uint8_t v) { buf.push_back(v); }
  void u16(uint16_t v) {
    buf.push_back(v & 0xff);
    buf.push_back((v >> 8) & 0xff);
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xff);
  }
  void raw(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf.insert(buf.end(), b, b + n);
  }
  void pad_to(size_t align) {
    while (buf.size() % align != 0) buf.push_back(0);
  }
};

struct Reader {
  const std::vector<uint8_t>& buf;
  size_t pos = 0;
  void need(size_t n, const char* what) {
    if (pos + n > buf.size()) throw FormatError(std::string("nodf: truncated ") + what);
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return buf[pos++];
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = buf[pos] | (uint16_t(buf[pos + 1]) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(buf[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  void raw(void* out, size_t n, const char* what) {
    need(n, what);
    std::memcpy(out, buf.data() + pos, n);
    pos += n;
  }
  void align(size_t a) { pos = (pos + a - 1) / a * a; }
};

size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::F64: return 8;
    case Dtype::U32: return 4;
    case Dtype::Bytes: return 1;
  }
  throw FormatError("nodf: bad dtype");
}

std::string serialize_metadata(const Metadata& meta) {
  std::string out;
  for (const auto& [k, v] : meta) {
    if (k.empty() || k.find('=') != std::string::npos ||
        k.find('\n') != std::string::npos || v.find('\n') != std::string::npos) {
      throw ContractError("nodf: metadata keys/values must be single-line, '='-free keys");
    }
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

Metadata parse_metadata(const std::string& text) {
  Metadata meta;
  size_t start = 0;
  while (start < text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string::npos) throw FormatError("nodf: metadata line without newline");
    std::string line = text.substr(start, nl - start);
    size_t eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw FormatError("nodf: metadata line is not key=value");
    }
    meta.emplace_back(line.substr(0, eq), line.substr(eq + 1));
    start = nl + 1;
  }
  return meta;
}

}  // namespace

uint64_t Component::n_elements() const {
  uint64_t n = 1;
  for (uint32_t d : dims) n *= d;
  return n;
}

uint64_t Component::byte_size() const { return n_elements() * dtype_size(dtype); }

Component Component::make_f64(std::string name, Role role,
                              std::vector<uint32_t> dims, std::vector<double> data) {
  Component c;
  c.name = std::move(name);
  c.role = role;
  c.dtype = Dtype::F64;
  c.dims = std::move(dims);
  c.f64 = std::move(data);
  return c;
}

Component Component::make_u32(std::string name, Role role,
                              std::vector<uint32_t> dims, std::vector<uint32_t> data) {
  Component c;
  c.name = std::move(name);
  c.role = role;
  c.dtype = Dtype::U32;
  c.dims = std::move(dims);
  c.u32 = std::move(data);
  return c;
}

const Component* NodfFile::find(const std::string& name) const {
  for (const auto& c : components) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

const Component& NodfFile::at(const std::string& name) const {
  const Component* c = find(name);
  if (!c) throw ContractError("nodf: no component named " + name);
  return *c;
}

std::string NodfFile::meta(const std::string& key, const std::string& fallback) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return fallback;
}

int64_t NodfFile::n_samples() const {
  for (const auto& c : components) {
    if (c.role != Role::Aux) return c.dims.empty() ? 0 : int64_t(c.dims[0]);
  }
  return 0;
}

static void validate_for_write(const NodfFile& file) {
  int64_t n_samples = -1;
  for (const auto& c : file.components) {
    if (c.name.empty() || c.name.size() > 4096) {
      throw ContractError("nodf: component name empty or too long");
    }
    if (c.dims.empty() || c.dims.size() > 8) {
      throw ContractError("nodf: component rank must be 1..8");
    }
    for (uint32_t d : c.dims) {
      if (d == 0) throw ContractError("nodf: zero dimension");
    }
    if (c.n_elements() > kMaxElements) throw ContractError("nodf: component too large");
    size_t have = c.dtype == Dtype::F64 ? c.f64.size()
                  : c.dtype == Dtype::U32 ? c.u32.size()
                                          : c.bytes.size();
    if (have != c.n_elements()) {
      throw ContractError("nodf: component " + c.name + " data does not match dims");
    }
    if (c.role != Role::Aux) {
      if (n_samples < 0) {
        n_samples = c.dims[0];
      } else if (n_samples != int64_t(c.dims[0])) {
        throw ContractError("nodf: input/output components disagree on sample count");
      }
    }
  }
}

std::vector<uint8_t> encode_nodf(const NodfFile& file) {
  validate_for_write(file);
  Writer w;
  w.raw(kMagic, 6);
  w.u16(kVersion);
  std::string meta = serialize_metadata(file.metadata);
  w.u32(static_cast<uint32_t>(meta.size()));
  w.raw(meta.data(), meta.size());
  w.u32(static_cast<uint32_t>(file.components.size()));
  for (const auto& c : file.components) {
    w.u16(static_cast<uint16_t>(c.name.size()));
    w.raw(c.name.data(), c.name.size());
    w.u8(static_cast<uint8_t>(c.role));
    w.u8(static_cast<uint8_t>(c.dtype));
    w.u8(static_cast<uint8_t>(c.dims.size()));
    for (uint32_t d : c.dims) w.u32(d);
  }
  w.u32(crc32(w.buf.data(), w.buf.size()));
  for (const auto& c : file.components) {
    w.pad_to(8);
    switch (c.dtype) {
      case Dtype::F64: w.raw(c.f64.data(), c.f64.size() * 8); break;
      case Dtype::U32:
        for (uint32_t v : c.u32) w.u32(v);
        break;
      case Dtype::Bytes: w.raw(c.bytes.data(), c.bytes.size()); break;
    }
  }
  return std::move(w.buf);
}

NodfFile decode_nodf(const std::vector<uint8_t>& bytes) {
  Reader r{bytes};
  char magic[6];
  r.raw(magic, 6, "magic");
  if (std::memcmp(magic, kMagic, 6) != 0) throw FormatError("nodf: bad magic");
  uint16_t version = r.u16("version");
  if (version != kVersion) throw FormatError("nodf: unsupported version");
  uint32_t meta_len = r.u32("metadata length");
  std::string meta_text(meta_len, '\0');
  r.raw(meta_text.data(), meta_len, "metadata block");
  NodfFile file;
  file.metadata = parse_metadata(meta_text);
  uint32_t count = r.u32("component count");
  if (count > 1u << 20) throw FormatError("nodf: implausible component count");
  file.components.resize(count);
  for (auto& c : file.components) {
    uint16_t name_len = r.u16("name length");
    if (name_len == 0 || name_len > 4096) throw FormatError("nodf: bad name length");
    c.name.resize(name_len);
    r.raw(c.name.data(), name_len, "component name");
    uint8_t role = r.u8("role");
    if (role > 2) throw FormatError("nodf: bad role");
    c.role = static_cast<Role>(role);
    uint8_t dtype = r.u8("dtype");
    if (dtype > 2) throw FormatError("nodf: bad dtype");
    c.dtype = static_cast<Dtype>(dtype);
    uint8_t rank = r.u8("rank");
    if (rank == 0 || rank > 8) throw FormatError("nodf: bad rank");
    c.dims.resize(rank);
    uint64_t numel = 1;
    for (auto& d : c.dims) {
      d = r.u32("dimension");
      if (d == 0) throw FormatError("nodf: zero dimension");
      numel *= d;
      if (numel > kMaxElements) throw FormatError("nodf: component too large");
    }
  }
  size_t header_end = r.pos;
  uint32_t stored_crc = r.u32("header crc");
  if (crc32(bytes.data(), header_end) != stored_crc) {
    throw FormatError("nodf: header crc mismatch");
  }
  int64_t n_samples = -1;
  for (const auto& c : file.components) {
    if (c.role != Role::Aux) {
      if (n_samples < 0) {
        n_samples = c.dims[0];
      } else if (n_samples != int64_t(c.dims[0])) {
        throw FormatError("nodf: sample-count mismatch across components");
      }
    }
  }
  for (auto& c : file.components) {
    r.align(8);
    uint64_t n = c.n_elements();
    switch (c.dtype) {
      case Dtype::F64:
        c.f64.resize(n);
        r.raw(c.f64.data(), n * 8, "payload short");
        break;
      case Dtype::U32:
        c.u32.resize(n);
        for (auto& v : c.u32) v = r.u32("payload short");
        break;
      case Dtype::Bytes:
        c.bytes.resize(n);
        r.raw(c.bytes.data(), n, "payload short");
        break;
    }
  }
  if (r.pos != bytes.size()) throw FormatError("nodf: trailing bytes after payload");
  return file;
}

size_t header_size(const std::vector<uint8_t>& encoded) {
  Reader r{encoded};
  r.pos = 6 + 2;
  uint32_t meta_len = r.u32("metadata length");
  r.pos += meta_len;
  uint32_t count = r.u32("component count");
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t name_len = r.u16("name length");
    r.pos += name_len + 3;
    uint8_t rank = encoded.at(r.pos - 1);
    r.pos += size_t(rank) * 4;
  }
  return r.pos + 4;  // include the crc field
}

void write_nodf(const NodfFile& file, const std::filesystem::path& path) {
  std::vector<uint8_t> bytes = encode_nodf(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("nodf: cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("nodf: write failed: " + path.string());
}

NodfFile read_nodf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("nodf: cannot open: " + path.string());
  std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw IoError("nodf: read failed: " + path.string());
  return decode_nodf(bytes);
}

}  // namespace lnf::nodf
