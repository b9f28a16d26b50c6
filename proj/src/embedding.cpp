#include "semdup/embedding.hpp"

#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "semdup/error.hpp"

namespace semdup {
namespace {

std::atomic<std::size_t> g_memory_budget{std::size_t{4} << 30};

void put_u16(unsigned char* p, std::uint16_t v) {
  p[0] = static_cast<unsigned char>(v & 0xFF);
  p[1] = static_cast<unsigned char>(v >> 8);
}

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

void swap_float_bytes(std::span<float> values) {
  for (float& f : values) {
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    u = __builtin_bswap32(u);
    std::memcpy(&f, &u, 4);
  }
}

EmbeddingSet load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0, std::ios::beg);

  unsigned char header[kEmbeddingHeaderBytes];
  if (file_size < kEmbeddingHeaderBytes ||
      !in.read(reinterpret_cast<char*>(header), kEmbeddingHeaderBytes)) {
    throw FormatError(path.string() + ": truncated header (expected " +
                      std::to_string(kEmbeddingHeaderBytes) + " bytes, got " +
                      std::to_string(file_size) + ")");
  }
  if (std::memcmp(header, "SEMD", 4) != 0) {
    throw FormatError(path.string() + ": bad magic, expected \"SEMD\"");
  }
  const std::uint16_t version = get_u16(header + 4);
  if (version != kEmbeddingFormatVersion) {
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t dim = get_u32(header + 8);
  const std::uint32_t count = get_u32(header + 12);
  if (dim < 2) throw FormatError(path.string() + ": dim must be >= 2, got " + std::to_string(dim));

  const std::uint64_t payload = std::uint64_t{dim} * count * 4;
  const std::uint64_t expected = kEmbeddingHeaderBytes + payload;
  if (file_size != expected) {
    throw FormatError(path.string() + ": malformed payload, expected " +
                      std::to_string(expected) + " bytes, got " + std::to_string(file_size));
  }
  check_memory_budget(payload, "load_embeddings");
  std::vector<float> data(std::size_t{dim} * count);
  if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(payload))) {
    throw IoError(path.string() + ": read failed");
  }
  if constexpr (std::endian::native == std::endian::big) swap_float_bytes(data);
  return EmbeddingSet(dim, std::move(data), false);
}

void save_binary(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  unsigned char header[kEmbeddingHeaderBytes];
  std::memcpy(header, "SEMD", 4);
  put_u16(header + 4, kEmbeddingFormatVersion);
  put_u16(header + 6, 0);
  put_u32(header + 8, static_cast<std::uint32_t>(set.dim()));
  put_u32(header + 12, static_cast<std::uint32_t>(set.count()));
  out.write(reinterpret_cast<const char*>(header), kEmbeddingHeaderBytes);
  if constexpr (std::endian::native == std::endian::big) {
    std::vector<float> copy(set.data().begin(), set.data().end());
    swap_float_bytes(copy);
    out.write(reinterpret_cast<const char*>(copy.data()),
              static_cast<std::streamsize>(copy.size() * 4));
  } else {
    out.write(reinterpret_cast<const char*>(set.data().data()),
              static_cast<std::streamsize>(set.data().size() * 4));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

EmbeddingSet load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<float> data;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t fields = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      float value = 0.0f;
      auto [next, ec] = std::from_chars(p, end, value);
      if (ec != std::errc()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": cannot parse field " + std::to_string(fields + 1));
      }
      data.push_back(value);
      ++fields;
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (*p != ',') {
        throw FormatError(path.string() + ":" + std::to_string(line_no) +
                          ": expected ',' after field " + std::to_string(fields));
      }
      ++p;
    }
    if (dim == 0) {
      dim = fields;
    } else if (fields != dim) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": dimension mismatch, expected " + std::to_string(dim) +
                        " fields, got " + std::to_string(fields));
    }
  }
  if (dim == 0) throw FormatError(path.string() + ": no rows");
  if (dim < 2) throw FormatError(path.string() + ": dim must be >= 2");
  return EmbeddingSet(dim, std::move(data), false);
}

void save_csv(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (std::size_t i = 0; i < set.count(); ++i) {
    auto r = set.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), r[k]);
      (void)ec;
      if (k) out.put(',');
      out.write(buf, end - buf);
    }
    out.put('\n');
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

std::size_t memory_budget_bytes() { return g_memory_budget.load(); }

void set_memory_budget_bytes(std::size_t bytes) { g_memory_budget.store(bytes); }

void check_memory_budget(std::size_t bytes, const char* what) {
  if (bytes > memory_budget_bytes()) {
    throw ResourceError(std::string(what) + ": needs " + std::to_string(bytes) +
                        " bytes, budget is " + std::to_string(memory_budget_bytes()));
  }
}

EmbeddingSet::EmbeddingSet(std::size_t dim, std::size_t count) : dim_(dim) {
  if (dim < 2) throw DomainError("EmbeddingSet: dim must be >= 2");
  check_memory_budget(dim * count * sizeof(float), "EmbeddingSet");
  data_.assign(dim * count, 0.0f);
}

EmbeddingSet::EmbeddingSet(std::size_t dim, std::vector<float> data, bool normalized)
    : dim_(dim), data_(std::move(data)), normalized_(normalized) {
  if (dim < 2) throw DomainError("EmbeddingSet: dim must be >= 2");
  if (data_.size() % dim != 0) {
    throw DomainError("EmbeddingSet: data size " + std::to_string(data_.size()) +
                      " is not a multiple of dim " + std::to_string(dim));
  }
}

EmbeddingSet EmbeddingSet::gather(std::span<const std::uint32_t> indices) const {
  check_memory_budget(indices.size() * dim_ * sizeof(float), "EmbeddingSet::gather");
  std::vector<float> out(indices.size() * dim_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= count()) throw DomainError("EmbeddingSet::gather: index out of range");
    std::memcpy(out.data() + i * dim_, data_.data() + std::size_t{indices[i]} * dim_,
                dim_ * sizeof(float));
  }
  return EmbeddingSet(dim_, std::move(out), normalized_);
}

void EmbeddingSet::append(const EmbeddingSet& other) {
  if (other.count() == 0) return;
  if (count() == 0 && dim_ == 0) {
    *this = other;
    return;
  }
  if (other.dim() != dim_) throw MismatchError("EmbeddingSet::append: dim mismatch");
  const bool was_empty = count() == 0;
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  normalized_ = was_empty ? other.normalized_ : (normalized_ && other.normalized_);
}

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format) {
  return format == EmbeddingFormat::Binary ? load_binary(path) : load_csv(path);
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set,
                     EmbeddingFormat format) {
  if (format == EmbeddingFormat::Binary) {
    save_binary(path, set);
  } else {
    save_csv(path, set);
  }
}

EmbeddingSet normalize(const EmbeddingSet& set) {
  EmbeddingSet out = set;
  for (std::size_t i = 0; i < out.count(); ++i) {
    auto r = out.row(i);
    const double sq = dot_f64(r.data(), r.data(), r.size());
    if (!(sq > 0.0) || !std::isfinite(sq)) {
      throw DomainError("normalize: row " + std::to_string(i) + " has zero or non-finite norm");
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (float& v : r) v = static_cast<float>(v * inv);
  }
  out.set_normalized(true);
  return out;
}

EmbeddingSet matryoshka_slice(const EmbeddingSet& set, std::size_t dim_out) {
  if (dim_out < 2 || dim_out > set.dim()) {
    throw DomainError("matryoshka_slice: dim_out " + std::to_string(dim_out) +
                      " outside [2, " + std::to_string(set.dim()) + "]");
  }
  std::vector<float> data(set.count() * dim_out);
  for (std::size_t i = 0; i < set.count(); ++i) {
    auto r = set.row(i);
    std::memcpy(data.data() + i * dim_out, r.data(), dim_out * sizeof(float));
  }
  return normalize(EmbeddingSet(dim_out, std::move(data), false));
}

}  // namespace semdup
