#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace semdup {

// Upper bound on bytes a single embedding matrix (or derived work buffer) may
// occupy. Allocations above it raise ResourceError instead of exhausting RAM.
std::size_t memory_budget_bytes();
void set_memory_budget_bytes(std::size_t bytes);
void check_memory_budget(std::size_t bytes, const char* what);

// Row-major count x dim matrix of 32-bit floats.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  // Zero-filled set.
  EmbeddingSet(std::size_t dim, std::size_t count);
  EmbeddingSet(std::size_t dim, std::vector<float> data, bool normalized = false);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
  bool normalized() const { return normalized_; }
  void set_normalized(bool flag) { normalized_ = flag; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  // Rows at `indices`, in that order. Keeps the normalized flag.
  EmbeddingSet gather(std::span<const std::uint32_t> indices) const;

  // Appends the rows of `other` (same dim). The result is normalized only if
  // both inputs are.
  void append(const EmbeddingSet& other);

 private:
  std::size_t dim_ = 0;
  std::vector<float> data_;
  bool normalized_ = false;
};

enum class EmbeddingFormat { Binary, Csv };

// Binary layout (little endian):
//   "SEMD" | version u16 = 1 | reserved u16 = 0 | dim u32 | count u32 | count*dim f32
inline constexpr std::uint16_t kEmbeddingFormatVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 16;

EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format);
void save_embeddings(const std::filesystem::path& path, const EmbeddingSet& set,
                     EmbeddingFormat format);

// Divides every row by its Euclidean norm (computed in double).
// Throws DomainError naming the first zero row.
EmbeddingSet normalize(const EmbeddingSet& set);

// Keeps the first dim_out coordinates of every row and re-normalizes.
EmbeddingSet matryoshka_slice(const EmbeddingSet& set, std::size_t dim_out);

// Double-precision dot product of two float rows (sequential accumulation).
inline double dot_f64(const float* a, const float* b, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    acc += static_cast<double>(a[k]) * static_cast<double>(b[k]);
  }
  return acc;
}

}  // namespace semdup
