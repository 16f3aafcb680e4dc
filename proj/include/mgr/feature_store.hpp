#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "mgr/numerics.hpp"
#include "mgr/scene.hpp"

namespace mgr {

/// Named feature matrices, addressed by (name, row).
///
/// On disk ("FMAT" container, little-endian):
///   char[4] "FMAT", u32 version = 1, u32 entry count, then per entry
///   u16 name length, name bytes, u32 rows, u32 cols, rows*cols f64 row-major.
/// Entries are written in name order.
class FeatureStore {
 public:
  static constexpr std::uint32_t kVersion = 1;

  void put(std::string name, Matrix m);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Matrix& matrix(const std::string& name) const;
  bool resolves(const FeatureRef& ref) const;
  /// Throws DataError for an unknown name or out-of-range row.
  std::span<const double> row(const FeatureRef& ref) const;
  Matrix row_matrix(const FeatureRef& ref) const;

  const std::map<std::string, Matrix>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, Matrix> entries_;
};

FeatureStore read_feature_matrix(const std::filesystem::path& path);
void write_feature_matrix(const std::filesystem::path& path, const FeatureStore& store);

namespace binio {

// Little-endian primitives shared by the feature store and checkpoint formats.
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_f64(std::string& out, double v);

class Reader {
 public:
  Reader(std::string_view bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}
  std::uint16_t u16();
  std::uint32_t u32();
  double f64();
  std::string bytes(std::size_t n);
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n);
  std::string_view bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

/// Appends (u16 name length, name, u32 rows, u32 cols, values).
void put_named_matrix(std::string& out, const std::string& name, const Matrix& m);
std::pair<std::string, Matrix> read_named_matrix(Reader& in);

}  // namespace binio

}  // namespace mgr
