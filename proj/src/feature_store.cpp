#include "mgr/feature_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "mgr/error.hpp"

namespace mgr {

void FeatureStore::put(std::string name, Matrix m) {
  if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max())
    throw InvalidInput("feature matrix name must be 1..65535 bytes");
  if (!m.all_finite()) throw InvalidInput("feature matrix '" + name + "' has non-finite values");
  entries_.insert_or_assign(std::move(name), std::move(m));
}

const Matrix& FeatureStore::matrix(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw DataError("unknown feature matrix '" + name + "'");
  return it->second;
}

bool FeatureStore::resolves(const FeatureRef& ref) const {
  auto it = entries_.find(ref.name);
  return it != entries_.end() && ref.row < it->second.rows();
}

std::span<const double> FeatureStore::row(const FeatureRef& ref) const {
  const Matrix& m = matrix(ref.name);
  if (ref.row >= m.rows())
    throw DataError("feature ref " + ref.name + "[" + std::to_string(ref.row) + "] out of range (" +
                    std::to_string(m.rows()) + " rows)");
  return m.row(ref.row);
}

Matrix FeatureStore::row_matrix(const FeatureRef& ref) const { return Matrix::row_vector(row(ref)); }

namespace binio {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void Reader::need(std::size_t n) {
  if (remaining() < n) throw FormatError(context_ + ": truncated file");
}

std::uint16_t Reader::u16() {
  need(2);
  std::uint16_t v = 0;
  for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(static_cast<unsigned char>(bytes_[pos_++]) << (8 * i));
  return v;
}

std::uint32_t Reader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
  return v;
}

double Reader::f64() {
  need(8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
  return std::bit_cast<double>(bits);
}

std::string Reader::bytes(std::size_t n) {
  need(n);
  std::string s(bytes_.substr(pos_, n));
  pos_ += n;
  return s;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

void put_named_matrix(std::string& out, const std::string& name, const Matrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() || m.cols() > std::numeric_limits<std::uint32_t>::max())
    throw InvalidInput("matrix '" + name + "' too large for container");
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out += name;
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) put_f64(out, v);
}

std::pair<std::string, Matrix> read_named_matrix(Reader& in) {
  const std::uint16_t name_len = in.u16();
  std::string name = in.bytes(name_len);
  const std::uint64_t rows = in.u32();
  const std::uint64_t cols = in.u32();
  // Reject dimensions whose payload cannot fit in what is left of the file.
  if (rows != 0 && cols > std::numeric_limits<std::uint64_t>::max() / 8 / rows)
    throw FormatError("matrix '" + name + "': dimension overflow");
  if (rows * cols * 8 > in.remaining()) throw FormatError("matrix '" + name + "': truncated payload");
  std::vector<double> values(rows * cols);
  for (double& v : values) v = in.f64();
  return {std::move(name), Matrix(rows, cols, std::move(values))};
}

}  // namespace binio

FeatureStore read_feature_matrix(const std::filesystem::path& path) {
  const std::string bytes = binio::read_file(path);
  binio::Reader in(bytes, path.string());
  if (in.bytes(4) != "FMAT") throw FormatError(path.string() + ": bad magic (expected FMAT)");
  const std::uint32_t version = in.u32();
  if (version != FeatureStore::kVersion)
    throw FormatError(path.string() + ": unsupported version " + std::to_string(version));
  const std::uint32_t count = in.u32();
  FeatureStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    auto [name, m] = binio::read_named_matrix(in);
    if (store.contains(name)) throw FormatError(path.string() + ": duplicate entry '" + name + "'");
    if (!m.all_finite()) throw FormatError(path.string() + ": non-finite value in '" + name + "'");
    store.put(std::move(name), std::move(m));
  }
  if (!in.at_end()) throw FormatError(path.string() + ": trailing bytes after last entry");
  return store;
}

void write_feature_matrix(const std::filesystem::path& path, const FeatureStore& store) {
  std::string out = "FMAT";
  binio::put_u32(out, FeatureStore::kVersion);
  binio::put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, m] : store.entries()) binio::put_named_matrix(out, name, m);
  binio::write_file(path, out);
}

}  // namespace mgr
