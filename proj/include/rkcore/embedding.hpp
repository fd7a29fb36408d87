// Copyright 2026 The rkcore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rkcore/detail/io.hpp"
#include "rkcore/error.hpp"

namespace rkcore {

// Backbone feature map for N samples, stored sample-major then channel,
// row, column.
struct RawFeatureTensor {
  std::size_t samples = 0;
  std::size_t channels = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  RawFeatureTensor() = default;
  RawFeatureTensor(std::size_t n, std::size_t c, std::size_t w, std::size_t h,
                   std::vector<double> v)
      : samples(n), channels(c), width(w), height(h), values(std::move(v)) {
    if (n == 0 || c == 0 || w == 0 || h == 0)
      throw ValidationError("tensor dimensions must all be >= 1");
    if (values.size() != n * c * w * h)
      throw ValidationError("tensor holds " + std::to_string(values.size()) +
                            " values, shape requires " +
                            std::to_string(n * c * w * h));
  }

  double at(std::size_t n, std::size_t c, std::size_t row, std::size_t col) const {
    return values[((n * channels + c) * width + row) * height + col];
  }
};

// N x C pooled representations with one sample id and class label per row.
// Values are held at single precision; consumers widen to double.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;

  EmbeddingMatrix(std::size_t dim, std::vector<float> values,
                  std::vector<std::string> sample_ids,
                  std::vector<std::string> labels)
      : dim_(dim),
        values_(std::move(values)),
        ids_(std::move(sample_ids)),
        labels_(std::move(labels)) {
    validate();
  }

  std::size_t samples() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return ids_.empty(); }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  const std::vector<float>& values() const noexcept { return values_; }
  const std::vector<std::string>& sample_ids() const noexcept { return ids_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  // Rows at the given indices, in that order.
  EmbeddingMatrix select_rows(std::span<const std::size_t> rows) const {
    std::vector<float> v;
    std::vector<std::string> ids, labels;
    v.reserve(rows.size() * dim_);
    for (auto r : rows) {
      auto src = row(r);
      v.insert(v.end(), src.begin(), src.end());
      ids.push_back(ids_[r]);
      labels.push_back(labels_[r]);
    }
    return EmbeddingMatrix(dim_, std::move(v), std::move(ids), std::move(labels));
  }

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  void validate() const {
    const std::size_t n = ids_.size();
    if (dim_ == 0) throw ValidationError("embedding dimension must be >= 1");
    if (labels_.size() != n)
      throw ValidationError("label count " + std::to_string(labels_.size()) +
                            " does not match sample count " + std::to_string(n));
    if (values_.size() != n * dim_)
      throw ValidationError("value count " + std::to_string(values_.size()) +
                            " does not match " + std::to_string(n) + " x " +
                            std::to_string(dim_));
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen.insert(ids_[i]).second)
        throw ValidationError("duplicate sample id '" + ids_[i] + "' at row " +
                              std::to_string(i));
      double norm2 = 0.0;
      for (std::size_t c = 0; c < dim_; ++c) {
        const double x = values_[i * dim_ + c];
        if (!std::isfinite(x))
          throw ValidationError("non-finite value at row " + std::to_string(i) +
                                ", column " + std::to_string(c));
        norm2 += x * x;
      }
      if (norm2 == 0.0)
        throw ValidationError("zero-norm row " + std::to_string(i) +
                              " (sample '" + ids_[i] + "')");
    }
  }

  std::size_t dim_ = 1;
  std::vector<float> values_;
  std::vector<std::string> ids_;
  std::vector<std::string> labels_;
};

// Averages each channel over its spatial extent. Without explicit ids the
// samples are named by their index; without labels every sample gets "0".
inline EmbeddingMatrix pool_spatial(const RawFeatureTensor& raw,
                                    std::vector<std::string> sample_ids = {},
                                    std::vector<std::string> labels = {}) {
  const std::size_t n = raw.samples, c = raw.channels;
  const std::size_t area = raw.width * raw.height;
  if (n == 0 || c == 0 || area == 0 || raw.values.size() != n * c * area)
    throw ValidationError("malformed feature tensor");
  if (sample_ids.empty())
    for (std::size_t i = 0; i < n; ++i) sample_ids.push_back(std::to_string(i));
  if (labels.empty()) labels.assign(n, "0");

  std::vector<float> pooled(n * c);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* cell = raw.values.data() + (s * c + ch) * area;
      double sum = 0.0;
      for (std::size_t k = 0; k < area; ++k) {
        if (!std::isfinite(cell[k]))
          throw ValidationError("non-finite value at sample " + std::to_string(s) +
                                ", channel " + std::to_string(ch));
        sum += cell[k];
      }
      pooled[s * c + ch] = static_cast<float>(sum / static_cast<double>(area));
    }
  }
  return EmbeddingMatrix(c, std::move(pooled), std::move(sample_ids),
                         std::move(labels));
}

// Splits by class label; classes come back in ascending label order and
// rows keep their relative order within a class.
inline std::vector<std::pair<std::string, EmbeddingMatrix>> partition_by_label(
    const EmbeddingMatrix& m) {
  std::map<std::string, std::vector<std::size_t>> rows;
  for (std::size_t i = 0; i < m.samples(); ++i) rows[m.labels()[i]].push_back(i);
  std::vector<std::pair<std::string, EmbeddingMatrix>> out;
  for (auto& [label, idx] : rows) out.emplace_back(label, m.select_rows(idx));
  return out;
}

enum class EmbeddingFormat { binary, csv };

// ".csv" selects the text format; anything else is EMB1.
inline EmbeddingFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? EmbeddingFormat::csv : EmbeddingFormat::binary;
}

namespace detail {

inline constexpr char kEmbMagic[4] = {'E', 'M', 'B', '1'};

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_string(std::string& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ == data_.size(); }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string_view bytes(std::size_t n, const char* what) {
    need(n, what);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string string(const char* what) {
    auto len = u32(what);
    return std::string(bytes(len, what));
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n)
      throw FormatError(std::string("truncated EMB1 file while reading ") + what +
                            " at byte offset " + std::to_string(pos_),
                        pos_);
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

inline void check_csv_token(std::string_view s, const char* what) {
  if (s.find_first_of(",\r\n") != std::string_view::npos)
    throw ValidationError(std::string(what) + " '" + std::string(s) +
                          "' contains a comma or line break and cannot be written as CSV");
}

}  // namespace detail

// EMB1 layout (all integers u32 little-endian):
//   "EMB1" | N | C | L | L x (len, label bytes)
//   | N x (label index, len, id bytes) | N*C float32 LE, row-major.
// The label table is written in ascending byte order.
inline std::string encode_emb1(const EmbeddingMatrix& m) {
  if (m.empty()) throw ValidationError("cannot save an embedding matrix with N = 0");
  std::map<std::string_view, std::uint32_t> table;
  for (const auto& l : m.labels()) table.emplace(l, 0);
  std::uint32_t next = 0;
  for (auto& [_, idx] : table) idx = next++;

  std::string out(detail::kEmbMagic, 4);
  detail::put_u32(out, static_cast<std::uint32_t>(m.samples()));
  detail::put_u32(out, static_cast<std::uint32_t>(m.dim()));
  detail::put_u32(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& [label, _] : table) detail::put_string(out, label);
  for (std::size_t i = 0; i < m.samples(); ++i) {
    detail::put_u32(out, table.at(m.labels()[i]));
    detail::put_string(out, m.sample_ids()[i]);
  }
  for (float v : m.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline EmbeddingMatrix decode_emb1(std::string_view data) {
  detail::ByteReader in(data);
  auto magic = in.bytes(4, "magic");
  if (magic != std::string_view(detail::kEmbMagic, 4))
    throw FormatError("bad magic at byte offset 0: expected 'EMB1'", 0);
  const std::size_t header_at = in.offset();
  const std::uint32_t n = in.u32("sample count");
  const std::uint32_t c = in.u32("dimension");
  const std::uint32_t l = in.u32("label table length");
  if (n == 0) throw FormatError("sample count is 0 at byte offset 4", header_at);
  if (c == 0) throw FormatError("dimension is 0 at byte offset 8", header_at + 4);

  std::vector<std::string> table;
  for (std::uint32_t i = 0; i < l; ++i) table.push_back(in.string("label table"));

  std::vector<std::string> ids, labels;
  ids.reserve(n);
  labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::size_t at = in.offset();
    auto idx = in.u32("sample label index");
    if (idx >= table.size())
      throw FormatError("label index " + std::to_string(idx) +
                            " out of range at byte offset " + std::to_string(at),
                        at);
    labels.push_back(table[idx]);
    ids.push_back(in.string("sample id"));
  }

  const std::size_t values_at = in.offset();
  const std::size_t expected = static_cast<std::size_t>(n) * c * 4;
  if (data.size() - values_at != expected)
    throw FormatError("shape mismatch at byte offset " + std::to_string(values_at) +
                          ": " + std::to_string(n) + " x " + std::to_string(c) +
                          " needs " + std::to_string(expected) + " bytes of row data, found " +
                          std::to_string(data.size() - values_at),
                      values_at);
  std::vector<float> values(static_cast<std::size_t>(n) * c);
  for (auto& v : values) v = std::bit_cast<float>(in.u32("row data"));
  return EmbeddingMatrix(c, std::move(values), std::move(ids), std::move(labels));
}

// CSV layout: header "id,label,f0,...,f{C-1}", one sample per line, values
// in shortest round-trip form.
inline std::string encode_csv(const EmbeddingMatrix& m) {
  if (m.empty()) throw ValidationError("cannot save an embedding matrix with N = 0");
  std::string out = "id,label";
  for (std::size_t c = 0; c < m.dim(); ++c) out += ",f" + std::to_string(c);
  out += '\n';
  for (std::size_t i = 0; i < m.samples(); ++i) {
    detail::check_csv_token(m.sample_ids()[i], "sample id");
    detail::check_csv_token(m.labels()[i], "label");
    out += m.sample_ids()[i];
    out += ',';
    out += m.labels()[i];
    for (float v : m.row(i)) {
      out += ',';
      out += detail::format_real(v);
    }
    out += '\n';
  }
  return out;
}

inline EmbeddingMatrix decode_csv(std::string_view text) {
  auto rows = detail::lines(text);
  if (rows.empty()) throw FormatError("line 1: empty CSV, expected header", 1);
  auto header = detail::split(rows[0], ',');
  if (header.size() < 3 || header[0] != "id" || header[1] != "label")
    throw FormatError("line 1: header must be 'id,label,f0,...'", 1);
  const std::size_t dim = header.size() - 2;
  for (std::size_t c = 0; c < dim; ++c)
    if (header[c + 2] != "f" + std::to_string(c))
      throw FormatError("line 1: expected column 'f" + std::to_string(c) + "'", 1);
  if (rows.size() < 2) throw FormatError("line 2: no sample rows", 2);

  std::vector<float> values;
  std::vector<std::string> ids, labels;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const std::size_t line_no = r + 1;
    auto fields = detail::split(rows[r], ',');
    if (fields.size() != dim + 2)
      throw FormatError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(dim + 2) + " fields, found " +
                            std::to_string(fields.size()),
                        line_no);
    ids.emplace_back(fields[0]);
    labels.emplace_back(fields[1]);
    for (std::size_t c = 0; c < dim; ++c) {
      float v = 0.0f;
      if (!detail::parse_number(detail::trim(fields[c + 2]), v))
        throw FormatError("line " + std::to_string(line_no) + ": cannot parse '" +
                              std::string(fields[c + 2]) + "' as a number",
                          line_no);
      values.push_back(v);
    }
  }
  return EmbeddingMatrix(dim, std::move(values), std::move(ids), std::move(labels));
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                       EmbeddingFormat format) {
  if (!std::filesystem::exists(path))
    throw IoError("embedding file '" + path.string() + "' does not exist");
  auto data = detail::read_file(path);
  return format == EmbeddingFormat::csv ? decode_csv(data) : decode_emb1(data);
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return load_embeddings(path, format_for_path(path));
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path,
                            EmbeddingFormat format) {
  detail::write_file_atomic(path, format == EmbeddingFormat::csv ? encode_csv(m)
                                                                 : encode_emb1(m));
}

inline void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  save_embeddings(m, path, format_for_path(path));
}

}  // namespace rkcore
