#pragma once

// Pattern ingestion (IDX, CSV, raw binary store), query corruption and
// retrieval scoring.
//
// Raw pattern store layout (little-endian):
//   bytes 0..7    ASCII "GSHPAT01"
//   bytes 8..11   u32 N (pattern count)
//   bytes 12..15  u32 d (dimension)
//   then N·d f64 values, row-major.

#include <bit>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gsh/error.hpp"
#include "gsh/hopfield.hpp"
#include "gsh/numkit.hpp"

namespace gsh {

struct PatternSet {
  Matrix patterns;  ///< N × d, one pattern per row
  std::optional<std::vector<int>> classes;
  std::optional<Matrix> labels;  ///< N × L label vectors
  std::string source;

  std::size_t size() const noexcept { return patterns.rows(); }
  std::size_t dim() const noexcept { return patterns.cols(); }

  /// Label matrix, expanding integer classes to one-hot rows when needed.
  Matrix label_matrix() const {
    if (labels) return *labels;
    if (!classes) throw DomainError("PatternSet: no labels attached (" + source + ")");
    int max_class = 0;
    for (int c : *classes) {
      if (c < 0) throw DomainError("PatternSet: negative class label");
      max_class = std::max(max_class, c);
    }
    Matrix onehot(classes->size(), static_cast<std::size_t>(max_class) + 1);
    for (std::size_t i = 0; i < classes->size(); ++i)
      onehot(i, static_cast<std::size_t>((*classes)[i])) = 1.0;
    return onehot;
  }

  void validate() const {
    for (double v : patterns.data())
      if (!std::isfinite(v)) throw DomainError("PatternSet: non-finite value (" + source + ")");
    if (classes && classes->size() != size())
      throw DimensionError("PatternSet: class count does not match pattern count");
    if (labels && labels->rows() != size())
      throw DimensionError("PatternSet: label rows do not match pattern count");
  }
};

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing", 0);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ParseError("write failed for '" + path + "'", 0);
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      return cells;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

inline void append_be32(std::string& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<char>((v >> shift) & 0xFF));
}

inline void append_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t read_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// IDX

/// Decoded IDX array (unsigned-byte payload only).
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> values;
};

inline IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("idx: file shorter than the 4-byte magic", bytes.size());
  if (bytes[0] != 0 || bytes[1] != 0) throw ParseError("idx: bad magic (leading zero bytes)", 0);
  if (bytes[2] != 0x08) {
    throw ParseError("idx: unsupported type byte " + std::to_string(bytes[2]) +
                         " (only 0x08 unsigned byte)",
                     2);
  }
  const std::size_t ndim = bytes[3];
  if (ndim == 0) throw ParseError("idx: zero dimensions", 3);
  const std::size_t header = 4 + 4 * ndim;
  if (bytes.size() < header) {
    throw ParseError("idx: header declares " + std::to_string(ndim) +
                         " dimensions but the file ends at byte " + std::to_string(bytes.size()),
                     bytes.size());
  }
  IdxArray out;
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < ndim; ++k) {
    const std::uint32_t dim = detail::read_be32(bytes.data() + 4 + 4 * k);
    if (dim == 0) throw ParseError("idx: dimension " + std::to_string(k) + " is zero", 4 + 4 * k);
    out.dims.push_back(dim);
    count *= dim;
    if (count > (std::uint64_t{1} << 40)) throw ParseError("idx: declared payload too large", 4 + 4 * k);
  }
  const std::uint64_t available = bytes.size() - header;
  if (available < count) {
    throw ParseError("idx: truncated payload, expected " + std::to_string(count) +
                         " bytes after header, found " + std::to_string(available),
                     bytes.size());
  }
  if (available > count) {
    throw ParseError("idx: " + std::to_string(available - count) + " trailing bytes after payload",
                     header + count);
  }
  out.values.assign(bytes.begin() + static_cast<long>(header), bytes.end());
  return out;
}

struct IdxLoadOptions {
  /// Divide pixel values by 255. Off by default: raw 0–255 values keep the
  /// score scale that small β values are tuned for.
  bool normalize = false;
};

/// Loads an IDX image file (≥ 2 dimensions) as N × (product of trailing dims).
inline PatternSet load_idx(const std::string& path, IdxLoadOptions opts = {}) {
  const auto bytes = detail::read_file(path);
  IdxArray arr = parse_idx(bytes);
  if (arr.dims.size() < 2) {
    throw ParseError("idx: '" + path + "' is 1-D; use load_idx_labels for label files", 3);
  }
  const std::size_t n = arr.dims[0];
  const std::size_t d = arr.values.size() / n;
  std::vector<double> values(arr.values.size());
  const double scale = opts.normalize ? 1.0 / 255.0 : 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = arr.values[i] * scale;
  return {Matrix(n, d, std::move(values)), std::nullopt, std::nullopt, path};
}

/// Loads a 1-D IDX label file as integer classes.
inline std::vector<int> load_idx_labels(const std::string& path) {
  const auto bytes = detail::read_file(path);
  IdxArray arr = parse_idx(bytes);
  if (arr.dims.size() != 1) {
    throw ParseError("idx: label file '" + path + "' must be 1-D, has " +
                         std::to_string(arr.dims.size()) + " dimensions",
                     3);
  }
  return {arr.values.begin(), arr.values.end()};
}

/// Loads images and attaches the class labels from a matching label file.
inline PatternSet load_idx(const std::string& images, const std::string& label_file,
                           IdxLoadOptions opts = {}) {
  PatternSet set = load_idx(images, opts);
  auto classes = load_idx_labels(label_file);
  if (classes.size() != set.size()) {
    throw DimensionError("idx: " + std::to_string(set.size()) + " images but " +
                         std::to_string(classes.size()) + " labels");
  }
  set.classes = std::move(classes);
  return set;
}

/// Encodes unsigned-byte IDX with the given dimensions.
inline std::string encode_idx(const std::vector<std::uint32_t>& dims,
                              std::span<const std::uint8_t> values) {
  std::string out = {0, 0, 0x08, static_cast<char>(dims.size())};
  for (auto d : dims) detail::append_be32(out, d);
  out.append(reinterpret_cast<const char*>(values.data()), values.size());
  return out;
}

/// Writes patterns as a 2-D IDX image file. Values must be integers in [0, 255].
inline void save_idx(const PatternSet& set, const std::string& path) {
  std::vector<std::uint8_t> bytes(set.patterns.data().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const double v = set.patterns.data()[i];
    if (!(v >= 0.0 && v <= 255.0) || std::floor(v) != v) {
      throw DomainError("save_idx: value " + detail::format_double(v) +
                        " is not an integer in [0, 255]");
    }
    bytes[i] = static_cast<std::uint8_t>(v);
  }
  detail::write_file(path, encode_idx({static_cast<std::uint32_t>(set.size()),
                                       static_cast<std::uint32_t>(set.dim())},
                                      bytes));
}

inline void save_idx_labels(const std::vector<int>& classes, const std::string& path) {
  std::vector<std::uint8_t> bytes;
  for (int c : classes) {
    if (c < 0 || c > 255) throw DomainError("save_idx_labels: class outside [0, 255]");
    bytes.push_back(static_cast<std::uint8_t>(c));
  }
  detail::write_file(path, encode_idx({static_cast<std::uint32_t>(bytes.size())}, bytes));
}

// ---------------------------------------------------------------------------
// CSV

/// Parses CSV text. Lines starting with '#' and blank lines are skipped; a
/// first row containing any non-numeric cell is treated as a header. With
/// `has_labels` the last column becomes the integer class.
inline PatternSet parse_csv(std::string_view text, bool has_labels,
                            const std::string& source = "<csv>") {
  std::vector<double> values;
  std::vector<int> classes;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  bool first_data_line = true;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto cells = detail::split(line, ',');
    std::vector<double> parsed;
    std::optional<std::size_t> bad_col;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = detail::parse_double(cells[c]);
      if (!v) {
        bad_col = c;
        break;
      }
      parsed.push_back(*v);
    }
    if (bad_col) {
      if (first_data_line) {
        first_data_line = false;
        cols = cells.size();
        continue;  // header
      }
      throw ParseError(source + ": non-numeric cell at row " + std::to_string(line_no) +
                           ", column " + std::to_string(*bad_col + 1),
                       line_no);
    }
    if (first_data_line) {
      first_data_line = false;
      if (cols == 0) cols = parsed.size();
    }
    if (cols == 0) cols = parsed.size();
    if (parsed.size() != cols) {
      throw ParseError(source + ": row " + std::to_string(line_no) + " has " +
                           std::to_string(parsed.size()) + " columns, expected " +
                           std::to_string(cols),
                       line_no);
    }
    if (has_labels) {
      const double lab = parsed.back();
      if (std::floor(lab) != lab) {
        throw ParseError(source + ": non-integer label at row " + std::to_string(line_no),
                         line_no);
      }
      classes.push_back(static_cast<int>(lab));
      parsed.pop_back();
    }
    for (std::size_t c = 0; c < parsed.size(); ++c) {
      if (!std::isfinite(parsed[c])) {
        throw ParseError(source + ": non-finite value at row " + std::to_string(line_no) +
                             ", column " + std::to_string(c + 1),
                         line_no);
      }
    }
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  const std::size_t d = has_labels ? cols - 1 : cols;
  if (rows == 0 || d == 0) throw ParseError(source + ": no data rows", line_no);
  PatternSet set{Matrix(rows, d, std::move(values)), std::nullopt, std::nullopt, source};
  if (has_labels) set.classes = std::move(classes);
  return set;
}

inline PatternSet load_csv(const std::string& path, bool has_labels) {
  const auto bytes = detail::read_file(path);
  return parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                   has_labels, path);
}

inline std::string to_csv(const PatternSet& set) {
  std::string out;
  for (std::size_t c = 0; c < set.dim(); ++c) {
    if (c) out += ',';
    out += "x" + std::to_string(c);
  }
  if (set.classes) out += ",label";
  out += '\n';
  for (std::size_t r = 0; r < set.size(); ++r) {
    auto row = set.patterns.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += detail::format_double(row[c]);
    }
    if (set.classes) out += "," + std::to_string((*set.classes)[r]);
    out += '\n';
  }
  return out;
}

inline void save_csv(const PatternSet& set, const std::string& path) {
  detail::write_file(path, to_csv(set));
}

/// Experiment records: named numeric columns plus '#' comment lines.
struct Table {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row) {
    detail::require_same_length(row.size(), columns.size(), "Table::add_row");
    rows.push_back(std::move(row));
  }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw DomainError("Table: no column '" + name + "'");
  }
};

inline std::string to_csv(const Table& table) {
  std::string out;
  for (const auto& c : table.comments) out += "# " + c + "\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += detail::format_double(row[c]);
    }
    out += '\n';
  }
  return out;
}

inline void save_csv(const Table& table, const std::string& path) {
  detail::write_file(path, to_csv(table));
}

// ---------------------------------------------------------------------------
// Raw binary store

inline constexpr std::string_view kRawMagic = "GSHPAT01";

inline std::string encode_raw(const Matrix& patterns) {
  std::string out(kRawMagic);
  detail::append_le(out, patterns.rows(), 4);
  detail::append_le(out, patterns.cols(), 4);
  for (double v : patterns.data()) detail::append_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

inline Matrix decode_raw(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) throw ParseError("raw: file shorter than the 16-byte header", bytes.size());
  if (std::memcmp(bytes.data(), kRawMagic.data(), kRawMagic.size()) != 0) {
    throw ParseError("raw: bad magic, expected GSHPAT01", 0);
  }
  const auto n = static_cast<std::size_t>(detail::read_le(bytes.data() + 8, 4));
  const auto d = static_cast<std::size_t>(detail::read_le(bytes.data() + 12, 4));
  if (n == 0 || d == 0) throw ParseError("raw: zero pattern count or dimension", 8);
  const std::uint64_t need = std::uint64_t{n} * d * 8;
  if (bytes.size() - 16 != need) {
    throw ParseError("raw: payload is " + std::to_string(bytes.size() - 16) + " bytes, header implies " +
                         std::to_string(need),
                     bytes.size() < 16 + need ? bytes.size() : 16 + need);
  }
  std::vector<double> values(n * d);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<double>(detail::read_le(bytes.data() + 16 + 8 * i, 8));
    if (!std::isfinite(values[i])) throw ParseError("raw: non-finite value", 16 + 8 * i);
  }
  return Matrix(n, d, std::move(values));
}

inline void save_raw(const Matrix& patterns, const std::string& path) {
  detail::write_file(path, encode_raw(patterns));
}

inline PatternSet load_raw(const std::string& path) {
  return {decode_raw(detail::read_file(path)), std::nullopt, std::nullopt, path};
}

/// Loads by extension: .csv, .raw/.gshpat, anything else as IDX.
inline PatternSet load_patterns(const std::string& path, bool csv_has_labels = false,
                                IdxLoadOptions idx = {}) {
  auto ends_with = [&](std::string_view suffix) {
    return path.size() >= suffix.size() &&
           path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".csv")) return load_csv(path, csv_has_labels);
  if (ends_with(".raw") || ends_with(".gshpat")) return load_raw(path);
  return load_idx(path, idx);
}

// ---------------------------------------------------------------------------
// Corruption

enum class CorruptionKind { kHalfMask, kGaussian, kScaledStd };

struct CorruptionSpec {
  CorruptionKind kind = CorruptionKind::kHalfMask;
  /// σ for kGaussian, scale for kScaledStd; unused for kHalfMask.
  double amount = 0.0;
  std::uint64_t seed = 0;
  /// Half-mask only: zero the leading half instead of the trailing half.
  bool mask_leading = false;

  static CorruptionSpec half_mask(std::uint64_t seed = 0) { return {CorruptionKind::kHalfMask, 0.0, seed}; }
  static CorruptionSpec gaussian(double sigma, std::uint64_t seed = 0) {
    return {CorruptionKind::kGaussian, sigma, seed};
  }
  static CorruptionSpec scaled_std(double scale, std::uint64_t seed = 0) {
    return {CorruptionKind::kScaledStd, scale, seed};
  }

  void validate() const {
    if (!(amount >= 0.0)) throw DomainError("CorruptionSpec: sigma/scale must be >= 0");
  }
};

inline Vector corrupt(const Vector& x, const CorruptionSpec& spec, Rng& rng) {
  spec.validate();
  Vector y = x;
  const std::size_t d = x.size();
  switch (spec.kind) {
    case CorruptionKind::kHalfMask: {
      const std::size_t keep = (d + 1) / 2;
      if (spec.mask_leading) {
        for (std::size_t i = 0; i < d - keep; ++i) y[i] = 0.0;
      } else {
        for (std::size_t i = keep; i < d; ++i) y[i] = 0.0;
      }
      break;
    }
    case CorruptionKind::kGaussian:
      if (spec.amount == 0.0) break;
      for (auto& v : y) v += spec.amount * rng.normal();
      break;
    case CorruptionKind::kScaledStd: {
      const double s = spec.amount * std::sqrt(variance(x));
      if (s == 0.0) break;
      for (auto& v : y) v += s * rng.normal();
      break;
    }
  }
  return y;
}

/// Corrupts every row, drawing noise from an Rng seeded with spec.seed.
inline Matrix corrupt_rows(const Matrix& rows, const CorruptionSpec& spec) {
  Rng rng(spec.seed);
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    const Vector y = corrupt(rows.row_vector(r), spec, rng);
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scoring

struct RetrievalScore {
  double success_rate;
  double mean_cosine_error;
  std::size_t queries;
};

/// Cosine error of the retrieved state to the target; a zero retrieved state
/// counts as error 1 (no direction recovered).
inline double retrieval_cosine_error(const Vector& retrieved, const Vector& target) {
  if (l2_norm(retrieved) == 0.0) return 1.0;
  return cosine_error(retrieved, target);
}

/// Runs retrieve() from every query row and compares the endpoint with the
/// matching target row.
inline RetrievalScore score_retrieval(const MemoryBank& bank, const Matrix& queries,
                                      const Matrix& targets, const HopfieldConfig& cfg,
                                      double threshold) {
  if (!(threshold > 0.0 && threshold < 2.0)) throw DomainError("success_rate: threshold not in (0, 2)");
  if (queries.rows() != targets.rows()) {
    throw DimensionError("success_rate: " + std::to_string(queries.rows()) + " queries vs " +
                         std::to_string(targets.rows()) + " targets");
  }
  std::size_t hits = 0;
  double err_sum = 0.0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    const RetrievalTrace trace = retrieve(bank, queries.row_vector(q), cfg);
    const double err = retrieval_cosine_error(trace.final_state(), targets.row_vector(q));
    err_sum += err;
    if (err <= threshold) ++hits;
  }
  const auto n = static_cast<double>(queries.rows());
  return {static_cast<double>(hits) / n, err_sum / n, queries.rows()};
}

inline double success_rate(const MemoryBank& bank, const Matrix& queries, const Matrix& targets,
                           const HopfieldConfig& cfg, double threshold = 0.2) {
  return score_retrieval(bank, queries, targets, cfg, threshold).success_rate;
}

}  // namespace gsh
