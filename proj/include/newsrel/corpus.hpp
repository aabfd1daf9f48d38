#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "newsrel/csv.hpp"
#include "newsrel/error.hpp"
#include "newsrel/text_util.hpp"

namespace newsrel {

// One social-media post. std::nullopt encodes a MISSING cell.
struct PostRecord {
  std::string id;
  std::optional<std::string> user_id;
  std::optional<std::string> message;
  std::optional<std::int64_t> timestamp;
  std::optional<std::int64_t> num_like;
  std::optional<std::int64_t> num_comment;
  std::optional<std::int64_t> num_share;
  std::optional<int> label;  // 0 reliable, 1 unreliable
  std::optional<std::string> image;

  bool operator==(const PostRecord&) const = default;
};

enum class SplitName { train, public_test, private_test };

inline std::string_view to_string(SplitName n) {
  switch (n) {
    case SplitName::train: return "train";
    case SplitName::public_test: return "public_test";
    case SplitName::private_test: return "private_test";
  }
  return "?";
}

struct Split {
  SplitName name = SplitName::train;
  std::vector<PostRecord> records;
};

enum class Field {
  id,
  user_id,
  message,
  timestamp,
  num_like,
  num_comment,
  num_share,
  label,
  image,
};

inline constexpr std::array<Field, 9> kAllFields = {
    Field::id,        Field::user_id,     Field::message,   Field::timestamp, Field::num_like,
    Field::num_comment, Field::num_share, Field::label,     Field::image,
};

// Canonical CSV column name.
inline std::string_view column_name(Field f) {
  switch (f) {
    case Field::id: return "id";
    case Field::user_id: return "user_id";
    case Field::message: return "post_message";
    case Field::timestamp: return "timestamp_post";
    case Field::num_like: return "num_like_post";
    case Field::num_comment: return "num_comment_post";
    case Field::num_share: return "num_share_post";
    case Field::label: return "label";
    case Field::image: return "image";
  }
  return "?";
}

// Row label used when rendering the missing-value table.
inline std::string_view display_name(Field f) {
  switch (f) {
    case Field::id: return "Id";
    case Field::user_id: return "User name";
    case Field::message: return "Post message";
    case Field::timestamp: return "Timestamp post";
    case Field::num_like: return "Number of like";
    case Field::num_comment: return "Number of comment";
    case Field::num_share: return "Number of share";
    case Field::label: return "Label";
    case Field::image: return "Image";
  }
  return "?";
}

inline bool is_missing(const PostRecord& r, Field f) {
  switch (f) {
    case Field::id: return r.id.empty();
    case Field::user_id: return !r.user_id;
    case Field::message: return !r.message;
    case Field::timestamp: return !r.timestamp;
    case Field::num_like: return !r.num_like;
    case Field::num_comment: return !r.num_comment;
    case Field::num_share: return !r.num_share;
    case Field::label: return !r.label;
    case Field::image: return !r.image;
  }
  return true;
}

namespace detail {

inline std::optional<Field> field_for_header(std::string_view h) {
  const auto name = text::trim(h);
  for (auto f : kAllFields) {
    if (name == column_name(f)) return f;
  }
  // Alternate naming seen in the shared-task release.
  if (name == "user_name") return Field::user_id;
  return std::nullopt;
}

inline std::optional<std::int64_t> parse_int_cell(const std::string& cell, Field f,
                                                  std::size_t row, const std::string& origin,
                                                  bool non_negative) {
  if (cell.empty()) return std::nullopt;
  auto v = text::parse_int<std::int64_t>(cell);
  if (!v) {
    throw ValidationError(origin + ": row " + std::to_string(row) + ": column " +
                          std::string(column_name(f)) + " is not an integer: '" + cell + "'");
  }
  if (non_negative && *v < 0) {
    throw ValidationError(origin + ": row " + std::to_string(row) + ": column " +
                          std::string(column_name(f)) + " is negative");
  }
  return v;
}

inline std::optional<std::string> opt_string(std::string s) {
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace detail

// Parses CSV text into a Split. Rows are 1-based data-row indices in errors.
inline Split parse_split(std::string_view content, bool has_labels, SplitName name = SplitName::train,
                         const std::string& origin = "<csv>") {
  const auto rows = csv::parse(content, origin);
  if (rows.empty()) throw ParseError(origin + ": missing header row");

  const auto& header = rows.front();
  std::map<Field, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    auto f = detail::field_for_header(header[i]);
    if (!f) throw ParseError(origin + ": unknown column '" + header[i] + "'");
    if (col.count(*f)) throw ParseError(origin + ": duplicate column '" + header[i] + "'");
    col[*f] = i;
  }
  for (auto f : kAllFields) {
    if (f == Field::label && !has_labels) continue;
    if (!col.count(f)) {
      throw ParseError(origin + ": header lacks column '" + std::string(column_name(f)) + "'");
    }
  }

  Split split;
  split.name = name;
  std::set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty() && header.size() != 1) continue;  // blank line
    if (row.size() != header.size()) {
      throw ParseError(origin + ": row " + std::to_string(r) + ": expected " +
                       std::to_string(header.size()) + " columns, found " +
                       std::to_string(row.size()));
    }
    auto cell = [&](Field f) -> std::string {
      auto it = col.find(f);
      return it == col.end() ? std::string{} : row[it->second];
    };
    PostRecord rec;
    rec.id = std::string(text::trim(cell(Field::id)));
    if (rec.id.empty()) {
      throw ValidationError(origin + ": row " + std::to_string(r) + ": empty id");
    }
    if (!seen.insert(rec.id).second) {
      throw ValidationError(origin + ": row " + std::to_string(r) + ": duplicate id '" + rec.id + "'");
    }
    rec.user_id = detail::opt_string(cell(Field::user_id));
    rec.message = detail::opt_string(cell(Field::message));
    rec.timestamp = detail::parse_int_cell(cell(Field::timestamp), Field::timestamp, r, origin, false);
    rec.num_like = detail::parse_int_cell(cell(Field::num_like), Field::num_like, r, origin, true);
    rec.num_comment =
        detail::parse_int_cell(cell(Field::num_comment), Field::num_comment, r, origin, true);
    rec.num_share = detail::parse_int_cell(cell(Field::num_share), Field::num_share, r, origin, true);
    const auto label_cell = std::string(text::trim(cell(Field::label)));
    if (!label_cell.empty()) {
      if (label_cell != "0" && label_cell != "1") {
        throw ValidationError(origin + ": row " + std::to_string(r) + ": label must be 0 or 1, got '" +
                              label_cell + "'");
      }
      rec.label = label_cell == "1" ? 1 : 0;
    } else if (has_labels) {
      throw ValidationError(origin + ": row " + std::to_string(r) + ": label is missing");
    }
    rec.image = detail::opt_string(cell(Field::image));
    split.records.push_back(std::move(rec));
  }
  return split;
}

inline Split load_split(const std::string& path, bool has_labels, SplitName name = SplitName::train) {
  return parse_split(text::read_file(path), has_labels, name, path);
}

inline std::string format_split(const Split& split) {
  std::string out;
  csv::Row header;
  for (auto f : kAllFields) header.emplace_back(column_name(f));
  out += csv::format_row(header);
  auto opt_int = [](const std::optional<std::int64_t>& v) {
    return v ? std::to_string(*v) : std::string{};
  };
  for (const auto& r : split.records) {
    out += csv::format_row({
        r.id,
        r.user_id.value_or(""),
        r.message.value_or(""),
        opt_int(r.timestamp),
        opt_int(r.num_like),
        opt_int(r.num_comment),
        opt_int(r.num_share),
        r.label ? std::to_string(*r.label) : std::string{},
        r.image.value_or(""),
    });
  }
  return out;
}

inline void write_split(const Split& split, const std::string& path) {
  text::write_file(path, format_split(split));
}

struct MissingnessReport {
  std::vector<SplitName> splits;
  std::vector<std::size_t> split_sizes;
  // counts[field index][split index]
  std::array<std::vector<std::size_t>, kAllFields.size()> counts;

  std::size_t count(Field f, std::size_t split_index) const {
    return counts[static_cast<std::size_t>(f)][split_index];
  }
};

inline MissingnessReport missingness_report(const std::vector<Split>& splits) {
  if (splits.empty()) throw ConfigError("missingness_report needs at least one split");
  MissingnessReport rep;
  for (auto& c : rep.counts) c.assign(splits.size(), 0);
  for (std::size_t s = 0; s < splits.size(); ++s) {
    rep.splits.push_back(splits[s].name);
    rep.split_sizes.push_back(splits[s].records.size());
    for (const auto& r : splits[s].records) {
      for (auto f : kAllFields) {
        if (is_missing(r, f)) ++rep.counts[static_cast<std::size_t>(f)][s];
      }
    }
  }
  return rep;
}

inline std::string_view split_heading(SplitName n) {
  switch (n) {
    case SplitName::train: return "Train set";
    case SplitName::public_test: return "Public test set";
    case SplitName::private_test: return "Private test set";
  }
  return "?";
}

// Aligned plain-text table: one row per field, one column per split.
inline std::string render_table(const MissingnessReport& rep) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> head{"Feature name"};
  for (auto s : rep.splits) head.emplace_back(split_heading(s));
  cells.push_back(head);
  for (auto f : kAllFields) {
    std::vector<std::string> row{std::string(display_name(f))};
    for (std::size_t s = 0; s < rep.splits.size(); ++s) {
      row.push_back(text::group_thousands(rep.count(f, s)));
    }
    cells.push_back(row);
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  for (const auto& row : cells) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto pad = std::string(width[c] - row[c].size(), ' ');
      if (c == 0) {
        out += row[c] + pad;
      } else {
        out += "  " + pad + row[c];
      }
    }
    out += '\n';
  }
  return out;
}

// "<split>.<column>=<count>" lines plus "<split>.size=<n>".
inline std::string render_key_values(const MissingnessReport& rep) {
  std::string out;
  for (std::size_t s = 0; s < rep.splits.size(); ++s) {
    const auto prefix = std::string(to_string(rep.splits[s])) + ".";
    out += prefix + "size=" + std::to_string(rep.split_sizes[s]) + "\n";
    for (auto f : kAllFields) {
      out += prefix + std::string(column_name(f)) + "=" + std::to_string(rep.count(f, s)) + "\n";
    }
  }
  return out;
}

enum class MissingPolicy { drop, empty_string };

struct TextItem {
  std::string id;
  std::string text;
  std::optional<int> label;
};

inline std::vector<TextItem> text_view(const Split& split, MissingPolicy policy) {
  std::vector<TextItem> out;
  out.reserve(split.records.size());
  for (const auto& r : split.records) {
    if (!r.message && policy == MissingPolicy::drop) continue;
    out.push_back({r.id, r.message.value_or(""), r.label});
  }
  return out;
}

}  // namespace newsrel
