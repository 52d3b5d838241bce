#include "aperm/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string_view>

#include "aperm/errors.hpp"
#include "aperm/rng.hpp"

namespace aperm {

namespace {

std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    std::string_view cell = line.substr(start, pos == std::string_view::npos ? line.npos : pos - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

double parse_real(const std::string& cell, std::size_t line) {
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (first != last && *first == '+') ++first;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || cell.empty()) {
    throw ParseError("not a number: '" + cell + "'", line);
  }
  if (!std::isfinite(value)) throw ParseError("non-finite value '" + cell + "'", line);
  return value;
}

std::size_t parse_count(std::string_view text, std::size_t line) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("not a count: '" + std::string(text) + "'", line);
  }
  return value;
}

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

// Line reader that strips CR and tracks line numbers.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (number_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    return true;
  }

  // Next line that is neither blank nor a comment; comments go to `comment`.
  bool next_content(std::string& line, const std::function<void(const std::string&)>& comment) {
    while (next(line)) {
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      if (line.front() == '#') {
        comment(line);
        continue;
      }
      return true;
    }
    return false;
  }

  [[nodiscard]] std::size_t number() const noexcept { return number_; }

 private:
  std::istream& in_;
  std::size_t number_ = 0;
};

// Reads `# key=N`; returns nullopt for other comments.
std::optional<std::size_t> count_comment(const std::string& line, std::string_view key,
                                         std::size_t number) {
  std::string_view body(line);
  body.remove_prefix(1);
  while (!body.empty() && body.front() == ' ') body.remove_prefix(1);
  if (body.rfind(key, 0) != 0 || body.size() <= key.size() || body[key.size()] != '=') {
    return std::nullopt;
  }
  body.remove_prefix(key.size() + 1);
  while (!body.empty() && body.back() == ' ') body.remove_suffix(1);
  return parse_count(body, number);
}

struct DesignHeader {
  bool row = false;
  bool col = false;
  bool block = false;
  std::size_t count = 0;
};

// Consumes row/col/block names from cells[start...] in that order.
DesignHeader read_design_header(const std::vector<std::string>& cells, std::size_t start) {
  DesignHeader h;
  std::size_t i = start;
  if (i < cells.size() && cells[i] == "row") {
    h.row = true;
    ++i;
  }
  if (i < cells.size() && cells[i] == "col") {
    h.col = true;
    ++i;
  }
  if (i < cells.size() && cells[i] == "block") {
    h.block = true;
    ++i;
  }
  h.count = i - start;
  return h;
}

void push_design(DesignColumns& design, const DesignHeader& h,
                 const std::vector<std::string>& cells, std::size_t start) {
  std::size_t i = start;
  if (h.row) design.row.push_back(cells[i++]);
  if (h.col) design.col.push_back(cells[i++]);
  if (h.block) design.block.push_back(cells[i++]);
}

void write_design_header(std::ostream& out, const DesignColumns& d) {
  if (d.has_row()) out << ",row";
  if (d.has_col()) out << ",col";
  if (d.has_block()) out << ",block";
}

void write_design_cells(std::ostream& out, const DesignColumns& d, std::size_t i) {
  if (d.has_row()) out << ',' << d.row[i];
  if (d.has_col()) out << ',' << d.col[i];
  if (d.has_block()) out << ',' << d.block[i];
}

void check_label(const std::string& label, std::size_t line) {
  if (label.empty()) throw ParseError("empty label", line);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Cell key: label plus block when present.
std::vector<std::string> cell_keys(const LabeledSample& sample) {
  std::vector<std::string> keys = sample.labels;
  if (sample.design.has_block()) {
    for (std::size_t i = 0; i < keys.size(); ++i) keys[i] += '\x1f' + sample.design.block[i];
  }
  return keys;
}

DesignColumns select_design(const DesignColumns& d, const std::vector<std::size_t>& idx) {
  DesignColumns out;
  for (const auto i : idx) {
    if (d.has_row()) out.row.push_back(d.row.at(i));
    if (d.has_col()) out.col.push_back(d.col.at(i));
    if (d.has_block()) out.block.push_back(d.block.at(i));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

ItemKind item_kind(const ItemSet& items) noexcept {
  switch (items.index()) {
    case 0:
      return ItemKind::scalar;
    case 1:
      return ItemKind::vector;
    case 2:
      return ItemKind::curve;
    default:
      return ItemKind::op;
  }
}

std::size_t item_count(const ItemSet& items) noexcept {
  return std::visit([](const auto& v) { return v.size(); }, items);
}

const char* to_string(ItemKind kind) noexcept {
  switch (kind) {
    case ItemKind::scalar:
      return "scalar";
    case ItemKind::vector:
      return "vector";
    case ItemKind::curve:
      return "curve";
    case ItemKind::op:
      return "operator";
  }
  return "unknown";
}

void LabeledSample::validate() const {
  const std::size_t n = labels.size();
  if (item_count(items) != n) throw DomainError("item and label counts differ");
  const auto check = [n](const std::vector<std::string>& v, const char* name) {
    if (!v.empty() && v.size() != n) {
      throw DomainError(std::string(name) + " column length differs from the item count");
    }
  };
  check(design.row, "row");
  check(design.col, "col");
  check(design.block, "block");
  std::visit(
      [](const auto& list) {
        using T = typename std::decay_t<decltype(list)>::value_type;
        if (list.empty()) return;
        if constexpr (std::is_same_v<T, double>) {
          for (const double v : list) {
            if (!std::isfinite(v)) throw DomainError("non-finite scalar");
          }
        } else if constexpr (std::is_same_v<T, Eigen::VectorXd>) {
          for (const auto& v : list) {
            if (v.size() != list.front().size()) throw DomainError("vectors differ in dimension");
          }
        } else if constexpr (std::is_same_v<T, GridCurve>) {
          for (const auto& c : list) {
            if (c.grid().size() != list.front().grid().size() || c.grid() != list.front().grid()) {
              throw DomainError("curves are not observed on a shared grid");
            }
          }
        } else {
          for (const auto& o : list) {
            if (o.dim() != list.front().dim()) throw DomainError("operators differ in dimension");
          }
        }
      },
      items);
}

std::vector<std::string> distinct_levels(const std::vector<std::string>& values) {
  std::vector<std::string> out;
  for (const auto& v : values) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> level_indices(const std::vector<std::string>& values,
                                       const std::vector<std::string>& levels) {
  std::map<std::string, std::size_t> lookup;
  for (std::size_t i = 0; i < levels.size(); ++i) lookup.emplace(levels[i], i);
  std::vector<std::size_t> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    const auto it = lookup.find(v);
    if (it == lookup.end()) throw DomainError("unknown level '" + v + "'");
    out.push_back(it->second);
  }
  return out;
}

ItemSet select_items(const ItemSet& items, const std::vector<std::size_t>& indices) {
  return std::visit(
      [&indices](const auto& list) -> ItemSet {
        std::decay_t<decltype(list)> out;
        out.reserve(indices.size());
        for (const auto i : indices) out.push_back(list.at(i));
        return out;
      },
      items);
}

LabeledSample select(const LabeledSample& sample, const std::vector<std::size_t>& indices) {
  LabeledSample out;
  out.items = select_items(sample.items, indices);
  for (const auto i : indices) out.labels.push_back(sample.labels.at(i));
  out.design = select_design(sample.design, indices);
  return out;
}

// ---------------------------------------------------------------------------

LabeledSample parse_curves(std::istream& in, const CurveCsvOptions& options) {
  LineReader reader(in);
  std::optional<std::size_t> declared = options.expected_rows;
  const auto on_comment = [&](const std::string& line) {
    if (auto n = count_comment(line, "rows", reader.number())) {
      if (declared && *declared != *n) {
        throw ParseError("row count comment disagrees with the expected count", reader.number());
      }
      declared = n;
    }
  };
  std::string line;
  if (!reader.next_content(line, on_comment)) throw ParseError("empty curve file");
  const auto header = split_csv(line);
  const std::size_t header_line = reader.number();
  const bool vectors = header.front() == "vector";
  if (!vectors && header.front() != "grid") {
    throw ParseError("curve header must start with 'grid' or 'vector'", header_line);
  }
  const DesignHeader dh = read_design_header(header, 1);
  const std::size_t first_value = 1 + dh.count;
  if (header.size() <= first_value) throw ParseError("header has no value columns", header_line);
  const auto g = static_cast<Eigen::Index>(header.size() - first_value);

  Eigen::VectorXd grid(g);
  if (!vectors) {
    for (Eigen::Index j = 0; j < g; ++j) {
      grid[j] = parse_real(header[first_value + static_cast<std::size_t>(j)], header_line);
    }
    for (Eigen::Index j = 1; j < g; ++j) {
      if (!(grid[j] > grid[j - 1])) {
        throw ParseError("grid is not strictly increasing", header_line);
      }
    }
  }

  LabeledSample sample;
  std::vector<GridCurve> curves;
  std::vector<Eigen::VectorXd> vecs;
  while (reader.next_content(line, on_comment)) {
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       reader.number());
    }
    check_label(cells[0], reader.number());
    Eigen::VectorXd values(g);
    for (Eigen::Index j = 0; j < g; ++j) {
      values[j] = parse_real(cells[first_value + static_cast<std::size_t>(j)], reader.number());
    }
    sample.labels.push_back(cells[0]);
    push_design(sample.design, dh, cells, 1);
    if (vectors) {
      vecs.push_back(std::move(values));
    } else {
      curves.emplace_back(grid, std::move(values));
    }
  }
  if (declared && *declared != sample.labels.size()) {
    throw ParseError("file declares " + std::to_string(*declared) + " rows but has " +
                     std::to_string(sample.labels.size()));
  }
  if (vectors) {
    sample.items = std::move(vecs);
  } else {
    sample.items = std::move(curves);
  }
  return sample;
}

LabeledSample load_curves(const std::filesystem::path& path, const CurveCsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_curves(in, options);
}

LabeledSample parse_scalars(std::istream& in) {
  LineReader reader(in);
  std::optional<std::size_t> declared;
  const auto on_comment = [&](const std::string& line) {
    if (auto n = count_comment(line, "rows", reader.number())) declared = n;
  };
  std::string line;
  if (!reader.next_content(line, on_comment)) throw ParseError("empty scalar file");
  const auto header = split_csv(line);
  if (header.size() < 2 || header[0] != "label" || header[1] != "value") {
    throw ParseError("scalar header must start with 'label,value'", reader.number());
  }
  const DesignHeader dh = read_design_header(header, 2);
  if (2 + dh.count != header.size()) {
    throw ParseError("unknown scalar column; expected row, col, block in that order",
                     reader.number());
  }
  LabeledSample sample;
  std::vector<double> values;
  while (reader.next_content(line, on_comment)) {
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       reader.number());
    }
    check_label(cells[0], reader.number());
    sample.labels.push_back(cells[0]);
    values.push_back(parse_real(cells[1], reader.number()));
    push_design(sample.design, dh, cells, 2);
  }
  if (declared && *declared != values.size()) {
    throw ParseError("file declares " + std::to_string(*declared) + " rows but has " +
                     std::to_string(values.size()));
  }
  sample.items = std::move(values);
  return sample;
}

LabeledSample load_scalars(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_scalars(in);
}

LabeledSample parse_operators(std::istream& in) {
  LineReader reader(in);
  std::optional<std::size_t> declared;
  const auto on_comment = [&](const std::string& line) {
    if (auto n = count_comment(line, "operators", reader.number())) declared = n;
  };
  LabeledSample sample;
  std::vector<SymOperator> ops;
  std::string line;
  bool any_row = false;
  bool any_col = false;
  bool any_block = false;
  std::vector<std::optional<std::string>> rows;
  std::vector<std::optional<std::string>> cols;
  std::vector<std::optional<std::string>> blocks;
  while (reader.next_content(line, on_comment)) {
    const auto header = split_csv(line);
    const std::size_t header_line = reader.number();
    if (header.size() < 3 || header[0] != "operator") {
      throw ParseError("expected 'operator,<label>,dim=<d>'", header_line);
    }
    check_label(header[1], header_line);
    if (header[2].rfind("dim=", 0) != 0) throw ParseError("missing dim=<d>", header_line);
    const std::size_t d = parse_count(std::string_view(header[2]).substr(4), header_line);
    if (d == 0) throw ParseError("operator dimension must be positive", header_line);
    std::optional<std::string> row;
    std::optional<std::string> col;
    std::optional<std::string> block;
    for (std::size_t i = 3; i < header.size(); ++i) {
      const auto eq = header[i].find('=');
      if (eq == std::string::npos) throw ParseError("expected key=value", header_line);
      const std::string key = header[i].substr(0, eq);
      std::string value = header[i].substr(eq + 1);
      if (key == "row") {
        row = std::move(value);
        any_row = true;
      } else if (key == "col") {
        col = std::move(value);
        any_col = true;
      } else if (key == "block") {
        block = std::move(value);
        any_block = true;
      } else {
        throw ParseError("unknown operator attribute '" + key + "'", header_line);
      }
    }
    const auto di = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd m(di, di);
    for (Eigen::Index r = 0; r < di; ++r) {
      if (!reader.next(line)) {
        throw ParseError("operator '" + header[1] + "' is truncated", reader.number());
      }
      const auto cells = split_csv(line);
      if (cells.size() != d) {
        throw ParseError("expected " + std::to_string(d) + " entries, found " +
                             std::to_string(cells.size()),
                         reader.number());
      }
      for (Eigen::Index c = 0; c < di; ++c) {
        m(r, c) = parse_real(cells[static_cast<std::size_t>(c)], reader.number());
      }
    }
    try {
      ops.emplace_back(std::move(m));
    } catch (const DomainError& e) {
      throw DomainError("operator '" + header[1] + "' at line " + std::to_string(header_line) +
                        ": " + e.what());
    }
    sample.labels.push_back(header[1]);
    rows.push_back(std::move(row));
    cols.push_back(std::move(col));
    blocks.push_back(std::move(block));
  }
  if (declared && *declared != ops.size()) {
    throw ParseError("file declares " + std::to_string(*declared) + " operators but has " +
                     std::to_string(ops.size()));
  }
  const auto fill = [](bool any, const std::vector<std::optional<std::string>>& src,
                       std::vector<std::string>& dst, const char* name) {
    if (!any) return;
    for (const auto& v : src) {
      if (!v) throw ParseError(std::string("some operators lack the ") + name + " attribute");
      dst.push_back(*v);
    }
  };
  fill(any_row, rows, sample.design.row, "row");
  fill(any_col, cols, sample.design.col, "col");
  fill(any_block, blocks, sample.design.block, "block");
  if (!ops.empty()) {
    for (const auto& o : ops) {
      if (o.dim() != ops.front().dim()) throw ParseError("operators differ in dimension");
    }
  }
  sample.items = std::move(ops);
  return sample;
}

LabeledSample load_operators(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_operators(in);
}

LabeledSample load_sample(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream probe(text);
  std::string first;
  std::string line;
  while (std::getline(probe, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '#') {
      if (line.find("operators=") != std::string::npos) {
        first = "operator";
        break;
      }
      continue;
    }
    first = split_csv(line).front();
    break;
  }
  std::istringstream in(text);
  if (first == "operator") return parse_operators(in);
  if (first == "grid" || first == "vector") return parse_curves(in);
  if (first == "label") return parse_scalars(in);
  throw ParseError("cannot recognise the format of " + path.string());
}

// ---------------------------------------------------------------------------

void write_curves(std::ostream& out, const LabeledSample& sample) {
  sample.validate();
  const auto kind = item_kind(sample.items);
  if (kind != ItemKind::curve && kind != ItemKind::vector) {
    throw DomainError("write_curves needs curves or vectors");
  }
  const std::size_t n = sample.size();
  out << "# rows=" << n << '\n';
  if (kind == ItemKind::curve) {
    const auto& curves = std::get<std::vector<GridCurve>>(sample.items);
    if (curves.empty()) throw DomainError("no curves to write");
    out << "grid";
    write_design_header(out, sample.design);
    for (const double t : curves.front().grid()) out << ',' << format_real(t);
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      out << sample.labels[i];
      write_design_cells(out, sample.design, i);
      for (const double v : curves[i].values()) out << ',' << format_real(v);
      out << '\n';
    }
  } else {
    const auto& vecs = std::get<std::vector<Eigen::VectorXd>>(sample.items);
    if (vecs.empty()) throw DomainError("no vectors to write");
    out << "vector";
    write_design_header(out, sample.design);
    for (Eigen::Index j = 0; j < vecs.front().size(); ++j) out << ",x" << j + 1;
    out << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      out << sample.labels[i];
      write_design_cells(out, sample.design, i);
      for (const double v : vecs[i]) out << ',' << format_real(v);
      out << '\n';
    }
  }
}

void write_scalars(std::ostream& out, const LabeledSample& sample) {
  sample.validate();
  const auto* values = std::get_if<std::vector<double>>(&sample.items);
  if (values == nullptr) throw DomainError("write_scalars needs scalar items");
  out << "# rows=" << values->size() << '\n' << "label,value";
  write_design_header(out, sample.design);
  out << '\n';
  for (std::size_t i = 0; i < values->size(); ++i) {
    out << sample.labels[i] << ',' << format_real((*values)[i]);
    write_design_cells(out, sample.design, i);
    out << '\n';
  }
}

void write_operators(std::ostream& out, const LabeledSample& sample) {
  sample.validate();
  const auto* ops = std::get_if<std::vector<SymOperator>>(&sample.items);
  if (ops == nullptr) throw DomainError("write_operators needs operator items");
  out << "# operators=" << ops->size() << '\n';
  const auto& d = sample.design;
  for (std::size_t i = 0; i < ops->size(); ++i) {
    const auto& m = (*ops)[i].matrix();
    out << "operator," << sample.labels[i] << ",dim=" << m.rows();
    if (d.has_row()) out << ",row=" << d.row[i];
    if (d.has_col()) out << ",col=" << d.col[i];
    if (d.has_block()) out << ",block=" << d.block[i];
    out << '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c > 0) out << ',';
        out << format_real(m(r, c));
      }
      out << '\n';
    }
  }
}

void save_sample(const std::filesystem::path& path, const LabeledSample& sample) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  switch (item_kind(sample.items)) {
    case ItemKind::scalar:
      write_scalars(out, sample);
      break;
    case ItemKind::op:
      write_operators(out, sample);
      break;
    default:
      write_curves(out, sample);
  }
  if (!out) throw ParseError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------

LabeledSample curves_to_operators(const LabeledSample& sample, std::size_t group_size,
                                  std::uint64_t seed) {
  sample.validate();
  if (group_size < 2) throw DomainError("group_size must be at least 2");
  const auto kind = item_kind(sample.items);
  if (kind != ItemKind::curve && kind != ItemKind::vector) {
    throw DomainError("curves_to_operators needs curves or vectors");
  }
  const auto keys = cell_keys(sample);
  const auto cells = distinct_levels(keys);
  const auto cell_of = level_indices(keys, cells);

  LabeledSample out;
  std::vector<SymOperator> ops;
  std::vector<std::size_t> firsts;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cell_of.size(); ++i) {
      if (cell_of[i] == c) members.push_back(i);
    }
    if (members.size() % group_size != 0) {
      throw DomainError("label '" + sample.labels[members.front()] + "' has " +
                        std::to_string(members.size()) + " items, not divisible by group size " +
                        std::to_string(group_size));
    }
    auto rng = substream(seed, Stream::partition, c);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t start = 0; start < members.size(); start += group_size) {
      const std::vector<std::size_t> chunk(members.begin() + static_cast<std::ptrdiff_t>(start),
                                           members.begin() +
                                               static_cast<std::ptrdiff_t>(start + group_size));
      const ItemSet picked = select_items(sample.items, chunk);
      if (kind == ItemKind::curve) {
        ops.push_back(empirical_covariance(std::get<std::vector<GridCurve>>(picked), true));
      } else {
        ops.push_back(empirical_covariance(std::get<std::vector<Eigen::VectorXd>>(picked), true));
      }
      firsts.push_back(chunk.front());
      out.labels.push_back(sample.labels[chunk.front()]);
    }
  }
  out.design = select_design(sample.design, firsts);
  out.items = std::move(ops);
  return out;
}

LabeledSample curves_to_rank_one_operators(const LabeledSample& sample) {
  sample.validate();
  const auto kind = item_kind(sample.items);
  Eigen::MatrixXd data;
  if (kind == ItemKind::curve) {
    const auto& curves = std::get<std::vector<GridCurve>>(sample.items);
    if (curves.empty()) throw DomainError("no curves");
    data.resize(curves.front().size(), static_cast<Eigen::Index>(curves.size()));
    for (std::size_t i = 0; i < curves.size(); ++i) {
      data.col(static_cast<Eigen::Index>(i)) = curves[i].values();
    }
  } else if (kind == ItemKind::vector) {
    const auto& vecs = std::get<std::vector<Eigen::VectorXd>>(sample.items);
    if (vecs.empty()) throw DomainError("no vectors");
    data.resize(vecs.front().size(), static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t i = 0; i < vecs.size(); ++i) data.col(static_cast<Eigen::Index>(i)) = vecs[i];
  } else {
    throw DomainError("rank-one operators need curves or vectors");
  }
  const auto keys = cell_keys(sample);
  const auto cells = distinct_levels(keys);
  const auto cell_of = level_indices(keys, cells);
  Eigen::MatrixXd means = Eigen::MatrixXd::Zero(data.rows(), static_cast<Eigen::Index>(cells.size()));
  std::vector<double> counts(cells.size(), 0.0);
  for (std::size_t i = 0; i < cell_of.size(); ++i) {
    means.col(static_cast<Eigen::Index>(cell_of[i])) += data.col(static_cast<Eigen::Index>(i));
    counts[cell_of[i]] += 1.0;
  }
  for (std::size_t c = 0; c < cells.size(); ++c) {
    means.col(static_cast<Eigen::Index>(c)) /= counts[c];
  }
  std::vector<SymOperator> ops;
  ops.reserve(cell_of.size());
  for (std::size_t i = 0; i < cell_of.size(); ++i) {
    const Eigen::VectorXd r =
        data.col(static_cast<Eigen::Index>(i)) - means.col(static_cast<Eigen::Index>(cell_of[i]));
    ops.emplace_back(r * r.transpose());
  }
  LabeledSample out;
  out.items = std::move(ops);
  out.labels = sample.labels;
  out.design = sample.design;
  return out;
}

std::vector<GridCurve> simulate_gaussian_curves_sqrt(const GridCurve& mean,
                                                     const Eigen::MatrixXd& root, std::size_t n,
                                                     std::uint64_t seed) {
  const Eigen::Index d = mean.size();
  if (root.rows() != d || root.cols() != d) {
    throw DomainError("covariance root dimension does not match the grid");
  }
  std::vector<GridCurve> out;
  out.reserve(n);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = substream(seed, Stream::data, i);
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 0; j < d; ++j) z[j] = normal(rng);
    out.emplace_back(mean.grid(), mean.values() + root * z);
  }
  return out;
}

std::vector<GridCurve> simulate_gaussian_curves(const GridCurve& mean,
                                                const SymOperator& covariance, std::size_t n,
                                                std::uint64_t seed) {
  if (covariance.dim() != mean.size()) {
    throw DomainError("covariance dimension does not match the grid");
  }
  return simulate_gaussian_curves_sqrt(mean, matrix_sqrt(covariance).matrix(), n, seed);
}

Eigen::VectorXd uniform_grid(std::size_t points, double lo, double hi) {
  if (points == 0) throw DomainError("grid needs at least one point");
  if (points > 1 && !(hi > lo)) throw DomainError("grid needs lo < hi");
  if (points == 1) return Eigen::VectorXd::Constant(1, lo);
  return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(points), lo, hi);
}

}  // namespace aperm
