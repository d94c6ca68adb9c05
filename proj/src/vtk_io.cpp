#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hexmorph/errors.hpp"
#include "hexmorph/mesh.hpp"

namespace hexmorph {

namespace {

constexpr int kVtkHexahedron = 12;
constexpr std::string_view kModesTag = "modes:";

class Tokens {
 public:
  Tokens(std::string text, std::string where) : text_(std::move(text)), where_(std::move(where)) {}

  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }

  std::string_view next() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of file");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
    return std::string_view(text_).substr(start, pos_ - start);
  }

  void expect(std::string_view keyword) {
    const std::string_view tok = next();
    if (tok != keyword) fail("expected " + std::string(keyword) + ", found " + std::string(tok));
  }

  std::int64_t integer() {
    const std::string_view tok = next();
    std::int64_t v = 0;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || end != tok.data() + tok.size()) fail("expected an integer, found " + std::string(tok));
    return v;
  }

  double real() {
    const std::string_view tok = next();
    double v = 0.0;
    const auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || end != tok.data() + tok.size()) fail("expected a number, found " + std::string(tok));
    return v;
  }

  [[noreturn]] void fail(const std::string& msg) const { throw Error(ErrorKind::format, where_ + ": " + msg); }
  const std::string& where() const { return where_; }

 private:
  static bool is_space(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  std::string text_;
  std::string where_;
  std::size_t pos_ = 0;
};

bool is_integer_type(std::string_view t) {
  return t == "int" || t == "unsigned_int" || t == "short" || t == "unsigned_short" || t == "char" ||
         t == "unsigned_char" || t == "long" || t == "unsigned_long" || t == "vtkIdType";
}

void skip_attribute(Tokens& tok, std::string_view kind, std::int64_t count) {
  if (kind == "SCALARS") {
    tok.next();  // name
    tok.next();  // type
    std::string_view after = tok.next();
    std::int64_t comps = 1;
    if (after != "LOOKUP_TABLE") {
      const auto [end, ec] = std::from_chars(after.data(), after.data() + after.size(), comps);
      if (ec != std::errc() || end != after.data() + after.size() || comps < 1)
        tok.fail("bad component count " + std::string(after));
      tok.expect("LOOKUP_TABLE");
    }
    tok.next();
    for (std::int64_t i = 0; i < count * comps; ++i) tok.next();
  } else if (kind == "VECTORS" || kind == "NORMALS") {
    tok.next();
    tok.next();
    for (std::int64_t i = 0; i < 3 * count; ++i) tok.next();
  } else {
    throw Error(ErrorKind::unsupported, tok.where() + ": unsupported point attribute " + std::string(kind));
  }
}

}  // namespace

HexMesh load_vtk(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path.string());
  std::string version;
  std::string title;
  std::getline(in, version);
  std::getline(in, title);
  if (version.rfind("# vtk DataFile Version", 0) != 0)
    throw Error(ErrorKind::format, path.string() + ": not a legacy VTK file");
  std::stringstream rest;
  rest << in.rdbuf();
  Tokens tok(rest.str(), path.string());

  const std::string_view encoding = tok.next();
  if (encoding == "BINARY") throw Error(ErrorKind::unsupported, path.string() + ": binary VTK files are not supported");
  if (encoding != "ASCII") tok.fail("expected ASCII");
  tok.expect("DATASET");
  const std::string_view dataset = tok.next();
  if (dataset != "UNSTRUCTURED_GRID")
    throw Error(ErrorKind::unsupported, path.string() + ": dataset " + std::string(dataset) + " is not supported");

  HexMesh mesh;
  std::vector<std::vector<std::int64_t>> cells;
  std::vector<std::int64_t> types;
  bool have_points = false;
  std::int64_t cell_data_count = -1;

  while (!tok.done()) {
    const std::string_view key = tok.next();
    if (key == "POINTS") {
      const std::int64_t n = tok.integer();
      tok.next();  // float | double
      mesh.nodes.resize(static_cast<std::size_t>(n));
      for (auto& p : mesh.nodes)
        for (int a = 0; a < 3; ++a) p[a] = tok.real();
      have_points = true;
    } else if (key == "CELLS") {
      const std::int64_t n = tok.integer();
      const std::int64_t size = tok.integer();
      std::int64_t consumed = 0;
      cells.resize(static_cast<std::size_t>(n));
      for (auto& c : cells) {
        const std::int64_t k = tok.integer();
        c.resize(static_cast<std::size_t>(k));
        for (auto& id : c) id = tok.integer();
        consumed += k + 1;
      }
      if (consumed != size) tok.fail("CELLS size field does not match its entries");
    } else if (key == "CELL_TYPES") {
      const std::int64_t n = tok.integer();
      types.resize(static_cast<std::size_t>(n));
      for (auto& t : types) t = tok.integer();
    } else if (key == "CELL_DATA") {
      cell_data_count = tok.integer();
    } else if (key == "POINT_DATA") {
      const std::int64_t n = tok.integer();
      if (n != static_cast<std::int64_t>(mesh.nodes.size())) tok.fail("POINT_DATA count does not match POINTS");
      // Point attributes are not part of the mesh model; skip them.
      while (!tok.done()) {
        const std::string_view kind = tok.next();
        if (kind == "CELL_DATA") {
          cell_data_count = tok.integer();
          break;
        }
        skip_attribute(tok, kind, n);
      }
    } else if (key == "SCALARS") {
      if (cell_data_count < 0) tok.fail("SCALARS outside CELL_DATA");
      LabelArray array;
      array.name = std::string(tok.next());
      const std::string_view type = tok.next();
      if (!is_integer_type(type))
        throw Error(ErrorKind::unsupported, path.string() + ": cell array \"" + array.name + "\" has non-integer type " +
                                                std::string(type));
      std::string_view after = tok.next();
      if (after != "LOOKUP_TABLE") {
        if (after != "1") throw Error(ErrorKind::unsupported, path.string() + ": multi-component cell arrays");
        tok.expect("LOOKUP_TABLE");
      }
      tok.next();
      array.values.resize(static_cast<std::size_t>(cell_data_count));
      for (auto& v : array.values) v = static_cast<std::int32_t>(tok.integer());
      mesh.label_arrays.push_back(std::move(array));
    } else if (key == "METADATA") {
      tok.expect("INFORMATION");
      if (tok.integer() != 0) throw Error(ErrorKind::unsupported, path.string() + ": METADATA blocks");
    } else {
      throw Error(ErrorKind::unsupported, path.string() + ": unsupported section " + std::string(key));
    }
  }

  if (!have_points) tok.fail("missing POINTS");
  if (types.size() != cells.size()) tok.fail("CELL_TYPES count does not match CELLS");
  if (cell_data_count >= 0 && cell_data_count != static_cast<std::int64_t>(cells.size()))
    tok.fail("CELL_DATA count does not match CELLS");
  mesh.elements.reserve(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (types[c] != kVtkHexahedron || cells[c].size() != 8)
      throw Error(ErrorKind::unsupported,
                  path.string() + ": cell " + std::to_string(c) + " has VTK type " + std::to_string(types[c]) +
                      "; only hexahedra (12) are supported",
                  {static_cast<std::int64_t>(c)});
    HexElement e{};
    std::copy(cells[c].begin(), cells[c].end(), e.begin());
    mesh.elements.push_back(e);
  }

  const auto tag = title.find(kModesTag);
  if (tag != std::string::npos) {
    std::istringstream modes(title.substr(tag + kModesTag.size()));
    std::string entry;
    while (modes >> entry) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) continue;
      const std::string name = entry.substr(0, eq);
      for (LabelArray& a : mesh.label_arrays)
        if (a.name == name) a.mode = entry.substr(eq + 1);
    }
  }
  mesh.validate();
  return mesh;
}

void save_vtk(const HexMesh& mesh, const std::filesystem::path& path) {
  mesh.validate();
  for (const LabelArray& a : mesh.label_arrays) {
    if (a.name.empty() || a.name.find_first_of(" \t\r\n=") != std::string::npos)
      throw Error(ErrorKind::format, "label array name \"" + a.name + "\" is not a valid VTK array name");
    if (a.mode.find_first_of(" \t\r\n") != std::string::npos)
      throw Error(ErrorKind::format, "label mode \"" + a.mode + "\" contains whitespace");
  }

  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (f == nullptr) throw Error(ErrorKind::io, "cannot write " + path.string());
  std::string title = "hexmorph hexahedral mesh";
  std::string modes;
  for (const LabelArray& a : mesh.label_arrays)
    if (!a.mode.empty()) modes += " " + a.name + "=" + a.mode;
  if (!modes.empty()) title += "; " + std::string(kModesTag) + modes;

  std::fprintf(f, "# vtk DataFile Version 3.0\n%s\nASCII\nDATASET UNSTRUCTURED_GRID\n", title.c_str());
  std::fprintf(f, "POINTS %zu double\n", mesh.nodes.size());
  for (const Vec3& p : mesh.nodes) std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
  const std::size_t m = mesh.elements.size();
  std::fprintf(f, "CELLS %zu %zu\n", m, 9 * m);
  for (const HexElement& e : mesh.elements)
    std::fprintf(f, "8 %lld %lld %lld %lld %lld %lld %lld %lld\n", static_cast<long long>(e[0]),
                 static_cast<long long>(e[1]), static_cast<long long>(e[2]), static_cast<long long>(e[3]),
                 static_cast<long long>(e[4]), static_cast<long long>(e[5]), static_cast<long long>(e[6]),
                 static_cast<long long>(e[7]));
  std::fprintf(f, "CELL_TYPES %zu\n", m);
  for (std::size_t i = 0; i < m; ++i) std::fprintf(f, "%d\n", kVtkHexahedron);
  if (!mesh.label_arrays.empty()) {
    std::fprintf(f, "CELL_DATA %zu\n", m);
    for (const LabelArray& a : mesh.label_arrays) {
      std::fprintf(f, "SCALARS %s int 1\nLOOKUP_TABLE default\n", a.name.c_str());
      for (std::int32_t v : a.values) std::fprintf(f, "%d\n", v);
    }
  }
  if (std::fclose(f) != 0) throw Error(ErrorKind::io, "write failed for " + path.string());
}

}  // namespace hexmorph
