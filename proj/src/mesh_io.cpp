#include "rvparc/mesh_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace rvparc {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// ---------------------------------------------------------------- OBJ

LoadedSurface read_obj(const fs::path& path) {
  auto in = open_input(path);
  std::vector<Vec3> pts;
  std::vector<std::array<int, 3>> tris;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad vertex");
      pts.push_back(p);
    } else if (tag == "f") {
      std::vector<int> ids;
      std::string tok;
      while (ls >> tok) {
        const int id = std::stoi(tok.substr(0, tok.find('/')));
        ids.push_back(id < 0 ? static_cast<int>(pts.size()) + id : id - 1);
      }
      if (ids.size() != 3) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": only triangular faces are supported");
      }
      tris.push_back({ids[0], ids[1], ids[2]});
    }
  }
  PointMatrix v(pts.size(), 3);
  for (size_t i = 0; i < pts.size(); ++i) v.row(i) = pts[i].transpose();
  FaceMatrix f(tris.size(), 3);
  for (size_t i = 0; i < tris.size(); ++i) f.row(i) << tris[i][0], tris[i][1], tris[i][2];
  return {TriSurface::build(std::move(v), std::move(f)), {}, -1};
}

void write_obj(const TriSurface& s, const fs::path& path) {
  auto out = open_output(path);
  for (int i = 0; i < s.num_vertices(); ++i) {
    out << "v " << s.vertices()(i, 0) << ' ' << s.vertices()(i, 1) << ' ' << s.vertices()(i, 2) << '\n';
  }
  for (int f = 0; f < s.num_faces(); ++f) {
    out << "f " << s.faces()(f, 0) + 1 << ' ' << s.faces()(f, 1) + 1 << ' ' << s.faces()(f, 2) + 1 << '\n';
  }
  finish(out, path);
}

// ---------------------------------------------------------------- VTK legacy

class Tokens {
 public:
  Tokens(std::istream& in, const fs::path& path) : in_(in), path_(path) {}

  bool next(std::string& tok) { return static_cast<bool>(in_ >> tok); }

  std::string word() {
    std::string t;
    if (!next(t)) fail("unexpected end of file");
    return t;
  }
  long integer() {
    const std::string t = word();
    try {
      return std::stol(t);
    } catch (const std::exception&) {
      fail("expected integer, got '" + t + "'");
    }
    return 0;
  }
  double real() {
    const std::string t = word();
    try {
      return std::stod(t);
    } catch (const std::exception&) {
      fail("expected number, got '" + t + "'");
    }
    return 0;
  }
  std::string rest_of_line() {
    std::string l;
    std::getline(in_, l);
    return l;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(path_.string() + ": " + msg); }

 private:
  std::istream& in_;
  const fs::path& path_;
};

LoadedSurface read_vtk(const fs::path& path) {
  auto in = open_input(path);
  std::string header, title, encoding;
  std::getline(in, header);
  if (header.rfind("# vtk DataFile", 0) != 0) throw ParseError(path.string() + ": missing VTK header");
  std::getline(in, title);
  std::getline(in, encoding);
  if (lower(encoding).find("ascii") == std::string::npos) throw ParseError(path.string() + ": only ASCII VTK is supported");

  Tokens tk(in, path);
  PointMatrix v;
  FaceMatrix f;
  MeshFields fields;
  enum class Section { none, point, cell } section = Section::none;
  std::string tok;
  while (tk.next(tok)) {
    const std::string key = lower(tok);
    if (key == "dataset") {
      if (lower(tk.word()) != "polydata") tk.fail("only POLYDATA datasets are supported");
    } else if (key == "points") {
      const long n = tk.integer();
      tk.word();
      v.resize(n, 3);
      for (long i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) v(i, c) = tk.real();
    } else if (key == "polygons") {
      const long n = tk.integer();
      tk.integer();
      f.resize(n, 3);
      for (long i = 0; i < n; ++i) {
        if (tk.integer() != 3) tk.fail("only triangular polygons are supported");
        for (int c = 0; c < 3; ++c) f(i, c) = static_cast<int>(tk.integer());
      }
    } else if (key == "vertices" || key == "lines" || key == "triangle_strips") {
      tk.fail("unsupported POLYDATA section " + tok);
    } else if (key == "point_data") {
      if (tk.integer() != v.rows()) tk.fail("POINT_DATA count does not match POINTS");
      section = Section::point;
    } else if (key == "cell_data") {
      if (tk.integer() != f.rows()) tk.fail("CELL_DATA count does not match POLYGONS");
      section = Section::cell;
    } else if (key == "scalars") {
      if (section == Section::none) tk.fail("SCALARS outside a data section");
      const std::string name = tk.word();
      std::istringstream rest(tk.rest_of_line());
      std::string type;
      int ncomp = 1;
      rest >> type;
      if (!(rest >> ncomp)) ncomp = 1;
      if (ncomp != 1) tk.fail("multi-component SCALARS are not supported");
      std::string lut = tk.word();
      if (lower(lut) != "lookup_table") tk.fail("expected LOOKUP_TABLE");
      tk.word();
      const long n = section == Section::point ? v.rows() : f.rows();
      ScalarField values(n);
      for (long i = 0; i < n; ++i) values(i) = tk.real();
      (section == Section::point ? fields.point_scalars : fields.cell_scalars)[name] = std::move(values);
    } else if (key == "vectors" || key == "normals") {
      if (section == Section::none) tk.fail("VECTORS outside a data section");
      const std::string name = tk.word();
      tk.word();
      const long n = section == Section::point ? v.rows() : f.rows();
      PointMatrix values(n, 3);
      for (long i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) values(i, c) = tk.real();
      (section == Section::point ? fields.point_vectors : fields.cell_vectors)[name] = std::move(values);
    } else {
      tk.fail("unexpected keyword '" + tok + "'");
    }
  }
  if (v.rows() == 0 || f.rows() == 0) throw ParseError(path.string() + ": no POINTS/POLYGONS found");
  return {TriSurface::build(std::move(v), std::move(f)), std::move(fields), -1};
}

void write_vtk_block(std::ofstream& out, const std::map<std::string, ScalarField>& scalars,
                     const std::map<std::string, PointMatrix>& vectors) {
  for (const auto& [name, values] : scalars) {
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) out << values(i) << '\n';
  }
  for (const auto& [name, values] : vectors) {
    out << "VECTORS " << name << " double\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      out << values(i, 0) << ' ' << values(i, 1) << ' ' << values(i, 2) << '\n';
    }
  }
}

void check_field_sizes(const TriSurface& s, const MeshFields& fields) {
  for (const auto& [name, v] : fields.point_scalars)
    if (v.size() != s.num_vertices()) throw Error("point field '" + name + "' has wrong length");
  for (const auto& [name, v] : fields.point_vectors)
    if (v.rows() != s.num_vertices()) throw Error("point field '" + name + "' has wrong length");
  for (const auto& [name, v] : fields.cell_scalars)
    if (v.size() != s.num_faces()) throw Error("cell field '" + name + "' has wrong length");
  for (const auto& [name, v] : fields.cell_vectors)
    if (v.rows() != s.num_faces()) throw Error("cell field '" + name + "' has wrong length");
}

void write_vtk(const TriSurface& s, const fs::path& path, const MeshFields& fields) {
  auto out = open_output(path);
  out << "# vtk DataFile Version 3.0\nrvparc surface\nASCII\nDATASET POLYDATA\n";
  out << "POINTS " << s.num_vertices() << " double\n";
  for (int i = 0; i < s.num_vertices(); ++i) {
    out << s.vertices()(i, 0) << ' ' << s.vertices()(i, 1) << ' ' << s.vertices()(i, 2) << '\n';
  }
  out << "POLYGONS " << s.num_faces() << ' ' << 4 * s.num_faces() << '\n';
  for (int f = 0; f < s.num_faces(); ++f) {
    out << "3 " << s.faces()(f, 0) << ' ' << s.faces()(f, 1) << ' ' << s.faces()(f, 2) << '\n';
  }
  if (!fields.point_scalars.empty() || !fields.point_vectors.empty()) {
    out << "POINT_DATA " << s.num_vertices() << '\n';
    write_vtk_block(out, fields.point_scalars, fields.point_vectors);
  }
  if (!fields.cell_scalars.empty() || !fields.cell_vectors.empty()) {
    out << "CELL_DATA " << s.num_faces() << '\n';
    write_vtk_block(out, fields.cell_scalars, fields.cell_vectors);
  }
  finish(out, path);
}

// ---------------------------------------------------------------- AVS-UCD

std::vector<std::string> ucd_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

// Reads a node/cell data block: component header, one label line per
// component, then one row per element keyed by element id.
void read_ucd_data(const std::vector<std::string>& lines, size_t& cursor, long ncomp_total, long count,
                   const std::unordered_map<long, int>& index_of, std::map<std::string, ScalarField>& scalars,
                   std::map<std::string, PointMatrix>& vectors, const fs::path& path) {
  if (ncomp_total == 0) return;
  auto need = [&](size_t i) {
    if (i >= lines.size()) throw ParseError(path.string() + ": truncated UCD data block");
  };
  need(cursor);
  std::istringstream hs(lines[cursor++]);
  long nfields = 0;
  hs >> nfields;
  std::vector<int> sizes(nfields);
  for (auto& sz : sizes) hs >> sz;
  std::vector<std::string> names;
  for (long i = 0; i < nfields; ++i) {
    need(cursor);
    std::string label = lines[cursor++];
    label = label.substr(0, label.find(','));
    label.erase(0, label.find_first_not_of(" \t"));
    label.erase(label.find_last_not_of(" \t\r") + 1);
    names.push_back(label.empty() ? "field" + std::to_string(i) : label);
  }
  Eigen::MatrixXd data(count, ncomp_total);
  for (long r = 0; r < count; ++r) {
    need(cursor);
    std::istringstream rs(lines[cursor++]);
    long id = 0;
    rs >> id;
    const auto it = index_of.find(id);
    if (it == index_of.end()) throw ParseError(path.string() + ": data row for unknown id " + std::to_string(id));
    for (long c = 0; c < ncomp_total; ++c) {
      if (!(rs >> data(it->second, c))) throw ParseError(path.string() + ": short data row");
    }
  }
  long col = 0;
  for (long i = 0; i < nfields; ++i) {
    if (sizes[i] == 1) {
      scalars[names[i]] = data.col(col);
    } else if (sizes[i] == 3) {
      vectors[names[i]] = data.middleCols(col, 3);
    }
    col += sizes[i];
  }
}

LoadedSurface read_ucd(const fs::path& path) {
  auto in = open_input(path);
  const auto lines = ucd_lines(in);
  if (lines.empty()) throw ParseError(path.string() + ": empty UCD file");
  std::istringstream hs(lines[0]);
  long nnodes = 0, ncells = 0, nndata = 0, ncdata = 0, nmdata = 0;
  if (!(hs >> nnodes >> ncells >> nndata >> ncdata >> nmdata)) throw ParseError(path.string() + ": bad UCD header");
  if (lines.size() < static_cast<size_t>(1 + nnodes + ncells)) throw ParseError(path.string() + ": truncated UCD file");

  PointMatrix v(nnodes, 3);
  std::unordered_map<long, int> node_index;
  long min_id = std::numeric_limits<long>::max();
  for (long i = 0; i < nnodes; ++i) {
    std::istringstream ls(lines[1 + i]);
    long id = 0;
    if (!(ls >> id >> v(i, 0) >> v(i, 1) >> v(i, 2))) throw ParseError(path.string() + ": bad node line");
    if (!node_index.emplace(id, static_cast<int>(i)).second) throw ParseError(path.string() + ": duplicate node id");
    min_id = std::min(min_id, id);
  }
  FaceMatrix f(ncells, 3);
  std::unordered_map<long, int> cell_index;
  for (long i = 0; i < ncells; ++i) {
    std::istringstream ls(lines[1 + nnodes + i]);
    long id = 0, mat = 0;
    std::string type;
    if (!(ls >> id >> mat >> type)) throw ParseError(path.string() + ": bad cell line");
    if (lower(type) != "tri") throw ParseError(path.string() + ": unsupported UCD cell type '" + type + "'");
    for (int c = 0; c < 3; ++c) {
      long nid = 0;
      if (!(ls >> nid)) throw ParseError(path.string() + ": bad cell line");
      const auto it = node_index.find(nid);
      if (it == node_index.end()) throw ParseError(path.string() + ": cell references unknown node " + std::to_string(nid));
      f(i, c) = it->second;
    }
    cell_index.emplace(id, static_cast<int>(i));
  }
  MeshFields fields;
  size_t cursor = 1 + nnodes + ncells;
  read_ucd_data(lines, cursor, nndata, nnodes, node_index, fields.point_scalars, fields.point_vectors, path);
  read_ucd_data(lines, cursor, ncdata, ncells, cell_index, fields.cell_scalars, fields.cell_vectors, path);
  const int base = min_id == 0 ? 0 : 1;
  return {TriSurface::build(std::move(v), std::move(f)), std::move(fields), base};
}

void write_ucd_block(std::ofstream& out, const std::map<std::string, ScalarField>& scalars,
                     const std::map<std::string, PointMatrix>& vectors, long count) {
  if (scalars.empty() && vectors.empty()) return;
  out << scalars.size() + vectors.size();
  for (size_t i = 0; i < scalars.size(); ++i) out << " 1";
  for (size_t i = 0; i < vectors.size(); ++i) out << " 3";
  out << '\n';
  for (const auto& kv : scalars) out << kv.first << ", none\n";
  for (const auto& kv : vectors) out << kv.first << ", none\n";
  for (long r = 0; r < count; ++r) {
    out << r + 1;
    for (const auto& kv : scalars) out << ' ' << kv.second(r);
    for (const auto& kv : vectors) out << ' ' << kv.second(r, 0) << ' ' << kv.second(r, 1) << ' ' << kv.second(r, 2);
    out << '\n';
  }
}

void write_ucd(const TriSurface& s, const fs::path& path, const MeshFields& fields) {
  auto out = open_output(path);
  const auto ncomp = [](const auto& sc, const auto& vc) { return sc.size() + 3 * vc.size(); };
  out << "# AVS UCD surface written by rvparc\n";
  out << s.num_vertices() << ' ' << s.num_faces() << ' ' << ncomp(fields.point_scalars, fields.point_vectors) << ' '
      << ncomp(fields.cell_scalars, fields.cell_vectors) << " 0\n";
  for (int i = 0; i < s.num_vertices(); ++i) {
    out << i + 1 << ' ' << s.vertices()(i, 0) << ' ' << s.vertices()(i, 1) << ' ' << s.vertices()(i, 2) << '\n';
  }
  for (int f = 0; f < s.num_faces(); ++f) {
    out << f + 1 << " 0 tri " << s.faces()(f, 0) + 1 << ' ' << s.faces()(f, 1) + 1 << ' ' << s.faces()(f, 2) + 1
        << '\n';
  }
  write_ucd_block(out, fields.point_scalars, fields.point_vectors, s.num_vertices());
  write_ucd_block(out, fields.cell_scalars, fields.cell_vectors, s.num_faces());
  finish(out, path);
}

}  // namespace

MeshFormat format_from_path(const fs::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".obj") return MeshFormat::obj;
  if (ext == ".vtk") return MeshFormat::vtk;
  if (ext == ".inp" || ext == ".ucd") return MeshFormat::ucd;
  throw Error("cannot infer mesh format from extension '" + ext + "'");
}

LoadedSurface load_surface_with_fields(const fs::path& path, MeshFormat format) {
  switch (format) {
    case MeshFormat::obj: return read_obj(path);
    case MeshFormat::vtk: return read_vtk(path);
    case MeshFormat::ucd: return read_ucd(path);
  }
  throw Error("unknown mesh format");
}

TriSurface load_surface(const fs::path& path, MeshFormat format) {
  return load_surface_with_fields(path, format).surface;
}

void save_surface(const TriSurface& s, const fs::path& path, MeshFormat format, const MeshFields& fields) {
  check_field_sizes(s, fields);
  switch (format) {
    case MeshFormat::obj: write_obj(s, path); return;
    case MeshFormat::vtk: write_vtk(s, path, fields); return;
    case MeshFormat::ucd: write_ucd(s, path, fields); return;
  }
}

LandmarkSet load_landmarks(const fs::path& path) {
  auto in = open_input(path);
  nlohmann::json j;
  try {
    in >> j;
    LandmarkSet lm;
    lm.apex = j.at("apex").get<std::vector<int>>();
    lm.tricuspid = j.at("tricuspid").get<std::vector<int>>();
    lm.pulmonary = j.at("pulmonary").get<std::vector<int>>();
    return lm;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_landmarks(const LandmarkSet& lm, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  nlohmann::json j{{"apex", lm.apex}, {"tricuspid", lm.tricuspid}, {"pulmonary", lm.pulmonary}};
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace rvparc
