#include "skelot/io.hpp"

#include <fstream>
#include <sstream>

#include "skelot/error.hpp"

namespace skelot {

void Csv::meta(const std::string& key, const std::string& value) {
  meta_.push_back({key, value});
}

void Csv::header(const std::vector<std::string>& cols) { row(cols); }

void Csv::row(const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) body_ += ',';
    body_ += cells[i];
  }
  body_ += '\n';
}

std::string Csv::str() const {
  std::string out;
  for (const auto& [k, v] : meta_) out += "# " + k + "=" + v + "\n";
  out += body_;
  return out;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::malformed_input, "cannot write '" + path + "'");
  f << content;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::malformed_input, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string dump_json(const nlohmann::json& doc) { return doc.dump(2) + "\n"; }

namespace {

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                          "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

}  // namespace

std::string cells_svg(const LaguerreDecomposition& cells, const Skeleton& sk) {
  std::ostringstream s;
  const double W = 640, H = sk.n() == 1 ? 80 : 640;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  if (sk.n() == 1) {
    const Box bb = sk.face(sk.top_faces()[0]).chart.bounding_box();
    double lo = rat_d(bb.lo[0]), hi = rat_d(bb.hi[0]);
    auto sx = [&](double x) { return (x - lo) / (hi - lo) * (W - 40) + 20; };
    for (const auto& cell : cells.cells) {
      for (const auto& [a, b] : cell.intervals) {
        s << "<rect x=\"" << fmt17(sx(a)) << "\" y=\"30\" width=\"" << fmt17(sx(b) - sx(a))
          << "\" height=\"20\" fill=\"" << kPalette[cell.sample % 10] << "\"/>\n";
      }
    }
  } else if (sk.n() == 2) {
    Box bb = sk.face(sk.top_faces()[0]).chart.bounding_box();
    double lx = rat_d(bb.lo[0]), hx = rat_d(bb.hi[0]);
    double ly = rat_d(bb.lo[1]), hy = rat_d(bb.hi[1]);
    auto sx = [&](double x) { return (x - lx) / (hx - lx) * (W - 40) + 20; };
    auto sy = [&](double y) { return H - ((y - ly) / (hy - ly) * (H - 40) + 20); };
    for (const auto& cell : cells.cells) {
      for (const auto& poly : cell.polys) {
        s << "<polygon points=\"";
        for (const auto& v : poly.v) s << fmt17(sx(v[0])) << "," << fmt17(sy(v[1])) << " ";
        s << "\" fill=\"" << kPalette[cell.sample % 10] << "\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
      }
    }
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace skelot
