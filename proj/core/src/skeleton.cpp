#include "skelot/skeleton.hpp"

#include <algorithm>
#include <cmath>

#include "skelot/error.hpp"

namespace skelot {

namespace {

long long det_ll(const std::vector<std::vector<long long>>& m) {
  const size_t n = m.size();
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  // Laplace expansion; n stays tiny here.
  long long d = 0;
  for (size_t j = 0; j < n; ++j) {
    std::vector<std::vector<long long>> minor;
    for (size_t r = 1; r < n; ++r) {
      std::vector<long long> row;
      for (size_t c = 0; c < n; ++c)
        if (c != j) row.push_back(m[r][c]);
      minor.push_back(std::move(row));
    }
    long long term = m[0][j] * det_ll(minor);
    d += (j % 2 == 0) ? term : -term;
  }
  return d;
}

int affine_rank(const std::vector<RatVec>& pts) {
  if (pts.empty()) return -1;
  const size_t n = pts[0].size();
  std::vector<RatVec> dirs;
  for (size_t i = 1; i < pts.size(); ++i) dirs.push_back(sub(pts[i], pts[0]));
  // Gaussian elimination over Q.
  int rank = 0;
  for (size_t col = 0; col < n && rank < static_cast<int>(dirs.size()); ++col) {
    int pivot = -1;
    for (size_t r = rank; r < dirs.size(); ++r) {
      if (dirs[r][col] != 0) {
        pivot = static_cast<int>(r);
        break;
      }
    }
    if (pivot < 0) continue;
    std::swap(dirs[rank], dirs[pivot]);
    for (size_t r = 0; r < dirs.size(); ++r) {
      if (static_cast<int>(r) == rank || dirs[r][col] == 0) continue;
      Rat f = dirs[r][col] / dirs[rank][col];
      for (size_t c = 0; c < n; ++c) dirs[r][c] -= f * dirs[rank][c];
    }
    ++rank;
  }
  return rank;
}

}  // namespace

RatVec Gluing::apply(const RatVec& x) const {
  const size_t n = x.size();
  RatVec y(n, Rat(0));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < n; ++j) y[i] += rat_ll(lin[i][j]) * x[j];
    y[i] += shift[i];
  }
  return y;
}

RatVec Gluing::apply_inverse(const RatVec& x) const {
  const size_t n = x.size();
  // Solve A y = x - t exactly.
  RatVec rhs(n);
  for (size_t i = 0; i < n; ++i) rhs[i] = x[i] - shift[i];
  std::vector<RatVec> m(n, RatVec(n));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j) m[i][j] = rat_ll(lin[i][j]);
  // Gauss-Jordan with exact pivots.
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    while (pivot < n && m[pivot][col] == 0) ++pivot;
    if (pivot == n) throw Error(ErrorCode::inconsistent_gluing, "singular gluing matrix");
    std::swap(m[pivot], m[col]);
    std::swap(rhs[pivot], rhs[col]);
    Rat d = m[col][col];
    for (size_t c = 0; c < n; ++c) m[col][c] /= d;
    rhs[col] /= d;
    for (size_t r = 0; r < n; ++r) {
      if (r == col || m[r][col] == 0) continue;
      Rat f = m[r][col];
      for (size_t c = 0; c < n; ++c) m[r][c] -= f * m[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  return rhs;
}

Skeleton Skeleton::build(const nlohmann::json& doc) {
  Skeleton sk;
  try {
    sk.n_ = doc.at("n").get<int>();
    if (sk.n_ < 1) throw Error(ErrorCode::malformed_input, "ambient dimension must be >= 1");
    for (const auto& f : doc.at("faces")) {
      Face face;
      face.id = f.at("id").get<std::string>();
      for (const auto& v : f.at("vertices")) {
        RatVec coords;
        for (const auto& c : v) coords.push_back(rat_parse(c.get<std::string>()));
        if (static_cast<int>(coords.size()) != sk.n_)
          throw Error(ErrorCode::malformed_input,
                      "vertex arity mismatch on face '" + face.id + "'");
        face.vertices.push_back(std::move(coords));
      }
      face.dim = affine_rank(face.vertices);
      if (face.dim < 0 ||
          static_cast<int>(face.vertices.size()) < face.dim + 1)
        throw Error(ErrorCode::degenerate_face, "face '" + face.id + "' has no vertices");
      if (sk.n_ <= 2) face.chart = ConvexPoly::hull(sk.n_, face.vertices);
      if (sk.index_.count(face.id))
        throw Error(ErrorCode::malformed_input, "duplicate face id '" + face.id + "'");
      sk.index_[face.id] = static_cast<int>(sk.faces_.size());
      sk.faces_.push_back(std::move(face));
    }
    if (doc.contains("gluings")) {
      for (const auto& g : doc.at("gluings")) {
        Gluing gl;
        gl.from = sk.face_index(g.at("from").get<std::string>());
        gl.to = sk.face_index(g.at("to").get<std::string>());
        for (const auto& row : g.at("linear")) {
          std::vector<long long> r;
          for (const auto& e : row) r.push_back(e.get<long long>());
          gl.lin.push_back(std::move(r));
        }
        for (const auto& t : g.at("translate"))
          gl.shift.push_back(rat_parse(t.get<std::string>()));
        if (static_cast<int>(gl.lin.size()) != sk.n_ ||
            static_cast<int>(gl.shift.size()) != sk.n_)
          throw Error(ErrorCode::malformed_input, "gluing arity mismatch");
        sk.gluings_.push_back(std::move(gl));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::malformed_input, e.what());
  }
  for (size_t i = 0; i < sk.faces_.size(); ++i)
    if (sk.faces_[i].dim == sk.n_) sk.top_.push_back(static_cast<int>(i));
  sk.validate();
  return sk;
}

void Skeleton::validate() const {
  if (top_.empty())
    throw Error(ErrorCode::malformed_input,
                "skeleton needs at least one face of dimension n");
  for (const auto& f : faces_) {
    // Affinely independent chart vertices are required for simplex-style
    // charts; hull-redundant vertex lists are accepted for box charts, but
    // the dimension itself must be consistent.
    if (f.dim > n_)
      throw Error(ErrorCode::degenerate_face, "face '" + f.id + "' exceeds ambient dimension");
    if (f.vertices.size() > 1) {
      for (size_t i = 0; i < f.vertices.size(); ++i)
        for (size_t j = i + 1; j < f.vertices.size(); ++j)
          if (f.vertices[i] == f.vertices[j])
            throw Error(ErrorCode::degenerate_face,
                        "face '" + f.id + "' repeats a vertex");
    }
  }
  for (const auto& g : gluings_) {
    long long d = det_ll(g.lin);
    if (d != 1 && d != -1)
      throw Error(ErrorCode::inconsistent_gluing,
                  "gluing linear part is not unimodular (det=" + std::to_string(d) + ")");
    // The identified locus {x in from : g(x) in to} must be nonempty;
    // checked on chart vertices and pairwise midpoints.
    bool hit = false;
    const Face& from = faces_[g.from];
    const Face& to = faces_[g.to];
    auto probe = [&](const RatVec& x) {
      if (hit) return;
      if (n_ <= 2) {
        if (to.chart.contains(g.apply(x))) hit = true;
      } else {
        hit = true;  // no exact chart container above dim 2; trust input
      }
    };
    for (const auto& v : from.vertices) probe(v);
    for (size_t i = 0; i < from.vertices.size() && !hit; ++i)
      for (size_t j = i + 1; j < from.vertices.size() && !hit; ++j) {
        RatVec mid(n_);
        for (int d2 = 0; d2 < n_; ++d2)
          mid[d2] = (from.vertices[i][d2] + from.vertices[j][d2]) / 2;
        probe(mid);
      }
    if (!hit)
      throw Error(ErrorCode::inconsistent_gluing,
                  "gluing " + from.id + "->" + to.id + " identifies no points");
  }
}

int Skeleton::face_index(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end())
    throw Error(ErrorCode::face_missing, "no face with id '" + id + "'");
  return it->second;
}

std::vector<std::pair<SkeletonPoint, SkeletonPoint>> Skeleton::gluing_samples(int gi) const {
  const Gluing& g = gluings_.at(gi);
  const Face& from = faces_[g.from];
  const Face& to = faces_[g.to];
  std::vector<std::pair<SkeletonPoint, SkeletonPoint>> out;
  auto probe = [&](const RatVec& x) {
    RatVec y = g.apply(x);
    if (n_ <= 2) {
      if (!from.chart.contains(x) || !to.chart.contains(y)) return;
    }
    out.push_back({SkeletonPoint{g.from, x}, SkeletonPoint{g.to, y}});
  };
  for (const auto& v : from.vertices) probe(v);
  for (size_t i = 0; i < from.vertices.size(); ++i)
    for (size_t j = i + 1; j < from.vertices.size(); ++j) {
      RatVec mid(n_);
      for (int d = 0; d < n_; ++d) mid[d] = (from.vertices[i][d] + from.vertices[j][d]) / 2;
      probe(mid);
    }
  return out;
}

nlohmann::json Skeleton::to_json() const {
  nlohmann::json doc;
  doc["n"] = n_;
  doc["faces"] = nlohmann::json::array();
  for (const auto& f : faces_) {
    nlohmann::json jf;
    jf["id"] = f.id;
    jf["vertices"] = nlohmann::json::array();
    for (const auto& v : f.vertices) jf["vertices"].push_back(ratvec_str(v));
    doc["faces"].push_back(jf);
  }
  doc["gluings"] = nlohmann::json::array();
  for (const auto& g : gluings_) {
    nlohmann::json jg;
    jg["from"] = faces_[g.from].id;
    jg["to"] = faces_[g.to].id;
    jg["linear"] = g.lin;
    jg["translate"] = ratvec_str(g.shift);
    doc["gluings"].push_back(jg);
  }
  return doc;
}

SkeletonMeasure lebesgue_measure(const Skeleton& sk, const std::optional<DensitySpec>& density) {
  SkeletonMeasure mu;
  mu.sk_ = &sk;
  mu.pieces_.resize(sk.faces().size());
  Rat total = 0;
  for (int fi : sk.top_faces()) {
    const Face& f = sk.face(fi);
    std::vector<DensityPiece> pieces;
    if (density && density->pieces.count(f.id)) {
      pieces = density->pieces.at(f.id);
      for (const auto& p : pieces)
        if (p.value < 0)
          throw Error(ErrorCode::malformed_input, "negative density on face '" + f.id + "'");
    } else {
      if (sk.n() > 2)
        throw Error(ErrorCode::internal, "exact face volumes need ambient dim <= 2");
      pieces.push_back({f.chart.bounding_box(), Rat(1)});
    }
    for (const auto& p : pieces) {
      if (sk.n() <= 2) {
        total += p.value * f.chart.intersect(p.box).volume();
      } else {
        total += p.value * p.box.volume();
      }
    }
    mu.pieces_[fi] = std::move(pieces);
  }
  if (total <= 0) throw Error(ErrorCode::zero_mass, "measure has zero total mass");
  for (auto& fp : mu.pieces_)
    for (auto& p : fp) p.value /= total;
  return mu;
}

double SkeletonMeasure::density_at(int face, const std::vector<double>& x) const {
  for (const auto& p : pieces_[face]) {
    bool in = true;
    for (size_t d = 0; d < x.size(); ++d) {
      if (x[d] < rat_d(p.box.lo[d]) || x[d] > rat_d(p.box.hi[d])) {
        in = false;
        break;
      }
    }
    if (in) return rat_d(p.value);
  }
  return 0.0;
}

Rat SkeletonMeasure::density_at_exact(int face, const RatVec& x) const {
  for (const auto& p : pieces_[face])
    if (p.box.contains(x)) return p.value;
  return Rat(0);
}

Rat SkeletonMeasure::mass_of_box(int face, const Box& b) const {
  const Face& f = sk_->face(face);
  Rat m = 0;
  for (const auto& p : pieces_[face]) {
    Box cut;
    cut.lo.resize(b.lo.size());
    cut.hi.resize(b.hi.size());
    bool ok = true;
    for (size_t d = 0; d < b.lo.size(); ++d) {
      cut.lo[d] = std::max(b.lo[d], p.box.lo[d]);
      cut.hi[d] = std::min(b.hi[d], p.box.hi[d]);
      if (cut.lo[d] > cut.hi[d]) ok = false;
    }
    if (!ok) continue;
    m += p.value * f.chart.intersect(cut).volume();
  }
  return m;
}

double SkeletonMeasure::mass_of_interval(int face, double lo, double hi) const {
  if (hi <= lo) return 0.0;
  double m = 0;
  for (const auto& p : pieces_[face]) {
    double a = std::max(lo, rat_d(p.box.lo[0]));
    double b = std::min(hi, rat_d(p.box.hi[0]));
    double flo = rat_d(sk_->face(face).chart.bounding_box().lo[0]);
    double fhi = rat_d(sk_->face(face).chart.bounding_box().hi[0]);
    a = std::max(a, flo);
    b = std::min(b, fhi);
    if (b > a) m += rat_d(p.value) * (b - a);
  }
  return m;
}

SkeletonGrid::SkeletonGrid(const Skeleton& sk, const SkeletonMeasure& mu, double h)
    : sk_(&sk), mu_(&mu), h_(h) {
  if (h <= 0) throw Error(ErrorCode::malformed_input, "grid resolution must be positive");
  const int n = sk.n();
  for (int fi : sk.top_faces()) {
    const Face& f = sk.face(fi);
    for (const auto& piece : mu.pieces()[fi]) {
      if (piece.value == 0) continue;
      // Clip the piece box to the chart's bounding box, then grid it.
      Box pb = piece.box;
      if (n <= 2) {
        Box cb = f.chart.bounding_box();
        for (int d = 0; d < n; ++d) {
          pb.lo[d] = std::max(pb.lo[d], cb.lo[d]);
          pb.hi[d] = std::min(pb.hi[d], cb.hi[d]);
          if (pb.lo[d] >= pb.hi[d]) pb.hi[d] = pb.lo[d];
        }
      }
      std::vector<long> cells(n);
      std::vector<Rat> step(n);
      bool empty = false;
      for (int d = 0; d < n; ++d) {
        Rat len = pb.hi[d] - pb.lo[d];
        if (len <= 0) {
          empty = true;
          break;
        }
        long k = std::max(1L, static_cast<long>(std::ceil(rat_d(len) / h)));
        cells[d] = k;
        step[d] = len / k;
      }
      if (empty) continue;
      // Lexicographic cell walk keeps node order deterministic.
      std::vector<long> idx(n, 0);
      while (true) {
        Box cell;
        cell.lo.resize(n);
        cell.hi.resize(n);
        RatVec mid(n);
        for (int d = 0; d < n; ++d) {
          cell.lo[d] = pb.lo[d] + step[d] * idx[d];
          cell.hi[d] = cell.lo[d] + step[d];
          mid[d] = (cell.lo[d] + cell.hi[d]) / 2;
        }
        Rat w;
        RatVec node = mid;
        if (n <= 2) {
          ConvexPoly cut = f.chart.intersect(cell);
          w = cut.empty() ? Rat(0) : cut.volume() * piece.value;
          if (w > 0 && !f.chart.contains(mid, true)) node = cut.centroid();
        } else {
          w = cell.volume() * piece.value;
        }
        if (w > 0) {
          GridNode gn;
          gn.face = fi;
          gn.x = ratvec_d(node);
          gn.w = rat_d(w);
          nodes_.push_back(std::move(gn));
        }
        int d = n - 1;
        while (d >= 0 && ++idx[d] == cells[d]) idx[d--] = 0;
        if (d < 0) break;
      }
    }
  }
  // One deterministic rescale so the double weights sum to 1 exactly as
  // printed; the rational weights already sum to 1.
  double s = 0;
  for (const auto& nd : nodes_) s += nd.w;
  if (s > 0)
    for (auto& nd : nodes_) nd.w /= s;
}

double integrate(const SkeletonGrid& grid,
                 const std::function<double(int, const std::vector<double>&)>& f) {
  // Kahan summation; node count can reach ~1e6.
  double sum = 0, c = 0;
  for (const auto& nd : grid.nodes()) {
    double term = f(nd.face, nd.x) * nd.w - c;
    double t = sum + term;
    c = (t - sum) - term;
    sum = t;
  }
  return sum;
}

double integrate(const SkeletonMeasure& mu,
                 const std::function<double(int, const std::vector<double>&)>& f, double h) {
  SkeletonGrid grid(*mu.skeleton(), mu, h);
  return integrate(grid, f);
}

}  // namespace skelot
