#include "skelot/rational.hpp"

#include <cctype>
#include <cstdio>

#include "skelot/error.hpp"

namespace skelot {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::inconsistent_gluing: return "InconsistentGluing";
    case ErrorCode::degenerate_face: return "DegenerateFace";
    case ErrorCode::zero_mass: return "ZeroMass";
    case ErrorCode::face_missing: return "FaceMissing";
    case ErrorCode::face_mismatch: return "FaceMismatch";
    case ErrorCode::p_not_in_body: return "PNotInBody";
    case ErrorCode::no_lattice_point: return "NoLatticePoint";
    case ErrorCode::non_unique_gradient: return "NonUniqueGradient";
    case ErrorCode::empty_semigroup: return "EmptySemigroup";
    case ErrorCode::degree_mismatch: return "DegreeMismatch";
    case ErrorCode::dimension_not_1: return "DimensionNot1";
    case ErrorCode::generation_failed: return "GenerationFailed";
    case ErrorCode::malformed_input: return "MalformedInput";
    case ErrorCode::internal: return "InternalError";
  }
  return "UnknownError";
}

Rat rat_parse(std::string_view s) {
  if (s.empty()) throw Error(ErrorCode::malformed_input, "empty rational literal");
  std::string t(s);
  for (char ch : t) {
    if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == '-' || ch == '+' || ch == '/'))
      throw Error(ErrorCode::malformed_input, "bad rational literal '" + t + "'");
  }
  try {
    Rat r(t);
    r.canonicalize();
    return r;
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::malformed_input, "bad rational literal '" + t + "'");
  }
}

std::string rat_str(const Rat& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

RatVec ratvec_parse(const std::vector<std::string>& parts) {
  RatVec v;
  v.reserve(parts.size());
  for (const auto& p : parts) v.push_back(rat_parse(p));
  return v;
}

std::vector<std::string> ratvec_str(const RatVec& v) {
  std::vector<std::string> out;
  out.reserve(v.size());
  for (const auto& r : v) out.push_back(rat_str(r));
  return out;
}

std::vector<double> ratvec_d(const RatVec& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& r : v) out.push_back(r.get_d());
  return out;
}

Rat dot(const RatVec& a, const RatVec& b) {
  Rat s = 0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

RatVec sub(const RatVec& a, const RatVec& b) {
  RatVec out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

RatVec add(const RatVec& a, const RatVec& b) {
  RatVec out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace skelot
