#include "udisc/io.hpp"

#include <fstream>
#include <sstream>

namespace udisc {

using nlohmann::json;

json read_json_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_json_file(const std::string &path, const json &doc) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(2) << '\n';
}

Complex<double> complex_from_json(const json &j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw FormatError("expected a number or [re, im], got " + j.dump());
}

json complex_to_json(Complex<double> z) { return json::array({z.real(), z.imag()}); }

CVector<double> cvector_from_json(const json &j) {
  if (!j.is_array()) throw FormatError("expected a vector, got " + j.dump());
  CVector<double> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i]);
  return v;
}

json cvector_to_json(const CVector<double> &v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

CMatrix<double> cmatrix_from_json(const json &j) {
  if (!j.is_array() || j.empty()) throw FormatError("expected a non-empty list of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j[0].is_array()) throw FormatError("matrix rows must be lists");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix<double> a(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto &row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) a(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return a;
}

json cmatrix_to_json(const CMatrix<double> &a) {
  json out = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(cvector_to_json(a.row(i).transpose()));
  return out;
}

RVector<double> rvector_from_json(const json &j) {
  if (!j.is_array()) throw FormatError("expected a list of numbers");
  RVector<double> v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError("expected a number, got " + j[i].dump());
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

json rvector_to_json(const RVector<double> &v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json rmatrix_to_json(const RMatrix<double> &a) {
  json out = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) out.push_back(rvector_to_json(a.row(i).transpose()));
  return out;
}

namespace {

std::size_t size_field(const json &doc, const char *key) {
  if (!doc.contains(key)) throw FormatError(std::string("missing field \"") + key + "\"");
  const auto &v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw FormatError(std::string("field \"") + key + "\" must be a positive integer");
  return v.get<std::size_t>();
}

} // namespace

StateEnsemble<double> load_ensemble(const json &doc) {
  if (!doc.is_object()) throw FormatError("ensemble document must be an object");
  const auto r = size_field(doc, "r");
  const auto m = size_field(doc, "m");
  if (!doc.contains("states") || !doc.at("states").is_array()) throw FormatError("missing list \"states\"");
  const auto &cols = doc.at("states");
  if (cols.size() != m) {
    std::ostringstream os;
    os << "dimension mismatch: m = " << m << " but " << cols.size() << " states given";
    throw FormatError(os.str());
  }
  CMatrix<double> phi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    const auto v = cvector_from_json(cols[k]);
    if (static_cast<std::size_t>(v.size()) != r) {
      std::ostringstream os;
      os << "dimension mismatch: state " << k << " has " << v.size() << " entries, r = " << r;
      throw FormatError(os.str());
    }
    phi.col(static_cast<Eigen::Index>(k)) = v;
  }
  if (doc.contains("priors") && !doc.at("priors").is_null())
    return make_ensemble<double>(std::move(phi), rvector_from_json(doc.at("priors")));
  return make_ensemble<double>(std::move(phi));
}

StateEnsemble<double> load_ensemble_file(const std::string &path) { return load_ensemble(read_json_file(path)); }

json ensemble_to_json(const StateEnsemble<double> &e) {
  json states = json::array();
  for (Eigen::Index k = 0; k < e.size(); ++k) states.push_back(cvector_to_json(e.state(k)));
  return {{"r", e.dimension()}, {"m", e.size()}, {"states", states}, {"priors", rvector_to_json(e.priors())}};
}

UnitaryGroup<double> group_from_json(const json &j) {
  if (!j.is_array() || j.empty()) throw FormatError("group must be a non-empty list of matrices");
  UnitaryGroup<double> g;
  for (const auto &m : j) g.elements.push_back(cmatrix_from_json(m));
  return g;
}

json group_to_json(const UnitaryGroup<double> &g) {
  json out = json::array();
  for (const auto &u : g.elements) out.push_back(cmatrix_to_json(u));
  return out;
}

SymmetrySpec<double> load_symmetry_spec(const json &doc) {
  if (!doc.is_object()) throw FormatError("symmetry document must be an object");
  if (!doc.contains("group")) throw FormatError("missing field \"group\"");
  if (!doc.contains("generators") || !doc.at("generators").is_array() || doc.at("generators").empty())
    throw FormatError("missing list \"generators\"");
  auto g = group_from_json(doc.at("group"));
  std::vector<CVector<double>> gens;
  for (const auto &v : doc.at("generators")) gens.push_back(cvector_from_json(v));
  std::optional<UnitaryGroup<double>> q;
  if (doc.contains("generator_group") && !doc.at("generator_group").is_null())
    q = group_from_json(doc.at("generator_group"));
  return make_symmetry_spec<double>(std::move(g), std::move(gens), std::move(q));
}

SymmetrySpec<double> load_symmetry_spec_file(const std::string &path) {
  return load_symmetry_spec(read_json_file(path));
}

json symmetry_spec_to_json(const SymmetrySpec<double> &spec) {
  json gens = json::array();
  for (const auto &v : spec.generators) gens.push_back(cvector_to_json(v));
  json out = {{"group", group_to_json(spec.group)}, {"generators", gens}};
  if (spec.generator_group) out["generator_group"] = group_to_json(*spec.generator_group);
  return out;
}

} // namespace udisc
