#ifndef UDISC_IO_HPP
#define UDISC_IO_HPP

// JSON encodings. Complex scalars are [re, im] pairs; a bare number is read
// as a real scalar. Matrices are lists of rows, vectors are flat lists.
//
//   ensemble:  { "r": int, "m": int, "states": [column, ...], "priors": [...]? }
//   symmetry:  { "group": [matrix, ...], "generators": [vector, ...],
//                "generator_group": [matrix, ...]? }

#include <string>

#include <json.hpp>

#include "udisc/ensemble.hpp"
#include "udisc/symmetry.hpp"

namespace udisc {

/// Malformed document (wrong types, missing keys, inconsistent sizes).
class FormatError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// File could not be opened or is not JSON.
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::string &path);
void write_json_file(const std::string &path, const nlohmann::json &doc);

Complex<double> complex_from_json(const nlohmann::json &j);
nlohmann::json complex_to_json(Complex<double> z);
CVector<double> cvector_from_json(const nlohmann::json &j);
nlohmann::json cvector_to_json(const CVector<double> &v);
CMatrix<double> cmatrix_from_json(const nlohmann::json &j);
nlohmann::json cmatrix_to_json(const CMatrix<double> &a);
RVector<double> rvector_from_json(const nlohmann::json &j);
nlohmann::json rvector_to_json(const RVector<double> &v);
nlohmann::json rmatrix_to_json(const RMatrix<double> &a);

StateEnsemble<double> load_ensemble(const nlohmann::json &doc);
StateEnsemble<double> load_ensemble_file(const std::string &path);
nlohmann::json ensemble_to_json(const StateEnsemble<double> &e);

UnitaryGroup<double> group_from_json(const nlohmann::json &j);
nlohmann::json group_to_json(const UnitaryGroup<double> &g);

/// Builds and validates the spec (group check, generator consistency).
SymmetrySpec<double> load_symmetry_spec(const nlohmann::json &doc);
SymmetrySpec<double> load_symmetry_spec_file(const std::string &path);
nlohmann::json symmetry_spec_to_json(const SymmetrySpec<double> &spec);

} // namespace udisc

#endif // UDISC_IO_HPP
