#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "fplab/ncpoly.hpp"

namespace fplab {

// Truncated tracial functional: word -> real value up to a fixed degree.
// Construction does not enforce traciality; validate() checks the invariants
// so deliberately violating functionals can be represented and certified.
struct MomentSpec {
  int nvars = 1;
  int degree = 0;
  std::map<Word, double> values;  // includes the identity word
  std::map<Word, double> errors;  // stderr per word; absent or 0 = analytic
  std::string provenance = "analytic";

  MomentSpec() { values[Word::one()] = 1.0; }
  MomentSpec(int nv, int r) : nvars(nv), degree(r) { values[Word::one()] = 1.0; }

  bool has(const Word& w) const { return values.count(w) > 0; }

  double value(const Word& w) const {
    auto it = values.find(w);
    if (it == values.end())
      throw std::invalid_argument("MomentSpec: missing word " + w.to_string());
    return it->second;
  }

  double error(const Word& w) const {
    auto it = errors.find(w);
    return it == errors.end() ? 0.0 : it->second;
  }

  void set(const Word& w, double v, double err = 0.0) {
    values[w] = v;
    if (err != 0.0) errors[w] = err;
    degree = std::max(degree, static_cast<int>(w.degree()));
    nvars = std::max(nvars, w.max_index() + 1);
  }

  // mu(p) for a polynomial with words covered by this spec.
  double pairing(const NCPolynomial& p) const {
    Complex acc(0.0, 0.0);
    for (const auto& [w, c] : p.terms()) acc += c * value(w);
    return acc.real();
  }

  // value(1) = 1, reversal symmetry, |value(w)| <= R^{|w|}
  bool validate(double R, double tol = 1e-9) const {
    if (std::abs(value(Word::one()) - 1.0) > tol) return false;
    for (const auto& [w, v] : values) {
      Word rev = w.reversed();
      if (has(rev) && std::abs(v - value(rev)) > tol) return false;
      if (std::abs(v) > std::pow(R, static_cast<double>(w.degree())) + tol) return false;
    }
    return true;
  }
};

// Moment table rows (word string, value, stderr); exact round trip.
std::string moment_spec_to_csv(const MomentSpec& spec);
MomentSpec moment_spec_from_csv(const std::string& csv);

}  // namespace fplab
