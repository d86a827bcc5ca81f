#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fplab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

constexpr double kSelfadjointTol = 1e-12;

// Monomial X_{i1}...X_{ik} as 0-based indeterminate indices; empty = 1.
// Ordered by (length, lexicographic) so maps keyed by Word are canonical.
struct Word {
  std::vector<int> letters;

  Word() = default;
  explicit Word(std::vector<int> l) : letters(std::move(l)) {}
  static Word one() { return Word{}; }

  size_t degree() const { return letters.size(); }
  bool is_one() const { return letters.empty(); }
  int max_index() const;
  Word reversed() const;
  Word concat(const Word& other) const;

  std::string to_string() const;  // "1" or "X1.X2.X1" (1-based display)
  static Word parse(const std::string& text);

  bool operator==(const Word& o) const { return letters == o.letters; }
  bool operator<(const Word& o) const {
    if (letters.size() != o.letters.size()) return letters.size() < o.letters.size();
    return letters < o.letters;
  }
};

// N Hermitian n x n matrices with operator norm <= R (validated on build).
class MatrixTuple {
 public:
  MatrixTuple(std::vector<Matrix> mats, double R, double tol = 1e-8);

  int n() const { return n_; }
  int count() const { return static_cast<int>(mats_.size()); }
  double radius() const { return R_; }
  const Matrix& mat(int i) const { return mats_.at(i); }
  const std::vector<Matrix>& mats() const { return mats_; }

  static double op_norm(const Matrix& m);

 private:
  std::vector<Matrix> mats_;
  int n_ = 0;
  double R_ = 0.0;
};

struct SupNormBudget {
  int grid_points = 100000;     // N = 1 scan resolution
  std::vector<int> dims = {2, 3, 4, 5, 6, 7, 8};
  int restarts = 8;             // random restarts per dimension
  int ascent_iters = 120;
  uint64_t seed = 1;
};

struct SupNormResult {
  double value = 0.0;          // best witnessed value (exact for N = 1)
  double upper_bound = 0.0;    // sum_w |c_w| R^{|w|}
  bool exact = false;          // true only in the single-variable case
  int witness_dim = 0;
};

// Formal *-polynomial over selfadjoint indeterminates X_1..X_N.
class NCPolynomial {
 public:
  NCPolynomial() = default;
  explicit NCPolynomial(int nvars) : nvars_(nvars) {}

  static NCPolynomial constant(Complex c, int nvars = 0);
  static NCPolynomial variable(int index, int nvars = 0);
  // Single-variable polynomial sum_k coeffs[k] X1^k.
  static NCPolynomial one_var(const std::vector<double>& coeffs);

  int nvars() const { return nvars_; }
  void set_nvars(int n);
  size_t degree() const;
  bool is_zero() const { return terms_.empty(); }
  size_t term_count() const { return terms_.size(); }
  const std::map<Word, Complex>& terms() const { return terms_; }

  Complex coeff(const Word& w) const;
  void add_term(const Word& w, Complex c);

  NCPolynomial operator+(const NCPolynomial& o) const;
  NCPolynomial operator-(const NCPolynomial& o) const;
  NCPolynomial operator*(const NCPolynomial& o) const;
  NCPolynomial operator*(Complex c) const;
  NCPolynomial operator-() const { return *this * Complex(-1.0, 0.0); }

  NCPolynomial adjoint() const;
  bool is_selfadjoint(double tol = kSelfadjointTol) const;
  // Drops coefficients with |c| <= tol (exact zeros always dropped).
  NCPolynomial pruned(double tol = 0.0) const;

  Matrix evaluate(const MatrixTuple& t) const;
  Complex trace_eval(const MatrixTuple& t) const;
  // Scalar functional calculus; valid when only X1 occurs.
  Complex eval_scalar(double t) const;
  std::vector<Complex> one_var_coeffs() const;

  // Substitutes X_i -> subs[i]; the general engine behind the transforms.
  NCPolynomial substitute(const std::vector<NCPolynomial>& subs) const;
  // h -> h((R/R1) X_1, ..., (R/R1) X_N)
  NCPolynomial dilate(double R, double R1) const;
  // X_i -> sum_j A_ij X_j + beta_i
  NCPolynomial linear_transform(const std::vector<std::vector<double>>& A,
                                const std::vector<double>& beta) const;
  // X_1 -> X_1, X_i -> X_i + q_i with q_i over X_1..X_{i-1} only
  NCPolynomial triangular_transform(const std::vector<NCPolynomial>& q) const;

  double norm_upper_bound(double R) const;  // sum_w |c_w| R^{|w|}
  SupNormResult sup_norm(double R, const SupNormBudget& budget = {}) const;

  Complex constant_term() const { return coeff(Word::one()); }
  NCPolynomial without_constant() const;

  std::vector<int> vars_used() const;
  // Connected components of the variable co-occurrence graph. Each block is
  // (original variable indices, sub-polynomial relabeled to 0..L-1).
  std::vector<std::pair<std::vector<int>, NCPolynomial>> separable_blocks() const;
  NCPolynomial relabel(const std::vector<int>& new_index, int new_nvars) const;

  std::string to_text() const;
  static NCPolynomial from_text(const std::string& text);

 private:
  std::map<Word, Complex> terms_;
  int nvars_ = 0;
  void absorb_index(const Word& w);
};

// Element of the algebraic tensor square, terms c * (w1 (x) w2).
class TensorPolynomial {
 public:
  TensorPolynomial() = default;
  explicit TensorPolynomial(int nvars) : nvars_(nvars) {}

  int nvars() const { return nvars_; }
  const std::map<std::pair<Word, Word>, Complex>& terms() const { return terms_; }
  void add_term(const Word& w1, const Word& w2, Complex c);
  size_t term_count() const { return terms_.size(); }

  TensorPolynomial adjoint() const;
  bool is_selfadjoint(double tol = kSelfadjointTol) const;

  // (tr_n (x) tr_n)(q(A_1..A_N)) = sum c tr_n(w1(T)) tr_n(w2(T))
  Complex tensor_trace_eval(const MatrixTuple& t) const;

 private:
  std::map<std::pair<Word, Word>, Complex> terms_;
  int nvars_ = 0;
};

// All words over nvars letters with 1 <= degree <= r, in canonical order.
std::vector<Word> words_up_to(int nvars, int r);

// Normalized trace of the word evaluated on the tuple.
Complex word_trace(const Word& w, const MatrixTuple& t);

}  // namespace fplab
