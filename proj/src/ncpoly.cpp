#include "fplab/ncpoly.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fplab/rng.hpp"

namespace fplab {

// ---------------------------------------------------------------- Word

int Word::max_index() const {
  int m = -1;
  for (int l : letters) m = std::max(m, l);
  return m;
}

Word Word::reversed() const {
  Word w = *this;
  std::reverse(w.letters.begin(), w.letters.end());
  return w;
}

Word Word::concat(const Word& other) const {
  Word w = *this;
  w.letters.insert(w.letters.end(), other.letters.begin(), other.letters.end());
  return w;
}

std::string Word::to_string() const {
  if (letters.empty()) return "1";
  std::string s;
  for (size_t i = 0; i < letters.size(); ++i) {
    if (i) s += '.';
    s += 'X';
    s += std::to_string(letters[i] + 1);
  }
  return s;
}

Word Word::parse(const std::string& text) {
  if (text == "1") return Word::one();
  Word w;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, '.')) {
    if (tok.size() < 2 || tok[0] != 'X')
      throw std::invalid_argument("Word::parse: bad factor '" + tok + "'");
    int idx = std::stoi(tok.substr(1));
    if (idx < 1) throw std::invalid_argument("Word::parse: index must be >= 1");
    w.letters.push_back(idx - 1);
  }
  return w;
}

// ---------------------------------------------------------------- MatrixTuple

MatrixTuple::MatrixTuple(std::vector<Matrix> mats, double R, double tol)
    : mats_(std::move(mats)), R_(R) {
  if (mats_.empty()) throw std::invalid_argument("MatrixTuple: empty tuple");
  n_ = static_cast<int>(mats_[0].rows());
  for (const auto& m : mats_) {
    if (m.rows() != n_ || m.cols() != n_)
      throw std::invalid_argument("MatrixTuple: dimension mismatch");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol)
      throw std::invalid_argument("MatrixTuple: matrix not Hermitian");
    if (op_norm(m) > R_ + tol)
      throw std::invalid_argument("MatrixTuple: operator norm exceeds R");
  }
}

double MatrixTuple::op_norm(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

// ---------------------------------------------------------------- NCPolynomial

void NCPolynomial::absorb_index(const Word& w) {
  nvars_ = std::max(nvars_, w.max_index() + 1);
}

NCPolynomial NCPolynomial::constant(Complex c, int nvars) {
  NCPolynomial p(nvars);
  p.add_term(Word::one(), c);
  return p;
}

NCPolynomial NCPolynomial::variable(int index, int nvars) {
  NCPolynomial p(std::max(nvars, index + 1));
  p.add_term(Word({index}), Complex(1.0, 0.0));
  return p;
}

NCPolynomial NCPolynomial::one_var(const std::vector<double>& coeffs) {
  NCPolynomial p(1);
  for (size_t k = 0; k < coeffs.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    p.add_term(Word(std::vector<int>(k, 0)), Complex(coeffs[k], 0.0));
  }
  return p;
}

void NCPolynomial::set_nvars(int n) {
  int need = 0;
  for (const auto& [w, c] : terms_) need = std::max(need, w.max_index() + 1);
  if (n < need) throw std::invalid_argument("set_nvars: polynomial references higher index");
  nvars_ = n;
}

size_t NCPolynomial::degree() const {
  size_t d = 0;
  for (const auto& [w, c] : terms_) d = std::max(d, w.degree());
  return d;
}

Complex NCPolynomial::coeff(const Word& w) const {
  auto it = terms_.find(w);
  return it == terms_.end() ? Complex(0.0, 0.0) : it->second;
}

void NCPolynomial::add_term(const Word& w, Complex c) {
  if (c == Complex(0.0, 0.0)) return;
  absorb_index(w);
  auto [it, inserted] = terms_.emplace(w, c);
  if (!inserted) {
    it->second += c;
    if (it->second == Complex(0.0, 0.0)) terms_.erase(it);
  }
}

NCPolynomial NCPolynomial::operator+(const NCPolynomial& o) const {
  NCPolynomial r = *this;
  r.nvars_ = std::max(nvars_, o.nvars_);
  for (const auto& [w, c] : o.terms_) r.add_term(w, c);
  return r;
}

NCPolynomial NCPolynomial::operator-(const NCPolynomial& o) const {
  NCPolynomial r = *this;
  r.nvars_ = std::max(nvars_, o.nvars_);
  for (const auto& [w, c] : o.terms_) r.add_term(w, -c);
  return r;
}

NCPolynomial NCPolynomial::operator*(const NCPolynomial& o) const {
  NCPolynomial r(std::max(nvars_, o.nvars_));
  for (const auto& [w1, c1] : terms_)
    for (const auto& [w2, c2] : o.terms_) r.add_term(w1.concat(w2), c1 * c2);
  return r;
}

NCPolynomial NCPolynomial::operator*(Complex c) const {
  NCPolynomial r(nvars_);
  if (c == Complex(0.0, 0.0)) return r;
  for (const auto& [w, cw] : terms_) r.add_term(w, cw * c);
  return r;
}

NCPolynomial NCPolynomial::adjoint() const {
  NCPolynomial r(nvars_);
  for (const auto& [w, c] : terms_) r.add_term(w.reversed(), std::conj(c));
  return r;
}

bool NCPolynomial::is_selfadjoint(double tol) const {
  for (const auto& [w, c] : terms_) {
    if (std::abs(c - std::conj(coeff(w.reversed()))) > tol) return false;
  }
  return true;
}

NCPolynomial NCPolynomial::pruned(double tol) const {
  NCPolynomial r(nvars_);
  for (const auto& [w, c] : terms_)
    if (std::abs(c) > tol) r.add_term(w, c);
  return r;
}

Matrix NCPolynomial::evaluate(const MatrixTuple& t) const {
  if (nvars_ > t.count())
    throw std::invalid_argument("evaluate: polynomial uses more variables than the tuple");
  const int n = t.n();
  Matrix acc = Matrix::Zero(n, n);
  for (const auto& [w, c] : terms_) {
    if (w.is_one()) {
      acc += c * Matrix::Identity(n, n);
      continue;
    }
    Matrix prod = t.mat(w.letters[0]);
    for (size_t i = 1; i < w.letters.size(); ++i) prod = prod * t.mat(w.letters[i]);
    acc += c * prod;
  }
  return acc;
}

Complex NCPolynomial::trace_eval(const MatrixTuple& t) const {
  if (nvars_ > t.count())
    throw std::invalid_argument("trace_eval: polynomial uses more variables than the tuple");
  Complex acc(0.0, 0.0);
  for (const auto& [w, c] : terms_) acc += c * word_trace(w, t);
  return acc;
}

Complex NCPolynomial::eval_scalar(double t) const {
  Complex acc(0.0, 0.0);
  for (const auto& [w, c] : terms_) {
    if (w.max_index() > 0)
      throw std::invalid_argument("eval_scalar: polynomial is not single-variable");
    acc += c * std::pow(t, static_cast<double>(w.degree()));
  }
  return acc;
}

std::vector<Complex> NCPolynomial::one_var_coeffs() const {
  std::vector<Complex> coeffs(degree() + 1, Complex(0.0, 0.0));
  for (const auto& [w, c] : terms_) {
    if (w.max_index() > 0)
      throw std::invalid_argument("one_var_coeffs: polynomial is not single-variable");
    coeffs[w.degree()] += c;
  }
  return coeffs;
}

NCPolynomial NCPolynomial::substitute(const std::vector<NCPolynomial>& subs) const {
  if (static_cast<int>(subs.size()) < nvars_)
    throw std::invalid_argument("substitute: missing substitution");
  NCPolynomial r;
  for (const auto& [w, c] : terms_) {
    NCPolynomial term = NCPolynomial::constant(c);
    for (int l : w.letters) term = term * subs[l];
    r = r + term;
  }
  r.nvars_ = std::max(r.nvars_, nvars_);
  return r;
}

NCPolynomial NCPolynomial::dilate(double R, double R1) const {
  if (R <= 0.0 || R1 <= 0.0) throw std::invalid_argument("dilate: radii must be positive");
  const double ratio = R / R1;
  NCPolynomial r(nvars_);
  for (const auto& [w, c] : terms_)
    r.add_term(w, c * std::pow(ratio, static_cast<double>(w.degree())));
  return r;
}

NCPolynomial NCPolynomial::linear_transform(const std::vector<std::vector<double>>& A,
                                            const std::vector<double>& beta) const {
  const int N = nvars_;
  if (static_cast<int>(A.size()) < N || static_cast<int>(beta.size()) < N)
    throw std::invalid_argument("linear_transform: matrix/offset too small");
  std::vector<NCPolynomial> subs;
  subs.reserve(A.size());
  for (size_t i = 0; i < A.size(); ++i) {
    NCPolynomial lf(std::max<int>(N, static_cast<int>(A[i].size())));
    for (size_t j = 0; j < A[i].size(); ++j)
      lf.add_term(Word({static_cast<int>(j)}), Complex(A[i][j], 0.0));
    lf.add_term(Word::one(), Complex(beta[i], 0.0));
    subs.push_back(lf);
  }
  return substitute(subs);
}

NCPolynomial NCPolynomial::triangular_transform(const std::vector<NCPolynomial>& q) const {
  const int N = nvars_;
  if (static_cast<int>(q.size()) < N)
    throw std::invalid_argument("triangular_transform: need one entry per variable");
  std::vector<NCPolynomial> subs;
  for (int i = 0; i < N; ++i) {
    if (!q[i].is_zero() && q[i].nvars() > i)
      throw std::invalid_argument(
          "triangular_transform: q_" + std::to_string(i + 1) +
          " may only reference X1..X" + std::to_string(i));
    subs.push_back(NCPolynomial::variable(i, N) + q[i]);
  }
  return substitute(subs);
}

double NCPolynomial::norm_upper_bound(double R) const {
  double s = 0.0;
  for (const auto& [w, c] : terms_)
    s += std::abs(c) * std::pow(R, static_cast<double>(w.degree()));
  return s;
}

NCPolynomial NCPolynomial::without_constant() const {
  NCPolynomial r(nvars_);
  for (const auto& [w, c] : terms_)
    if (!w.is_one()) r.add_term(w, c);
  return r;
}

std::vector<int> NCPolynomial::vars_used() const {
  std::set<int> s;
  for (const auto& [w, c] : terms_)
    for (int l : w.letters) s.insert(l);
  return {s.begin(), s.end()};
}

std::vector<std::pair<std::vector<int>, NCPolynomial>> NCPolynomial::separable_blocks() const {
  std::vector<int> vars = vars_used();
  if (vars.empty()) return {};
  std::map<int, int> parent;
  for (int v : vars) parent[v] = v;
  std::function<int(int)> find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& [w, c] : terms_)
    for (size_t i = 1; i < w.letters.size(); ++i) {
      int a = find(w.letters[0]), b = find(w.letters[i]);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::map<int, std::vector<int>> groups;
  for (int v : vars) groups[find(v)].push_back(v);

  std::vector<std::pair<std::vector<int>, NCPolynomial>> blocks;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    std::vector<int> remap(nvars_, -1);
    for (size_t i = 0; i < members.size(); ++i) remap[members[i]] = static_cast<int>(i);
    NCPolynomial sub(static_cast<int>(members.size()));
    for (const auto& [w, c] : terms_) {
      if (w.is_one() || remap[w.letters[0]] < 0) continue;
      Word nw;
      for (int l : w.letters) nw.letters.push_back(remap[l]);
      sub.add_term(nw, c);
    }
    blocks.emplace_back(members, std::move(sub));
  }
  return blocks;
}

NCPolynomial NCPolynomial::relabel(const std::vector<int>& new_index, int new_nvars) const {
  NCPolynomial r(new_nvars);
  for (const auto& [w, c] : terms_) {
    Word nw;
    for (int l : w.letters) nw.letters.push_back(new_index.at(l));
    r.add_term(nw, c);
  }
  return r;
}

// -------------------------------------------------------- text serialization

static std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

static std::string format_coeff(Complex c) {
  if (c.imag() == 0.0) return format_double(c.real());
  return "(" + format_double(c.real()) + "," + format_double(c.imag()) + ")";
}

static Complex parse_coeff(const std::string& s) {
  if (!s.empty() && s.front() == '(') {
    auto comma = s.find(',');
    auto close = s.rfind(')');
    if (comma == std::string::npos || close == std::string::npos)
      throw std::invalid_argument("parse_coeff: malformed complex '" + s + "'");
    return {std::stod(s.substr(1, comma - 1)), std::stod(s.substr(comma + 1, close - comma - 1))};
  }
  return {std::stod(s), 0.0};
}

std::string NCPolynomial::to_text() const {
  if (terms_.empty()) return "0 * 1\n";
  std::string out;
  for (const auto& [w, c] : terms_) out += format_coeff(c) + " * " + w.to_string() + "\n";
  return out;
}

NCPolynomial NCPolynomial::from_text(const std::string& text) {
  NCPolynomial p;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    auto sep = line.find(" * ");
    if (sep == std::string::npos)
      throw std::invalid_argument("NCPolynomial::from_text: missing ' * ' in '" + line + "'");
    Complex c = parse_coeff(line.substr(0, sep));
    Word w = Word::parse(line.substr(sep + 3));
    if (c != Complex(0.0, 0.0)) p.add_term(w, c);
  }
  return p;
}

// -------------------------------------------------------------- sup norm

namespace {

// Single-variable case: sup of |p(t)| over the spectrum, i.e. over [-R,R].
double sup_norm_scalar(const NCPolynomial& p, double R, int grid_points) {
  auto absval = [&](double t) { return std::abs(p.eval_scalar(t)); };
  double best = 0.0, best_t = 0.0;
  const int m = std::max(grid_points, 16);
  for (int i = 0; i <= m; ++i) {
    double t = -R + 2.0 * R * i / m;
    double v = absval(t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  // golden-section refinement around the best grid cell
  double lo = std::max(-R, best_t - 2.0 * R / m), hi = std::min(R, best_t + 2.0 * R / m);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = absval(c), fd = absval(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * R; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = absval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = absval(d);
    }
  }
  return std::max({best, fc, fd});
}

Matrix clip_to_ball(const Matrix& m, double R) {
  Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Eigen::VectorXd ev = es.eigenvalues();
  for (int i = 0; i < ev.size(); ++i) ev(i) = std::clamp(ev(i), -R, R);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double tuple_value(const NCPolynomial& p, const std::vector<Matrix>& mats, double R) {
  MatrixTuple t(mats, R, 1e-6);
  Matrix m = p.evaluate(t);
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// Gradient ascent on ||p(A_1..A_N)||_2 with eigenvalue clipping back to the
// ball. u,v are the current top singular pair; the Hermitian part of
// sum_w c_w sum_{occurrences of X_i} S v u^* P is the ascent direction.
double ascend(const NCPolynomial& p, std::vector<Matrix>& mats, double R, int iters) {
  const int n = static_cast<int>(mats[0].rows());
  const int N = static_cast<int>(mats.size());
  double best = tuple_value(p, mats, R);
  double step = 0.2 * R;
  for (int it = 0; it < iters; ++it) {
    MatrixTuple t(mats, R, 1e-6);
    Matrix m = p.evaluate(t);
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix u = svd.matrixU().col(0);
    Matrix v = svd.matrixV().col(0);
    std::vector<Matrix> grads(N, Matrix::Zero(n, n));
    for (const auto& [w, c] : p.terms()) {
      const auto& ls = w.letters;
      for (size_t pos = 0; pos < ls.size(); ++pos) {
        Matrix pre = Matrix::Identity(n, n);
        for (size_t i = 0; i < pos; ++i) pre = pre * t.mat(ls[i]);
        Matrix suf = Matrix::Identity(n, n);
        for (size_t i = pos + 1; i < ls.size(); ++i) suf = suf * t.mat(ls[i]);
        Matrix k = c * (suf * v) * (u.adjoint() * pre);
        grads[ls[pos]] += 0.5 * (k + k.adjoint());
      }
    }
    double gn = 0.0;
    for (const auto& g : grads) gn += g.squaredNorm();
    gn = std::sqrt(gn);
    if (gn < 1e-14) break;
    std::vector<Matrix> trial(N);
    bool improved = false;
    for (int bt = 0; bt < 12; ++bt) {
      for (int i = 0; i < N; ++i) trial[i] = clip_to_ball(mats[i] + (step / gn) * grads[i], R);
      double val = tuple_value(p, trial, R);
      if (val > best + 1e-15) {
        best = val;
        mats = trial;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved && step < 1e-12 * R) break;
  }
  return best;
}

// Deterministic starting tuples: sign patterns of R*I probe the commutative
// sup, embedded Pauli pairs witness commutators.
std::vector<std::vector<Matrix>> structured_starts(int N, int n, double R) {
  std::vector<std::vector<Matrix>> starts;
  Matrix id = Matrix::Identity(n, n);
  const int patterns = std::min(1 << N, 16);
  for (int mask = 0; mask < patterns; ++mask) {
    std::vector<Matrix> tup;
    for (int i = 0; i < N; ++i) tup.push_back(((mask >> i) & 1 ? -R : R) * id);
    starts.push_back(tup);
  }
  if (N >= 2 && n % 2 == 0) {
    Matrix sx = Matrix::Zero(n, n), sy = Matrix::Zero(n, n);
    for (int b = 0; b + 1 < n; b += 2) {
      sx(b, b + 1) = 1.0;
      sx(b + 1, b) = 1.0;
      sy(b, b + 1) = Complex(0.0, -1.0);
      sy(b + 1, b) = Complex(0.0, 1.0);
    }
    std::vector<Matrix> tup;
    tup.push_back(R * sx);
    tup.push_back(R * sy);
    for (int i = 2; i < N; ++i) tup.push_back(R * id);
    starts.push_back(tup);
  }
  return starts;
}

}  // namespace

SupNormResult NCPolynomial::sup_norm(double R, const SupNormBudget& budget) const {
  if (R <= 0.0) throw std::invalid_argument("sup_norm: R must be positive");
  SupNormResult res;
  res.upper_bound = norm_upper_bound(R);
  if (terms_.empty()) {
    res.exact = true;
    return res;
  }
  if (nvars_ <= 1) {
    res.value = sup_norm_scalar(*this, R, budget.grid_points);
    res.exact = true;
    res.witness_dim = 1;
    return res;
  }

  const int N = nvars_;
  Rng rng(budget.seed);
  for (int n : budget.dims) {
    for (auto& start : structured_starts(N, n, R)) {
      double v = ascend(*this, start, R, budget.ascent_iters);
      if (v > res.value) {
        res.value = v;
        res.witness_dim = n;
      }
    }
    for (int r = 0; r < budget.restarts; ++r) {
      std::vector<Matrix> tup;
      for (int i = 0; i < N; ++i) {
        Matrix g(n, n);
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) g(a, b) = Complex(rng.normal(), rng.normal());
        tup.push_back(clip_to_ball(R * 0.7 * (g + g.adjoint()) / (2.0 * std::sqrt(n)), R));
      }
      double v = ascend(*this, tup, R, budget.ascent_iters);
      if (v > res.value) {
        res.value = v;
        res.witness_dim = n;
      }
    }
  }
  res.value = std::min(res.value, res.upper_bound);
  res.exact = false;
  return res;
}

// ---------------------------------------------------------------- tensor

void TensorPolynomial::add_term(const Word& w1, const Word& w2, Complex c) {
  if (c == Complex(0.0, 0.0)) return;
  nvars_ = std::max({nvars_, w1.max_index() + 1, w2.max_index() + 1});
  auto key = std::make_pair(w1, w2);
  auto [it, inserted] = terms_.emplace(key, c);
  if (!inserted) {
    it->second += c;
    if (it->second == Complex(0.0, 0.0)) terms_.erase(it);
  }
}

TensorPolynomial TensorPolynomial::adjoint() const {
  TensorPolynomial r(nvars_);
  for (const auto& [k, c] : terms_) r.add_term(k.first.reversed(), k.second.reversed(), std::conj(c));
  return r;
}

bool TensorPolynomial::is_selfadjoint(double tol) const {
  for (const auto& [k, c] : terms_) {
    auto it = terms_.find(std::make_pair(k.first.reversed(), k.second.reversed()));
    Complex other = it == terms_.end() ? Complex(0.0, 0.0) : it->second;
    if (std::abs(c - std::conj(other)) > tol) return false;
  }
  return true;
}

Complex TensorPolynomial::tensor_trace_eval(const MatrixTuple& t) const {
  if (nvars_ > t.count())
    throw std::invalid_argument("tensor_trace_eval: polynomial uses more variables than the tuple");
  std::map<Word, Complex> cache;
  auto tr = [&](const Word& w) {
    auto it = cache.find(w);
    if (it != cache.end()) return it->second;
    Complex v = word_trace(w, t);
    cache.emplace(w, v);
    return v;
  };
  Complex acc(0.0, 0.0);
  for (const auto& [k, c] : terms_) acc += c * tr(k.first) * tr(k.second);
  return acc;
}

// ---------------------------------------------------------------- helpers

std::vector<Word> words_up_to(int nvars, int r) {
  std::vector<Word> out;
  std::vector<Word> level = {Word::one()};
  for (int d = 1; d <= r; ++d) {
    std::vector<Word> next;
    for (const auto& w : level)
      for (int i = 0; i < nvars; ++i) {
        Word nw = w;
        nw.letters.push_back(i);
        next.push_back(nw);
      }
    out.insert(out.end(), next.begin(), next.end());
    level = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Complex word_trace(const Word& w, const MatrixTuple& t) {
  const int n = t.n();
  if (w.is_one()) return Complex(1.0, 0.0);
  Matrix prod = t.mat(w.letters[0]);
  for (size_t i = 1; i < w.letters.size(); ++i) prod = prod * t.mat(w.letters[i]);
  return prod.trace() / static_cast<double>(n);
}

}  // namespace fplab
