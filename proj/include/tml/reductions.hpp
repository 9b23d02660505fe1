#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tml/admissibility.hpp"
#include "tml/context.hpp"
#include "tml/formula.hpp"

namespace tml {

// ---------------------------------------------------------------------------
// Source instances
// ---------------------------------------------------------------------------

enum class MatrixConn : uint8_t { Bot, Top, Atom, Not, And, Or, Imp, Iff };

// Atom vocabulary of source matrices.  Set sentences quantify over subsets
// t_0..t_{m-1} of {0..n-1} and over families X, Y of such subsets; QBFs
// quantify over Boolean blocks a_0..a_{d-1} (universal) and b_0..b_{d-1}
// (existential) of width m.
enum class MatrixAtom : uint8_t {
  Elem,   // "i in t_alpha"       text: in(i,alpha)
  InX,    // "t_alpha in X"       text: X(alpha)
  InY,    // "t_alpha in Y"       text: Y(alpha)
  Univ,   // "a_{block,j}"        text: a(block,j)
  Exist,  // "b_{block,j}"        text: b(block,j)
};

// Immutable propositional matrix tree.  Shared nodes; copying is cheap.
class MatrixExpr {
 public:
  MatrixExpr() = default;  // null; only valid as an "absent" placeholder

  static MatrixExpr bot();
  static MatrixExpr top();
  static MatrixExpr elem(unsigned i, unsigned alpha);
  static MatrixExpr in_x(unsigned alpha);
  static MatrixExpr in_y(unsigned alpha);
  static MatrixExpr univ(unsigned block, unsigned j);
  static MatrixExpr exist(unsigned block, unsigned j);
  static MatrixExpr neg(MatrixExpr a);
  static MatrixExpr conj(MatrixExpr a, MatrixExpr b);
  static MatrixExpr disj(MatrixExpr a, MatrixExpr b);
  static MatrixExpr imp(MatrixExpr a, MatrixExpr b);
  static MatrixExpr iff(MatrixExpr a, MatrixExpr b);

  bool null() const { return node_ == nullptr; }
  explicit operator bool() const { return node_ != nullptr; }

  MatrixConn kind() const;
  MatrixAtom atom() const;  // Atom nodes only
  // Atom indices: (i, alpha) for Elem, (block, j) for Univ/Exist, and
  // first() = alpha for InX/InY.
  unsigned first() const;
  unsigned second() const;
  MatrixExpr lhs() const;  // unary child lives here too
  MatrixExpr rhs() const;  // binary connectives only

  struct Node;

 private:
  explicit MatrixExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

// Same surface syntax as modal formulas (~ & | -> <-> with bot/top), atoms
// spelled as in the MatrixAtom table.
std::string print_matrix(const MatrixExpr& e);
MatrixExpr parse_matrix(const std::string& text);  // throws ParseError

enum class SetPattern : uint8_t { Sigma2, Pi2, Sigma3 };

// Second-order set sentence over subsets of {0..n-1}:
//   Sigma2:  exists X . forall t_0..t_{m-1} . matrix      (Elem, InX)
//   Pi2:     forall Y . exists t_0..t_{m-1} . matrix      (Elem, InY)
//   Sigma3:  exists X . forall Y . exists t-vector        (Elem, InX, InY)
struct ThirdOrderSentence {
  unsigned n = 1;
  unsigned m = 1;
  SetPattern pattern = SetPattern::Sigma2;
  MatrixExpr matrix;
};

// Throws std::invalid_argument when the matrix uses an atom the pattern
// does not bind, an out-of-range index, or is null.
void validate(const ThirdOrderSentence& s);

// Brute-force truth.  X and Y range over set masks: bit t answers
// "t in X" for the subset t of {0..n-1} read as a bitmask.  Throws
// BudgetError when the quantifier space is too large (2^n > 16, t-vector
// space past 2^20, or n > 3 for Sigma3).
bool sentence_true(const ThirdOrderSentence& s);
// Least witness mask for a true Sigma2 sentence, nullopt when false.
std::optional<uint64_t> sigma2_witness(const ThirdOrderSentence& s);

// Prenex QBF with d strictly alternating block pairs of width m:
//   forall a_0 . exists b_0 ... forall a_{d-1} . exists b_{d-1} . matrix
struct Qbf {
  unsigned d = 1;
  unsigned m = 1;
  MatrixExpr matrix;
};

void validate(const Qbf& q);           // d >= 1, atoms Univ/Exist in range
bool qbf_true(const Qbf& q);           // BudgetError when d*m > 16

// ---------------------------------------------------------------------------
// Generated instances
// ---------------------------------------------------------------------------

struct ReductionInstance {
  std::string family;  // nexp conexp sig2exp qbf psp1par nexp1par nexp2par
                       // nexp0adm
  Formula xi;
  std::optional<Formula> zeta;  // admissibility family only
  std::optional<Rule> rule;     // xi / zeta as a single-conclusion rule
  // How a true source turns into a unifier or a refuting valuation;
  // families without a closed-form substitution carry the recipe as
  // documentation only.
  std::string witness_recipe;
  uint32_t xi_size = 0;          // node count of xi
  std::vector<unsigned> params;  // ascending atom census of xi (and zeta)
  std::vector<unsigned> vars;
};

// --- arbitrary-parameter NEXP family (Sigma2 sources) ---
// Parameters p_i = par(i) for i < n, p_{alpha,i} = par(n + alpha*n + i),
// q = par(n + m*n), r = par(n + m*n + 1); variables x = var(0),
// x_alpha = var(1 + alpha).  xi is the conjunction of one comparator group
// per alpha,
//   AND_i([.]((q->p_{alpha,i}) & (r->p_i)) | [.]((q->~p_{alpha,i}) & (r->~p_i)))
//     -> [.]((q->x_alpha) & (r->x)) | [.]((q->~x_alpha) & (r->~x)),
// followed by the matrix with Elem(i,alpha) := p_{alpha,i} and
// InX(alpha) := x_alpha.
ReductionInstance gen_nexp(const ThirdOrderSentence& s);
// sigma_X: x |-> OR_{t in X} P^t over the p_i, x_alpha |-> the same shape
// over the p_{alpha,i}; X is a set mask as in sentence_true.
Substitution nexp_witness(const ThirdOrderSentence& s, uint64_t X);

// --- arbitrary-parameter coNEXP family (Pi2 sources) ---
// Parameters p_i = par(i), q = par(n); variables z_{alpha,i} =
// var(alpha*n + i).  With
//   gamma = AND_{alpha,i}([.](<.>q -> z_{alpha,i}) | [.](<.>q -> ~z_{alpha,i}))
// xi = (<>q -> <>(q & gamma)) & (q & gamma -> matrix) where the matrix
// reads Elem(i,alpha) := z_{alpha,i} and InY(alpha) :=
// eta(z_{alpha,0}..z_{alpha,n-1}).
ReductionInstance gen_conexp(const ThirdOrderSentence& s);
// eta(f_0..f_{n-1}) = <>(~q & <>q & AND_i(p_i <-> f_i)) with p_i = par(i),
// q = par(n): the membership probe shared by the conexp and sig2exp
// families.
Formula conexp_eta(unsigned n, std::span<const Formula> args);

// --- arbitrary-parameter Sigma^exp_2 family (Sigma3 sources) ---
// Parameters p_i = par(i), q = par(n), r = par(n + 1); variables
// x = var(0), x_alpha = var(1 + alpha), z_{alpha,i} = var(1 + m + alpha*n + i).
// xi = (<>q -> <>(q & gamma)) & (q & gamma -> matrix') & AND_alpha(comparator)
// where the comparator couples z_{alpha,i}/x_alpha under q with p_i/x under
// r, and matrix' reads Elem := z_{alpha,i}, InX := x_alpha, InY := eta.
ReductionInstance gen_sig2exp(const ThirdOrderSentence& s);

// --- bounded-depth QBF family ---
// Parameters p_j = par(j) for j < m, q = par(m); variables x_j = var(j).
// xi = (gamma -> AND_{i,j}([.](theta_i->x_j) | [.](theta_i->~x_j)))
//    & (gamma & theta_{d-1} -> matrix') with
// gamma = AND_{i,j}([.](theta_i->p_j) | [.](theta_i->~p_j)) and matrix'
// reading Univ(i,j) := <.>(theta_i & p_j), Exist(i,j) := <.>(theta_i & x_j).
ReductionInstance gen_qbf(const Qbf& q);
// Alternation ladder: delta(0,e) = q^e, delta(i+1,e) = q^e & <>delta(i,1-e),
// theta(i) = delta(i, i mod 2) & ~delta(i+1, i mod 2).
Formula qbf_delta(unsigned i, bool e, Formula q);
Formula qbf_theta(unsigned i, Formula q);

// --- single-parameter PSPACE family (m = 1 QBF sources) ---
// Parameter q = par(0); variable x = var(0).  Uses the same ladder with
// three chain levels per quantifier pair:
//   gamma = AND_i([.](theta_{2i+1} -> []~theta_{2i+1})
//               | [.](theta_{2i+2} -> <>(theta_{2i+1} & <>theta_{2i+1})))
//   xi = (gamma -> AND_i([.](theta_{2i+2}->x) | [.](theta_{2i+2}->~x)))
//      & (gamma & theta_{2d} -> matrix') with Univ(i,0) :=
//        <>(theta_{2i+1} & <>theta_{2i+1}), Exist(i,0) := <.>(theta_{2i+2} & x).
// Throws std::invalid_argument unless m == 1.
ReductionInstance gen_psp_irr(const Qbf& q);

// --- one-parameter beta/eta tower ---
// Formula families over the single parameter p = par(0):
//   beta^0_i = eta^0_i = [.]p^i                                   (i < 2)
//   eta^{2d+1}_i  = [.](p | []~p -> eta^{2d}_i)
//   beta^{2d+1}_i = eta^{2d+1}_i & ~p & <.>beta^{2d}_i
//   eta^{2d+2}_{jk}  = [.](p -> eta^{2d}_j | eta^{2d}_k
//                             | (<>beta^{2d+1}_j & <>beta^{2d+1}_k))
//                    & [.](~p -> [.](p | []~p -> eta^{2d}_j | eta^{2d}_k))
//   beta^{2d+2}_{jk} = eta^{2d+2}_{jk} & p & <>beta^{2d+1}_j & <>beta^{2d+1}_k
// Counts: n_0 = 2, n_{2d+1} = n_{2d}, n_{2d+2} = binom(n_{2d}+1, 2); even
// levels index the multisets {j,k}, j <= k, in lexicographic order.  The
// level-1 list reuses the recursion even though beta^1_0, eta^1_0 collapse
// to beta^0_0, eta^0_0 up to provable equivalence.
struct BetaFamily {
  unsigned level = 0;
  std::vector<Formula> beta;
  std::vector<Formula> eta;
};
uint64_t beta_count(unsigned level);         // n_level
BetaFamily gen_beta_family(unsigned level);  // BudgetError when n_level > 64

// --- one/two-parameter NEXP family (Sigma2 sources) ---
// Instantiates the generic skeleton
//   (a)  AND_i([](theta -> <>b_i) | [](theta -> ~<>b_i))
//          -> [](theta -> x) | [](theta -> ~x)
//   (b)  AND_alpha(<>theta_alpha
//            & AND_i([](theta_alpha -> <>b_i) | [](theta_alpha -> ~<>b_i)))
//          -> matrix[Elem(i,alpha) := <>(theta_alpha & <>b_i),
//                    InX(alpha)    := <>(theta_alpha & x)]
// with b_i = beta^D_i for i < n, gamma_alpha = beta^D_{n+alpha},
// delta = beta^D_{n+m},
//   theta       = p & <>delta & ~delta,
//   theta_alpha = p & <>delta & <>gamma_alpha & AND_{a'!=alpha} ~<>gamma_{a'},
// where D defaults to the least even level with n_D >= n + m + 2; `level`
// overrides it for miniature instances (must be even with n_level >=
// n + m + 1).  relativized=true localizes every ingredient below a second
// parameter q = par(1): each of b_i, theta, theta_alpha becomes q & (.)^q
// with ([]a)^q = [](q -> a^q), (<>a)^q = <>(q & a^q).  Parameters:
// p = par(0) (+ q); variable x = var(0).
ReductionInstance gen_nexp_1par(const ThirdOrderSentence& s, bool relativized,
                                std::optional<unsigned> level = std::nullopt);
// sigma(x) = OR_{t in X} AND_i (<>b_i)^[i in t] over the instantiated b_i.
Substitution nexp_1par_witness(const ThirdOrderSentence& s, bool relativized,
                               uint64_t X,
                               std::optional<unsigned> level = std::nullopt);

// --- parameter-free admissibility family (Sigma2 sources) ---
// Variables z_i = var(i) for i < n+m+4 and x = var(n+m+4); no parameters.
//   beta_i = [.](z_i & AND_{i'!=i} ~z_{i'})
// with gamma_alpha = beta_{n+alpha}, delta_p = beta_{n+m+p} for p < 4,
//   theta       = <>delta_1 & <>delta_2 & <>delta_3 & ~<>delta_0,
//   theta_alpha = theta & <>gamma_alpha & AND_{a'!=alpha} ~<>gamma_{a'}.
// xi is the skeleton above; zeta = OR_{i<n+m+4} []~beta_i; the instance
// carries the single-conclusion rule xi / zeta, inadmissible exactly when
// the source is true (in the logics the construction targets).
ReductionInstance gen_nexp_0par_adm(const ThirdOrderSentence& s);
// sigma(x) = OR_{t in X} AND_i (<>beta_i)^[i in t]; every z_i stays fixed,
// so sigma(zeta) = zeta.
Substitution nexp_0par_adm_witness(const ThirdOrderSentence& s, uint64_t X);

}  // namespace tml
