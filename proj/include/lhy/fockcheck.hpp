#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "lhy/bogolubov.hpp"
#include "lhy/errors.hpp"
#include "lhy/quadrature.hpp"

namespace lhy::fock {

using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using SparseC = Eigen::SparseMatrix<cplx>;

// Bosonic Fock space of m modes cut at total occupation n_max.
class TruncatedFock {
public:
    TruncatedFock(int m, int n_max) : m_(m), n_max_(n_max)
    {
        if (m < 1 || n_max < 0)
            throw domain_error("truncated Fock space needs m >= 1 and n_max >= 0");
        std::vector<int> occ(m, 0);
        for (int total = 0; total <= n_max; ++total)
            enumerate(occ, 0, total);
        const double expect = boost::math::binomial_coefficient<double>(n_max + m, m);
        if (static_cast<double>(basis_.size()) != expect)
            throw invariant_failure("Fock basis enumeration has the wrong size");
    }

    int modes() const { return m_; }
    int n_max() const { return n_max_; }
    int dim() const { return static_cast<int>(basis_.size()); }
    const std::vector<int>& state(int i) const { return basis_[i]; }
    int total(int i) const
    {
        int s = 0;
        for (int n : basis_[i])
            s += n;
        return s;
    }

    // -1 when the tuple lies outside the truncation
    int index(const std::vector<int>& occ) const
    {
        const auto it = index_.find(occ);
        return it == index_.end() ? -1 : it->second;
    }

    // basis states with total occupation <= n_max - margin
    std::vector<int> interior(int margin) const
    {
        std::vector<int> out;
        for (int i = 0; i < dim(); ++i)
            if (total(i) <= n_max_ - margin)
                out.push_back(i);
        return out;
    }

private:
    int m_, n_max_;
    std::vector<std::vector<int>> basis_;
    std::map<std::vector<int>, int> index_;

    void enumerate(std::vector<int>& occ, int mode, int left)
    {
        if (mode == m_ - 1) {
            occ[mode] = left;
            index_[occ] = static_cast<int>(basis_.size());
            basis_.push_back(occ);
            return;
        }
        for (int n = left; n >= 0; --n) {
            occ[mode] = n;
            enumerate(occ, mode + 1, left - n);
        }
    }
};

struct Ladder {
    Matrix a;
    Matrix adag;
};

inline Ladder ladder_matrices(const TruncatedFock& f, int mode)
{
    if (mode < 0 || mode >= f.modes())
        throw domain_error("ladder_matrices: mode out of range");
    Ladder L{Matrix::Zero(f.dim(), f.dim()), Matrix()};
    for (int j = 0; j < f.dim(); ++j) {
        auto occ = f.state(j);
        const int n = occ[mode];
        if (n == 0)
            continue;
        occ[mode] = n - 1;
        L.a(f.index(occ), j) = std::sqrt(static_cast<double>(n));
    }
    L.adag = L.a.transpose();
    return L;
}

struct BogIdentityReport {
    double residual = 0.0;      // max |(LHS - RHS)_{ij}| over interior columns j
    double hermiticity = 0.0;   // max |LHS - LHS^dag|
    double ground_lhs = 0.0;    // lambda_min of LHS on the truncated space
    double ground_rhs = 0.0;    // lambda_min of RHS on the truncated space
    double closed_form = 0.0;   // -(A - sqrt(A^2 - B^2)) - 2|kappa|^2/(A+B)
    int dim = 0;
};

struct TwoModeOperators {
    SparseC ap, am, apd, amd, one;
};

inline TwoModeOperators two_mode_operators(int n_max)
{
    const TruncatedFock f(2, n_max);
    const auto p = ladder_matrices(f, 0);
    const auto m = ladder_matrices(f, 1);
    auto sp = [](const Matrix& M) { return SparseC(M.cast<cplx>().sparseView()); };
    SparseC one(f.dim(), f.dim());
    one.setIdentity();
    return {sp(p.a), sp(m.a), sp(p.adag), sp(m.adag), one};
}

// A(a+^dag a+ + a-^dag a-) + B(a+^dag a-^dag + a+ a-) + kappa(a+^dag + a-) + conj(kappa)(a+ + a-^dag)
inline SparseC bog_quadratic_hamiltonian(const TwoModeOperators& o, double A, double B, cplx kappa)
{
    SparseC H = cplx(A) * SparseC(o.apd * o.ap + o.amd * o.am);
    H += cplx(B) * SparseC(o.apd * o.amd + o.ap * o.am);
    H += kappa * SparseC(o.apd + o.am);
    H += std::conj(kappa) * SparseC(o.ap + o.amd);
    return H;
}

inline double lowest_eigenvalue(const Matrix& H)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw solver_failure("eigensolver did not converge");
    return es.eigenvalues()(0);
}

// The spectrum depends on kappa only through |kappa|: a+ -> e^{i t} a+,
// a- -> e^{-i t} a- keeps the pairing term and rotates both linear terms by
// e^{-i t}.  So eigenvalues are taken from the real form.
inline Matrix real_gauge_hamiltonian(double A, double B, double kappa_abs, int n_max)
{
    const auto o = two_mode_operators(n_max);
    const Eigen::MatrixXcd H = bog_quadratic_hamiltonian(o, A, B, cplx(kappa_abs)).toDense();
    return H.real();
}

// D(b+^dag b+ + b-^dag b-) + ground_shift with b+ = a+ + alpha a-^dag + conj(c0),
// b- = a- + alpha a+^dag + c0, assembled from the truncated ladder matrices
inline SparseC bog_diagonal_form(const TwoModeOperators& o, const DiagonalizedMode& d)
{
    const SparseC bp = o.ap + cplx(d.alpha) * o.amd + std::conj(d.c0) * o.one;
    const SparseC bm = o.am + cplx(d.alpha) * o.apd + d.c0 * o.one;
    const SparseC bpd = bp.adjoint(), bmd = bm.adjoint();
    SparseC rhs = cplx(d.D) * SparseC(bpd * bp + bmd * bm);
    rhs += cplx(d.ground_shift) * o.one;
    return rhs;
}

inline BogIdentityReport verify_bog_identity(double A, double B, cplx kappa, int n_max)
{
    const auto d = diagonalize({A, B, kappa});
    const auto o = two_mode_operators(n_max);
    const SparseC lhs = bog_quadratic_hamiltonian(o, A, B, kappa);
    const SparseC rhs = bog_diagonal_form(o, d);

    const TruncatedFock f(2, n_max);
    BogIdentityReport r;
    r.dim = f.dim();
    const Eigen::MatrixXcd diff = Eigen::MatrixXcd(lhs - rhs);
    for (int c : f.interior(2))
        r.residual = std::max(r.residual, diff.col(c).cwiseAbs().maxCoeff());
    r.hermiticity = Eigen::MatrixXcd(lhs - SparseC(lhs.adjoint())).cwiseAbs().maxCoeff();
    // the phase rotation commutes with the truncation, so both sides can be
    // diagonalized in the real gauge
    r.ground_lhs = lowest_eigenvalue(real_gauge_hamiltonian(A, B, std::abs(kappa), n_max));
    const auto dr = diagonalize({A, B, std::abs(kappa)});
    const Eigen::MatrixXcd R = bog_diagonal_form(o, dr).toDense();
    r.ground_rhs = lowest_eigenvalue(Matrix(0.5 * (R.real() + R.real().transpose())));
    r.closed_form = d.ground_shift;
    return r;
}

inline double bog_ground_energy(double A, double B, cplx kappa, int n_max)
{
    diagonalize({A, B, kappa}); // admissibility
    return lowest_eigenvalue(real_gauge_hamiltonian(A, B, std::abs(kappa), n_max));
}

struct LowerBoundReport {
    double lambda_min = 0.0;
    double bound = 0.0;
    double slack = 0.0;
    bool ok = false;
};

// lambda_min(LHS) >= -(A - root) - 2|kappa|^2/(A+B) up to truncation slack
inline LowerBoundReport bog_lower_bound_check(double A, double B, cplx kappa, int n_max, bool throw_on_fail = true)
{
    LowerBoundReport r;
    r.bound = diagonalize({A, B, kappa}).ground_shift;
    r.lambda_min = bog_ground_energy(A, B, kappa, n_max);
    r.slack = std::abs(r.lambda_min - bog_ground_energy(A, B, kappa, std::max(1, n_max / 2)));
    r.ok = r.lambda_min >= r.bound - r.slack - 1e-12 * (A + std::norm(kappa));
    if (!r.ok && throw_on_fail)
        throw invariant_failure("Bogolubov lower bound violated beyond truncation slack");
    return r;
}

struct RandomTriple {
    double A, B;
    cplx kappa;
};

inline RandomTriple random_admissible_triple(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RandomTriple t;
    t.A = 0.5 + 4.5 * u(rng);
    t.B = t.A * 0.95 * (2.0 * u(rng) - 1.0);
    t.kappa = cplx(2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0);
    return t;
}

// ---------------------------------------------------------------------------
// two particles on a periodic G^3 lattice

class LatticeBox {
public:
    LatticeBox(int G, Matrix w, Matrix omega) : G_(G), n_(G * G * G), w_(std::move(w)), omega_(std::move(omega))
    {
        if (G < 1 || w_.rows() != n_ || w_.cols() != n_ || omega_.rows() != n_ || omega_.cols() != n_)
            throw domain_error("lattice kernels must be G^3 x G^3");
        if ((w_ - w_.transpose()).cwiseAbs().maxCoeff() > 0.0 ||
            (omega_ - omega_.transpose()).cwiseAbs().maxCoeff() > 0.0)
            throw domain_error("lattice kernels must be symmetric");
        if (w_.minCoeff() < 0.0 || omega_.minCoeff() < 0.0 || omega_.maxCoeff() > 1.0)
            throw domain_error("lattice kernels need w >= 0 and 0 <= omega <= 1");
        w1_ = w_.cwiseProduct((1.0 - omega_.array()).matrix());
        w2_ = w_.cwiseProduct((1.0 - omega_.array().square()).matrix());
    }

    static LatticeBox random(int G, std::uint64_t seed)
    {
        const int n = G * G * G;
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Matrix w(n, n), om(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                w(i, j) = w(j, i) = u(rng);
                om(i, j) = om(j, i) = u(rng);
            }
        return LatticeBox(G, std::move(w), std::move(om));
    }

    int G() const { return G_; }
    int n() const { return n_; }
    const Matrix& w() const { return w_; }
    const Matrix& omega() const { return omega_; }
    const Matrix& w1() const { return w1_; }
    const Matrix& w2() const { return w2_; }
    Matrix P() const { return Matrix::Constant(n_, n_, 1.0 / n_); }
    Matrix Q() const { return Matrix::Identity(n_, n_) - P(); }
    // grid version of int w1(x, y) dy
    Vector U() const { return w1_.rowwise().sum(); }

private:
    int G_, n_;
    Matrix w_, omega_, w1_, w2_;
};

// max |P^2 - P|, |PQ|, |P + Q - 1|
inline double projector_defect(const LatticeBox& box)
{
    const Matrix P = box.P(), Q = box.Q();
    const double d1 = (P * P - P).cwiseAbs().maxCoeff();
    const double d2 = (P * Q).cwiseAbs().maxCoeff();
    const double d3 = (P + Q - Matrix::Identity(box.n(), box.n())).cwiseAbs().maxCoeff();
    return std::max({d1, d2, d3});
}

enum class Op { I, P, Q };

namespace detail {

// one term  coef (L1 (x) L2) F (R1 (x) R2)  with F a multiplication operator
struct PairTerm {
    double coef;
    Op l1, l2;
    const Matrix* F;
    Op r1, r2;
};

// op on particle 1 acts on the row index of the two-particle array V(x1, x2)
inline void apply_op(Op op, int slot, Matrix& V)
{
    if (op == Op::I)
        return;
    if (slot == 0) {
        const Eigen::RowVectorXd mean = V.colwise().mean();
        if (op == Op::P)
            V.rowwise() = mean;
        else
            V.rowwise() -= mean;
    } else {
        const Vector mean = V.rowwise().mean();
        if (op == Op::P)
            V.colwise() = mean;
        else
            V.colwise() -= mean;
    }
}

inline void apply_term(const PairTerm& t, const Matrix& V, Matrix& acc)
{
    Matrix W = V;
    apply_op(t.r1, 0, W);
    apply_op(t.r2, 1, W);
    W = W.cwiseProduct(*t.F);
    apply_op(t.l1, 0, W);
    apply_op(t.l2, 1, W);
    acc += t.coef * W;
}

// Collects terms written per ordered pair (i, j) and places the operators in
// tensor slots.
class TermList {
public:
    std::vector<PairTerm> terms;

    // coef O_i O'_j F O''_j O'''_i  for the ordered pair (i, j)
    void pair(double coef, int i, Op li, Op lj, const Matrix* F, Op rj, Op ri)
    {
        if (i == 0)
            terms.push_back({coef, li, lj, F, ri, rj});
        else
            terms.push_back({coef, lj, li, F, rj, ri});
    }
    void pair_hc(double coef, int i, Op li, Op lj, const Matrix* F, Op rj, Op ri)
    {
        pair(coef, i, li, lj, F, rj, ri);
        pair(coef, i, ri, rj, F, lj, li);
    }
    // coef L_i F(x_i) R_i
    void single(double coef, int i, Op l, const Matrix* F, Op r)
    {
        if (i == 0)
            terms.push_back({coef, l, Op::I, F, r, Op::I});
        else
            terms.push_back({coef, Op::I, l, F, Op::I, r});
    }
    void single_hc(double coef, int i, Op l, const Matrix* F, Op r)
    {
        single(coef, i, l, F, r);
        single(coef, i, r, F, l);
    }
};

} // namespace detail

// Both sides of the potential split for N = 2 and the five renormalized pieces.
class PotentialSplit {
public:
    PotentialSplit(const LatticeBox& box, double rho_mu) : box_(&box), rho_mu_(rho_mu)
    {
        const int n = box.n();
        w_ = box.w();
        w1_ = box.w1();
        w2_ = box.w2();
        const Matrix& om = box.omega();
        wom_ = w_.cwiseProduct(om);
        womom_ = wom_.cwiseProduct(om);
        const Vector U = box.U();
        U1_ = U * Eigen::RowVectorXd::Ones(n);
        U2_ = Vector::Ones(n) * U.transpose();
        build();
    }

    // columns of the symmetric two-particle basis |x1 x2>, x1 <= x2
    int sym_dim() const { return box_->n() * (box_->n() + 1) / 2; }

    Matrix lhs_matrix() const { return sym_matrix(lhs_); }
    Matrix rhs_matrix() const { return sym_matrix(all_); }
    Matrix piece_matrix(int k) const { return sym_matrix(q_.at(k)); }

    double max_residual() const
    {
        // LHS - RHS with terms of equal operator pattern merged into one kernel
        std::map<std::array<Op, 4>, Matrix> merged;
        auto add = [&](const detail::PairTerm& t, double sign) {
            auto [it, fresh] = merged.try_emplace({t.l1, t.l2, t.r1, t.r2}, Matrix());
            if (fresh)
                it->second = Matrix::Zero(t.F->rows(), t.F->cols());
            it->second += sign * t.coef * *t.F;
        };
        for (const auto& t : lhs_.terms)
            add(t, 1.0);
        for (const auto& t : all_.terms)
            add(t, -1.0);
        std::vector<detail::PairTerm> diff;
        for (const auto& [k, F] : merged)
            diff.push_back({1.0, k[0], k[1], &F, k[2], k[3]});
        double r = 0.0;
        for_each_sym_column([&](int, const Matrix& V) {
            Matrix acc = Matrix::Zero(V.rows(), V.cols());
            for (const auto& t : diff)
                detail::apply_term(t, V, acc);
            r = std::max(r, acc.cwiseAbs().maxCoeff());
        });
        return r;
    }

private:
    const LatticeBox* box_;
    double rho_mu_;
    Matrix w_, w1_, w2_, wom_, womom_, U1_, U2_;
    detail::TermList lhs_, all_;
    std::vector<detail::TermList> q_;

    const Matrix* U(int i) const { return i == 0 ? &U1_ : &U2_; }

    void build()
    {
        using enum Op;
        for (int i = 0; i < 2; ++i) {
            lhs_.single(-rho_mu_, i, I, U(i), I);
            lhs_.pair(0.5, i, I, I, &w_, I, I);
        }
        q_.assign(5, {});
        auto& q0 = q_[0];
        auto& q1 = q_[1];
        auto& q2 = q_[2];
        auto& q3 = q_[3];
        auto& q4 = q_[4];
        const std::array<std::array<Op, 2>, 3> X{{{P, P}, {P, Q}, {Q, P}}};
        for (int i = 0; i < 2; ++i) {
            // [Q_i Q_j + (P_i P_j + P_i Q_j + Q_i P_j) omega] w [Q_j Q_i + omega (P_j P_i + P_j Q_i + Q_j P_i)]
            q4.pair(0.5, i, Q, Q, &w_, Q, Q);
            for (const auto& x : X) {
                q4.pair(0.5, i, x[0], x[1], &wom_, Q, Q);
                q4.pair(0.5, i, Q, Q, &wom_, x[1], x[0]);
                for (const auto& y : X)
                    q4.pair(0.5, i, x[0], x[1], &womom_, y[1], y[0]);
            }
            q3.pair_hc(1.0, i, P, Q, &w1_, Q, Q);
            q2.pair(1.0, i, P, Q, &w2_, P, Q);
            q2.pair(1.0, i, P, Q, &w2_, Q, P);
            q2.single(-rho_mu_, i, Q, U(i), Q);
            q2.pair_hc(0.5, i, P, P, &w1_, Q, Q);
            // the i = j part of this sum vanishes since P_i Q_i = 0; with the
            // pair written as P_j Q_i w2 P_i P_j
            q1.pair_hc(1.0, i, Q, P, &w2_, P, P);
            q1.single_hc(-rho_mu_, i, Q, U(i), P);
            q0.pair(0.5, i, P, P, &w2_, P, P);
            q0.single(-rho_mu_, i, P, U(i), P);
        }
        for (const auto& q : q_)
            all_.terms.insert(all_.terms.end(), q.terms.begin(), q.terms.end());
    }

    template <class F>
    void for_each_sym_column(F&& fn) const
    {
        const int n = box_->n();
        const double s = 1.0 / std::sqrt(2.0);
        int col = 0;
        for (int y1 = 0; y1 < n; ++y1)
            for (int y2 = y1; y2 < n; ++y2, ++col) {
                Matrix V = Matrix::Zero(n, n);
                if (y1 == y2)
                    V(y1, y1) = 1.0;
                else
                    V(y1, y2) = V(y2, y1) = s;
                fn(col, V);
            }
    }

    Matrix sym_matrix(const detail::TermList& tl) const
    {
        const int n = box_->n();
        const double s = 1.0 / std::sqrt(2.0);
        Matrix out(sym_dim(), sym_dim());
        for_each_sym_column([&](int col, const Matrix& V) {
            Matrix acc = Matrix::Zero(n, n);
            for (const auto& t : tl.terms)
                detail::apply_term(t, V, acc);
            int row = 0;
            for (int x1 = 0; x1 < n; ++x1)
                for (int x2 = x1; x2 < n; ++x2, ++row)
                    out(row, col) = x1 == x2 ? acc(x1, x1) : s * (acc(x1, x2) + acc(x2, x1));
        });
        return out;
    }
};

struct SplitReport {
    double residual = 0.0;     // max |LHS - RHS| over symmetric basis entries
    double scale = 0.0;        // max |LHS|
    double q4_min_eigenvalue = 0.0;
    double q4_norm = 0.0;
    bool q4_psd = false;
    int dim = 0;
};

inline SplitReport verify_potential_split(const LatticeBox& box, double rho_mu, bool check_q4 = true)
{
    PotentialSplit s(box, rho_mu);
    SplitReport r;
    r.dim = s.sym_dim();
    r.residual = s.max_residual();
    r.scale = s.lhs_matrix().cwiseAbs().maxCoeff();
    if (check_q4) {
        const Matrix q4 = s.piece_matrix(4);
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (q4 + q4.transpose()), Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw solver_failure("eigensolver did not converge on the positive term");
        r.q4_min_eigenvalue = es.eigenvalues()(0);
        r.q4_norm = es.eigenvalues().cwiseAbs().maxCoeff();
        r.q4_psd = r.q4_min_eigenvalue >= -1e-12 * std::max(1.0, r.q4_norm);
    }
    return r;
}

// ---------------------------------------------------------------------------
// coherent states of one mode, occupations 0..n_max

// exp(-|z|^2/2 + z a^dag) vacuum
inline CVector coherent_state(cplx z, int n_max)
{
    CVector c(n_max + 1);
    c(0) = std::exp(-0.5 * std::norm(z));
    for (int n = 1; n <= n_max; ++n)
        c(n) = c(n - 1) * z / std::sqrt(static_cast<double>(n));
    return c;
}

inline Matrix single_mode_annihilator(int n_max)
{
    Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
    for (int n = 1; n <= n_max; ++n)
        a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

struct CoherentReport {
    double eigen_residual = 0.0;    // max over z of |a|z> - z|z>|
    double truncation_estimate = 0.0; // max over z of |z|^{n_max+1}/sqrt(n_max!) e^{-|z|^2/2}
    double resolution_low = 0.0;    // max_{n <= n_check} |R_nn - 1|
    double oracle_error = 0.0;      // max_n |R_nn - P(n+1, Z^2)|
    double off_diagonal = 0.0;      // max_{m != n} |R_mn|
    int n_check = 0;
};

// Eigenvector property on a grid of z, and the resolution
// pi^-1 int_{|z| <= Z} |z><z| d^2z compared with the incomplete gamma oracle.
inline CoherentReport coherent_state_checks(int n_max, const std::vector<cplx>& zs, double Z, int n_check)
{
    if (n_max < 1 || !(Z > 0.0) || n_check > n_max)
        throw domain_error("coherent-state checks need n_max >= 1, Z > 0, n_check <= n_max");
    CoherentReport r;
    r.n_check = n_check;
    const CMatrix a = single_mode_annihilator(n_max).cast<cplx>();
    for (const cplx z : zs) {
        const CVector v = coherent_state(z, n_max);
        r.eigen_residual = std::max(r.eigen_residual, (a * v - z * v).norm());
        const double az = std::abs(z);
        r.truncation_estimate =
            std::max(r.truncation_estimate, std::exp(-0.5 * az * az + (n_max + 1) * std::log(std::max(az, 1e-300)) -
                                                     0.5 * std::lgamma(n_max + 1.0)));
    }

    // radial Gauss-Legendre panels, equispaced angles (exact for |m - n| < n_theta)
    const int n_theta = 2 * n_max + 2;
    const int panels = std::max(8, static_cast<int>(std::ceil(4.0 * Z)));
    const auto& gl = quad::gauss_rule<32>();
    CMatrix R = CMatrix::Zero(n_max + 1, n_max + 1);
    const double h = Z / panels;
    for (int p = 0; p < panels; ++p)
        for (std::size_t i = 0; i < gl.x.size(); ++i) {
            const double rad = h * (p + 0.5 * (gl.x[i] + 1.0));
            const double wr = 0.5 * h * gl.w[i] * rad;
            for (int t = 0; t < n_theta; ++t) {
                const double th = 2.0 * std::numbers::pi * t / n_theta;
                const CVector v = coherent_state(std::polar(rad, th), n_max);
                R.noalias() += (wr * 2.0 * std::numbers::pi / n_theta / std::numbers::pi) * (v * v.adjoint());
            }
        }
    for (int m = 0; m <= n_max; ++m)
        for (int n = 0; n <= n_max; ++n) {
            if (m == n) {
                const double oracle = boost::math::gamma_p(n + 1.0, Z * Z);
                r.oracle_error = std::max(r.oracle_error, std::abs(R(n, n).real() - oracle));
                if (n <= n_check)
                    r.resolution_low = std::max(r.resolution_low, std::abs(R(n, n).real() - 1.0));
            } else {
                r.off_diagonal = std::max(r.off_diagonal, std::abs(R(m, n)));
            }
        }
    if (r.oracle_error > 1e-9)
        throw quadrature_failure("disc quadrature disagrees with the incomplete gamma closed form");
    return r;
}

// ---------------------------------------------------------------------------
// localization of large matrices

struct MatrixLocReport {
    double lambda = 0.0;             // <psi, A psi>
    double best_window_energy = 0.0; // min over windows of lambda_min(A restricted)
    int best_window = 0;             // n'
    double near_sum = 0.0;           // M'^-2 sum_{1 <= k < M'} k^2 |d_k|
    double far_sum = 0.0;            // sum_{k >= M'} |d_k|
    double required_C = 0.0;         // smallest C making the bound hold
    double bound_value = 0.0;        // with the supplied C
    bool ok = false;
};

inline MatrixLocReport matrix_localization_check(const Matrix& A, const Vector& psi, int Mp, double C)
{
    const int dim = static_cast<int>(A.rows());
    if (A.cols() != dim || psi.size() != dim)
        throw domain_error("matrix localization: shape mismatch");
    if (Mp < 1 || Mp > dim)
        throw domain_error("matrix localization: need 1 <= M' <= N+1");
    if (std::abs(psi.norm() - 1.0) > 1e-12)
        throw domain_error("matrix localization: psi must be normalized");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, A.cwiseAbs().maxCoeff()))
        throw domain_error("matrix localization: A must be symmetric");

    MatrixLocReport r;
    r.lambda = psi.dot(A * psi);
    for (int k = 1; k < dim; ++k) {
        double dk = 0.0;
        for (int i = 0; i + k < dim; ++i)
            dk += 2.0 * A(i, i + k) * psi(i) * psi(i + k);
        if (k < Mp)
            r.near_sum += static_cast<double>(k) * k * std::abs(dk);
        else
            r.far_sum += std::abs(dk);
    }
    r.near_sum /= static_cast<double>(Mp) * Mp;

    r.best_window_energy = INFINITY;
    for (int s = 0; s + Mp <= dim; ++s) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(A.block(s, s, Mp, Mp), Eigen::EigenvaluesOnly);
        const double e = es.eigenvalues()(0);
        if (e < r.best_window_energy) {
            r.best_window_energy = e;
            r.best_window = s;
        }
    }
    const double excess = r.best_window_energy - r.lambda;
    const double denom = r.near_sum + r.far_sum;
    r.required_C = excess <= 0.0 ? 0.0 : (denom > 0.0 ? excess / denom : INFINITY);
    r.bound_value = r.lambda + C * denom;
    r.ok = r.best_window_energy <= r.bound_value + 1e-12 * std::max(1.0, std::abs(r.lambda));
    return r;
}

// Symmetric (N+1) x (N+1) matrix with random entries on the main diagonal and
// the first `band` off-diagonals.
inline Matrix random_banded(int dim, int band, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix A = Matrix::Zero(dim, dim);
    for (int k = 0; k <= band; ++k)
        for (int i = 0; i + k < dim; ++i)
            A(i, i + k) = A(i + k, i) = u(rng);
    return A;
}

inline Vector ground_state(const Matrix& A)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    if (es.info() != Eigen::Success)
        throw solver_failure("eigensolver did not converge");
    return es.eigenvectors().col(0);
}

// Pentadiagonal trial with psi the ground state.
inline MatrixLocReport pentadiagonal_trial(int N, int Mp, std::uint64_t seed, double C)
{
    const Matrix A = random_banded(N + 1, 2, seed);
    return matrix_localization_check(A, ground_state(A), Mp, C);
}

// Largest required C over `trials` seeds starting at seed0.
inline double calibrate_matrix_localization(int N, int Mp, int trials, std::uint64_t seed0)
{
    double c = 0.0;
    for (int t = 0; t < trials; ++t)
        c = std::max(c, pentadiagonal_trial(N, Mp, seed0 + t, 0.0).required_C);
    return c;
}

} // namespace lhy::fock
