#include "phmg/phs.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace phmg {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw DimensionError(what);
}

Eigen::VectorXd symmetric_eigenvalues(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

std::string entry_text(Eigen::Index i, Eigen::Index j) {
    std::ostringstream os;
    os << "(" << i << "," << j << ")";
    return os.str();
}

}  // namespace

double QuadraticHamiltonian::operator()(const Vec& x) const {
    const Vec dx = x_ref ? Vec(x - *x_ref) : x;
    return 0.5 * dx.dot(Q * dx);
}

Vec QuadraticHamiltonian::gradient(const Vec& x) const {
    return x_ref ? costate(Q, x, *x_ref) : costate(Q, x);
}

ValidityReport validate_phs(const LinearIsoPhs& phs) {
    const auto n = phs.Q.rows();
    require(phs.Q.cols() == n, "Q must be square");
    require(phs.J.rows() == n && phs.J.cols() == n, "J must be n x n");
    require(phs.R.rows() == n && phs.R.cols() == n, "R must be n x n");
    require(phs.G.rows() == n, "G must have n rows");
    require(phs.K.rows() == n, "K must have n rows");

    ValidityReport report;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double s = phs.J(i, j) + phs.J(j, i);
            if (s != 0.0) {
                report.push_back({"J", "not skew-symmetric at " + entry_text(i, j), s});
            }
            if (j > i && phs.R(i, j) != phs.R(j, i)) {
                report.push_back({"R", "not symmetric at " + entry_text(i, j), phs.R(i, j) - phs.R(j, i)});
            }
            if (j > i && phs.Q(i, j) != phs.Q(j, i)) {
                report.push_back({"Q", "not symmetric at " + entry_text(i, j), phs.Q(i, j) - phs.Q(j, i)});
            }
        }
    }
    if (n > 0) {
        const Vec lr = symmetric_eigenvalues(0.5 * (phs.R + phs.R.transpose()));
        const double rscale = lr.cwiseAbs().maxCoeff();
        if (lr.minCoeff() < -kEigenTolerance * rscale) {
            report.push_back({"R", "not positive semidefinite, eigenvalue", lr.minCoeff()});
        }
        const Vec lq = symmetric_eigenvalues(0.5 * (phs.Q + phs.Q.transpose()));
        const double qscale = lq.cwiseAbs().maxCoeff();
        if (!(lq.minCoeff() > kEigenTolerance * qscale)) {
            report.push_back({"Q", "not positive definite, eigenvalue", lq.minCoeff()});
        }
    }
    return report;
}

Vec costate(const Mat& Q, const Vec& x) {
    require(Q.cols() == x.size(), "costate: Q and x disagree");
    return Q * x;
}

Vec costate(const Mat& Q, const Vec& x, const Vec& x_ref) {
    require(x.size() == x_ref.size(), "costate: x and x_ref disagree");
    return costate(Q, x - x_ref);
}

Vec phs_derivative(const LinearIsoPhs& phs, const Vec& x, const Vec& u, const Vec& d) {
    require(x.size() == phs.n(), "phs_derivative: state size");
    require(u.size() == phs.m_u(), "phs_derivative: control size");
    require(d.size() == phs.m_d(), "phs_derivative: interaction size");
    Vec dx = (phs.J - phs.R) * (phs.Q * x);
    if (phs.m_u() > 0) dx += phs.G * u;
    if (phs.m_d() > 0) dx += phs.K * d;
    return dx;
}

PhsOutputs phs_outputs(const LinearIsoPhs& phs, const Vec& x) {
    const Vec e = costate(phs.Q, x);
    return {phs.G.transpose() * e, phs.K.transpose() * e};
}

double supply_rate(const Vec& z, const Vec& d, const Vec& z_ref, const Vec& d_ref) {
    require(z.size() == d.size() && z.size() == z_ref.size() && d.size() == d_ref.size(),
            "supply_rate: port sizes");
    return (d - d_ref).dot(z - z_ref);
}

}  // namespace phmg
