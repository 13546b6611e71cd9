#include "hommax/transport.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <set>

namespace hommax {

namespace {

constexpr double kSkewTolerance = 1e-10;
constexpr double kDivergenceTolerance = 1e-8;

std::vector<double> as_vector(const Vec3& v) { return {v(0), v(1), v(2)}; }

void require_projectable(const Vec3& xi) {
  if (!in_reduced_zone(as_vector(xi))) {
    throw InputError(fmt::format("projection onto a fiber outside [-pi, pi)^3: ({}, {}, {})", xi(0),
                                 xi(1), xi(2)));
  }
}

// Periodic part T_xi(micro) on the lattice.
PeriodicField periodic_part(const TrigPoly& micro, const Vec3& xi, const GridShape& lattice) {
  if (micro.dim() != 3 || micro.rank() != ValueRank::vector3) {
    throw InputError("two-scale data: micro profiles must be 3-vector polynomials in y");
  }
  return PeriodicField::from_trig(gelfand_transform(micro, as_vector(xi)), lattice);
}

// s-frequency lambda slice of T_xi(micro(s, y)) as a field in y.
PeriodicField resonant_part(const TrigPoly& micro, const Vec3& xi, double lambda, const GridShape& lattice) {
  if (micro.dim() != 4 || micro.rank() != ValueRank::vector3) {
    throw InputError("forcing: micro profiles must be 3-vector polynomials in (s, y)");
  }
  const TrigPoly t = gelfand_transform(micro, as_vector(xi));
  TrigPoly slice(3, ValueRank::vector3);
  for (const auto& [key, c] : t.terms()) {
    const auto f = t.frequency(key);
    if (std::abs(f[0] - lambda) > degeneracy_tolerance(lambda)) continue;
    slice.add_term(std::vector<double>{f[1], f[2], f[3]}, c);
  }
  return PeriodicField::from_trig(slice, lattice);
}

double relative_divergence(const PeriodicField& f, const Vec3& xi) {
  double wmax = 0.0;
  for (std::size_t i = 0; i < f.lattice_size(); ++i) {
    wmax = std::max(wmax, shifted_wavevector(f.shape(), i, xi).norm());
  }
  const double den = wmax * f.coeffs().norm();
  return den > 0.0 ? shifted_divergence(f, xi).coeffs().norm() / den : 0.0;
}

Vec3 to_vec3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

}  // namespace

BCoefficients transport_coefficients(const std::vector<BlochMode>& group) {
  const std::size_t m = group.size();
  BCoefficients b(m, std::vector<Vec3c>(m, Vec3c::Zero()));
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t q = 0; q < m; ++q) {
      Vec3c acc = Vec3c::Zero();
      const PeriodicField& psi_q = group[q].Psi;
      const PeriodicField& a_q = group[q].QinvPhi;
      const PeriodicField& psi_l = group[l].Psi;
      const PeriodicField& a_l = group[l].QinvPhi;
      for (std::size_t i = 0; i < psi_q.lattice_size(); ++i) {
        acc += cross(psi_q.vector_at(i), a_l.vector_at(i).conjugate()) -
               cross(a_q.vector_at(i), psi_l.vector_at(i).conjugate());
      }
      b[l][q] = -kI * acc;
    }
  }
  const double defect = skew_defect(b);
  if (defect > kSkewTolerance) {
    throw NumericalError(fmt::format("transport coefficients: skew defect {:.3e}", defect));
  }
  return b;
}

double skew_defect(const BCoefficients& b) {
  double d = 0.0;
  for (std::size_t l = 0; l < b.size(); ++l) {
    for (std::size_t q = 0; q < b.size(); ++q) d = std::max(d, (b[l][q] + b[q][l].conjugate()).norm());
  }
  return d;
}

std::map<Wavevector, cplx> macro_coefficients(const TrigPoly& macro) {
  if (macro.rank() != ValueRank::scalar) throw InputError("macro profile must be scalar");
  if (macro.dim() != 3 && macro.dim() != 4) throw InputError("macro profile must depend on x (and optionally t)");
  const int off = macro.dim() == 4 ? 1 : 0;
  std::map<Wavevector, cplx> out;
  for (const auto& [key, c] : macro.terms()) {
    const auto f = macro.frequency(key);
    if (off == 1 && std::abs(f[0]) > kFrequencyQuantum) {
      throw InputError("time-dependent macroscopic forcing profiles are outside the supported scope");
    }
    Wavevector k{};
    for (int a = 0; a < 3; ++a) {
      const double r = f[off + a] / kTwoPi;
      k[a] = static_cast<int>(std::lround(r));
      if (std::abs(r - k[a]) > 1e-9) {
        throw InputError("macro profile frequencies must lie on the torus lattice 2 pi Z^3");
      }
    }
    out[k] += c[0];
  }
  return out;
}

void validate_two_scale_divergence(const TwoScaleField& B0, const TwoScaleField& E0, const GalerkinTensor& P) {
  const GridShape& lattice = P.lattice();
  for (const TwoScaleTerm& t : B0) {
    for (const auto& xi : quasimomenta(t.micro)) {
      const double d = relative_divergence(periodic_part(t.micro, to_vec3(xi), lattice), to_vec3(xi));
      if (d > kDivergenceTolerance) {
        throw InputError(fmt::format("initial B micro profile is not divergence-free in y (relative {:.3e})", d));
      }
    }
  }
  for (const TwoScaleTerm& t : E0) {
    for (const auto& xi : quasimomenta(t.micro)) {
      const PeriodicField pe = P.apply(periodic_part(t.micro, to_vec3(xi), lattice));
      const double d = relative_divergence(pe, to_vec3(xi));
      if (d > kDivergenceTolerance) {
        throw InputError(fmt::format("initial P E micro profile is not divergence-free in y (relative {:.3e})", d));
      }
    }
  }
}

AmplitudeMap project_initial_data(const TwoScaleField& B0, const TwoScaleField& E0,
                                  const std::vector<BlochMode>& group, const GalerkinTensor& P) {
  AmplitudeMap out;
  if (group.empty()) return out;
  const Vec3 xi = group.front().xi;
  require_projectable(xi);
  const auto m = static_cast<Eigen::Index>(group.size());
  auto accumulate = [&](const TrigPoly& macro, const VectorXc& c) {
    for (const auto& [k, mc] : macro_coefficients(macro)) {
      auto it = out.try_emplace(k, VectorXc::Zero(m)).first;
      it->second += mc * c;
    }
  };
  for (const TwoScaleTerm& t : B0) {
    const PeriodicField tb = periodic_part(t.micro, xi, P.lattice());
    VectorXc c(m);
    for (Eigen::Index l = 0; l < m; ++l) c(l) = cell_inner(tb, group[l].QinvPhi);
    accumulate(t.macro, c);
  }
  for (const TwoScaleTerm& t : E0) {
    const PeriodicField pe = P.apply(periodic_part(t.micro, xi, P.lattice()));
    VectorXc c(m);
    for (Eigen::Index l = 0; l < m; ++l) c(l) = cell_inner(pe, group[l].Psi);
    accumulate(t.macro, c);
  }
  return out;
}

AmplitudeMap project_forcing(const ForcingField& f, const ForcingField& g,
                             const std::vector<BlochMode>& group) {
  AmplitudeMap out;
  if (group.empty()) return out;
  const Vec3 xi = group.front().xi;
  const double lambda = group.front().lambda;
  const GridShape& lattice = group.front().Phi.shape();
  require_projectable(xi);
  const auto m = static_cast<Eigen::Index>(group.size());
  auto project = [&](const ForcingField& terms, bool magnetic) {
    for (const ForcingTerm& t : terms) {
      const auto mac = macro_coefficients(t.macro);
      const PeriodicField r = resonant_part(t.micro, xi, lambda, lattice);
      VectorXc c(m);
      for (Eigen::Index l = 0; l < m; ++l) {
        c(l) = cell_inner(r, magnetic ? group[l].QinvPhi : group[l].Psi);
      }
      for (const auto& [k, mc] : mac) {
        auto it = out.try_emplace(k, VectorXc::Zero(m)).first;
        it->second += mc * c;
      }
    }
  };
  project(f, true);
  project(g, false);
  return out;
}

double data_energy(const TwoScaleField& B0, const TwoScaleField& E0, const Vec3& xi,
                   const BlochProblem& problem) {
  const GridShape& lattice = problem.lattice();
  std::map<Wavevector, PeriodicField> bk, ek;
  auto gather = [&](const TwoScaleField& terms, std::map<Wavevector, PeriodicField>& into) {
    for (const TwoScaleTerm& t : terms) {
      const PeriodicField part = periodic_part(t.micro, xi, lattice);
      for (const auto& [k, mc] : macro_coefficients(t.macro)) {
        auto it = into.try_emplace(k, PeriodicField(lattice, 3)).first;
        it->second = it->second + part * mc;
      }
    }
  };
  gather(B0, bk);
  gather(E0, ek);
  double total = 0.0;
  for (const auto& [k, b] : bk) total += std::real(b.coeffs().dot(problem.Qinv() * b.coeffs()));
  for (const auto& [k, e] : ek) total += std::real(cell_inner(problem.P().apply(e), e));
  return total;
}

AmplitudeSystem build_amplitude_system(std::vector<BlochMode> group, const TwoScaleField& B0,
                                       const TwoScaleField& E0, const ForcingField& f,
                                       const ForcingField& g, const GalerkinTensor& P) {
  if (group.empty()) throw InputError("amplitude system: empty mode group");
  AmplitudeSystem sys;
  sys.xi = group.front().xi;
  sys.band_index = group.front().band_index;
  sys.lambda = group.front().lambda;
  sys.b = transport_coefficients(group);
  sys.a0 = project_initial_data(B0, E0, group, P);
  sys.forcing = project_forcing(f, g, group);
  sys.modes = std::move(group);
  return sys;
}

MatrixXc transport_generator(const BCoefficients& b, const Wavevector& kappa) {
  const auto m = static_cast<Eigen::Index>(b.size());
  const Vec3c k = kTwoPi * Vec3(kappa[0], kappa[1], kappa[2]).cast<cplx>();
  MatrixXc g(m, m);
  for (Eigen::Index l = 0; l < m; ++l) {
    for (Eigen::Index q = 0; q < m; ++q) g(l, q) = b[l][q].transpose() * k;
  }
  return g;
}

VectorXc amplitude_at(const MatrixXc& generator, const VectorXc& a0, const VectorXc& f, double t) {
  // generator = -i H with H Hermitian; a(t) = V (e^{-iDt} V^H a0 + phi(D, t) V^H f).
  const MatrixXc h = kI * generator;
  Eigen::SelfAdjointEigenSolver<MatrixXc> es(0.5 * (h + h.adjoint()));
  if (es.info() != Eigen::Success) throw NumericalError("amplitude system: eigendecomposition failed");
  const VectorXc ca = es.eigenvectors().adjoint() * a0;
  const VectorXc cf = es.eigenvectors().adjoint() * f;
  VectorXc out(a0.size());
  for (Eigen::Index i = 0; i < a0.size(); ++i) {
    const double d = es.eigenvalues()(i);
    const cplx e = std::exp(-kI * d * t);
    const cplx phi = std::abs(d * t) < 1e-12 ? cplx(t) : (1.0 - e) / (kI * d);
    out(i) = e * ca(i) + phi * cf(i);
  }
  return es.eigenvectors() * out;
}

AmplitudeSolution solve_amplitude_system(const AmplitudeSystem& sys, const std::vector<double>& times) {
  AmplitudeSolution sol;
  sol.times = times;
  const auto m = static_cast<Eigen::Index>(sys.multiplicity());
  std::set<Wavevector> kappas;
  for (const auto& [k, v] : sys.a0) kappas.insert(k);
  for (const auto& [k, v] : sys.forcing) kappas.insert(k);
  for (const Wavevector& k : kappas) {
    const VectorXc a0 = sys.a0.count(k) ? sys.a0.at(k) : VectorXc::Zero(m);
    const VectorXc f = sys.forcing.count(k) ? sys.forcing.at(k) : VectorXc::Zero(m);
    const MatrixXc gen = transport_generator(sys.b, k);
    auto& series = sol.values[k];
    for (double t : times) series.push_back(amplitude_at(gen, a0, f, t));
  }
  return sol;
}

std::vector<double> uniform_nodes(double T, int nt) {
  if (nt < 2) throw InputError("need at least two time nodes");
  std::vector<double> t(nt);
  for (int i = 0; i < nt; ++i) t[i] = T * i / (nt - 1);
  return t;
}

}  // namespace hommax
