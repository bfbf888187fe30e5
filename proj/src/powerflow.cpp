#include "flexgrid/powerflow.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "flexgrid/errors.hpp"

namespace flexgrid {
namespace {

using Complex = std::complex<double>;

Eigen::MatrixXcd build_admittance(const GridModel& grid) {
  const auto n = static_cast<Eigen::Index>(grid.bus_count());
  Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < grid.branch_count(); ++k) {
    const Branch& br = grid.branches()[k];
    const Complex ys = 1.0 / Complex(br.resistance, br.reactance);
    const auto f = static_cast<Eigen::Index>(grid.from_index(k));
    const auto t = static_cast<Eigen::Index>(grid.to_index(k));
    y(f, f) += ys;
    y(t, t) += ys;
    y(f, t) -= ys;
    y(t, f) -= ys;
  }
  return y;
}

}  // namespace

OperatingPoint solve_power_flow(const GridModel& grid, std::span<const double> p,
                                std::span<const double> q, const PowerFlowOptions& options) {
  const std::size_t n = grid.bus_count();
  if (p.size() != n || q.size() != n) {
    throw ValidationError("power flow: injection vectors must have one entry per bus");
  }
  const std::size_t slack = grid.slack_index();
  const Eigen::MatrixXcd ybus = build_admittance(grid);

  // Unknown ordering: angles of non-slack buses, then their magnitudes.
  std::vector<Eigen::Index> pq;
  for (std::size_t i = 0; i < n; ++i) {
    if (i != slack) pq.push_back(static_cast<Eigen::Index>(i));
  }
  const auto m = static_cast<Eigen::Index>(pq.size());

  Eigen::VectorXd vm = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  Eigen::VectorXd va = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));

  const auto mismatch_of = [&](Eigen::VectorXd& f) {
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) v(i) = std::polar(vm(i), va(i));
    const Eigen::VectorXcd s = v.cwiseProduct((ybus * v).conjugate());
    f.resize(2 * m);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto i = pq[static_cast<std::size_t>(k)];
      f(k) = -p[static_cast<std::size_t>(i)] - s(i).real();
      f(m + k) = -q[static_cast<std::size_t>(i)] - s(i).imag();
    }
    return m == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
  };

  Eigen::VectorXd f;
  double norm = mismatch_of(f);
  int iterations = 0;
  bool polished = false;
  while (true) {
    if (!std::isfinite(norm)) {
      throw NonConvergenceError("power flow diverged", norm, iterations);
    }
    if (norm <= options.tolerance) {
      // One extra Newton step after reaching tolerance drives the residual to
      // round-off, which keeps finite-difference sensitivities clean.
      if (polished || norm == 0.0 || iterations >= options.max_iterations) break;
      polished = true;
    } else if (iterations >= options.max_iterations) {
      throw NonConvergenceError("power flow did not converge within " +
                                    std::to_string(options.max_iterations) +
                                    " iterations (mismatch " + std::to_string(norm) + " p.u.)",
                                norm, iterations);
    }

    const Eigen::VectorXcd ibus = ybus * v;
    Eigen::MatrixXd jac(2 * m, 2 * m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const auto i = pq[static_cast<std::size_t>(r)];
      for (Eigen::Index c = 0; c < m; ++c) {
        const auto k = pq[static_cast<std::size_t>(c)];
        Complex ds_dva;
        Complex ds_dvm;
        const Complex unit_k = v(k) / vm(k);
        if (i == k) {
          ds_dva = Complex(0.0, 1.0) * v(i) * std::conj(ibus(i) - ybus(i, i) * v(i));
          ds_dvm = v(i) * std::conj(ybus(i, i) * unit_k) + std::conj(ibus(i)) * unit_k;
        } else {
          ds_dva = Complex(0.0, 1.0) * v(i) * std::conj(-ybus(i, k) * v(k));
          ds_dvm = v(i) * std::conj(ybus(i, k) * unit_k);
        }
        jac(r, c) = ds_dva.real();
        jac(r, m + c) = ds_dvm.real();
        jac(m + r, c) = ds_dva.imag();
        jac(m + r, m + c) = ds_dvm.imag();
      }
    }
    const Eigen::VectorXd dx = jac.partialPivLu().solve(f);
    for (Eigen::Index k = 0; k < m; ++k) {
      const auto i = pq[static_cast<std::size_t>(k)];
      va(i) += dx(k);
      vm(i) += dx(m + k);
    }
    ++iterations;
    norm = mismatch_of(f);
    if (norm > 1e6 || (vm.array() <= 0.0).any()) {
      throw NonConvergenceError("power flow diverged (mismatch " + std::to_string(norm) + " p.u.)",
                                norm, iterations);
    }
  }

  OperatingPoint op;
  op.v_mag.assign(vm.data(), vm.data() + n);
  op.v_ang.assign(va.data(), va.data() + n);
  op.p.assign(p.begin(), p.end());
  op.q.assign(q.begin(), q.end());
  op.mismatch = norm;
  op.iterations = iterations;
  op.i_mag.resize(grid.branch_count());
  op.i_from.resize(grid.branch_count());
  for (std::size_t k = 0; k < grid.branch_count(); ++k) {
    const Branch& br = grid.branches()[k];
    const Complex z(br.resistance, br.reactance);
    const Complex current =
        (v(static_cast<Eigen::Index>(grid.from_index(k))) - v(static_cast<Eigen::Index>(grid.to_index(k)))) / z;
    op.i_from[k] = current;
    op.i_mag[k] = std::abs(current);
    op.losses += br.resistance * std::norm(current);
  }
  const auto s = static_cast<Eigen::Index>(slack);
  const Complex s_net = v(s) * std::conj((ybus.row(s) * v)(0));
  op.p_slack = s_net.real() + p[slack];
  op.q_slack = s_net.imag() + q[slack];
  op.s_grid = std::hypot(op.p_slack, op.q_slack);
  return op;
}

OperatingPoint operating_point_from_frame(const GridModel& grid, const MeasurementFrame& frame,
                                          const PowerFlowOptions& options) {
  OperatingPoint op = solve_power_flow(grid, frame.p, frame.q, options);
  op.timestamp = frame.timestamp;
  for (std::size_t b = 0; b < grid.bus_count() && b < frame.v_measured.size(); ++b) {
    if (frame.v_measured[b]) {
      op.v_mag[b] = *frame.v_measured[b];
      op.source = StateSource::measured;
    }
  }
  for (std::size_t k = 0; k < grid.branch_count() && k < frame.i_measured.size(); ++k) {
    if (frame.i_measured[k]) {
      op.i_mag[k] = *frame.i_measured[k];
      op.source = StateSource::measured;
    }
  }
  return op;
}

}  // namespace flexgrid
