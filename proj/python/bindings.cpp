#include "sparsekey/core.hpp"
#include "sparsekey/experiments.hpp"
#include "sparsekey/graphon.hpp"
#include "sparsekey/langevin.hpp"
#include "sparsekey/positivity.hpp"
#include "sparsekey/secrecy.hpp"
#include "sparsekey/sparse_coder.hpp"
#include "sparsekey/spd.hpp"

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace sparsekey;

namespace {

SmallGraph graph_from_edges(int n_vertices, const std::vector<std::pair<int, int>>& edges) {
  return SmallGraph(n_vertices, edges);
}

}  // namespace

PYBIND11_MODULE(_sparsekey, m) {
  m.doc() = "Chance-constrained sparse secret-key generation toolkit";

  py::class_<RandomSource>(m, "RandomSource")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream_id") = 0)
      .def("next_u64", &RandomSource::next_u64)
      .def("uniform01", &RandomSource::uniform01)
      .def("normal", &RandomSource::normal)
      .def("derive", &RandomSource::derive, py::arg("sub_stream"));

  py::class_<Thresholds>(m, "Thresholds")
      .def(py::init<>())
      .def_readwrite("lambda0", &Thresholds::lambda0)
      .def_readwrite("lambda1", &Thresholds::lambda1)
      .def_readwrite("lambda2", &Thresholds::lambda2)
      .def_readwrite("lambda3", &Thresholds::lambda3)
      .def_readwrite("lambda4", &Thresholds::lambda4)
      .def_readwrite("lambda5", &Thresholds::lambda5)
      .def_readwrite("lambda6", &Thresholds::lambda6)
      .def_readwrite("lambda7", &Thresholds::lambda7)
      .def_readwrite("lambda8", &Thresholds::lambda8)
      .def_readwrite("lambda9", &Thresholds::lambda9)
      .def_readwrite("nu1", &Thresholds::nu1)
      .def_readwrite("nu2", &Thresholds::nu2)
      .def_readwrite("gamma0", &Thresholds::gamma0)
      .def_readwrite("alpha", &Thresholds::alpha);

  m.def("distortion", &distortion, py::arg("a"), py::arg("b"),
        "Mean squared (Frobenius) distortion between equal-shape matrices.");
  m.def("validate_config", &validate_config, py::arg("thresholds"));
  m.def("blockwise_mean_filter", &blockwise_mean_filter, py::arg("x"), py::arg("block_rows"));

  m.def(
      "sparse_encode",
      [](const Matrix& atoms, const Matrix& data, int budget) {
        const Dictionary dict(atoms, static_cast<int>(atoms.cols()));
        return sparse_encode(dict, DataBatch(data), budget).coefficients;
      },
      py::arg("atoms"), py::arg("data"), py::arg("budget"),
      "Greedy pursuit with unit-norm atoms; returns the coefficient matrix.");

  m.def(
      "solve_p1",
      [](const Matrix& data, const Thresholds& thresholds, double sigma_theta, int iters,
         std::uint64_t seed) {
        RandomSource rng(seed);
        const P1Solution sol =
            solve_p1(DataBatch(data), thresholds, PerturbationModel{sigma_theta}, iters, rng);
        return py::make_tuple(sol.dictionary.atoms, sol.code.coefficients, sol.objective_history);
      },
      py::arg("data"), py::arg("thresholds"), py::arg("sigma_theta"), py::arg("iters"),
      py::arg("seed"), "Alternating sparse coding; returns (atoms, code, objective_history).");

  m.def(
      "ou_step",
      [](const Matrix& state, double gamma0, double noise_scale, double dt, std::uint64_t seed) {
        RandomSource rng(seed);
        return ou_step(state, LangevinParams{gamma0, noise_scale, dt}, rng);
      },
      py::arg("state"), py::arg("gamma0"), py::arg("noise_scale"), py::arg("dt"), py::arg("seed"));

  m.def(
      "simulate_path",
      [](const Matrix& initial, double gamma0, double noise_scale, double dt, int n_steps,
         std::uint64_t seed) {
        RandomSource rng(seed);
        const LangevinPath path =
            simulate_path(initial, LangevinParams{gamma0, noise_scale, dt}, n_steps, rng);
        return py::make_tuple(path.times, path.states);
      },
      py::arg("initial"), py::arg("gamma0"), py::arg("noise_scale"), py::arg("dt"),
      py::arg("n_steps"), py::arg("seed"));

  m.def("picard_window", &picard_window, py::arg("lipschitz"), py::arg("bound"));

  m.def(
      "hom_density",
      [](int nf, const std::vector<std::pair<int, int>>& ef, int ng,
         const std::vector<std::pair<int, int>>& eg) {
        return hom_density(graph_from_edges(nf, ef), graph_from_edges(ng, eg));
      },
      py::arg("n_f"), py::arg("edges_f"), py::arg("n_g"), py::arg("edges_g"),
      "Homomorphism density t(F, G) over explicit edge lists.");

  m.def(
      "density_distortion",
      [](int n1, const std::vector<std::pair<int, int>>& e1, int n2,
         const std::vector<std::pair<int, int>>& e2, int ng,
         const std::vector<std::pair<int, int>>& eg) {
        return density_distortion(graph_from_edges(n1, e1), graph_from_edges(n2, e2),
                                  graph_from_edges(ng, eg));
      },
      py::arg("n_g1"), py::arg("edges_g1"), py::arg("n_g2"), py::arg("edges_g2"), py::arg("n_g"),
      py::arg("edges_g"));

  m.def(
      "binomial_extension",
      [](const Matrix& kernel, int d) { return binomial_extension(StochasticKernel(kernel), d).matrix; },
      py::arg("kernel"), py::arg("d"));

  m.def(
      "mutual_information", [](const Matrix& joint) { return mutual_information(JointPMF(joint)); },
      py::arg("joint"), "Plug-in mutual information of a joint table, in bits.");

  m.def(
      "riemannian_log",
      [](const Matrix& base, const Matrix& point) {
        return riemannian_log(SPDMatrix(base), SPDMatrix(point));
      },
      py::arg("base"), py::arg("point"));
  m.def(
      "riemannian_exp",
      [](const Matrix& base, const Matrix& tangent) {
        return riemannian_exp(SPDMatrix(base), tangent).values;
      },
      py::arg("base"), py::arg("tangent"));
  m.def(
      "tangent_project",
      [](const Matrix& grad, const Matrix& base) { return tangent_project(grad, SPDMatrix(base)); },
      py::arg("ambient_grad"), py::arg("base"));

  m.def("poisson_integral",
        [](const std::vector<std::pair<double, double>>& atoms, double rho, double theta) {
          std::vector<CircleMeasure::Atom> list;
          list.reserve(atoms.size());
          for (const auto& [angle, weight] : atoms) list.push_back({angle, weight});
          return poisson_integral(CircleMeasure(list), rho, theta);
        },
        py::arg("atoms"), py::arg("rho"), py::arg("theta"),
        "Poisson integral of a discrete circle measure given as (angle, weight) pairs.");
  m.def("herglotz_kernel", &herglotz_kernel, py::arg("z"), py::arg("theta_prime"));
  m.def(
      "bochner_check",
      [](const std::function<double(double)>& kernel, const std::vector<double>& points,
         double tol) {
        const BochnerResult res = bochner_check(kernel, points, tol);
        return py::make_tuple(res.positive_semidefinite, res.min_eigenvalue);
      },
      py::arg("kernel"), py::arg("probe_points"), py::arg("tol"));

  m.def(
      "sample_patterns",
      [](int sigma, double psi, int universe, std::uint64_t seed) {
        RandomSource rng(seed);
        const auto [ab, ae] = sample_patterns(sigma, psi, universe, rng);
        return py::make_tuple(ab.indices, ae.indices);
      },
      py::arg("sigma"), py::arg("psi"), py::arg("universe"), py::arg("seed"));
  m.def("mi_bob", &mi_bob, py::arg("omega"));
  m.def("mi_eve", &mi_eve, py::arg("omega"), py::arg("kappa_e"));
  m.def("key_rate", &key_rate, py::arg("psi"), py::arg("sigma"), py::arg("omega_path"),
        py::arg("kappa_e"));
  m.def("hoeffding_bound", &hoeffding_bound, py::arg("n"), py::arg("eps"));
  m.def("outage", &outage, py::arg("rate_samples"), py::arg("lambda8"));
  m.def(
      "alpha_key_check",
      [](const std::vector<int>& key_a, const std::vector<int>& key_b,
         const std::vector<int>& transcript, double alpha, int alphabet_size) {
        const AlphaKeyReport r = alpha_key_check(KeySession{key_a, key_b, transcript}, alpha,
                                                 alphabet_size);
        py::dict out;
        out["agree"] = r.agree;
        out["leakage_ok"] = r.leakage_ok;
        out["uniform"] = r.uniform;
        out["agreement_prob"] = r.agreement_prob;
        out["leakage_bits"] = r.leakage_bits;
        out["entropy_bits"] = r.entropy_bits;
        return out;
      },
      py::arg("key_a"), py::arg("key_b"), py::arg("transcript"), py::arg("alpha"),
      py::arg("alphabet_size"));

  m.def(
      "run_verifiers",
      [](std::uint64_t seed) {
        ExperimentConfig config;
        config.seed = seed;
        const VerifierReport report = run_verifiers(config);
        return py::make_tuple(report.all_pass, report.json);
      },
      py::arg("seed") = 1, "Default-config verification sweep; returns (all_pass, json_report).");
}
