#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "subtask_forge/analysis.hpp"
#include "subtask_forge/cli.hpp"
#include "subtask_forge/domains.hpp"
#include "subtask_forge/factorize.hpp"
#include "subtask_forge/hierarchy.hpp"
#include "subtask_forge/io.hpp"
#include "subtask_forge/multitask.hpp"

namespace py = pybind11;
namespace sf = subtask_forge;

namespace {

sf::Lmdp lmdp_from_string(const std::string& text) {
  return sf::io::lmdp_from_json(sf::io::Json::parse(text));
}

py::dict factorization_dict(const sf::Factorization& f) {
  py::dict d;
  d["D"] = f.D;
  d["W"] = f.W;
  d["beta"] = f.beta;
  d["k"] = f.k;
  d["seed"] = f.seed;
  d["iterations"] = f.iterations;
  d["iteration_limit_hit"] = f.iteration_limit_hit;
  d["divergence"] = f.divergence;
  d["normalized_divergence"] = f.normalized_divergence;
  d["divergence_trace"] = f.divergence_trace;
  d["restart_divergences"] = f.restart_divergences;
  return d;
}

sf::Factorization factorization_from(const Eigen::MatrixXd& D, const Eigen::MatrixXd& W, double beta) {
  sf::Factorization f;
  f.D = D;
  f.W = W;
  f.beta = beta;
  f.k = static_cast<std::size_t>(D.cols());
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Subtask discovery in multitask linearly-solvable MDPs";
  m.attr("__version__") = sf::cli::kVersion;

  py::register_exception<sf::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<sf::InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<sf::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "build_domain",
      [](const std::string& spec_json) {
        const sf::Domain d = sf::build_domain(sf::io::domain_spec_from_json(sf::io::Json::parse(spec_json)));
        return sf::io::lmdp_to_json(d.lmdp, &d.spec).dump();
      },
      py::arg("spec_json"), "Domain-spec JSON text to Lmdp JSON text.");

  m.def(
      "domain_regions",
      [](const std::string& spec_json) {
        return sf::build_domain(sf::io::domain_spec_from_json(sf::io::Json::parse(spec_json))).region;
      },
      py::arg("spec_json"), "Ground-truth region of each interior state.");

  m.def(
      "validate",
      [](const std::string& lmdp_json) { return sf::validate_lmdp(lmdp_from_string(lmdp_json)).violations; },
      py::arg("lmdp_json"), "List of violated invariants (empty when valid).");

  m.def(
      "solve",
      [](const std::string& lmdp_json, const Eigen::VectorXd& q_b) {
        return sf::solve_finite_exit(lmdp_from_string(lmdp_json), q_b);
      },
      py::arg("lmdp_json"), py::arg("q_b"), "Desirability for one boundary reward vector.");

  m.def(
      "solve_task_basis",
      [](const std::string& lmdp_json, double q_floor) {
        const sf::Lmdp l = lmdp_from_string(lmdp_json);
        return sf::solve_task_basis(l, sf::build_uniform_task_basis(l), q_floor).Z;
      },
      py::arg("lmdp_json"), py::arg("q_floor") = 1e-12, "Z for the uniform task basis.");

  m.def("nnls", &sf::nnls, py::arg("A"), py::arg("b"), py::arg("max_iter") = 0);

  m.def("beta_divergence", &sf::beta_divergence, py::arg("A"), py::arg("B"), py::arg("beta"));

  m.def(
      "nmf",
      [](const Eigen::MatrixXd& Z, std::size_t k, double beta, std::uint64_t seed, std::size_t restarts,
         std::size_t max_iter, double tol) {
        return factorization_dict(sf::nmf(Z, k, beta, {max_iter, tol, restarts, seed}));
      },
      py::arg("Z"), py::arg("k"), py::arg("beta") = 1.0, py::arg("seed") = 0, py::arg("restarts") = 10,
      py::arg("max_iter") = sf::NmfOptions{}.max_iter, py::arg("tol") = sf::NmfOptions{}.tol);

  m.def(
      "elbow",
      [](const std::vector<double>& f, const std::string& rule) {
        return sf::elbow(f, rule == "first" ? sf::ElbowRule::first_satisfying : sf::ElbowRule::sharpest);
      },
      py::arg("f"), py::arg("rule") = "sharpest");

  m.def(
      "select_k",
      [](const Eigen::MatrixXd& Z, double beta, std::size_t k_max, std::uint64_t seed, std::size_t restarts) {
        sf::NmfOptions opts;
        opts.seed = seed;
        opts.restarts = restarts;
        const sf::KSelection s = sf::select_k(Z, beta, k_max, opts);
        py::dict d;
        d["f"] = s.f;
        d["clipped"] = s.clipped;
        d["k_star"] = s.k_star;
        return d;
      },
      py::arg("Z"), py::arg("beta") = 1.0, py::arg("k_max") = 10, py::arg("seed") = 0, py::arg("restarts") = 10);

  m.def(
      "assignment_purity",
      [](const Eigen::MatrixXd& D, const std::vector<int>& labels) {
        return sf::assignment_purity(D, labels).purity;
      },
      py::arg("D"), py::arg("labels"));

  m.def(
      "boundary_score",
      [](const Eigen::MatrixXd& D, const Eigen::MatrixXd& W, const std::string& lmdp_json) {
        return sf::boundary_score(factorization_from(D, W, 1.0), lmdp_from_string(lmdp_json));
      },
      py::arg("D"), py::arg("W"), py::arg("lmdp_json"));

  m.def(
      "subtask_distance",
      [](const Eigen::MatrixXd& D1, const Eigen::MatrixXd& D2) {
        const Eigen::MatrixXd W1 = Eigen::MatrixXd::Ones(D1.cols(), 1);
        const Eigen::MatrixXd W2 = Eigen::MatrixXd::Ones(D2.cols(), 1);
        return sf::subtask_distance(factorization_from(D1, W1, 1.0), factorization_from(D2, W2, 1.0));
      },
      py::arg("D1"), py::arg("D2"));

  m.def("circular_spread", &sf::circular_spread, py::arg("p"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "subtask_forge");
        std::ostringstream out, err;
        const int code = sf::cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a CLI command in-process; returns (exit_code, stdout, stderr).");
}
