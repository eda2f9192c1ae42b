#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "varbesov/bayes.hpp"
#include "varbesov/experiment.hpp"
#include "varbesov/map.hpp"
#include "varbesov/mittag_leffler.hpp"

namespace py = pybind11;
using namespace varbesov;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {a.data(), a.data() + a.size()};
}

Array to_array(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

// Flat coefficient arrays have length 2^{J+1}; recover J.
int level_for(std::size_t count) {
  int J = 0;
  while (WaveletCoefficients::count_for_level(J) < count) ++J;
  if (WaveletCoefficients::count_for_level(J) != count) {
    throw std::invalid_argument("coefficient count must be a power of two >= 2");
  }
  return J;
}

WaveletCoefficients coeffs_from(const Array& a, Convention c) {
  auto v = to_vector(a);
  const int J = level_for(v.size());
  return WaveletCoefficients(J, c, std::move(v));
}

Convention convention_from(const std::string& name) {
  if (name == "u") return Convention::U;
  if (name == "lambda") return Convention::Lambda;
  throw std::invalid_argument("convention must be \"u\" or \"lambda\"");
}

ModularSpec modular_spec(const ExponentField& s, const ExponentField& q) {
  ModularSpec spec;
  spec.s = s;
  spec.q = q;
  return spec;
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Variable-index Besov priors, spectral forward maps and Bayesian inversion";

  py::class_<ExponentField>(m, "ExponentField")
      .def_static("constant", &ExponentField::constant, py::arg("value"))
      .def_static("trig", &ExponentField::trig, py::arg("c0"), py::arg("cos") = std::vector<double>{},
                  py::arg("sin") = std::vector<double>{})
      .def_static("ramp", &ExponentField::ramp, py::arg("low"), py::arg("high"), py::arg("rise_at") = 0.25,
                  py::arg("fall_at") = 0.75, py::arg("width") = 0.1)
      .def("__call__", [](const ExponentField& f, double x) { return f(x); })
      .def("__call__", [](const ExponentField& f, const Array& x) {
        Array out(x.request().shape);
        for (py::ssize_t i = 0; i < x.size(); ++i) out.mutable_data()[i] = f(x.data()[i]);
        return out;
      })
      .def_property_readonly("lower_bound", &ExponentField::lower_bound)
      .def_property_readonly("upper_bound", &ExponentField::upper_bound)
      .def("is_constant", &ExponentField::is_constant)
      .def("to_json", [](const ExponentField& f) { return json_to_py(exponent_to_json(f)); });

  m.def("gap_condition", &gap_condition, py::arg("t"), py::arg("s"), py::arg("q"), py::arg("dimension") = 1);
  m.def("regularity_threshold", &regularity_threshold, py::arg("s"), py::arg("q"), py::arg("dimension") = 1);

  py::class_<HoelderBudget>(m, "HoelderBudget")
      .def(py::init([](double b, double a, double alpha, double theta) {
             HoelderBudget h{b, a, alpha, theta};
             h.validate();
             return h;
           }),
           py::arg("b") = 0.5, py::arg("a") = 1.5, py::arg("alpha") = 1.0, py::arg("theta") = 1.0)
      .def_readonly("b", &HoelderBudget::b)
      .def_readonly("a", &HoelderBudget::a)
      .def_readonly("alpha", &HoelderBudget::alpha)
      .def_readonly("theta", &HoelderBudget::theta);

  // Wavelets. Coefficients cross the boundary as flat arrays of length
  // 2^{J+1}: [F, M_0, M_1 (2), ..., M_J (2^J)].
  py::class_<WaveletFamily>(m, "WaveletFamily")
      .def(py::init<int>(), py::arg("order") = 4)
      .def_static("for_exponents", &WaveletFamily::for_exponents)
      .def_property_readonly("order", &WaveletFamily::order)
      .def("scaling_value", &WaveletFamily::scaling_value)
      .def("wavelet_value", &WaveletFamily::wavelet_value);

  m.def(
      "analyze", [](const Array& samples, const WaveletFamily& family) {
        return to_array(analyze(to_vector(samples), family).flat());
      },
      py::arg("samples"), py::arg("family") = WaveletFamily(4),
      "Inner-product (u) coefficients of a periodic signal sampled at i/n.");
  m.def(
      "synthesize", [](const Array& coeffs, const WaveletFamily& family, std::size_t grid_size) {
        const auto c = coeffs_from(coeffs, Convention::U);
        return synthesize(c, family, grid_size ? grid_size : c.size());
      },
      py::arg("coeffs"), py::arg("family") = WaveletFamily(4), py::arg("grid_size") = 0);
  m.def(
      "convert", [](const Array& coeffs, const std::string& from, const std::string& to) {
        return to_array(coeffs_from(coeffs, convention_from(from)).to(convention_from(to)).flat());
      },
      py::arg("coeffs"), py::arg("source"), py::arg("target"), "Switch between the \"u\" and \"lambda\" scalings.");

  m.def(
      "modular_value", [](const Array& lambda, const ExponentField& s, const ExponentField& q) {
        return modular_value(coeffs_from(lambda, Convention::Lambda), modular_spec(s, q));
      },
      py::arg("lambda_coeffs"), py::arg("s"), py::arg("q"));
  m.def(
      "luxemburg_norm", [](const Array& lambda, const ExponentField& s, const ExponentField& q) {
        return luxemburg_norm(coeffs_from(lambda, Convention::Lambda), modular_spec(s, q));
      },
      py::arg("lambda_coeffs"), py::arg("s"), py::arg("q"));

  // Prior.
  py::class_<PriorSpec>(m, "PriorSpec")
      .def(py::init([](ExponentField s, ExponentField q, double delta, int truncation, std::uint64_t seed,
                       int wavelet_order, std::size_t kappa_nodes) {
             PriorSpec spec;
             spec.s = std::move(s);
             spec.q = std::move(q);
             spec.delta = delta;
             spec.truncation = truncation;
             spec.seed = seed;
             spec.family = wavelet_order > 0 ? WaveletFamily(wavelet_order)
                                             : WaveletFamily::for_exponents(spec.s, spec.q);
             spec.kappa_nodes = uniform_kappa(kappa_nodes);
             spec.validate();
             return spec;
           }),
           py::arg("s"), py::arg("q"), py::arg("delta") = 1.0, py::arg("truncation") = 6, py::arg("seed") = 0,
           py::arg("wavelet_order") = 4, py::arg("kappa_nodes") = 64)
      .def_readonly("s", &PriorSpec::s)
      .def_readonly("q", &PriorSpec::q)
      .def_readonly("delta", &PriorSpec::delta)
      .def_readonly("truncation", &PriorSpec::truncation)
      .def_readonly("seed", &PriorSpec::seed)
      .def_readonly("family", &PriorSpec::family);

  py::class_<PriorModel>(m, "PriorModel")
      .def(py::init<PriorSpec>())
      .def_property_readonly("spec", &PriorModel::spec)
      .def_property_readonly("dimension", &PriorModel::dimension)
      .def_property_readonly("gammas", &PriorModel::gammas)
      .def(
          "draw", [](const PriorModel& p, std::uint64_t i) { return to_array(p.draw(i).coeffs.flat()); },
          py::arg("sample_index") = 0, "u coefficients of prior draw number `sample_index`.")
      .def("draw_xi", &PriorModel::draw_xi, py::arg("sample_index") = 0);

  m.def(
      "sample_xi", [](const ExponentField& q, std::size_t count, std::uint64_t seed) {
        const XiSampler sampler(q, uniform_kappa());
        auto rng = CounterRng::keyed(seed, {streams::kPrior});
        return sample_xi(sampler, count, rng);
      },
      py::arg("q"), py::arg("count"), py::arg("seed") = 0);
  m.def(
      "fernique_exp_moment", [](const PriorModel& p, const ExponentField& t, double alpha, std::size_t n) {
        const auto e = fernique_exp_moment(p, t, alpha, n);
        return py::make_tuple(e.mean, e.standard_error);
      },
      py::arg("model"), py::arg("t"), py::arg("alpha"), py::arg("samples"));
  m.def(
      "prior_modular_mean", [](const PriorModel& p, const ExponentField& t, std::size_t n) {
        const auto e = prior_modular_mean(p, t, n);
        return py::make_tuple(e.mean, e.standard_error);
      },
      py::arg("model"), py::arg("t"), py::arg("samples"));
  m.def("hoelder_condition", &hoelder_condition, py::arg("s"), py::arg("q"), py::arg("budget"),
        py::arg("dimension") = 1);
  m.def(
      "empirical_hoelder_exponent", [](const Array& u, const WaveletFamily& family, std::size_t grid) {
        return empirical_hoelder_exponent(coeffs_from(u, Convention::U), family, grid);
      },
      py::arg("coeffs"), py::arg("family"), py::arg("grid") = 8192);

  // Forward maps.
  py::class_<ForwardModel>(m, "ForwardModel")
      .def_static("heat", &ForwardModel::heat, py::arg("time"), py::arg("cutoff_modes") = 64)
      .def_static("fractional", &ForwardModel::fractional, py::arg("alpha"), py::arg("beta"), py::arg("time"),
                  py::arg("cutoff_modes") = 64)
      .def("multiplier", &ForwardModel::multiplier)
      .def_readonly("time", &ForwardModel::time)
      .def_readonly("alpha", &ForwardModel::alpha)
      .def_readonly("beta", &ForwardModel::beta)
      .def_readonly("cutoff_modes", &ForwardModel::cutoff_modes);

  m.def(
      "propagate", [](const Array& samples, const ForwardModel& model) {
        return propagate(to_vector(samples), ForwardOperator(model));
      },
      py::arg("samples"), py::arg("model"), "Apply the forward map to a periodic signal sampled at i/n.");
  m.def(
      "observe_coefficients",
      [](const Array& u, const WaveletFamily& family, const ForwardModel& model, const std::vector<double>& points) {
        const auto spectrum = propagate(coeffs_from(u, Convention::U), family, ForwardOperator(model));
        return observe(spectrum, points);
      },
      py::arg("coeffs"), py::arg("family"), py::arg("model"), py::arg("points"),
      "Noise-free point observations of the propagated wavelet expansion.");
  m.def("mittag_leffler", &mittag_leffler, py::arg("alpha"), py::arg("z"), py::arg("tol") = 1e-12);
  m.def("smoothing_sup", &smoothing_sup, py::arg("alpha"), py::arg("beta"), py::arg("k_max"));

  // Posterior.
  py::class_<PosteriorHandle>(m, "Posterior")
      .def(py::init([](const PriorSpec& prior, const ForwardModel& model, std::vector<double> points,
                       const Eigen::MatrixXd& gamma, const Eigen::VectorXd& y) {
             ObservationSetup setup;
             setup.points = std::move(points);
             setup.gamma = gamma;
             return PosteriorHandle(PriorModel(prior), ForwardOperator(model), Observation(setup), y);
           }),
           py::arg("prior"), py::arg("model"), py::arg("points"), py::arg("gamma"), py::arg("data"))
      .def_property_readonly("dimension", &PosteriorHandle::dimension)
      .def_property_readonly("data", &PosteriorHandle::data)
      .def_property_readonly("observation_matrix", &PosteriorHandle::observation_matrix)
      .def("with_data", &PosteriorHandle::with_data)
      .def("truncated", &PosteriorHandle::truncated)
      .def(
          "potential", [](const PosteriorHandle& h, const Array& u) {
            return h.potential(coeffs_from(u, Convention::U));
          },
          py::arg("coeffs"), "Data misfit of u coefficients, zero at u = 0.")
      .def("potential_xi", &PosteriorHandle::potential_xi);

  m.def(
      "simulate_data",
      [](const PriorSpec& prior, const ForwardModel& model, const std::vector<double>& points,
         const Eigen::MatrixXd& gamma, const Array& u, std::uint64_t seed) {
        ObservationSetup setup;
        setup.points = points;
        setup.gamma = gamma;
        const auto c = coeffs_from(u, Convention::U);
        const ForwardOperator op(model);
        const Spectrum source = WaveletSpectrumMap(prior.family, c.max_level(), op.cutoff()).apply(c);
        return simulate_data(source, op, Observation(setup), seed);
      },
      py::arg("prior"), py::arg("model"), py::arg("points"), py::arg("gamma"), py::arg("truth"), py::arg("seed"));
  m.def(
      "estimate_z", [](const PosteriorHandle& h, std::size_t n) {
        const auto z = estimate_z(h, n);
        return py::dict(py::arg("z") = z.z, py::arg("standard_error") = z.standard_error, py::arg("log_z") = z.log_z);
      },
      py::arg("posterior"), py::arg("samples"));
  m.def(
      "hellinger", [](const PosteriorHandle& a, const PosteriorHandle& b, std::size_t n) {
        const auto d = hellinger(a, b, n);
        return py::make_tuple(d.distance, d.standard_error);
      },
      py::arg("a"), py::arg("b"), py::arg("samples"));
  m.def(
      "truncation_study", [](const PosteriorHandle& h, const std::vector<int>& levels, std::size_t n) {
        py::list rows;
        for (const auto& r : truncation_study(h, levels, n)) rows.append(py::make_tuple(r.level, r.distance, r.standard_error));
        return rows;
      },
      py::arg("posterior"), py::arg("levels"), py::arg("samples"));
  m.def(
      "run_mcmc",
      [](const PosteriorHandle& h, std::size_t steps, std::size_t burn_in, double proposal_scale, std::uint64_t seed,
         bool adapt, std::size_t thin) {
        ChainConfig c;
        c.steps = steps;
        c.burn_in = burn_in;
        c.proposal_scale = proposal_scale;
        c.seed = seed;
        c.adapt = adapt;
        c.thin = thin;
        const auto r = run_mcmc(h, c);
        return py::dict(py::arg("xi") = r.xi, py::arg("potential") = r.potential,
                        py::arg("acceptance_rate") = r.acceptance_rate, py::arg("final_scale") = r.final_scale,
                        py::arg("block_size") = r.block_size);
      },
      py::arg("posterior"), py::arg("steps") = 10000, py::arg("burn_in") = 1000, py::arg("proposal_scale") = 0.5,
      py::arg("seed") = 0, py::arg("adapt") = true, py::arg("thin") = 1);

  // MAP.
  m.def(
      "solve_map",
      [](const PosteriorHandle& h, double epsilon, std::size_t max_iterations, double gradient_tolerance,
         std::size_t restarts) {
        MapProblem p(h);
        p.epsilon = epsilon;
        p.max_iterations = max_iterations;
        p.gradient_tolerance = gradient_tolerance;
        p.restarts = restarts;
        const auto s = solve_map(p);
        return py::dict(py::arg("lambda_coeffs") = to_array(s.coeffs.flat()),
                        py::arg("u_coeffs") = to_array(s.coeffs.to(Convention::U).flat()),
                        py::arg("value") = s.i_value, py::arg("iterations") = s.iterations,
                        py::arg("converged") = s.converged, py::arg("start_values") = s.start_values);
      },
      py::arg("posterior"), py::arg("epsilon") = 1e-6, py::arg("max_iterations") = 20000,
      py::arg("gradient_tolerance") = 1e-8, py::arg("restarts") = 3);
  m.def(
      "map_objective", [](const PosteriorHandle& h, const Array& u) {
        return objective(MapProblem(h), coeffs_from(u, Convention::U));
      },
      py::arg("posterior"), py::arg("coeffs"));

  // Experiments and files.
  m.def(
      "validate_config", [](const std::string& text) {
        py::list out;
        for (const auto& i : validate_config(parse_config_text(text), text)) {
          out.append(py::dict(py::arg("path") = i.path, py::arg("message") = i.message, py::arg("fatal") = i.fatal,
                              py::arg("line") = i.line));
        }
        return out;
      },
      py::arg("text"));
  m.def(
      "run_subcommand",
      [](const std::string& name, const std::string& text, const std::filesystem::path& out, unsigned threads) {
        const auto config = ExperimentConfig::from_json(parse_config_text(text), text);
        return json_to_py(run_subcommand(name, config, out, threads));
      },
      py::arg("name"), py::arg("config_text"), py::arg("out"), py::arg("threads") = 1,
      "Run a CLI subcommand in-process; returns the manifest.");
  m.def("subcommand_names", &subcommand_names);
  m.def(
      "read_coefficients", [](const std::filesystem::path& path) {
        const bool csv = path.extension() == ".csv";
        const auto stored = csv ? read_coefficients_csv(path) : read_coefficients_binary(path);
        return py::make_tuple(to_array(stored.coeffs.flat()), json_to_py(stored.header));
      },
      py::arg("path"), "Read a .bin or .csv coefficient file: (values, header).");

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
