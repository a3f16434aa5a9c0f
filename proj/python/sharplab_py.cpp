// Python bindings. Matrices cross the boundary as float64 numpy arrays.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "sharplab/closedform.hpp"
#include "sharplab/dataset.hpp"
#include "sharplab/error.hpp"
#include "sharplab/gradcheck.hpp"
#include "sharplab/model_io.hpp"
#include "sharplab/network.hpp"
#include "sharplab/numkit.hpp"
#include "sharplab/records.hpp"
#include "sharplab/report.hpp"
#include "sharplab/sweep.hpp"
#include "sharplab/trainer.hpp"

namespace py = pybind11;
using namespace sharplab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() == 1) {
    const auto n = static_cast<std::size_t>(a.shape(0));
    return Matrix(1, n, std::vector<double>(a.data(), a.data() + n));
  }
  if (a.ndim() != 2) throw ShapeError("expected a 1-D or 2-D array, got " + std::to_string(a.ndim()) + "-D");
  const auto r = static_cast<std::size_t>(a.shape(0));
  const auto c = static_cast<std::size_t>(a.shape(1));
  return Matrix(r, c, std::vector<double>(a.data(), a.data() + r * c));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  if (m.size() > 0) std::memcpy(out.mutable_data(), m.data().data(), m.size() * sizeof(double));
  return out;
}

std::vector<double> to_vector(const Array& a) { return {a.data(), a.data() + a.size()}; }

py::array_t<std::uint8_t> labels_array(const std::vector<std::uint8_t>& v) {
  return py::array_t<std::uint8_t>(static_cast<py::ssize_t>(v.size()), v.data());
}

}  // namespace

PYBIND11_MODULE(_sharplab, m) {
  m.doc() = "Output sharpness experiments: MLPs, Jacobians, closed-form readouts and sweeps.";

  // Library errors surface as ValueError subclasses named after their kind.
  static py::exception<Error> error(m, "SharplabError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (e.kind() + ": " + e.what()).c_str());
    }
  });

  py::enum_<Activation>(m, "Activation")
      .value("identity", Activation::identity)
      .value("relu", Activation::relu)
      .value("tanh", Activation::tanh)
      .value("softmax", Activation::softmax);
  py::enum_<LossKind>(m, "LossKind")
      .value("squared_error", LossKind::squared_error)
      .value("categorical_crossentropy", LossKind::categorical_crossentropy);
  py::enum_<JacobianEndpoint>(m, "JacobianEndpoint")
      .value("outputs", JacobianEndpoint::outputs)
      .value("logits", JacobianEndpoint::logits);

  // numkit
  m.def("pearson", [](const Array& x, const Array& y) { return pearson(to_vector(x), to_vector(y)); });
  m.def("pseudoinverse", [](const Array& a, double tol) { return to_array(pseudoinverse(to_matrix(a), tol)); },
        py::arg("a"), py::arg("tol") = 1e-10);
  m.def("frobenius_norm", [](const Array& a) { return frobenius_norm(to_matrix(a)); });
  m.def("derive_seed", [](std::uint64_t master, const std::string& tag) { return derive_seed(master, tag); });
  m.def("rng_normal", [](std::uint64_t seed, std::size_t rows, std::size_t cols, double mean, double std) {
    Rng rng(seed);
    return to_array(rng_normal(rng, rows, cols, mean, std));
  });

  // dataset
  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("train_x", [](const Dataset& d) { return to_array(d.train_x); })
      .def_property_readonly("train_y", [](const Dataset& d) { return labels_array(d.train_y); })
      .def_property_readonly("train_y_onehot", [](const Dataset& d) { return to_array(d.train_y_onehot); })
      .def_property_readonly("test_x", [](const Dataset& d) { return to_array(d.test_x); })
      .def_property_readonly("test_y", [](const Dataset& d) { return labels_array(d.test_y); })
      .def_property_readonly("test_y_onehot", [](const Dataset& d) { return to_array(d.test_y_onehot); })
      .def_readonly("train_indices", &Dataset::train_indices)
      .def_readonly("test_indices", &Dataset::test_indices)
      .def_readonly("seed", &Dataset::seed);
  m.def("prepare_mnist", &prepare_mnist, py::arg("mnist_dir"), py::arg("train_size") = 1000, py::arg("seed") = 0);
  m.def("make_split",
        [](const Array& images, const std::vector<std::uint8_t>& labels, std::size_t train_size, std::uint64_t seed) {
          return make_split(to_matrix(images), labels, train_size, seed);
        });
  m.def("save_cache", &save_cache);
  m.def("load_cache", &load_cache);
  m.def("downsample_7x7", [](const Array& image) { return downsample_7x7(to_vector(image)); });

  // network
  py::class_<Mlp>(m, "Mlp")
      .def_readonly("layer_sizes", &Mlp::layer_sizes)
      .def_readonly("hidden_activation", &Mlp::hidden_activation)
      .def_readonly("output_activation", &Mlp::output_activation)
      .def_property_readonly("weights",
                             [](const Mlp& n) {
                               py::list out;
                               for (const auto& w : n.weights) out.append(to_array(w));
                               return out;
                             })
      .def_readonly("biases", &Mlp::biases)
      .def("set_weights", [](Mlp& n, std::size_t layer, const Array& w) {
        if (layer >= n.depth()) throw ParameterError("layer index out of range");
        Matrix mw = to_matrix(w);
        if (mw.rows() != n.weights[layer].rows() || mw.cols() != n.weights[layer].cols()) {
          throw ShapeError("weights " + mw.shape_string() + " do not match " + n.weights[layer].shape_string());
        }
        n.weights[layer] = std::move(mw);
      })
      .def_property_readonly("parameter_count", &Mlp::parameter_count)
      .def_property_readonly("weight_count", &Mlp::weight_count);
  m.def("init_mlp",
        [](std::vector<std::size_t> sizes, Activation hidden, Activation output, std::uint64_t seed) {
          Rng rng(seed);
          return init_mlp(std::move(sizes), hidden, output, rng);
        },
        py::arg("layer_sizes"), py::arg("hidden"), py::arg("output"), py::arg("seed"));
  m.def("make_mlp", &make_mlp);
  m.def("predict", [](const Mlp& net, const Array& x) { return to_array(predict_batch(net, to_matrix(x))); });
  m.def("jacobian",
        [](const Mlp& net, const Array& x, JacobianEndpoint e) { return to_array(jacobian(net, to_vector(x), e).beta0); },
        py::arg("net"), py::arg("x"), py::arg("endpoint") = JacobianEndpoint::outputs);
  m.def("sharpness",
        [](const Mlp& net, const Array& x, std::size_t cap, JacobianEndpoint e) {
          return sharpness(net, to_matrix(x), cap, e);
        },
        py::arg("net"), py::arg("inputs"), py::arg("sample_cap") = 1000, py::arg("endpoint") = JacobianEndpoint::outputs);
  m.def("weight_norm", [](const Mlp& net) {
    const WeightNorm w = weight_norm(net);
    return py::make_tuple(w.raw_l2, w.normalized);
  });
  m.def("save_model", &save_model);
  m.def("load_model", &load_model);

  py::class_<GradCheckResult>(m, "GradCheckResult")
      .def_readonly("nets", &GradCheckResult::nets)
      .def_readonly("max_weight_error", &GradCheckResult::max_weight_error)
      .def_readonly("max_bias_error", &GradCheckResult::max_bias_error)
      .def_readonly("max_jacobian_error", &GradCheckResult::max_jacobian_error)
      .def_readonly("max_abs_diff", &GradCheckResult::max_abs_diff)
      .def("max_error", &GradCheckResult::max_error);
  m.def("gradient_check", &run_gradient_check, py::arg("hidden"), py::arg("output"), py::arg("loss"),
        py::arg("nets") = 20, py::arg("seed") = 0, py::arg("h") = 1e-6);

  // trainer
  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("lr0", &TrainConfig::lr0)
      .def_readwrite("lr_decay", &TrainConfig::lr_decay)
      .def_readwrite("momentum", &TrainConfig::momentum)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("divergence_threshold", &TrainConfig::divergence_threshold);
  m.def("decay_for", &decay_for);
  m.def("train",
        [](const Mlp& net, const Array& x, const Array& y, LossKind loss, const TrainConfig& cfg) {
          TrainResult r = train(net, to_matrix(x), to_matrix(y), loss, cfg);
          return py::make_tuple(std::move(r.net), r.history.train_loss, r.history.train_accuracy);
        });

  // closed form
  m.def("anchored_least_squares",
        [](const Array& phi, const Array& y, const Array& anchor, double tol) {
          return to_array(anchored_least_squares(to_matrix(phi), to_matrix(y), to_matrix(anchor), tol).w);
        },
        py::arg("phi"), py::arg("y"), py::arg("anchor"), py::arg("tol") = 1e-10);
  m.def("make_anchor", [](std::uint64_t seed, std::size_t d, std::size_t c, double norm) {
    return to_array(make_anchor(seed, d, c, norm));
  });
  py::class_<LinearSweepConfig>(m, "LinearSweepConfig")
      .def(py::init<>())
      .def_readwrite("dims", &LinearSweepConfig::dims)
      .def_readwrite("norm_min", &LinearSweepConfig::norm_min)
      .def_readwrite("norm_max", &LinearSweepConfig::norm_max)
      .def_readwrite("count", &LinearSweepConfig::count)
      .def_readwrite("seed", &LinearSweepConfig::seed)
      .def_readwrite("sample_cap", &LinearSweepConfig::sample_cap);
  m.def("run_linear_sweep", [](const Dataset& d, const LinearSweepConfig& cfg) { return run_linear_sweep(d, cfg).records; });

  // sweeps and records
  py::class_<RunRecord>(m, "RunRecord")
      .def(py::init<>())
      .def_readwrite("family", &RunRecord::family)
      .def_readwrite("depth", &RunRecord::depth)
      .def_readwrite("param_target", &RunRecord::param_target)
      .def_readwrite("units", &RunRecord::units)
      .def_readwrite("realized_params", &RunRecord::realized_params)
      .def_readwrite("seed_init", &RunRecord::seed_init)
      .def_readwrite("seed_shuffle", &RunRecord::seed_shuffle)
      .def_readwrite("raw_norm", &RunRecord::raw_norm)
      .def_readwrite("normalized_norm", &RunRecord::normalized_norm)
      .def_readwrite("sharpness", &RunRecord::sharpness)
      .def_readwrite("sharpness_basis", &RunRecord::sharpness_basis)
      .def_readwrite("test_acc", &RunRecord::test_acc)
      .def_readwrite("test_loss", &RunRecord::test_loss)
      .def_readwrite("train_acc", &RunRecord::train_acc)
      .def_readwrite("train_loss", &RunRecord::train_loss)
      .def_readwrite("status", &RunRecord::status)
      .def_readwrite("wall_time_s", &RunRecord::wall_time_s)
      .def("__eq__", [](const RunRecord& a, const RunRecord& b) { return a == b; });
  m.def("solve_units", [](std::size_t depth, std::size_t target) { return solve_units(depth, target); });
  m.def("run_family_sweep",
        [](const Dataset& d, const std::string& family, const std::string& scale, std::uint64_t master_seed,
           std::size_t workers, std::size_t epochs) {
          SweepConfig cfg = sweep_preset(parse_family(family), parse_scale(scale), master_seed);
          cfg.workers = workers;
          if (epochs > 0) {
            cfg.train.epochs = epochs;
            cfg.train.lr_decay = decay_for(epochs);
          }
          py::gil_scoped_release release;
          return run_family_sweep(d, cfg);
        },
        py::arg("data"), py::arg("family"), py::arg("scale") = "ci", py::arg("master_seed") = 0,
        py::arg("workers") = 1, py::arg("epochs") = 0);
  m.def("write_runs", py::overload_cast<const std::vector<RunRecord>&, const std::filesystem::path&>(&write_runs));
  m.def("read_runs", py::overload_cast<const std::filesystem::path&>(&read_runs));
  m.def("correlation_report_json",
        [](const std::vector<RunRecord>& recs) { return correlation_report(recs).to_json().dump(2); });
  m.def("render_figure", [](const std::vector<RunRecord>& recs, const std::string& name) {
    const auto fig = find_figure(name);
    if (!fig) throw ParameterError("unknown figure '" + name + "'");
    return render_figure(recs, *fig);
  });
  m.def("figure_names", &figure_names);
}
