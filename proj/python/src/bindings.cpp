#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "predilect/checkpoint.hpp"
#include "predilect/config.hpp"
#include "predilect/errors.hpp"
#include "predilect/experiments.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace predilect;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

std::vector<ClassLabel> labels_of(const World& w) {
  std::vector<ClassLabel> out;
  for (const DiseaseSpec& c : w.classes) out.push_back({c.name, c.abbr});
  return out;
}

RunConfig config_from(const py::object& obj) {
  if (obj.is_none()) return RunConfig{};
  const std::string text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return parse_run_config(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Predilection-matrix pipeline: synthetic world, training, inference and verification";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<DegenerateLabelsError>(m, "DegenerateLabelsError", base.ptr());
  py::register_exception<TrainingDivergedError>(m, "TrainingDivergedError", base.ptr());

  py::class_<World>(m, "World")
      .def_property_readonly("num_classes", [](const World& w) { return w.classes.size(); })
      .def_property_readonly("n", &World::n)
      .def_property_readonly("d", &World::d)
      .def_property_readonly("class_names",
                             [](const World& w) {
                               std::vector<std::string> names;
                               for (const auto& c : w.classes) names.push_back(c.name);
                               return names;
                             })
      .def("site_mask", [](const World& w, std::size_t c) { return to_array(w.classes.at(c).site_mask); })
      .def("prompt_bank", [](const World& w, std::size_t c) { return w.classes.at(c).prompt_bank; })
      .def("to_json", [](const World& w) { return world_to_json(w).dump(); });

  m.def(
      "make_world",
      [](const py::object& cfg) { return make_world(config_from(py::dict("world"_a = cfg)).world); },
      py::arg("config") = py::dict(), "Build the synthetic world from a dict of world settings.");

  m.def(
      "sample_batch",
      [](const World& w, int batch, double noise, std::uint64_t seed) {
        const TripletBatch b = sample_batch(w, batch, noise, seed);
        py::list out;
        for (const Sample& s : b.samples) {
          out.append(py::dict("fundus"_a = to_array(s.fundus_raw), "oct"_a = to_array(s.oct_raw),
                              "prompt"_a = s.prompt, "class_id"_a = s.class_id));
        }
        return out;
      },
      py::arg("world"), py::arg("batch"), py::arg("noise"), py::arg("seed"));

  m.def("render_prompt", &render_prompt, py::arg("template"), py::arg("name"), py::arg("abbr"));

  m.def(
      "contrastive_loss",
      [](const Array& a, const Array& t, double tau, bool symmetric) {
        return contrastive_loss(to_matrix(a), to_matrix(t), tau, symmetric);
      },
      py::arg("anchors"), py::arg("targets"), py::arg("tau") = 0.07, py::arg("symmetric") = false);

  m.def(
      "total_loss",
      [](const Array& fundus, const Array& gated_oct, const Array& text, double lambda1, double lambda2,
         double tau) {
        Tape tape(Tape::Mode::kInference);
        const BatchEmbeddings b{tape.constant(to_matrix(fundus)), tape.constant(to_matrix(gated_oct)),
                                tape.constant(to_matrix(text))};
        return total_loss(b, LossWeights{lambda1, lambda2, tau, false}).scalar();
      },
      py::arg("fundus"), py::arg("gated_oct"), py::arg("text"), py::arg("lambda1") = 0.4,
      py::arg("lambda2") = 0.6, py::arg("tau") = 0.07);

  m.def(
      "cross_attend",
      [](const Array& q, const Array& t, const Array& wq, const Array& wk, const Array& wv) {
        AttentionHead head = AttentionHead::init(static_cast<std::size_t>(q.shape(1)));
        head.w_q.value = to_matrix(wq);
        head.w_k.value = to_matrix(wk);
        head.w_v.value = to_matrix(wv);
        const FusionOutput f = cross_attend(head, to_matrix(q), to_matrix(t));
        return py::make_tuple(to_array(f.attention), to_array(f.refined));
      },
      py::arg("query_source"), py::arg("text"), py::arg("w_q"), py::arg("w_k"), py::arg("w_v"),
      "Returns (attention, refined).");

  py::class_<Model>(m, "Model")
      .def_static("init", &Model::init, py::arg("world"), py::arg("seed"))
      .def_readonly("n", &Model::n)
      .def_readonly("d", &Model::d)
      .def("tensors",
           [](const Model& model) {
             py::dict out;
             for (const Parameter* p : model.parameters()) out[py::str(p->name)] = to_array(p->value);
             return out;
           })
      .def("predilection", [](const Model& model) { return to_array(inference_query(model.predilection)); })
      .def("pooled_fundus", [](const Model& model, const Array& x) { return to_array(pooled_fundus(model, to_matrix(x))); })
      .def("checksum", [](const Model& model) { return checksum(model); })
      .def(
          "classify",
          [](const Model& model, const std::vector<std::pair<std::string, std::string>>& classes,
             const Array& fundus) {
            std::vector<ClassLabel> labels;
            for (const auto& [name, abbr] : classes) labels.push_back({name, abbr});
            const Prediction p = classify(model, build_prototypes(model, labels), to_matrix(fundus));
            return py::make_tuple(p.class_id, p.scores);
          },
          py::arg("classes"), py::arg("fundus"), "classes: list of (name, abbr). Returns (class_id, scores).");

  m.def(
      "train",
      [](const World& w, const py::object& cfg) {
        const RunConfig rc = config_from(py::dict("train"_a = cfg));
        TrainResult r = train(w, rc.train);
        return py::make_tuple(std::move(r.model), r.epoch_loss);
      },
      py::arg("world"), py::arg("config") = py::dict(), "Returns (model, per-epoch mean loss).");

  m.def(
      "evaluate_zero_shot",
      [](const Model& model, const World& w, int count, std::uint64_t seed) {
        const ClassificationReport r =
            evaluate_prototypes(model, build_prototypes(model, labels_of(w)), held_out_split(w, count, seed));
        return py::dict("accuracy"_a = r.accuracy, "macro_auroc"_a = r.macro_auroc,
                        "macro_auprc"_a = r.macro_auprc);
      },
      py::arg("model"), py::arg("world"), py::arg("count") = 200, py::arg("seed") = 1);

  m.def(
      "save_checkpoint",
      [](const Model& model, const World& w, const std::filesystem::path& path, const py::object& cfg) {
        const RunConfig rc = config_from(py::dict("train"_a = cfg));
        Checkpoint::from_model(model, w, rc.train).save(path);
      },
      py::arg("model"), py::arg("world"), py::arg("path"), py::arg("train_config") = py::dict());
  m.def(
      "load_checkpoint", [](const std::filesystem::path& path) { return Checkpoint::load(path).to_model(); },
      py::arg("path"));

  m.def(
      "noise_sweep",
      [](const py::object& cfg) {
        const RankReport r = noise_sweep(config_from(py::dict("verify"_a = cfg)).verify);
        py::list rows;
        for (const RankLevel& l : r.levels) {
          rows.append(py::dict("noise_std"_a = l.noise_std, "mean_tau"_a = l.mean_tau, "std_tau"_a = l.std_tau,
                               "exact_fraction"_a = l.exact_fraction));
        }
        return rows;
      },
      py::arg("config") = py::dict());

  m.def(
      "kendall_tau", [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau(x, y); },
      py::arg("x"), py::arg("y"));
  m.def(
      "auroc",
      [](const std::vector<double>& s, const std::vector<int>& l) { return auroc(ScoredSet{s, l}); },
      py::arg("scores"), py::arg("labels"));
  m.def(
      "auprc",
      [](const std::vector<double>& s, const std::vector<int>& l) { return auprc(ScoredSet{s, l}); },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "gradcheck",
      [](bool inject_fault) {
        const GradCheckReport r = pipeline_gradcheck(inject_fault ? BackwardFault::kSigmoid : BackwardFault::kNone);
        py::dict per_tensor;
        for (const GradCheckEntry& e : r.entries) per_tensor[py::str(e.name)] = e.relative_error;
        return py::make_tuple(r.max_relative_error, per_tensor);
      },
      py::arg("inject_fault") = false, "Returns (max relative error, per-tensor errors).");
}
