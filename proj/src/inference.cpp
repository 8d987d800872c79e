#include "predilect/inference.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

#include "predilect/errors.hpp"
#include "predilect/metrics.hpp"

namespace predilect {

std::vector<ClassPrototype> build_prototypes(const Model& model, const std::vector<ClassLabel>& classes,
                                             std::string_view tmpl) {
  if (classes.empty()) throw ContractError("build_prototypes: empty class list");
  const Matrix query = inference_query(model.predilection);
  std::vector<ClassPrototype> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const std::string prompt = render_prompt(tmpl, classes[c].name, classes[c].abbr);
    const Matrix text = encode_text(model.text, prompt, model.n);
    const FusionOutput fused = cross_attend(model.head, query, text);
    out.push_back({static_cast<int>(c), pool(fused.refined)});
  }
  return out;
}

Prediction classify(const Model& model, const std::vector<ClassPrototype>& prototypes, const Matrix& fundus_raw) {
  if (prototypes.empty()) throw ContractError("classify: no prototypes");
  if (fundus_raw.rows() != model.n || fundus_raw.cols() != model.d) {
    throw ShapeError("classify: fundus input " + fundus_raw.shape_string() + " but the model expects (" +
                     std::to_string(model.n) + "x" + std::to_string(model.d) + ")");
  }
  const Matrix embedding = pooled_fundus(model, fundus_raw);
  Prediction p;
  double best = -2.0;
  for (const auto& proto : prototypes) {
    const double s = cosine_sim(embedding.row(0), proto.refined_text.row(0));
    p.scores.push_back(s);
    if (s > best || (s == best && proto.class_id < p.class_id)) {
      best = s;
      p.class_id = proto.class_id;
    }
  }
  return p;
}

ClassificationReport evaluate_prototypes(const Model& model, const std::vector<ClassPrototype>& prototypes,
                                         const TripletBatch& test) {
  ClassificationReport r;
  std::vector<std::vector<double>> scores;
  std::vector<int> truth;
  std::size_t correct = 0;
  for (const Sample& s : test.samples) {
    Prediction p = classify(model, prototypes, s.fundus_raw);
    if (p.class_id == s.class_id) ++correct;
    scores.push_back(p.scores);
    truth.push_back(s.class_id);
    r.predictions.push_back(std::move(p));
  }
  r.accuracy = test.samples.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.samples.size());
  const auto sets = one_vs_rest(scores, truth, static_cast<int>(prototypes.size()));
  for (const auto& s : sets) {
    r.auroc.push_back(auroc(s));
    r.auprc.push_back(auprc(s));
  }
  r.macro_auroc = macro_over_classes(sets, [](const ScoredSet& s) { return auroc(s); });
  r.macro_auprc = macro_over_classes(sets, [](const ScoredSet& s) { return auprc(s); });
  return r;
}

ClassificationReport zero_shot_unseen(const Model& model, const std::vector<std::string>& training_names,
                                      const std::vector<DiseaseSpec>& unseen, const TripletBatch& test) {
  std::vector<ClassLabel> labels;
  for (const auto& spec : unseen) {
    if (std::find(training_names.begin(), training_names.end(), spec.name) != training_names.end()) {
      throw ContractError("zero_shot_unseen: class '" + spec.name + "' was seen during training");
    }
    labels.push_back({spec.name, spec.abbr});
  }
  // Re-index test samples onto prototype positions.
  TripletBatch remapped = test;
  for (Sample& s : remapped.samples) {
    auto it = std::find_if(unseen.begin(), unseen.end(), [&](const DiseaseSpec& d) { return d.class_id == s.class_id; });
    if (it == unseen.end()) throw ContractError("zero_shot_unseen: test sample of unknown class " + std::to_string(s.class_id));
    s.class_id = static_cast<int>(it - unseen.begin());
  }
  return evaluate_prototypes(model, build_prototypes(model, labels), remapped);
}

void write_predictions_csv(std::ostream& out, const std::vector<ClassLabel>& classes,
                           const std::vector<std::string>& sample_ids, const std::vector<int>& truth,
                           const std::vector<Prediction>& predictions) {
  auto column = [](std::string name) {
    std::replace(name.begin(), name.end(), ' ', '_');
    std::replace(name.begin(), name.end(), ',', '_');
    return name;
  };
  out << "sample_id,true_class,predicted_class";
  for (const auto& c : classes) out << ",sim_" << column(c.name);
  out << '\n' << std::setprecision(12);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out << sample_ids[i] << ',';
    if (truth[i] >= 0) out << classes[static_cast<std::size_t>(truth[i])].name;
    out << ',' << classes[static_cast<std::size_t>(predictions[i].class_id)].name;
    for (double s : predictions[i].scores) out << ',' << s;
    out << '\n';
  }
}

}  // namespace predilect
