#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "predilect/model.hpp"

namespace predilect {

struct ClassLabel {
  std::string name;
  std::string abbr;
};

struct ClassPrototype {
  int class_id = 0;
  Matrix refined_text;  // 1 x d, pooled refined cue
};

// For each class: render the template, encode the prompt, cross-attend with
// sigmoid(P) as the query source and pool the refined cue. Throws ContractError
// on an empty class list.
std::vector<ClassPrototype> build_prototypes(const Model& model, const std::vector<ClassLabel>& classes,
                                             std::string_view tmpl = kPrimaryTemplate);

struct Prediction {
  int class_id = 0;
  std::vector<double> scores;  // cosine similarity per prototype, in prototype order
};

// Argmax of cosine similarity between the pooled fundus embedding and each
// prototype; ties go to the lowest class_id.
Prediction classify(const Model& model, const std::vector<ClassPrototype>& prototypes, const Matrix& fundus_raw);

struct ClassificationReport {
  std::vector<Prediction> predictions;
  double accuracy = 0.0;
  std::vector<double> auroc;  // per class, one-vs-rest
  std::vector<double> auprc;
  double macro_auroc = 0.0;
  double macro_auprc = 0.0;
};

// Classifies every sample and scores against the true class ids, which index
// into the prototype list.
ClassificationReport evaluate_prototypes(const Model& model, const std::vector<ClassPrototype>& prototypes,
                                         const TripletBatch& test);

// Prototypes are built for the unseen classes only; test class ids must be the
// unseen specs' ids. Throws ContractError if an unseen name matches one in
// training_names.
ClassificationReport zero_shot_unseen(const Model& model, const std::vector<std::string>& training_names,
                                      const std::vector<DiseaseSpec>& unseen, const TripletBatch& test);

// sample_id,true_class,predicted_class,sim_<class>...
void write_predictions_csv(std::ostream& out, const std::vector<ClassLabel>& classes,
                           const std::vector<std::string>& sample_ids, const std::vector<int>& truth,
                           const std::vector<Prediction>& predictions);

}  // namespace predilect
