#include "predilect/model.hpp"

#include <algorithm>

#include "predilect/errors.hpp"
#include "predilect/gradcheck.hpp"

namespace predilect {

namespace {
constexpr std::uint64_t kInitStream = 0x696e6974;  // "init"
}

Model Model::init(const World& world, std::uint64_t seed) {
  Rng rng = make_rng(seed, {kInitStream});
  Model m;
  m.n = world.n();
  m.d = world.d();
  m.fundus = Encoder::init(Modality::kFundus, m.d, rng);
  m.oct = Encoder::init(Modality::kOct, m.d, rng);
  std::vector<std::string> corpus;
  for (const auto& spec : world.classes)
    corpus.insert(corpus.end(), spec.prompt_bank.begin(), spec.prompt_bank.end());
  m.text = TextVocabulary::build(corpus, m.d, rng);
  m.predilection = PredilectionMatrix::init(m.n, m.d, rng);
  m.head = AttentionHead::init(m.d);
  return m;
}

std::vector<Parameter*> Model::parameters() {
  return {&fundus.weight, &fundus.bias,       &oct.weight, &oct.bias, &text.embedding,
          &predilection.logits, &head.w_q, &head.w_k, &head.w_v};
}

std::vector<const Parameter*> Model::parameters() const {
  auto ps = const_cast<Model*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

PipelineVars pipeline_forward(Tape& tape, Model& model, const TripletBatch& batch, const LossConfig& cfg) {
  if (batch.samples.size() < 2) throw ContractError("pipeline: batch needs at least 2 samples");
  std::vector<Var> fundus, gated, text, refined;
  for (const Sample& s : batch.samples) {
    Var f_f = encode(tape, model.fundus, s.fundus_raw);
    Var f_o = encode(tape, model.oct, s.oct_raw);
    Var f_t = encode_text(tape, model.text, s.prompt, model.n);
    Var f_op = training_query(tape, model.predilection, f_o);
    fundus.push_back(pool(f_f));
    gated.push_back(pool(f_op));
    text.push_back(pool(f_t));
    if (cfg.aux_weight > 0.0) refined.push_back(pool(cross_attend(tape, model.head, f_op, f_t).refined));
  }
  PipelineVars out;
  out.pooled = {ad::stack_rows(fundus), ad::stack_rows(gated), ad::stack_rows(text)};
  out.loss = total_loss(out.pooled, cfg.weights);
  if (cfg.aux_weight > 0.0) {
    out.refined = ad::stack_rows(refined);
    Var aux = contrastive_loss(out.pooled.fundus, out.refined, cfg.weights.tau, cfg.weights.symmetric);
    out.loss = ad::add(out.loss, ad::scale(aux, cfg.aux_weight));
  }
  return out;
}

double pipeline_loss(const Model& model, const TripletBatch& batch, const LossConfig& cfg) {
  Tape tape(Tape::Mode::kInference);
  // Inference tapes copy parameter values and never write back.
  return pipeline_forward(tape, const_cast<Model&>(model), batch, cfg).loss.scalar();
}

Matrix pooled_fundus(const Model& model, const Matrix& fundus_raw) {
  return pool(encode(model.fundus, fundus_raw));
}

GradCheckReport check_pipeline_gradients(const Model& model, const TripletBatch& batch, const LossConfig& cfg,
                                         double step, BackwardFault fault) {
  Model work = model;
  work.zero_grad();
  {
    Tape tape;
    tape.set_fault(fault);
    tape.backward(pipeline_forward(tape, work, batch, cfg).loss);
  }
  GradCheckReport report;
  auto params = work.parameters();
  for (Parameter* p : params) {
    const Matrix original = p->value;
    auto f = [&](const Matrix& x) {
      p->value = x;
      const double loss = pipeline_loss(work, batch, cfg);
      p->value = original;
      return loss;
    };
    const Matrix numeric = finite_diff_grad(f, original, step);
    const double err = relative_error(p->grad, numeric);
    report.entries.push_back({p->name, err});
    report.max_relative_error = std::max(report.max_relative_error, err);
  }
  return report;
}

}  // namespace predilect
