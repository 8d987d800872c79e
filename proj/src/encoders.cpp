#include "predilect/encoders.hpp"

#include <cctype>
#include <cmath>
#include <set>

#include "predilect/errors.hpp"

namespace predilect {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::kFundus: return "fundus";
    case Modality::kOct: return "oct";
    case Modality::kText: return "text";
  }
  return "unknown";
}

Encoder Encoder::init(Modality modality, std::size_t d, Rng& rng) {
  Encoder enc;
  enc.modality = modality;
  const std::string prefix(modality_name(modality));
  enc.weight = Parameter(prefix + "_encoder.weight",
                         gaussian_matrix(d, d, 1.0 / std::sqrt(static_cast<double>(d)), rng));
  enc.bias = Parameter(prefix + "_encoder.bias", Matrix(1, d));
  return enc;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    std::size_t b = 0, e = current.size();
    while (b < e && std::ispunct(static_cast<unsigned char>(current[b]))) ++b;
    while (e > b && std::ispunct(static_cast<unsigned char>(current[e - 1]))) --e;
    if (e > b) out.push_back(current.substr(b, e - b));
    current.clear();
  };
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      flush();
    } else {
      current += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  flush();
  return out;
}

TextVocabulary TextVocabulary::build(const std::vector<std::string>& corpus, std::size_t d, Rng& rng) {
  std::set<std::string> unique;
  for (const auto& text : corpus)
    for (auto& tok : tokenize(text)) unique.insert(std::move(tok));
  std::vector<std::string> tokens{std::string(kUnknownToken)};
  for (const auto& tok : unique) {
    if (tok != kUnknownToken) tokens.push_back(tok);
  }
  Matrix table = gaussian_matrix(tokens.size(), d, 1.0, rng);
  return restore(std::move(tokens), std::move(table));
}

TextVocabulary TextVocabulary::restore(std::vector<std::string> tokens, Matrix embedding) {
  if (tokens.empty() || tokens.front() != kUnknownToken) {
    throw FormatError("vocabulary must start with the reserved unknown token");
  }
  if (embedding.rows() != tokens.size()) {
    throw ShapeError("vocabulary has " + std::to_string(tokens.size()) + " tokens but embedding is " +
                     embedding.shape_string());
  }
  TextVocabulary vocab;
  vocab.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < vocab.tokens_.size(); ++i) {
    if (!vocab.index_.emplace(vocab.tokens_[i], i).second) {
      throw FormatError("duplicate vocabulary token '" + vocab.tokens_[i] + "'");
    }
  }
  vocab.embedding = Parameter("text_encoder.embedding", std::move(embedding));
  return vocab;
}

std::size_t TextVocabulary::index_of(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<std::size_t> TextVocabulary::encode_tokens(std::string_view prompt) const {
  std::vector<std::size_t> ids;
  for (const auto& tok : tokenize(prompt)) ids.push_back(index_of(tok));
  return ids;
}

Var encode(Tape& tape, Encoder& enc, const Matrix& raw) {
  if (raw.cols() != enc.weight.value.rows()) {
    throw ShapeError("encode(" + std::string(modality_name(enc.modality)) + "): input " +
                     raw.shape_string() + " does not match encoder width " +
                     std::to_string(enc.weight.value.rows()));
  }
  Var x = tape.constant(raw);
  return ad::tanh(ad::add_row(ad::matmul(x, tape.parameter(enc.weight)), tape.parameter(enc.bias)));
}

Matrix encode(const Encoder& enc, const Matrix& raw) {
  Tape tape(Tape::Mode::kInference);
  return encode(tape, const_cast<Encoder&>(enc), raw).value();
}

Var encode_text(Tape& tape, TextVocabulary& vocab, std::string_view prompt, std::size_t n) {
  if (n == 0) throw ContractError("encode_text: n must be >= 1");
  auto ids = vocab.encode_tokens(prompt);
  if (ids.empty()) throw ContractError("encode_text: empty prompt");
  return ad::tile_rows(ad::embed_mean(tape.parameter(vocab.embedding), std::move(ids)), n);
}

Matrix encode_text(const TextVocabulary& vocab, std::string_view prompt, std::size_t n) {
  Tape tape(Tape::Mode::kInference);
  return encode_text(tape, const_cast<TextVocabulary&>(vocab), prompt, n).value();
}

}  // namespace predilect
