#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "predilect/autodiff.hpp"
#include "predilect/random.hpp"

namespace predilect {

enum class Modality { kFundus, kOct, kText };
std::string_view modality_name(Modality m);

// Single affine + tanh layer applied row-wise: tanh(raw * W + b).
struct Encoder {
  Modality modality = Modality::kFundus;
  Parameter weight;  // d x d
  Parameter bias;    // 1 x d

  static Encoder init(Modality modality, std::size_t d, Rng& rng);
};

// Lower-cased whitespace tokens with leading/trailing punctuation stripped.
std::vector<std::string> tokenize(std::string_view text);

class TextVocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  TextVocabulary() = default;
  // Index 0 is reserved for unknown tokens; the rest are sorted.
  static TextVocabulary build(const std::vector<std::string>& corpus, std::size_t d, Rng& rng);
  // Rebuilds from a stored token list (index order) and embedding table.
  static TextVocabulary restore(std::vector<std::string> tokens, Matrix embedding);

  std::size_t index_of(std::string_view token) const;
  std::vector<std::size_t> encode_tokens(std::string_view prompt) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  Parameter embedding;  // V x d

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Throws ShapeError when raw.cols() differs from the encoder width.
Var encode(Tape& tape, Encoder& enc, const Matrix& raw);
Matrix encode(const Encoder& enc, const Matrix& raw);

// Mean-pools the prompt's token embeddings into one row and tiles it n times.
// Throws ContractError on an empty prompt or n == 0.
Var encode_text(Tape& tape, TextVocabulary& vocab, std::string_view prompt, std::size_t n);
Matrix encode_text(const TextVocabulary& vocab, std::string_view prompt, std::size_t n);

}  // namespace predilect
