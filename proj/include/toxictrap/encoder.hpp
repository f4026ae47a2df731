#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "toxictrap/resources.hpp"

namespace toxictrap {

using SentenceVector = std::vector<double>;

// Text -> fixed-size vector for sentence-similarity constraints. nullopt
// means "no usable representation"; constraints treat it as a failure.
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;
  virtual std::vector<std::optional<SentenceVector>> encode(std::span<const std::string> texts) const = 0;
};

// Dimension-wise mean of the in-vocabulary word vectors.
class MeanVectorEncoder final : public SentenceEncoder {
 public:
  explicit MeanVectorEncoder(const EmbeddingStore& store) : store_(&store) {}
  std::vector<std::optional<SentenceVector>> encode(std::span<const std::string> texts) const override;

 private:
  const EmbeddingStore* store_;
};

inline constexpr std::string_view kMaskToken = "[MASK]";

// Fill-in-the-blank word suggestions. `masked_text` has word `mask_index`
// replaced by kMaskToken.
class MaskedLanguageModel {
 public:
  virtual ~MaskedLanguageModel() = default;
  virtual std::vector<std::string> fill_mask(const std::string& masked_text, std::size_t mask_index,
                                             std::size_t top_k) const = 0;
};

}  // namespace toxictrap
