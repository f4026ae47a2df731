#include "toxictrap/encoder.hpp"

#include "toxictrap/text.hpp"

namespace toxictrap {

std::vector<std::optional<SentenceVector>> MeanVectorEncoder::encode(std::span<const std::string> texts) const {
  std::vector<std::optional<SentenceVector>> out;
  out.reserve(texts.size());
  const std::size_t dim = store_->dimension().value_or(0);
  for (const auto& text : texts) {
    SentenceVector sum(dim, 0.0);
    std::size_t hits = 0;
    for (const auto& tok : tokenize(text)) {
      const auto v = store_->vector(tok.text);
      if (!v) continue;
      for (std::size_t d = 0; d < dim; ++d) sum[d] += (*v)[d];
      ++hits;
    }
    if (hits == 0) {
      out.emplace_back(std::nullopt);
      continue;
    }
    for (auto& x : sum) x /= static_cast<double>(hits);
    out.emplace_back(std::move(sum));
  }
  return out;
}

}  // namespace toxictrap
