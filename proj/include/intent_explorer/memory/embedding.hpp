#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace intent_explorer::memory {

using EmbeddingVector = std::vector<double>;

class Embedder {
public:
    virtual ~Embedder() = default;
    // Deterministic and unit-norm. Throws ValidationError on empty text.
    virtual EmbeddingVector embed(const std::string& text) const = 0;
    virtual std::size_t dimension() const = 0;
};

// Character n-gram counts hashed (FNV-1a) into `dimension` buckets, then
// L2-normalized. Texts shorter than n contribute one gram.
class HashedNgramEmbedder final : public Embedder {
public:
    explicit HashedNgramEmbedder(std::size_t dimension = 128, std::size_t n = 3);
    EmbeddingVector embed(const std::string& text) const override;
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
    std::size_t n_;
};

// dot(a, b) / (|a| |b|), accumulated in index order.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace intent_explorer::memory
