#include "intent_explorer/memory/embedding.hpp"

#include <cmath>
#include <cstdint>

#include "intent_explorer/error.hpp"

namespace intent_explorer::memory {

namespace {

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

HashedNgramEmbedder::HashedNgramEmbedder(std::size_t dimension, std::size_t n) : dimension_(dimension), n_(n) {
    if (dimension_ == 0 || n_ == 0) throw ValidationError("embedder dimension and n must be positive");
}

EmbeddingVector HashedNgramEmbedder::embed(const std::string& text) const {
    if (text.empty()) throw ValidationError("cannot embed empty text");
    EmbeddingVector v(dimension_, 0.0);
    const std::string_view view(text);
    if (view.size() < n_) {
        v[fnv1a(view) % dimension_] += 1.0;
    } else {
        for (std::size_t i = 0; i + n_ <= view.size(); ++i) v[fnv1a(view.substr(i, n_)) % dimension_] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) throw ValidationError("embedding dimensions differ");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace intent_explorer::memory
