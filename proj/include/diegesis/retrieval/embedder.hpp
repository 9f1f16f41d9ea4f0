#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "diegesis/core/error.hpp"
#include "diegesis/core/hash.hpp"
#include "diegesis/core/text.hpp"
#include "diegesis/core/utf8.hpp"
#include "diegesis/remote/client.hpp"

namespace diegesis {

using Vector = std::vector<double>;

// Maps text to an L2-unit vector of fixed dimension. Implementations are
// deterministic and safe to call from several threads.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual Vector embed(std::string_view text) const = 0;
};

inline double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) fail(ErrorKind::invalid_argument, "vector dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void normalize_in_place(Vector& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n == 0.0) fail(ErrorKind::invalid_argument, "cannot normalize a zero vector");
  for (double& x : v) x /= n;
}

// Cosine of two unit vectors, mapped into [0,1] by max(0, .).
inline double unit_cosine_score(const Vector& a, const Vector& b) {
  return std::clamp(dot(a, b), 0.0, 1.0);
}

// Character-trigram frequency vector hashed into 256 buckets. Every
// coordinate is non-negative, so cosine already lies in [0,1]. Text is ASCII
// lowercased and padded with one space on each side before windowing over
// Unicode scalars. Empty text maps to the uniform unit vector.
class HashTrigramEmbedder : public Embedder {
 public:
  static constexpr std::size_t kDimension = 256;

  std::size_t dimension() const override { return kDimension; }

  Vector embed(std::string_view text) const override {
    Vector v(kDimension, 0.0);
    const std::u32string padded = U" " + utf8::decode(text::to_lower(text)) + U" ";
    if (text.empty()) {
      std::fill(v.begin(), v.end(), 1.0 / std::sqrt(static_cast<double>(kDimension)));
      return v;
    }
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      const std::string gram = utf8::encode(padded.substr(i, 3));
      v[fnv1a64(gram) % kDimension] += 1.0;
    }
    normalize_in_place(v);
    return v;
  }
};

// Embeddings endpoint client. Results are cached by text because graph item
// keys are embedded once per query otherwise.
class RemoteEmbedder : public Embedder {
 public:
  explicit RemoteEmbedder(remote::Endpoint endpoint, std::size_t dimension = 0)
      : client_(std::move(endpoint)), dimension_(dimension) {}

  std::size_t dimension() const override {
    std::lock_guard lock(mu_);
    if (dimension_ == 0) fail(ErrorKind::config, "embedding dimension unknown before the first call");
    return dimension_;
  }

  Vector embed(std::string_view text) const override {
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(text);
      if (it != cache_.end()) return it->second;
    }
    Vector v = client_.embed(text);
    if (v.empty()) fail(ErrorKind::remote, "empty embedding");
    normalize_in_place(v);
    std::lock_guard lock(mu_);
    if (dimension_ == 0) dimension_ = v.size();
    if (v.size() != dimension_) {
      fail(ErrorKind::remote, "embedding has dimension " + std::to_string(v.size()) + ", expected " +
                                  std::to_string(dimension_));
    }
    cache_.emplace(std::string(text), v);
    return v;
  }

 private:
  remote::ChatClient client_;
  mutable std::mutex mu_;
  mutable std::size_t dimension_;
  mutable std::map<std::string, Vector, std::less<>> cache_;
};

}  // namespace diegesis
