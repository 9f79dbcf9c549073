#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dsagent {

class TraceSink;

/// Dense embedding vector as produced by a provider; never renormalized.
struct Embedding {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
    friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// Black-box text embedder.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual Embedding embed(std::string_view text) = 0;
    virtual std::string name() const = 0;
};

/// Offline deterministic embedder: lowercase alphanumeric tokens hashed (FNV-1a) into
/// `dim` buckets of token counts.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dim = 64);
    Embedding embed(std::string_view text) override;
    std::string name() const override { return "hash"; }

    /// Token stream the embedder hashes; exposed for tests.
    static std::vector<std::string> tokenize(std::string_view text);
    static std::uint64_t fnv1a(std::string_view token);

private:
    std::size_t dim_;
};

struct HttpEndpoint {
    std::string base_url;  // e.g. https://api.openai.com/v1
    std::string api_key;
    double timeout_s = 120.0;
};

/// Embeddings endpoint speaking `{"model","input"}` -> `{"data":[{"embedding":[...]}]}`.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(HttpEndpoint endpoint, std::string model);
    Embedding embed(std::string_view text) override;
    std::string name() const override { return "http:" + model_; }

private:
    HttpEndpoint endpoint_;
    std::string model_;
};

/// Front door for all embedding calls made by a run.
///
/// Validates provider output (non-empty text, finite, non-zero, constant dimension),
/// truncates over-long inputs, memoizes by text so the same string is embedded at most
/// once per run, and records every provider call in the trace with its purpose.
class Embedder {
public:
    explicit Embedder(std::shared_ptr<EmbeddingProvider> provider, std::size_t max_chars = 8000);

    Embedding embed(std::string_view text, std::string_view purpose = "retrieve");

    /// Whether `text` would be cut before embedding.
    bool truncates(std::string_view text) const { return text.size() > max_chars_; }
    std::size_t max_chars() const { return max_chars_; }

    /// Provider calls issued (cache hits excluded).
    std::size_t calls() const { return calls_; }
    std::size_t calls(std::string_view purpose) const;

    void set_trace(TraceSink* trace) { trace_ = trace; }

private:
    std::shared_ptr<EmbeddingProvider> provider_;
    std::size_t max_chars_;
    std::size_t dim_ = 0;
    std::size_t calls_ = 0;
    std::unordered_map<std::string, std::size_t> calls_by_purpose_;
    std::unordered_map<std::string, Embedding> cache_;
    TraceSink* trace_ = nullptr;
};

}  // namespace dsagent
