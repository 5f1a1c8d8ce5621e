#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ragshield/core.hpp"

namespace ragshield {

struct EmbeddingServiceConfig {
    std::string base_url;
    std::string model_name;
    std::chrono::milliseconds timeout{30000};
    std::size_t max_batch = 64;
    std::size_t retry_limit = 2;
    std::chrono::milliseconds initial_backoff{250};
    /// Sent as "Authorization: Bearer <token>" when non-empty. Defaults to
    /// RAGSHIELD_EMBED_TOKEN via `with_env_token`.
    std::string auth_token;

    void validate() const;
    EmbeddingServiceConfig& with_env_token();
};

/// POSTs texts in batches to {base_url}/embed and returns one vector per text
/// in input order. 5xx responses and transport failures are retried with
/// exponential backoff.
std::vector<Vector> embed_texts(const std::vector<std::string>& texts,
                                const EmbeddingServiceConfig& svc);

/// One retrieval record, before similarity caches are computed. Missing
/// embeddings are empty vectors.
struct RetrievalRecord {
    Query query;
    std::vector<Passage> passages;
};

RetrievalRecord parse_record(const nlohmann::json& doc);
RetrievalRecord parse_record_line(std::string_view line);

/// Fills missing embeddings from the service, or throws MissingEmbedding when
/// none is configured. Then validates and builds the set.
RetrievedSet assemble(RetrievalRecord record,
                      const std::optional<EmbeddingServiceConfig>& svc = std::nullopt);

nlohmann::json to_json(const RetrievedSet& set);
/// Single-line JSON with round-trip exact doubles.
std::string to_record_line(const RetrievedSet& set);

/// Streams newline-delimited records one at a time. Blank lines are skipped.
class RecordReader {
public:
    explicit RecordReader(const std::filesystem::path& path);
    explicit RecordReader(std::istream& in);

    /// Next non-blank line, or nullopt at end of input.
    std::optional<std::string> next_line();
    /// 1-based line number of the last line returned.
    std::size_t line_number() const noexcept { return line_no_; }

private:
    std::ifstream file_;
    std::istream* in_ = nullptr;
    std::size_t line_no_ = 0;
};

/// Loads every record of a file. ParseError messages carry the line number;
/// validation errors name the offending query or passage.
std::vector<RetrievedSet> load_retrieval_file(
    const std::filesystem::path& path,
    const std::optional<EmbeddingServiceConfig>& svc = std::nullopt);

void write_retrieval_file(const std::filesystem::path& path, const std::vector<RetrievedSet>& sets);

}  // namespace ragshield
