#include "ragshield/ingest.hpp"

namespace ragshield {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& what) {
    throw Error(ErrorCode::ParseError, what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) parse_fail(where + ": missing \"" + key + "\"");
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require(obj, key, where);
    if (!v.is_string()) parse_fail(where + ": \"" + key + "\" must be a string");
    return v.get<std::string>();
}

Vector optional_embedding(const json& obj, const std::string& where) {
    auto it = obj.find("embedding");
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_array()) parse_fail(where + ": \"embedding\" must be an array");
    Vector v;
    v.reserve(it->size());
    for (const auto& x : *it) {
        if (!x.is_number()) parse_fail(where + ": embedding values must be numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace

RetrievalRecord parse_record(const json& doc) {
    if (!doc.is_object()) parse_fail("record must be a JSON object");
    RetrievalRecord rec;

    const json& q = require(doc, "query", "record");
    if (!q.is_object()) parse_fail("\"query\" must be an object");
    rec.query.id = require_string(q, "id", "query");
    rec.query.text = require_string(q, "text", "query '" + rec.query.id + "'");
    rec.query.embedding = optional_embedding(q, "query '" + rec.query.id + "'");

    const json& ps = require(doc, "passages", "query '" + rec.query.id + "'");
    if (!ps.is_array()) parse_fail("\"passages\" must be an array");
    rec.passages.reserve(ps.size());
    for (const auto& p : ps) {
        if (!p.is_object()) parse_fail("passage entries must be objects");
        Passage passage;
        passage.id = require_string(p, "id", "passage");
        const std::string where = "passage '" + passage.id + "'";
        passage.text = require_string(p, "text", where);
        passage.embedding = optional_embedding(p, where);
        if (auto it = p.find("origin"); it != p.end() && !it->is_null()) {
            if (!it->is_string()) parse_fail(where + ": \"origin\" must be a string");
            passage.origin = parse_origin(it->get<std::string>());
            if (!passage.origin) parse_fail(where + ": unknown origin '" + it->get<std::string>() + "'");
        }
        rec.passages.push_back(std::move(passage));
    }
    return rec;
}

RetrievalRecord parse_record_line(std::string_view line) {
    json doc;
    try {
        doc = json::parse(line);
    } catch (const json::parse_error& e) {
        parse_fail(std::string("malformed JSON: ") + e.what());
    }
    return parse_record(doc);
}

RetrievedSet assemble(RetrievalRecord record, const std::optional<EmbeddingServiceConfig>& svc) {
    const std::string query_id = record.query.id;
    std::vector<std::string> missing_texts;
    std::vector<Vector*> slots;
    if (record.query.embedding.empty()) {
        missing_texts.push_back(record.query.text);
        slots.push_back(&record.query.embedding);
    }
    for (auto& p : record.passages) {
        if (p.embedding.empty()) {
            missing_texts.push_back(p.text);
            slots.push_back(&p.embedding);
        }
    }
    if (!missing_texts.empty()) {
        if (!svc) {
            throw Error(ErrorCode::MissingEmbedding,
                        "query '" + record.query.id + "': " + std::to_string(slots.size()) +
                            " embedding(s) missing and no embedding service configured");
        }
        auto vectors = embed_texts(missing_texts, *svc);
        for (std::size_t i = 0; i < slots.size(); ++i) *slots[i] = std::move(vectors[i]);
    }
    try {
        return build_retrieved_set(std::move(record.query), std::move(record.passages));
    } catch (const Error& e) {
        throw Error(e.code(), "query '" + query_id + "': " + e.what());
    }
}

nlohmann::json to_json(const RetrievedSet& set) {
    json doc;
    doc["query"] = {{"id", set.query().id},
                    {"text", set.query().text},
                    {"embedding", set.query().embedding}};
    json passages = json::array();
    for (const auto& p : set.passages()) {
        json entry = {{"id", p.id}, {"text", p.text}, {"embedding", p.embedding}};
        if (p.origin) entry["origin"] = std::string(to_string(*p.origin));
        passages.push_back(std::move(entry));
    }
    doc["passages"] = std::move(passages);
    return doc;
}

std::string to_record_line(const RetrievedSet& set) { return to_json(set).dump(); }

RecordReader::RecordReader(const std::filesystem::path& path) : file_(path) {
    if (!file_) {
        throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    }
    in_ = &file_;
}

RecordReader::RecordReader(std::istream& in) : in_(&in) {}

std::optional<std::string> RecordReader::next_line() {
    std::string line;
    while (std::getline(*in_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
    }
    return std::nullopt;
}

std::vector<RetrievedSet> load_retrieval_file(const std::filesystem::path& path,
                                              const std::optional<EmbeddingServiceConfig>& svc) {
    RecordReader reader(path);
    std::vector<RetrievedSet> sets;
    while (auto line = reader.next_line()) {
        RetrievalRecord rec;
        try {
            rec = parse_record_line(*line);
        } catch (const Error& e) {
            throw Error(e.code(), path.string() + ":" + std::to_string(reader.line_number()) +
                                      ": " + e.what());
        }
        sets.push_back(assemble(std::move(rec), svc));
    }
    return sets;
}

void write_retrieval_file(const std::filesystem::path& path, const std::vector<RetrievedSet>& sets) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
    for (const auto& s : sets) out << to_record_line(s) << '\n';
}

}  // namespace ragshield
