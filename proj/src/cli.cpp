#include "ragshield/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "ragshield/ingest.hpp"
#include "ragshield/pipeline.hpp"
#include "ragshield/simulate.hpp"

namespace ragshield::cli {

namespace {

using nlohmann::json;

enum class LogLevel { error, warn, info, debug };

class Log {
public:
    Log(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
    void error(const std::string& msg) const { emit(LogLevel::error, "error", msg); }
    void warn(const std::string& msg) const { emit(LogLevel::warn, "warning", msg); }
    void info(const std::string& msg) const { emit(LogLevel::info, "info", msg); }
    void debug(const std::string& msg) const { emit(LogLevel::debug, "debug", msg); }

private:
    void emit(LogLevel at, const char* tag, const std::string& msg) const {
        if (at <= level_) err_ << "ragshield: " << tag << ": " << msg << '\n';
    }
    std::ostream& err_;
    LogLevel level_;
};

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError:
        case ErrorCode::Io:
            return kInputError;
        case ErrorCode::ServiceUnreachable:
        case ErrorCode::MalformedResponse:
            return kServiceError;
        default:
            return kValidationError;
    }
}

// Options shared by every subcommand.
struct Common {
    std::string input = "-";
    std::string output = "-";
    std::string strategy = "clustering";
    std::string mode = "both";
    std::size_t m = 5;
    unsigned p = 2;
    std::size_t jobs = 1;
    std::string embed_url;
    std::string embed_model;
    std::string log_level = "warn";
};

void add_common(CLI::App& cmd, Common& c, bool with_input) {
    if (with_input) cmd.add_option("-i,--input", c.input, "Retrieval file (NDJSON), '-' for stdin");
    cmd.add_option("-o,--output", c.output, "Output path, '-' for stdout");
    cmd.add_option("--strategy", c.strategy, "Stage-1 grouping: clustering | concentration");
    cmd.add_option("--mode", c.mode, "Stages to run: both | stage1_only | stage2_only");
    cmd.add_option("--m", c.m, "Number of TF-IDF top terms");
    cmd.add_option("--p", c.p, "Exponent of the frequency score");
    cmd.add_option("-j,--jobs", c.jobs, "Worker threads, 0 = all cores");
    cmd.add_option("--embed-url", c.embed_url, "Embedding service base URL for records without embeddings");
    cmd.add_option("--embed-model", c.embed_model, "Model name sent to the embedding service");
    cmd.add_option("--log-level", c.log_level, "error | warn | info | debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
}

DefenseConfig make_config(const Common& c) {
    DefenseConfig config;
    auto strategy = parse_strategy(c.strategy);
    if (!strategy) throw Error(ErrorCode::InvalidConfig, "unknown strategy '" + c.strategy + "'");
    auto mode = parse_stage_mode(c.mode);
    if (!mode) throw Error(ErrorCode::InvalidConfig, "unknown mode '" + c.mode + "'");
    config.strategy = *strategy;
    config.stage_mode = *mode;
    config.m = c.m;
    config.p = c.p;
    config.validate();
    return config;
}

std::optional<EmbeddingServiceConfig> make_service(const Common& c) {
    if (c.embed_url.empty()) return std::nullopt;
    EmbeddingServiceConfig svc;
    svc.base_url = c.embed_url;
    svc.model_name = c.embed_model;
    svc.with_env_token();
    svc.validate();
    return svc;
}

LogLevel parse_level(const std::string& s) {
    if (s == "error") return LogLevel::error;
    if (s == "info") return LogLevel::info;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::warn;
}

// Resolves "-" to the caller's streams, anything else to a file.
class Streams {
public:
    Streams(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

    std::unique_ptr<RecordReader> reader(const std::string& path) {
        if (path == "-") return std::make_unique<RecordReader>(in_);
        return std::make_unique<RecordReader>(std::filesystem::path(path));
    }

    std::ostream& writer(const std::string& path) {
        if (path == "-") return out_;
        file_.open(path, std::ios::binary);
        if (!file_) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
        return file_;
    }

private:
    std::istream& in_;
    std::ostream& out_;
    std::ofstream file_;
};

// Reads records in bounded chunks, defends each chunk across the worker
// pool and hands results back in input order.
template <typename Emit>
void stream_records(RecordReader& reader, const std::string& source,
                    const std::optional<EmbeddingServiceConfig>& svc, const DefenseConfig& config,
                    std::size_t jobs, const Emit& emit) {
    const std::size_t chunk = 64 * resolve_jobs(jobs);
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::vector<RetrievedSet> sets;
    std::vector<DefenseReport> reports;
    bool done = false;
    while (!done) {
        lines.clear();
        while (lines.size() < chunk) {
            auto line = reader.next_line();
            if (!line) {
                done = true;
                break;
            }
            lines.emplace_back(reader.line_number(), std::move(*line));
        }
        if (lines.empty()) break;
        sets.assign(lines.size(), RetrievedSet{});
        reports.assign(lines.size(), DefenseReport{});
        parallel_for(lines.size(), jobs, [&](std::size_t i) {
            try {
                sets[i] = assemble(parse_record_line(lines[i].second), svc);
            } catch (const Error& e) {
                throw Error(e.code(), source + ":" + std::to_string(lines[i].first) + ": " + e.what());
            }
            reports[i] = defend(sets[i], config);
        });
        for (std::size_t i = 0; i < lines.size(); ++i) emit(sets[i], reports[i]);
    }
}

std::string source_name(const std::string& path) { return path == "-" ? "<stdin>" : path; }

void check_partition(const RetrievedSet& set, const FilterOutcome& outcome) {
    std::multiset<std::string> seen(outcome.safe_ids.begin(), outcome.safe_ids.end());
    seen.insert(outcome.adversarial_ids.begin(), outcome.adversarial_ids.end());
    std::multiset<std::string> expected;
    for (const auto& p : set.passages()) expected.insert(p.id);
    if (seen != expected || outcome.safe_ids.empty()) {
        throw Error(ErrorCode::InvalidConfig,
                    "output for query '" + set.query().id + "' does not partition its passage ids");
    }
}

// ---- filter ---------------------------------------------------------------

struct FilterArgs {
    Common common;
    bool validate = false;
    bool no_timing = false;
};

int cmd_filter(const FilterArgs& a, Streams& io, const Log& log) {
    const DefenseConfig config = make_config(a.common);
    const auto svc = make_service(a.common);
    auto reader = io.reader(a.common.input);
    std::ostream& out = io.writer(a.common.output);
    std::size_t count = 0;
    stream_records(*reader, source_name(a.common.input), svc, config, a.common.jobs,
                   [&](const RetrievedSet& set, const DefenseReport& report) {
                       if (a.validate) check_partition(set, report.outcome);
                       json rec;
                       rec["query_id"] = set.query().id;
                       rec["safe_ids"] = report.outcome.safe_ids;
                       rec["adversarial_ids"] = report.outcome.adversarial_ids;
                       rec["n_adv"] = report.outcome.n_adv;
                       rec["strategy"] = std::string(to_string(report.strategy_used));
                       if (a.no_timing) {
                           rec["elapsed_ms"] = nullptr;
                       } else {
                           rec["elapsed_ms"] =
                               std::chrono::duration<double, std::milli>(report.elapsed).count();
                       }
                       out << rec.dump() << '\n';
                       ++count;
                   });
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write to '" + a.common.output + "' failed");
    log.info("filtered " + std::to_string(count) + " record(s)");
    return kOk;
}

// ---- inspect --------------------------------------------------------------

json diagnostics_json(const RetrievedSet& set, const DefenseReport& report) {
    json d;
    const std::size_t k = set.size();
    json matrix = json::array();
    for (std::size_t i = 0; i < k; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < k; ++j) row.push_back(set.pair_sim(i, j));
        matrix.push_back(std::move(row));
    }
    d["similarity"] = std::move(matrix);
    d["query_similarity"] = set.query_sims();
    d["strategy"] = std::string(to_string(report.strategy_used));
    d["mode"] = std::string(to_string(report.stage_mode_used));

    const auto& diag = report.outcome.diagnostics;
    if (diag.stage1) {
        const auto& s1 = *diag.stage1;
        json j;
        j["n_adv"] = s1.n_adv;
        j["adversarial_group"] = s1.adversarial_group;
        if (s1.terms) {
            json terms = json::array();
            for (const auto& t : s1.terms->terms) terms.push_back({{"term", t.term}, {"score", t.score}});
            j["top_terms"] = std::move(terms);
        }
        if (s1.n_tfidf) j["n_tfidf"] = *s1.n_tfidf;
        if (s1.split) {
            j["cluster_labels"] = s1.split->labels;
            j["n_min"] = s1.split->n_min;
        }
        if (s1.concentration) {
            j["s_mean"] = s1.concentration->s_mean;
            j["s_median"] = s1.concentration->s_median;
            j["global_mean"] = s1.concentration->global_mean;
            j["global_median"] = s1.concentration->global_median;
        }
        d["stage1"] = std::move(j);
    }
    if (diag.stage2) {
        const auto& s2 = *diag.stage2;
        json pairs = json::array();
        for (const auto& p : s2.top_pairs) pairs.push_back({{"i", p.i}, {"j", p.j}, {"sim", p.sim}});
        d["stage2"] = {{"n_pairs", s2.n_pairs}, {"top_pairs", std::move(pairs)},
                       {"freq_scores", s2.freq_scores}};
    }
    d["n_adv"] = report.outcome.n_adv;
    d["safe_ids"] = report.outcome.safe_ids;
    d["adversarial_ids"] = report.outcome.adversarial_ids;
    return d;
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

void write_inspect_text(std::ostream& out, const RetrievedSet& set, const DefenseReport& report) {
    const std::size_t k = set.size();
    out << "query " << set.query().id << ": " << set.query().text << '\n';
    out << "  strategy=" << to_string(report.strategy_used)
        << " mode=" << to_string(report.stage_mode_used) << " k=" << k << '\n';
    out << "  passages:\n";
    for (std::size_t i = 0; i < k; ++i) {
        out << "    [" << i << "] " << set.passage(i).id << "  q_sim=" << fixed(set.query_sim(i)) << '\n';
    }
    out << "  similarity matrix:\n";
    for (std::size_t i = 0; i < k; ++i) {
        out << "    ";
        for (std::size_t j = 0; j < k; ++j) out << (j ? " " : "") << std::setw(7) << fixed(set.pair_sim(i, j));
        out << '\n';
    }
    const auto& diag = report.outcome.diagnostics;
    if (diag.stage1) {
        const auto& s1 = *diag.stage1;
        out << "  stage 1:\n";
        if (s1.terms) {
            out << "    top terms:";
            for (const auto& t : s1.terms->terms) out << ' ' << t.term << '(' << fixed(t.score) << ')';
            out << '\n';
        }
        if (s1.n_tfidf) out << "    N_TFIDF=" << *s1.n_tfidf << '\n';
        if (s1.split) {
            out << "    cluster labels:";
            for (int l : s1.split->labels) out << ' ' << l;
            out << "  (n_min=" << s1.split->n_min << ")\n";
        }
        if (s1.concentration) {
            const auto& c = *s1.concentration;
            out << "    concentration (mean / median):\n";
            for (std::size_t i = 0; i < k; ++i) {
                out << "      [" << i << "] " << fixed(c.s_mean[i]) << " / " << fixed(c.s_median[i]) << '\n';
            }
            out << "      global " << fixed(c.global_mean) << " / " << fixed(c.global_median) << '\n';
        }
        out << "    N_adv=" << s1.n_adv << '\n';
    }
    if (diag.stage2) {
        const auto& s2 = *diag.stage2;
        out << "  stage 2:\n    N_pairs=" << s2.n_pairs << "\n    top pairs:";
        for (const auto& p : s2.top_pairs) out << " (" << p.i << ',' << p.j << ")=" << fixed(p.sim);
        out << "\n    frequency scores:";
        for (double f : s2.freq_scores) out << ' ' << fixed(f);
        out << '\n';
    } else if (report.outcome.n_adv == 0) {
        out << "  stage 2: skipped, n_adv=0\n";
    }
    out << "  adversarial:";
    for (const auto& id : report.outcome.adversarial_ids) out << ' ' << id;
    out << "\n  safe:";
    for (const auto& id : report.outcome.safe_ids) out << ' ' << id;
    out << "\n\n";
}

struct InspectArgs {
    Common common;
    std::string format = "text";
};

int cmd_inspect(const InspectArgs& a, Streams& io, const Log&) {
    const DefenseConfig config = make_config(a.common);
    const auto svc = make_service(a.common);
    auto reader = io.reader(a.common.input);
    std::ostream& out = io.writer(a.common.output);
    stream_records(*reader, source_name(a.common.input), svc, config, a.common.jobs,
                   [&](const RetrievedSet& set, const DefenseReport& report) {
                       if (a.format == "json") {
                           json doc = to_json(set);
                           doc["diagnostics"] = diagnostics_json(set, report);
                           out << doc.dump() << '\n';
                       } else {
                           write_inspect_text(out, set, report);
                       }
                   });
    out.flush();
    if (!out) throw Error(ErrorCode::Io, "write to '" + a.common.output + "' failed");
    return kOk;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    Common common;
    bool clean = false;
    std::string kind = "clustered";
    double ratio = 1.0;
    std::uint64_t seed = 0;
    double in_cluster_sim = 0.95;
    double cross_sim_cap = 0.35;
    std::size_t keywords = 3;
    std::size_t clusters = 3;
    double synonym_rate = 0.05;
    std::size_t sets = 500;
    std::size_t k = 5;
    std::size_t dim = 64;
    std::uint64_t corpus_seed = 1;
    std::string report_path;
    std::string csv_path;
    std::string write_corpus;
};

std::string rate(const std::optional<double>& v) { return v ? fixed(*v) : std::string("n/a"); }

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    f << content;
    if (!f.flush()) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

int cmd_evaluate(const EvaluateArgs& a, Streams& io, const Log& log) {
    const DefenseConfig config = make_config(a.common);
    AttackSpec spec;
    auto kind = parse_attack_kind(a.kind);
    if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown attack kind '" + a.kind + "'");
    spec.kind = *kind;
    spec.ratio = a.ratio;
    spec.seed = a.seed;
    spec.in_cluster_sim = a.in_cluster_sim;
    spec.cross_sim_cap = a.cross_sim_cap;
    spec.shared_keyword_count = a.keywords;
    spec.n_clusters = a.clusters;
    spec.synonym_rate = a.synonym_rate;
    if (!a.clean) spec.validate();

    std::vector<RetrievedSet> clean_sets;
    std::string source;
    if (!a.common.input.empty()) {
        source = source_name(a.common.input);
        const auto svc = make_service(a.common);
        auto reader = io.reader(a.common.input);
        while (auto line = reader->next_line()) {
            try {
                clean_sets.push_back(assemble(parse_record_line(*line), svc));
            } catch (const Error& e) {
                throw Error(e.code(), source + ":" + std::to_string(reader->line_number()) + ": " + e.what());
            }
        }
    } else {
        source = "synthetic corpus";
        CleanCorpusSpec corpus;
        corpus.n_sets = a.sets;
        corpus.k = a.k;
        corpus.dim = a.dim;
        corpus.seed = a.corpus_seed;
        clean_sets = synthesize_clean_sets(corpus);
    }
    for (const auto& set : clean_sets) {
        bool golden = false;
        for (const auto& p : set.passages()) golden = golden || p.origin == Origin::golden;
        if (!golden) {
            throw Error(ErrorCode::NoGoldenPassage,
                        "query '" + set.query().id + "' has no passage with origin \"golden\"");
        }
    }
    if (!a.write_corpus.empty()) write_retrieval_file(a.write_corpus, clean_sets);
    log.info("evaluating " + std::to_string(clean_sets.size()) + " set(s) from " + source);

    EvalReport report = a.clean ? evaluate_clean(clean_sets, config, a.common.jobs)
                                : evaluate(clean_sets, spec, config, a.common.jobs);
    if (!a.report_path.empty()) write_file(a.report_path, report_to_json(report).dump(2) + "\n");
    if (!a.csv_path.empty()) write_file(a.csv_path, report_to_csv(report));

    std::ostream& out = io.writer(a.common.output);
    out << "sets                 " << report.per_run.size() << '\n'
        << "attack               " << (a.clean ? std::string("none") : a.kind + " x" + fixed(a.ratio, 2)) << '\n'
        << "strategy / mode      " << to_string(config.strategy) << " / " << to_string(config.stage_mode) << '\n'
        << "detection_rate       " << rate(report.detection_rate) << '\n'
        << "false_positive_rate  " << rate(report.false_positive_rate) << '\n'
        << "golden_retention     " << rate(report.golden_retention) << '\n'
        << "mis_partition_rate   " << rate(report.mis_partition_rate) << '\n'
        << "nadv_mean_abs_error  " << rate(report.nadv_mean_abs_error) << '\n';
    out.flush();
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Post-retrieval filter against knowledge-corruption attacks on RAG pipelines",
                 "ragshield"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ragshield 0.1.0");

    FilterArgs filter_args;
    auto* filter = app.add_subcommand("filter", "Split each retrieved set into safe and adversarial ids");
    add_common(*filter, filter_args.common, true);
    filter->add_flag("--validate", filter_args.validate, "Check that every output partitions its input ids");
    filter->add_flag("--no-timing", filter_args.no_timing, "Write elapsed_ms as null for reproducible output");

    InspectArgs inspect_args;
    auto* inspect = app.add_subcommand("inspect", "Show every intermediate value of the filter per query");
    add_common(*inspect, inspect_args.common, true);
    inspect->add_option("--format", inspect_args.format, "text | json")
        ->check(CLI::IsMember({"text", "json"}));

    EvaluateArgs eval_args;
    eval_args.common.input.clear();
    auto* evaluate = app.add_subcommand("evaluate", "Measure detection on synthetic attacks");
    add_common(*evaluate, eval_args.common, false);
    evaluate->add_option("-i,--input", eval_args.common.input,
                         "Clean sets with golden origins; default is the built-in synthetic corpus");
    evaluate->add_flag("--clean", eval_args.clean, "Evaluate the clean sets without injecting anything");
    evaluate->add_option("--kind", eval_args.kind, "clustered | adaptive_dispersed | multi_cluster | phantom");
    evaluate->add_option("--ratio", eval_args.ratio, "Injected passages per clean passage");
    evaluate->add_option("--seed", eval_args.seed, "Attack seed");
    evaluate->add_option("--in-cluster-sim", eval_args.in_cluster_sim, "Minimum similarity inside an injected group");
    evaluate->add_option("--cross-sim-cap", eval_args.cross_sim_cap, "Maximum similarity to clean passages");
    evaluate->add_option("--keywords", eval_args.keywords, "Query keywords copied into injected texts");
    evaluate->add_option("--clusters", eval_args.clusters, "Groups for multi_cluster attacks");
    evaluate->add_option("--synonym-rate", eval_args.synonym_rate,
                         "Chance that a batch paraphrases the query keywords");
    evaluate->add_option("--sets", eval_args.sets, "Synthetic corpus: number of queries");
    evaluate->add_option("--k", eval_args.k, "Synthetic corpus: passages per query");
    evaluate->add_option("--dim", eval_args.dim, "Synthetic corpus: embedding dimension");
    evaluate->add_option("--corpus-seed", eval_args.corpus_seed, "Synthetic corpus seed");
    evaluate->add_option("--report", eval_args.report_path, "Write the JSON report here");
    evaluate->add_option("--csv", eval_args.csv_path, "Write the per-run CSV here");
    evaluate->add_option("--write-corpus", eval_args.write_corpus, "Save the clean sets as a retrieval file");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e, out, err);
        return rc == 0 ? kOk : kInputError;
    }

    const Common& common = filter->parsed()    ? filter_args.common
                           : inspect->parsed() ? inspect_args.common
                                               : eval_args.common;
    Log log(err, parse_level(common.log_level));
    Streams io(in, out);
    try {
        if (filter->parsed()) return cmd_filter(filter_args, io, log);
        if (inspect->parsed()) return cmd_inspect(inspect_args, io, log);
        return cmd_evaluate(eval_args, io, log);
    } catch (const Error& e) {
        log.error(e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        log.error(e.what());
        return kFailure;
    }
}

}  // namespace ragshield::cli
