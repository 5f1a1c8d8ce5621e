#include "ragshield/pipeline.hpp"

#include <algorithm>

namespace ragshield {

std::size_t resolve_jobs(std::size_t jobs) {
    if (jobs > 0) return jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

Stage1Result run_stage1(const RetrievedSet& set, const DefenseConfig& config) {
    return config.strategy == Strategy::clustering ? estimate_nadv_clustering(set, config)
                                                   : estimate_nadv_concentration(set);
}

FilterOutcome filter(const RetrievedSet& set, const DefenseConfig& config) {
    const std::size_t k = set.size();
    if (k < 2) return FilterOutcome::from_flags(set, std::vector<bool>(k, false));

    switch (config.stage_mode) {
        case StageMode::stage2_only: {
            const auto& f = config.stage2_only_fraction;
            std::size_t n_adv = k * f.numerator / f.denominator;
            return select_adversarial(set, std::min(n_adv, k - 1), config.p);
        }
        case StageMode::stage1_only: {
            Stage1Result stage1 = run_stage1(set, config);
            std::vector<bool> flagged(k, false);
            for (std::size_t i : stage1.adversarial_group) flagged[i] = true;
            auto out = FilterOutcome::from_flags(set, flagged);
            out.diagnostics.stage1 = std::move(stage1);
            return out;
        }
        case StageMode::both:
            break;
    }

    Stage1Result stage1 = run_stage1(set, config);
    auto out = select_adversarial(set, stage1.n_adv, config.p);
    out.diagnostics.stage1 = std::move(stage1);
    return out;
}

}  // namespace

DefenseReport defend(const RetrievedSet& set, const DefenseConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    DefenseReport report;
    report.strategy_used = config.strategy;
    report.stage_mode_used = config.stage_mode;
    report.outcome = filter(set, config);
    report.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
    return report;
}

std::vector<DefenseReport> defend_batch(const std::vector<RetrievedSet>& sets,
                                        const DefenseConfig& config, std::size_t jobs) {
    std::vector<DefenseReport> reports(sets.size());
    parallel_for(sets.size(), jobs, [&](std::size_t i) { reports[i] = defend(sets[i], config); });
    return reports;
}

}  // namespace ragshield
