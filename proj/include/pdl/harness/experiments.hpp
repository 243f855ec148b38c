#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pdl/harness/config.hpp"

namespace pdl::harness {

struct RunSummary {
    std::string experiment;
    std::string out_dir;
    // (file name, data rows) in creation order; manifest.json is not listed.
    std::vector<std::pair<std::string, std::uint64_t>> files;
    std::uint64_t rows = 0;
    std::uint64_t failed_rows = 0;
    SeedChoice seed;
    std::uint64_t config_hash = 0;
};

// Validates every parameter, then runs the experiment over its grid and
// replicas and writes <out>/<experiment>*.csv plus <out>/manifest.json.
// Replica r of cell c draws from the stream "<experiment>/cell/c/..." so the
// output does not depend on the thread count. Tasks that fail produce rows
// with status "error: ..." and are counted in failed_rows.
// Throws ParameterError (before any simulation) for invalid configs.
RunSummary run_experiment(const ExperimentConfig& cfg);

// Runs work(i) for i in [0, n) on `threads` workers and calls emit(i, ...)
// on the calling thread in increasing i as results become available.
// error is empty on success.
template <class R, class Work, class Emit>
void ordered_map(std::size_t n, std::size_t threads, Work&& work, Emit&& emit);

} // namespace pdl::harness

#include "pdl/harness/ordered_map.inl"
