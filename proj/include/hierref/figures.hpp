#pragma once

// Figure data for completed experiments. Every figure is written as CSV;
// an SVG rendering is written next to it.

#include <filesystem>
#include <string>
#include <vector>

#include "hierref/experiment.hpp"

namespace hierref {

struct Condition {
    std::string label;
    std::vector<RunArtifacts> runs;
};

/// Loads every run below each experiment directory; the label is derived
/// from the run configuration, e.g. "D(3,4)".
std::vector<Condition> load_conditions(const std::vector<std::filesystem::path>& dirs);

struct FigureOptions {
    std::uint64_t bootstrap_seed = 0;
    int bootstrap_resamples = 1000;
    std::size_t heatmap_ranks = 10;
};

/// Writes the figure CSV/SVG files into `out` and returns their names.
/// Figures whose inputs are missing are skipped with a warning.
std::vector<std::string> emit_figures(const std::vector<Condition>& conditions,
                                      const std::filesystem::path& out,
                                      const FigureOptions& options = {});

// Individual tables, exposed for testing.
std::string accuracy_table(const std::vector<Condition>& conditions, const FigureOptions& options);
std::string entropy_table(const std::vector<Condition>& conditions, const FigureOptions& options);
std::string per_level_table(const std::vector<Condition>& conditions,
                            const std::vector<std::string>& metrics, const FigureOptions& options);
std::string heatmap_table(const std::vector<Condition>& conditions, const FigureOptions& options);
std::string compositionality_table(const std::vector<Condition>& conditions);

}  // namespace hierref
