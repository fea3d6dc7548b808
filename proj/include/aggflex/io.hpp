#ifndef AGGFLEX_IO_HPP
#define AGGFLEX_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "aggflex/experiments.hpp"
#include "aggflex/flexibility.hpp"
#include "aggflex/multibattery.hpp"

namespace aggflex {

struct ScenarioFile {
    double delta_hours = 0.0;
    int periods = 0;
    std::vector<EvSpec> evs;
    std::uint64_t seed = 0;
    std::string generator_version = "1";
};

std::string scenario_to_json(const ScenarioFile& scenario);
ScenarioFile scenario_from_json(const std::string& text);
void save_scenario(const ScenarioFile& scenario, const std::string& path);
ScenarioFile load_scenario(const std::string& path);

/// Serialized approximation: grid, clustering, model, disaggregation map
/// and solver metadata. Lambda certificates are optional because they
/// dominate the file size; loaders re-derive them when needed.
struct ModelFile {
    int periods = 0;
    double delta_hours = 0.0;
    Representation representation = Representation::EnergySpace;
    NormKind norm = NormKind::L2;
    Variant variant = Variant::Joint;
    std::uint64_t seed = 0;
    ApproximationResult result;
    bool has_certificates = false;
};

std::string model_to_json(const ModelFile& model, bool with_certificates);
ModelFile model_from_json(const std::string& text);
void save_model(const ModelFile& model, const std::string& path, bool with_certificates);
ModelFile load_model(const std::string& path);

/// results.csv rows; timing columns are zeroed unless with_timings is
/// set so that identical seeds give byte-identical files.
std::string results_to_csv(const std::vector<TrialResult>& rows, bool with_timings);
void save_results_csv(const std::vector<TrialResult>& rows, const std::string& path,
                      bool with_timings);

std::string summary_to_csv(const std::vector<GapSummary>& summary);
void save_summary_csv(const std::vector<GapSummary>& summary, const std::string& path);

std::vector<TrialResult> load_results_csv(const std::string& path);

/// Box-and-whisker SVG of gap versus K (the batch figure).
std::string gap_boxplot_svg(const std::vector<GapSummary>& summary);

/// Stacked per-series area chart of power profiles over the horizon,
/// with the total drawn on top (the disaggregation figures).
std::string stacked_profiles_svg(const std::vector<Eigen::VectorXd>& series,
                                 const std::vector<std::string>& labels, double delta_hours,
                                 const std::string& title);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace aggflex

#endif
