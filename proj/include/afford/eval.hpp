#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "afford/dataspec.hpp"
#include "afford/model.hpp"
#include "afford/synthgen.hpp"

namespace afford::eval {

// A set of observed channels to condition on, e.g. {object, effect}.
struct InputConfiguration {
  std::string name;
  std::vector<std::string> channels;
};

// Every nonempty subset of the declared channels (2^C - 1 configurations).
std::vector<InputConfiguration> all_configurations(const std::vector<data::ChannelSpec>& channels);
// "object+effect" -> one configuration; names joined by '+'.
InputConfiguration parse_configuration(const std::string& spec);

struct ReportRow {
  std::string config;
  std::string channel;
  std::string units;
  double rms = 0.0;
  double mean_sigma = 0.0;
  std::size_t samples = 0;
};

struct EvaluationReport {
  std::vector<ReportRow> rows;
  const ReportRow* find(const std::string& config, const std::string& channel) const;
};

// Produces predictions for every model channel on the canonical grid given a
// sample and the channels to condition on. Abstracted so the harness can be
// self-tested against a perfect oracle.
using GenerateFn = std::function<model::Predictions(const data::AffordanceSample& sample,
                                                    const std::vector<std::string>& observed)>;

// Full-trajectory conditioning with equal weights over observed channels.
GenerateFn model_generator(const model::ModelParameters& mp);
// Returns the sample's own payload (sigma pinned at the floor).
GenerateFn oracle_generator(const std::vector<data::ChannelSpec>& channels, double sigma = 1e-4);

// Per configuration x output channel: RMS in channel units, mean decoded
// sigma, sample count. Evaluates every sample of `ds` where the
// configuration's channels are available (pass the test split).
EvaluationReport rms_table(const data::Dataset& ds,
                           const std::vector<InputConfiguration>& configs,
                           const GenerateFn& generate);
// Same measurement; read the mean_sigma column.
EvaluationReport ambiguity_scores(const data::Dataset& ds,
                                  const std::vector<InputConfiguration>& configs,
                                  const GenerateFn& generate);

void write_report_csv(const EvaluationReport& report, const std::string& path);
void write_report_json(const EvaluationReport& report, const std::string& path);

// Mean absolute 4-neighbour Laplacian over the object region (pixels
// deviating from background depth 0.5 by > 0.05); 0 when the region is empty.
double mean_curvature(const num::Tensor& image);

// --- latent-space analysis ---------------------------------------------

struct Pca2d {
  std::vector<std::array<double, 2>> points;
  bool degenerate = false;  // all-identical inputs project to (0,0)
};

// Exact covariance eigendecomposition (cyclic Jacobi), deterministic sign
// convention. Input: N rows of equal dimension.
Pca2d pca_2d(const std::vector<std::vector<double>>& rows);

// Equal-weight affordance latent per object (first sample of each label,
// full-grid observations). Returns (label, latent) pairs in label order.
std::vector<std::pair<std::string, std::vector<double>>> object_latents(
    const model::ModelParameters& mp, const data::Dataset& ds);

struct LatentTraceRow {
  std::int64_t step = 0;
  std::string label;
  double pc1 = 0.0, pc2 = 0.0;
};

// PCA is fit on the pooled latents across snapshots; one 2-d point per
// (snapshot, object). Needs at least two snapshots.
std::vector<LatentTraceRow> latent_trace(
    const std::vector<std::pair<std::int64_t, std::vector<std::vector<double>>>>& snapshots,
    const std::vector<std::string>& labels);

void write_latent_csv(const std::vector<LatentTraceRow>& rows, const std::string& path);

// Mean silhouette of a 2-class split of 2-d points (1 when clusters are
// tight and far apart).
double silhouette(const std::vector<std::array<double, 2>>& points,
                  const std::vector<int>& labels);
double mean_intra_class_distance(const std::vector<std::array<double, 2>>& points,
                                 const std::vector<int>& labels);

// --- cross-embodiment transfer -----------------------------------------

struct TransferProtocol {
  std::string name;
  std::vector<std::string> initial_objects;
  std::string new_object;
  std::string demo_agent = "kuka";
  std::string demo_direction = "straight";
  std::string demo_variant = "fingers";  // ur10 style when demo_agent is ur10
};

struct TransferConfig {
  synth::ScenarioConfig synth;  // rollability generator settings
  model::ModelHyper hyper;
  std::int64_t pretrain_iterations = 15000;
  std::int64_t continue_iterations = 8000;
  std::uint64_t seed = 0;
  num::AdamConfig adam;
};

struct TransferVerdict {
  std::string protocol;
  bool transfer_ok = false;   // cross-agent effect class on the new object
  bool direction_ok = false;  // unseen push directions on the new object
  double retention_rms_before = 0.0;  // old-object effect RMS, full conditioning
  double retention_rms_after = 0.0;
  std::vector<std::string> notes;
};

// Pretrains on the initial objects, continues with the single-agent demo of
// the new object (1:1 replay), then classifies generated effects by the
// nearest-class final displacement.
TransferVerdict run_transfer_protocol(const TransferProtocol& protocol,
                                      const TransferConfig& cfg);
std::vector<TransferVerdict> transfer_matrix(const std::vector<TransferProtocol>& protocols,
                                             const TransferConfig& cfg);

void write_transfer_csv(const std::vector<TransferVerdict>& verdicts, const std::string& path);
void write_transfer_json(const std::vector<TransferVerdict>& verdicts, const std::string& path);

// Nearest-class decision rule: true when the final displacement of the
// generated effect is closer to the correct class's closed form.
bool effect_class_matches(const num::Tensor& effect_mu, const std::string& direction,
                          bool correct_class_rolled);

}  // namespace afford::eval
