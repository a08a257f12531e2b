#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "xprec/dataset.hpp"
#include "xprec/evaluator.hpp"
#include "xprec/synth.hpp"
#include "xprec/trainer.hpp"

namespace xprec {

using json = nlohmann::ordered_json;

/// A model as stored on disk. The assignment is kept per user until it is
/// bound to the training set it was fitted on.
struct ModelDocument {
    FittedModel model;  ///< assignment left empty
    std::map<std::string, std::vector<int>> assignment;
};

json model_to_json(const FittedModel& m);
ModelDocument model_from_json(const json& j);
/// Attaches the stored assignment to `train`; throws DataError on mismatch.
FittedModel bind_model(ModelDocument doc, const Dataset& train);

void save_model(const std::string& path, const FittedModel& m);
ModelDocument load_model_document(const std::string& path);
FittedModel load_model(const std::string& path, const Dataset& train);

json report_to_json(const EvalReport& r);
json comparison_to_json(const Comparison& c);

json split_manifest(const SplitSpec& spec, const Split& s);

json synth_config_to_json(const SynthConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
SynthConfig synth_config_from_json(const json& j);
json truth_to_json(const GroundTruth& t);
GroundTruth truth_from_json(const json& j);

/// CSV with columns user, item, timestamp, level.
void write_assignment_csv(std::ostream& out, const FittedModel& m, const Dataset& train);

json read_json_file(const std::string& path);
/// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace xprec
