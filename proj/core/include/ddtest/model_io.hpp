#pragma once

#include <string>

#include "json.hpp"

#include "ddtest/process.hpp"

namespace ddtest {

/// Model specs are JSON objects with a "kind" tag:
///   {"kind":"iid","alphabet_size":2,"probs":[0.5,0.5]}
///   {"kind":"markov","alphabet_size":2,"order":1,
///    "transitions":[[0.9,0.1],[0.2,0.8]],"initial":[...]?}   rows by context rank
///   {"kind":"hmm","alphabet_size":2,"transition":[[...],...],
///    "emission":[[...],...],"initial":[...]?}
///   {"kind":"mixture","weights":[...],"components":[{...},...]}
///   {"kind":"rotation","angle":0.618...,"arc":0.5}
ModelPtr model_from_json(const nlohmann::json& spec);
nlohmann::json model_to_json(const ProcessModel& model);

ModelPtr load_model_file(const std::string& path);

}  // namespace ddtest
