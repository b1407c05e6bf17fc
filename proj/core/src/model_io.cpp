#include "ddtest/model_io.hpp"

#include <fstream>

namespace ddtest {

using nlohmann::json;

namespace {

std::vector<double> number_list(const json& j, const char* what) {
  if (!j.is_array()) throw std::invalid_argument(std::string("model spec: ") + what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw std::invalid_argument(std::string("model spec: ") + what + " must hold numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> row_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument(std::string("model spec: ") + what + " must be a non-empty array of rows");
  std::vector<double> flat;
  const size_t cols = j.front().is_array() ? j.front().size() : 0;
  for (const auto& row : j) {
    auto r = number_list(row, what);
    if (r.size() != cols) throw std::invalid_argument(std::string("model spec: ") + what + " rows differ in length");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return flat;
}

Alphabet alphabet_of(const json& spec) {
  if (!spec.contains("alphabet_size") || !spec["alphabet_size"].is_number_integer())
    throw std::invalid_argument("model spec: alphabet_size missing");
  return Alphabet(spec["alphabet_size"].get<int>());
}

std::optional<std::vector<double>> optional_law(const json& spec, const char* key) {
  if (!spec.contains(key)) return std::nullopt;
  return number_list(spec[key], key);
}

}  // namespace

ModelPtr model_from_json(const json& spec) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw std::invalid_argument("model spec must be an object with a \"kind\" tag");
  const std::string kind = spec["kind"].get<std::string>();
  if (kind == "iid") {
    return std::make_shared<IIDModel>(alphabet_of(spec), number_list(spec.at("probs"), "probs"));
  }
  if (kind == "markov") {
    const int order = spec.at("order").get<int>();
    return std::make_shared<MarkovModel>(alphabet_of(spec), order,
                                         row_matrix(spec.at("transitions"), "transitions"),
                                         optional_law(spec, "initial"));
  }
  if (kind == "hmm") {
    auto transition = row_matrix(spec.at("transition"), "transition");
    auto emission = row_matrix(spec.at("emission"), "emission");
    const int states = static_cast<int>(spec.at("transition").size());
    return std::make_shared<HMMModel>(alphabet_of(spec), std::move(transition),
                                      std::move(emission), states,
                                      optional_law(spec, "initial"));
  }
  if (kind == "mixture") {
    auto weights = number_list(spec.at("weights"), "weights");
    std::vector<ModelPtr> components;
    for (const auto& c : spec.at("components")) components.push_back(model_from_json(c));
    return std::make_shared<MixtureModel>(std::move(weights), std::move(components));
  }
  if (kind == "rotation") {
    const double angle = spec.contains("angle") ? spec["angle"].get<double>()
                                                : RotationModel::kGoldenAngle;
    return std::make_shared<RotationModel>(angle, spec.at("arc").get<double>());
  }
  throw std::invalid_argument("model spec: unknown kind \"" + kind + "\"");
}

namespace {

json matrix_json(const std::vector<double>& flat, size_t rows, size_t cols) {
  json out = json::array();
  for (size_t r = 0; r < rows; ++r) {
    json row = json::array();
    for (size_t c = 0; c < cols; ++c) row.push_back(flat[r * cols + c]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

json model_to_json(const ProcessModel& model) {
  json out;
  if (const auto* iid = dynamic_cast<const IIDModel*>(&model)) {
    out["kind"] = "iid";
    out["alphabet_size"] = iid->alphabet().size;
    out["probs"] = iid->probabilities();
    return out;
  }
  if (const auto* mk = dynamic_cast<const MarkovModel*>(&model)) {
    out["kind"] = "markov";
    out["alphabet_size"] = mk->alphabet().size;
    out["order"] = mk->order();
    out["transitions"] = matrix_json(mk->transition_matrix(), mk->context_count(),
                                     static_cast<size_t>(mk->alphabet().size));
    if (mk->order() > 0) out["initial"] = mk->initial_law();
    return out;
  }
  if (const auto* hmm = dynamic_cast<const HMMModel*>(&model)) {
    out["kind"] = "hmm";
    out["alphabet_size"] = hmm->alphabet().size;
    out["transition"] = matrix_json(hmm->hidden_transition(), static_cast<size_t>(hmm->states()),
                                    static_cast<size_t>(hmm->states()));
    out["emission"] = matrix_json(hmm->emission(), static_cast<size_t>(hmm->states()),
                                  static_cast<size_t>(hmm->alphabet().size));
    out["initial"] = hmm->hidden_initial();
    return out;
  }
  if (const auto* mix = dynamic_cast<const MixtureModel*>(&model)) {
    out["kind"] = "mixture";
    out["weights"] = mix->weights();
    json comps = json::array();
    for (const auto& c : mix->components()) comps.push_back(model_to_json(*c));
    out["components"] = std::move(comps);
    return out;
  }
  if (const auto* rot = dynamic_cast<const RotationModel*>(&model)) {
    out["kind"] = "rotation";
    out["angle"] = rot->angle();
    out["arc"] = rot->arc();
    return out;
  }
  throw std::invalid_argument("model kind has no JSON form");
}

ModelPtr load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file: " + path);
  json spec;
  in >> spec;
  return model_from_json(spec);
}

}  // namespace ddtest
