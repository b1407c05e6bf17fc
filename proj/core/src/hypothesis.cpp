#include "ddtest/hypothesis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddtest/model_io.hpp"

namespace ddtest {

using nlohmann::json;

HypothesisFamily HypothesisFamily::singleton(ModelPtr member) {
  if (!member) throw std::invalid_argument("singleton family needs a member");
  HypothesisFamily f(Kind::singleton, member->alphabet());
  f.members_.push_back(std::move(member));
  return f;
}

HypothesisFamily HypothesisFamily::finite_set(std::vector<ModelPtr> members) {
  if (members.empty()) throw std::invalid_argument("finite family needs at least one member");
  for (const auto& m : members) {
    if (!m) throw std::invalid_argument("finite family member is null");
    if (m->alphabet() != members[0]->alphabet())
      throw std::invalid_argument("finite family members have different alphabets");
  }
  HypothesisFamily f(Kind::finite_set, members[0]->alphabet());
  f.members_ = std::move(members);
  return f;
}

HypothesisFamily HypothesisFamily::markov_order(Alphabet alphabet, int order,
                                                ProjectionConfig cfg) {
  if (order < 0) throw std::invalid_argument("markov order must be >= 0");
  HypothesisFamily f(Kind::markov_order, alphabet);
  f.order_ = order;
  f.projection_ = cfg;
  return f;
}

HypothesisFamily HypothesisFamily::hmm_order(Alphabet alphabet, int states, ProjectionConfig cfg) {
  if (states < 1) throw std::invalid_argument("hmm family needs at least one state");
  HypothesisFamily f(Kind::hmm_order, alphabet);
  f.order_ = states;
  f.projection_ = cfg;
  return f;
}

std::string HypothesisFamily::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::singleton: os << "singleton(" << members_[0]->describe() << ")"; break;
    case Kind::finite_set: os << "finite(" << members_.size() << ")"; break;
    case Kind::markov_order: os << "markov_order(" << order_ << ")"; break;
    case Kind::hmm_order: os << "hmm_order(" << order_ << ")"; break;
  }
  return os.str();
}

namespace {

// Affine shrink toward the uniform row keeps the simplex structure while
// forcing every entry into [margin, 1-margin].
void shrink_row(std::span<double> row, double margin) {
  if (margin <= 0.0) return;
  const double dim = static_cast<double>(row.size());
  if (dim * margin >= 1.0) throw std::invalid_argument("clamp margin too large for row size");
  for (double& p : row) p = margin + (1.0 - dim * margin) * p;
}

std::vector<std::vector<double>> grid_rows(int dim, double step, double margin) {
  const long denom = std::lround(1.0 / step);
  if (denom < 1 || std::abs(denom * step - 1.0) > 1e-9)
    throw std::invalid_argument("grid step must divide 1");
  std::vector<std::vector<double>> rows;
  std::vector<long> cur(static_cast<size_t>(dim), 0);
  // Enumerate compositions of denom into dim parts.
  auto rec = [&](auto&& self, int slot, long left) -> void {
    if (slot == dim - 1) {
      cur[static_cast<size_t>(slot)] = left;
      std::vector<double> row(static_cast<size_t>(dim));
      for (int j = 0; j < dim; ++j)
        row[static_cast<size_t>(j)] = static_cast<double>(cur[static_cast<size_t>(j)]) / denom;
      shrink_row(row, margin);
      rows.push_back(std::move(row));
      return;
    }
    for (long i = 0; i <= left; ++i) {
      cur[static_cast<size_t>(slot)] = i;
      self(self, slot + 1, left - i);
    }
  };
  rec(rec, 0, denom);
  return rows;
}

std::uint64_t checked_pow(std::uint64_t base, std::uint64_t exp, std::uint64_t cap) {
  std::uint64_t out = 1;
  for (std::uint64_t i = 0; i < exp; ++i) {
    if (base != 0 && out > cap / base) return cap + 1;
    out *= base;
  }
  return out;
}

std::vector<double> random_stochastic(Rng& rng, std::uint64_t rows, int dim, double margin) {
  std::vector<double> flat(rows * static_cast<std::uint64_t>(dim));
  for (std::uint64_t r = 0; r < rows; ++r) {
    std::span<double> row(&flat[r * static_cast<std::uint64_t>(dim)], static_cast<size_t>(dim));
    rng.simplex(row);
    shrink_row(row, margin);
  }
  return flat;
}

std::vector<ModelPtr> markov_members(Alphabet alphabet, int order, const MemberDesign& design) {
  std::vector<ModelPtr> out;
  std::uint64_t contexts = 1;
  for (int i = 0; i < order; ++i) contexts *= static_cast<std::uint64_t>(alphabet.size);
  if (design.grid_step > 0.0) {
    const auto rows = grid_rows(alphabet.size, design.grid_step, design.clamp_margin);
    const std::uint64_t total = checked_pow(rows.size(), contexts, design.max_members);
    if (total > design.max_members)
      throw std::invalid_argument("member grid exceeds the configured cap");
    std::vector<std::uint64_t> digit(contexts, 0);
    for (std::uint64_t idx = 0; idx < total; ++idx) {
      std::vector<double> transition;
      transition.reserve(contexts * static_cast<std::uint64_t>(alphabet.size));
      std::uint64_t rem = idx;
      for (std::uint64_t c = 0; c < contexts; ++c) {
        digit[c] = rem % rows.size();
        rem /= rows.size();
        const auto& row = rows[digit[c]];
        transition.insert(transition.end(), row.begin(), row.end());
      }
      out.push_back(std::make_shared<MarkovModel>(alphabet, order, std::move(transition)));
    }
  }
  Rng rng(design.seed);
  for (int j = 0; j < design.random_count; ++j) {
    out.push_back(std::make_shared<MarkovModel>(
        alphabet, order, random_stochastic(rng, contexts, alphabet.size, design.clamp_margin)));
  }
  return out;
}

std::vector<ModelPtr> hmm_members(Alphabet alphabet, int states, const MemberDesign& design) {
  std::vector<ModelPtr> out;
  const std::uint64_t k = static_cast<std::uint64_t>(states);
  if (design.grid_step > 0.0) {
    const auto t_rows = grid_rows(states, design.grid_step, design.clamp_margin);
    const auto e_rows = grid_rows(alphabet.size, design.grid_step, design.clamp_margin);
    const std::uint64_t t_total = checked_pow(t_rows.size(), k, design.max_members);
    const std::uint64_t e_total = checked_pow(e_rows.size(), k, design.max_members);
    if (t_total > design.max_members || e_total > design.max_members ||
        (e_total != 0 && t_total > design.max_members / e_total))
      throw std::invalid_argument("member grid exceeds the configured cap");
    for (std::uint64_t ti = 0; ti < t_total; ++ti) {
      std::vector<double> transition;
      std::uint64_t rem = ti;
      for (std::uint64_t r = 0; r < k; ++r) {
        const auto& row = t_rows[rem % t_rows.size()];
        rem /= t_rows.size();
        transition.insert(transition.end(), row.begin(), row.end());
      }
      for (std::uint64_t ei = 0; ei < e_total; ++ei) {
        std::vector<double> emission;
        std::uint64_t erem = ei;
        for (std::uint64_t r = 0; r < k; ++r) {
          const auto& row = e_rows[erem % e_rows.size()];
          erem /= e_rows.size();
          emission.insert(emission.end(), row.begin(), row.end());
        }
        out.push_back(std::make_shared<HMMModel>(alphabet, transition, std::move(emission), states));
      }
    }
  }
  Rng rng(design.seed);
  for (int j = 0; j < design.random_count; ++j) {
    auto transition = random_stochastic(rng, k, states, design.clamp_margin);
    auto emission = random_stochastic(rng, k, alphabet.size, design.clamp_margin);
    out.push_back(std::make_shared<HMMModel>(alphabet, std::move(transition), std::move(emission), states));
  }
  return out;
}

}  // namespace

std::vector<ModelPtr> member_design(const HypothesisFamily& family, const MemberDesign& design) {
  switch (family.kind()) {
    case HypothesisFamily::Kind::singleton:
    case HypothesisFamily::Kind::finite_set:
      return family.members();
    case HypothesisFamily::Kind::markov_order: {
      auto out = markov_members(family.alphabet(), family.order(), design);
      if (out.empty()) throw std::invalid_argument("member design produces no members");
      return out;
    }
    case HypothesisFamily::Kind::hmm_order: {
      auto out = hmm_members(family.alphabet(), family.order(), design);
      if (out.empty()) throw std::invalid_argument("member design produces no members");
      return out;
    }
  }
  throw std::logic_error("unreachable family kind");
}

// ---------------------------------------------------------------------------
// JSON forms

namespace {

json projection_to_json(const ProjectionConfig& cfg) {
  return json{{"refine",
               {{"enabled", cfg.refine.enabled},
                {"sweeps", cfg.refine.sweeps},
                {"max_iters_per_coordinate", cfg.refine.max_iters_per_coordinate},
                {"tolerance", cfg.refine.tolerance}}},
              {"em",
               {{"restarts", cfg.em.restarts},
                {"max_iters", cfg.em.max_iters},
                {"tolerance", cfg.em.tolerance},
                {"seed", cfg.em.seed}}}};
}

ProjectionConfig projection_from_json(const json& j) {
  ProjectionConfig cfg;
  if (j.contains("refine")) {
    const auto& r = j["refine"];
    cfg.refine.enabled = r.value("enabled", cfg.refine.enabled);
    cfg.refine.sweeps = r.value("sweeps", cfg.refine.sweeps);
    cfg.refine.max_iters_per_coordinate =
        r.value("max_iters_per_coordinate", cfg.refine.max_iters_per_coordinate);
    cfg.refine.tolerance = r.value("tolerance", cfg.refine.tolerance);
  }
  if (j.contains("em")) {
    const auto& e = j["em"];
    cfg.em.restarts = e.value("restarts", cfg.em.restarts);
    cfg.em.max_iters = e.value("max_iters", cfg.em.max_iters);
    cfg.em.tolerance = e.value("tolerance", cfg.em.tolerance);
    cfg.em.seed = e.value("seed", cfg.em.seed);
  }
  return cfg;
}

}  // namespace

json family_to_json(const HypothesisFamily& family) {
  json out;
  switch (family.kind()) {
    case HypothesisFamily::Kind::singleton:
      out["kind"] = "singleton";
      out["model"] = model_to_json(*family.members()[0]);
      break;
    case HypothesisFamily::Kind::finite_set: {
      out["kind"] = "finite";
      json members = json::array();
      for (const auto& m : family.members()) members.push_back(model_to_json(*m));
      out["members"] = std::move(members);
      break;
    }
    case HypothesisFamily::Kind::markov_order:
      out["kind"] = "markov_order";
      out["alphabet_size"] = family.alphabet().size;
      out["order"] = family.order();
      out["projection"] = projection_to_json(family.projection());
      break;
    case HypothesisFamily::Kind::hmm_order:
      out["kind"] = "hmm_order";
      out["alphabet_size"] = family.alphabet().size;
      out["states"] = family.order();
      out["projection"] = projection_to_json(family.projection());
      break;
  }
  return out;
}

HypothesisFamily family_from_json(const json& spec) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    throw std::invalid_argument("family spec must be an object with a \"kind\" tag");
  const std::string kind = spec["kind"].get<std::string>();
  if (kind == "singleton") return HypothesisFamily::singleton(model_from_json(spec.at("model")));
  if (kind == "finite") {
    std::vector<ModelPtr> members;
    for (const auto& m : spec.at("members")) members.push_back(model_from_json(m));
    return HypothesisFamily::finite_set(std::move(members));
  }
  ProjectionConfig cfg;
  if (spec.contains("projection")) cfg = projection_from_json(spec["projection"]);
  if (kind == "markov_order")
    return HypothesisFamily::markov_order(Alphabet(spec.at("alphabet_size").get<int>()),
                                          spec.at("order").get<int>(), cfg);
  if (kind == "hmm_order")
    return HypothesisFamily::hmm_order(Alphabet(spec.at("alphabet_size").get<int>()),
                                       spec.at("states").get<int>(), cfg);
  throw std::invalid_argument("family spec: unknown kind \"" + kind + "\"");
}

json design_to_json(const MemberDesign& design) {
  return json{{"grid_step", design.grid_step},
              {"random_count", design.random_count},
              {"seed", design.seed},
              {"clamp_margin", design.clamp_margin},
              {"max_members", design.max_members}};
}

MemberDesign design_from_json(const json& spec) {
  MemberDesign d;
  d.grid_step = spec.value("grid_step", d.grid_step);
  d.random_count = spec.value("random_count", d.random_count);
  d.seed = spec.value("seed", d.seed);
  d.clamp_margin = spec.value("clamp_margin", d.clamp_margin);
  d.max_members = spec.value("max_members", d.max_members);
  return d;
}

}  // namespace ddtest
